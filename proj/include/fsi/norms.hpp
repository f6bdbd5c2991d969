#pragma once

#include <cmath>
#include <type_traits>

#include "fsi/forms.hpp"

namespace fsi {

// Error norms against analytic fields. Pass a zero function for the norm of
// the discrete field itself.

/// ||f - f_h||_{L2(Omega)}; f(Point) returns double (scalar space) or Vec2.
template <class F>
double l2_error(const FeSpace& s, const Vector& coeffs, F&& f, int degree = kLoadQuadDegree)
{
    const QuadRule rule = quad_rule(QuadDomain::Triangle, degree);
    double sum = 0.0;
    for (std::size_t e = 0; e < s.mesh->triangles.size(); ++e) {
        const auto cb = detail::cell_basis(s, e, rule);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            double vh[2] = {0.0, 0.0};
            for (std::size_t i = 0; i < cb.count; ++i) {
                for (std::size_t c = 0; c < s.components; ++c) {
                    vh[c] += coeffs[static_cast<Eigen::Index>(s.dof(s.cell_nodes[e][i], c))] * cb.value[q][i];
                }
            }
            if constexpr (std::is_convertible_v<std::invoke_result_t<F&, Point>, double>) {
                const double d = f(cb.point[q]) - vh[0];
                sum += cb.weight[q] * d * d;
            } else {
                const Vec2 v = f(cb.point[q]);
                const double d0 = v[0] - vh[0];
                const double d1 = v[1] - vh[1];
                sum += cb.weight[q] * (d0 * d0 + d1 * d1);
            }
        }
    }
    return std::sqrt(sum);
}

/// |f - f_h|_{H1(Omega)} for a vector space; grad(Point) returns Mat2 with [a][b] = d_b f_a.
template <class G>
double h1_semi_error(const FeSpace& s, const Vector& coeffs, G&& grad, int degree = kLoadQuadDegree)
{
    const QuadRule rule = quad_rule(QuadDomain::Triangle, degree);
    double sum = 0.0;
    for (std::size_t e = 0; e < s.mesh->triangles.size(); ++e) {
        const auto cb = detail::cell_basis(s, e, rule);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            Mat2 gh{};
            for (std::size_t i = 0; i < cb.count; ++i) {
                for (std::size_t c = 0; c < s.components; ++c) {
                    const double cf = coeffs[static_cast<Eigen::Index>(s.dof(s.cell_nodes[e][i], c))];
                    gh[c][0] += cf * cb.grad[q][i][0];
                    gh[c][1] += cf * cb.grad[q][i][1];
                }
            }
            const Mat2 g = grad(cb.point[q]);
            for (std::size_t a = 0; a < s.components; ++a) {
                for (std::size_t b = 0; b < 2; ++b) {
                    const double d = g[a][b] - gh[a][b];
                    sum += cb.weight[q] * d * d;
                }
            }
        }
    }
    return std::sqrt(sum);
}

/// Trace-space errors: returns (||e||^2_Sigma, ||dx e||^2_Sigma).
/// f(Point, BoundaryTag) returns std::pair<Vec2 value, Vec2 dx>.
template <class F>
std::pair<double, double> trace_error_parts(const TraceSpace& s, const Vector& w, F&& f)
{
    const QuadRule rule = quad_rule(QuadDomain::Edge, kEdgeQuadDegree);
    double l2 = 0.0;
    double d2 = 0.0;
    for (const auto& e : s.edges) {
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double t = rule.points[q][0];
            const double wt = rule.weights[q] * e.length;
            const auto [val, dval] = f(TraceSpace::edge_point(e, t), e.tag);
            for (std::size_t c = 0; c < 2; ++c) {
                const double dv = val[c] - s.value_at(w, e, t, c);
                const double dd = dval[c] - s.derivative_at(w, e, t, c);
                l2 += wt * dv * dv;
                d2 += wt * dd * dd;
            }
        }
    }
    return {l2, d2};
}

template <class F>
double trace_l2_error(const TraceSpace& s, const Vector& w, F&& f)
{
    return std::sqrt(trace_error_parts(s, w, f).first);
}

/// sqrt(C0 ||dx e||^2 + C1 ||e||^2) on Sigma.
template <class F>
double trace_energy_error(const TraceSpace& s, const Vector& w, double c0, double c1, F&& f)
{
    const auto [l2, d2] = trace_error_parts(s, w, f);
    return std::sqrt(c0 * d2 + c1 * l2);
}

/// ||v - g||_{L2(Sigma)} for velocity coefficients v (volume field restricted to Sigma).
template <class F>
double velocity_sigma_error(const TraceSpace& s, const Vector& v, F&& g)
{
    return trace_l2_error(s, s.restrict(v), [&](const Point& x, BoundaryTag tag) {
        return std::pair<Vec2, Vec2>{g(x, tag), Vec2{0.0, 0.0}};
    });
}

}  // namespace fsi
