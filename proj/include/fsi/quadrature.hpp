#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace fsi {

enum class QuadDomain { Triangle, Edge };

/// Points are (xi, eta) on the reference triangle {(0,0),(1,0),(0,1)} or
/// (t, 0) on the unit edge [0,1].
struct QuadRule {
    std::vector<std::array<double, 2>> points;
    std::vector<double> weights;
    int degree = 0;

    std::size_t size() const { return weights.size(); }
};

namespace detail {

/// Gauss-Legendre nodes and weights mapped to [0,1].
inline void gauss_legendre_unit(int n, std::vector<double>& x, std::vector<double>& w)
{
    x.assign(static_cast<std::size_t>(n), 0.0);
    w.assign(static_cast<std::size_t>(n), 0.0);
    // returns (P_n(z), P_n'(z))
    auto legendre = [n](double z) {
        double p0 = 1.0;
        double p1 = z;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        return std::array<double, 2>{p1, n * (z * p1 - p0) / (z * z - 1.0)};
    };
    for (int i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            const auto [p, dp] = legendre(z);
            const double dz = p / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        const double dp = legendre(z)[1];
        const auto idx = static_cast<std::size_t>(n - 1 - i);
        x[idx] = 0.5 * (1.0 + z);
        w[idx] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
}

}  // namespace detail

inline constexpr int kMaxQuadDegree = 15;

/// Rule exact for polynomials up to `degree`. Triangle rules are collapsed
/// Gauss products (all weights positive); edge rules are Gauss-Legendre.
inline QuadRule quad_rule(QuadDomain domain, int degree)
{
    if (degree < 1 || degree > kMaxQuadDegree) {
        throw std::invalid_argument("quad_rule: unsupported degree " + std::to_string(degree) +
                                    "; available degrees are 1.." + std::to_string(kMaxQuadDegree));
    }
    QuadRule rule;
    rule.degree = degree;
    if (domain == QuadDomain::Edge) {
        const int n = (degree + 2) / 2;
        std::vector<double> x, w;
        detail::gauss_legendre_unit(n, x, w);
        for (int i = 0; i < n; ++i) {
            rule.points.push_back({x[static_cast<std::size_t>(i)], 0.0});
            rule.weights.push_back(w[static_cast<std::size_t>(i)]);
        }
        return rule;
    }
    if (degree == 1) {
        rule.points.push_back({1.0 / 3.0, 1.0 / 3.0});
        rule.weights.push_back(0.5);
        return rule;
    }
    // Duffy map (a,b) -> (a, b(1-a)); the Jacobian (1-a) adds one degree in a.
    const int na = (degree + 3) / 2;
    const int nb = (degree + 2) / 2;
    std::vector<double> xa, wa, xb, wb;
    detail::gauss_legendre_unit(na, xa, wa);
    detail::gauss_legendre_unit(nb, xb, wb);
    for (int i = 0; i < na; ++i) {
        for (int j = 0; j < nb; ++j) {
            const double a = xa[static_cast<std::size_t>(i)];
            const double b = xb[static_cast<std::size_t>(j)];
            rule.points.push_back({a, b * (1.0 - a)});
            rule.weights.push_back(wa[static_cast<std::size_t>(i)] * wb[static_cast<std::size_t>(j)] * (1.0 - a));
        }
    }
    return rule;
}

/// Triangle degree used for manufactured loads and error norms.
inline constexpr int kLoadQuadDegree = 7;
/// Gauss points on every interface edge integral (exact to degree 9).
inline constexpr int kEdgeQuadDegree = 9;

}  // namespace fsi
