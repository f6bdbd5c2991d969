#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "fsi/basis.hpp"
#include "fsi/linalg.hpp"
#include "fsi/quadrature.hpp"
#include "fsi/space.hpp"

namespace fsi {

using Mat2 = std::array<std::array<double, 2>, 2>;

/// Quadrature degree for volume matrices of a space (exact for mass and stiffness).
inline int volume_quad_degree(ElementKind kind) { return 2 * polynomial_degree(kind); }

namespace detail {

/// Basis values and physical gradients of one space on one triangle.
struct CellBasis {
    std::size_t count = 0;
    std::vector<std::array<double, kMaxLocalNodes>> value;             // [qp][i]
    std::vector<std::array<Vec2, kMaxLocalNodes>> grad;                // [qp][i]
    std::vector<Point> point;                                          // physical
    std::vector<double> weight;                                        // includes |det J|
};

inline CellBasis cell_basis(const FeSpace& s, std::size_t t, const QuadRule& rule)
{
    const TriangleGeometry g(*s.mesh, t);
    CellBasis cb;
    cb.count = s.local_count();
    cb.value.resize(rule.size());
    cb.grad.resize(rule.size());
    cb.point.resize(rule.size());
    cb.weight.resize(rule.size());
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const auto& rp = rule.points[q];
        const BasisValues b = eval_basis(s.kind, bary_from_ref(rp[0], rp[1]));
        for (std::size_t i = 0; i < cb.count; ++i) {
            cb.value[q][i] = b.value[i];
            cb.grad[q][i] = g.physical_gradient(b.grad[i]);
        }
        cb.point[q] = g.map(rp[0], rp[1]);
        cb.weight[q] = rule.weights[q] * std::abs(g.det);
    }
    return cb;
}

}  // namespace detail

/// Appends `scale * A` to `out` with the given row/column offsets.
inline void append_block(const SparseMatrix& a, std::size_t row_off, std::size_t col_off, double scale,
                         std::vector<Triplet>& out)
{
    const auto off = a.row_offsets();
    const auto col = a.column_indices();
    const auto val = a.values();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (int k = off[r]; k < off[r + 1]; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            out.push_back({row_off + r, col_off + static_cast<std::size_t>(col[kk]), scale * val[kk]});
        }
    }
}

/// (u, v) over Omega, block diagonal over components.
inline SparseMatrix assemble_mass(const FeSpace& s, double scale = 1.0)
{
    const QuadRule rule = quad_rule(QuadDomain::Triangle, volume_quad_degree(s.kind));
    std::vector<Triplet> t;
    for (std::size_t e = 0; e < s.mesh->triangles.size(); ++e) {
        const auto cb = detail::cell_basis(s, e, rule);
        const auto& nodes = s.cell_nodes[e];
        for (std::size_t q = 0; q < rule.size(); ++q) {
            for (std::size_t i = 0; i < cb.count; ++i) {
                for (std::size_t j = 0; j < cb.count; ++j) {
                    const double v = scale * cb.weight[q] * cb.value[q][i] * cb.value[q][j];
                    for (std::size_t c = 0; c < s.components; ++c) t.push_back({s.dof(nodes[i], c), s.dof(nodes[j], c), v});
                }
            }
        }
    }
    return from_triplets(s.dof_count(), t);
}

/// a_f(u, v) = 2 mu (D(u), D(v)). Row = test, column = trial.
inline SparseMatrix assemble_af(const FeSpace& v, double mu)
{
    if (v.components != 2) throw std::invalid_argument("assemble_af: velocity space must have two components");
    const QuadRule rule = quad_rule(QuadDomain::Triangle, volume_quad_degree(v.kind));
    std::vector<Triplet> t;
    for (std::size_t e = 0; e < v.mesh->triangles.size(); ++e) {
        const auto cb = detail::cell_basis(v, e, rule);
        const auto& nodes = v.cell_nodes[e];
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double w = mu * cb.weight[q];
            for (std::size_t i = 0; i < cb.count; ++i) {
                const Vec2& gi = cb.grad[q][i];
                for (std::size_t j = 0; j < cb.count; ++j) {
                    const Vec2& gj = cb.grad[q][j];
                    const double lap = gi[0] * gj[0] + gi[1] * gj[1];
                    for (std::size_t a = 0; a < 2; ++a) {
                        for (std::size_t b = 0; b < 2; ++b) {
                            const double val = w * ((a == b ? lap : 0.0) + gj[a] * gi[b]);
                            t.push_back({v.dof(nodes[i], a), v.dof(nodes[j], b), val});
                        }
                    }
                }
            }
        }
    }
    return from_triplets(v.dof_count(), t);
}

/// B[k, j] = (psi_k, div phi_j), so that b(q, v) = q^T B v.
inline SparseMatrix assemble_b(const FeSpace& v, const FeSpace& p)
{
    if (v.mesh != p.mesh) throw std::invalid_argument("assemble_b: spaces must share a mesh");
    const int deg = std::max(volume_quad_degree(v.kind), 2);
    const QuadRule rule = quad_rule(QuadDomain::Triangle, deg);
    std::vector<Triplet> t;
    for (std::size_t e = 0; e < v.mesh->triangles.size(); ++e) {
        const auto cv = detail::cell_basis(v, e, rule);
        const auto cp = detail::cell_basis(p, e, rule);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            for (std::size_t k = 0; k < cp.count; ++k) {
                const double w = cv.weight[q] * cp.value[q][k];
                for (std::size_t j = 0; j < cv.count; ++j) {
                    for (std::size_t b = 0; b < 2; ++b) {
                        t.push_back({p.dof(p.cell_nodes[e][k], 0), v.dof(v.cell_nodes[e][j], b), w * cv.grad[q][j][b]});
                    }
                }
            }
        }
    }
    return from_triplets(p.dof_count(), v.dof_count(), t);
}

namespace detail {

/// C0 (dx eta, dx w) + C1 (eta, w) on each trace component.
inline SparseMatrix assemble_trace_form(const TraceSpace& s, double c0, double c1)
{
    const QuadRule rule = quad_rule(QuadDomain::Edge, kEdgeQuadDegree);
    std::vector<Triplet> t;
    for (const auto& e : s.edges) {
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const EdgeBasis b = eval_edge_basis(s.degree, rule.points[q][0]);
            const double w = rule.weights[q] * e.length;
            for (std::size_t i = 0; i < b.count; ++i) {
                for (std::size_t j = 0; j < b.count; ++j) {
                    const double val = w * (c0 * b.deriv[i] * b.deriv[j] / (e.length * e.length) + c1 * b.value[i] * b.value[j]);
                    if (val == 0.0) continue;
                    for (std::size_t c = 0; c < s.components; ++c) t.push_back({s.dof(e.nodes[i], c), s.dof(e.nodes[j], c), val});
                }
            }
        }
    }
    return from_triplets(s.dof_count(), t);
}

}  // namespace detail

/// (eta, w)_Sigma on the trace space.
inline SparseMatrix assemble_mass_sigma(const TraceSpace& s) { return detail::assemble_trace_form(s, 0.0, 1.0); }

/// a_s(eta, w) = C0 (dx eta, dx w)_Sigma + C1 (eta, w)_Sigma.
inline SparseMatrix assemble_as(const TraceSpace& s, double c0, double c1)
{
    if (c0 < 0.0 || c1 < 0.0) throw std::invalid_argument("assemble_as: coefficients must be nonnegative");
    if (c0 == 0.0 && c1 == 0.0) throw std::invalid_argument("assemble_as: C0 and C1 are both zero");
    return detail::assemble_trace_form(s, c0, c1);
}

/// Restriction matrix P (trace DOFs x velocity DOFs) with P v = v|_Sigma.
inline SparseMatrix trace_injection(const TraceSpace& s)
{
    std::vector<Triplet> t;
    const auto map = s.velocity_dofs();
    for (std::size_t i = 0; i < map.size(); ++i) t.push_back({i, map[i], 1.0});
    return from_triplets(s.dof_count(), s.components * s.velocity_node_total, t);
}

/// One coefficient's contribution to the traction at a point.
struct TractionEntry {
    std::size_t index = 0;  // in the combined (velocity, pressure) vector
    Vec2 coeff{};
};

struct TractionPoint {
    std::size_t edge = 0;      // index into TraceSpace::edges
    std::size_t triangle = 0;  // owning triangle
    double t = 0.0;            // edge parameter
    double weight = 0.0;       // quadrature weight times edge length
    Point x;
    Point normal;
    std::vector<TractionEntry> entries;
};

/// The linear map (v, q) -> sigma(v, q) n at every interface quadrature point.
/// Combined vectors place velocity DOFs first, then pressure DOFs.
class TractionTraceOperator {
public:
    std::size_t velocity_dofs = 0;
    std::size_t pressure_dofs = 0;
    double mu = 1.0;
    std::vector<TractionPoint> points;

    std::size_t combined_size() const { return velocity_dofs + pressure_dofs; }

    Vec2 evaluate(std::size_t k, const Vector& combined) const
    {
        Vec2 s{0.0, 0.0};
        for (const auto& en : points[k].entries) {
            const double c = combined[static_cast<Eigen::Index>(en.index)];
            s[0] += c * en.coeff[0];
            s[1] += c * en.coeff[1];
        }
        return s;
    }

    Vec2 evaluate(std::size_t k, const Vector& u, const Vector& p) const
    {
        Vec2 s{0.0, 0.0};
        for (const auto& en : points[k].entries) {
            const double c = en.index < velocity_dofs ? u[static_cast<Eigen::Index>(en.index)]
                                                      : p[static_cast<Eigen::Index>(en.index - velocity_dofs)];
            s[0] += c * en.coeff[0];
            s[1] += c * en.coeff[1];
        }
        return s;
    }

    /// Traction values at all points, flattened as [2k + component].
    std::vector<double> evaluate_all(const Vector& u, const Vector& p) const
    {
        std::vector<double> out(2 * points.size());
        for (std::size_t k = 0; k < points.size(); ++k) {
            const Vec2 s = evaluate(k, u, p);
            out[2 * k] = s[0];
            out[2 * k + 1] = s[1];
        }
        return out;
    }

    /// The functional (v, q) -> (g, sigma(v, q) n)_Sigma for point values g.
    Vector pair_with_test(const std::vector<double>& g) const
    {
        Vector out = Vector::Zero(static_cast<Eigen::Index>(combined_size()));
        for (std::size_t k = 0; k < points.size(); ++k) {
            const auto& pt = points[k];
            for (const auto& en : pt.entries) {
                out[static_cast<Eigen::Index>(en.index)] += pt.weight * (g[2 * k] * en.coeff[0] + g[2 * k + 1] * en.coeff[1]);
            }
        }
        return out;
    }

    /// ||g||^2_Sigma for point values g.
    double norm_squared(const std::vector<double>& g) const
    {
        double s = 0.0;
        for (std::size_t k = 0; k < points.size(); ++k) s += points[k].weight * (g[2 * k] * g[2 * k] + g[2 * k + 1] * g[2 * k + 1]);
        return s;
    }
};

inline TractionTraceOperator traction_trace(const FeSpace& v, const FeSpace& p, const TraceSpace& s, double mu)
{
    if (v.mesh != p.mesh) throw std::invalid_argument("traction_trace: spaces must share a mesh");
    const Mesh& m = *v.mesh;
    const QuadRule rule = quad_rule(QuadDomain::Edge, kEdgeQuadDegree);
    TractionTraceOperator op;
    op.velocity_dofs = v.dof_count();
    op.pressure_dofs = p.dof_count();
    op.mu = mu;
    for (std::size_t ei = 0; ei < s.edges.size(); ++ei) {
        const auto& e = s.edges[ei];
        const std::size_t tri = m.boundary_edges[e.boundary_edge].triangle;
        const TriangleGeometry g(m, tri);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            TractionPoint pt;
            pt.edge = ei;
            pt.triangle = tri;
            pt.t = rule.points[q][0];
            pt.weight = rule.weights[q] * e.length;
            pt.x = TraceSpace::edge_point(e, pt.t);
            pt.normal = e.normal;
            const auto ref = g.inverse_map(pt.x);
            const auto bary = bary_from_ref(ref[0], ref[1]);
            const BasisValues bv = eval_basis(v.kind, bary);
            const double n[2] = {e.normal.x, e.normal.y};
            for (std::size_t i = 0; i < bv.count; ++i) {
                const Vec2 gr = g.physical_gradient(bv.grad[i]);
                const double dn = gr[0] * n[0] + gr[1] * n[1];
                if (gr[0] == 0.0 && gr[1] == 0.0) continue;
                for (std::size_t a = 0; a < 2; ++a) {
                    Vec2 c{mu * gr[0] * n[a], mu * gr[1] * n[a]};
                    c[a] += mu * dn;
                    pt.entries.push_back({v.dof(v.cell_nodes[tri][i], a), c});
                }
            }
            const BasisValues bp = eval_basis(p.kind, bary);
            for (std::size_t k = 0; k < bp.count; ++k) {
                if (bp.value[k] == 0.0) continue;
                pt.entries.push_back({op.velocity_dofs + p.dof(p.cell_nodes[tri][k], 0), {-bp.value[k] * n[0], -bp.value[k] * n[1]}});
            }
            op.points.push_back(std::move(pt));
        }
    }
    return op;
}

/// Interface coupling matrices, rows indexed by the combined test (v, q).
///   k_wsigma[(v,q), j] = (w_j, sigma(v, q) n)_Sigma   for trace basis w_j
///   k_sigsig[(v,q), (u,p)] = (sigma(u, p) n, sigma(v, q) n)_Sigma
struct TractionCouplings {
    SparseMatrix k_wsigma;
    SparseMatrix k_sigsig;
};

inline TractionCouplings assemble_traction_couplings(const TractionTraceOperator& op, const TraceSpace& s)
{
    std::vector<Triplet> tw, ts;
    for (const auto& pt : op.points) {
        const auto& e = s.edges[pt.edge];
        const EdgeBasis b = eval_edge_basis(s.degree, pt.t);
        for (const auto& en : pt.entries) {
            for (std::size_t i = 0; i < b.count; ++i) {
                for (std::size_t c = 0; c < 2; ++c) {
                    const double val = pt.weight * b.value[i] * en.coeff[c];
                    if (val != 0.0) tw.push_back({en.index, s.dof(e.nodes[i], c), val});
                }
            }
            for (const auto& em : pt.entries) {
                const double val = pt.weight * (en.coeff[0] * em.coeff[0] + en.coeff[1] * em.coeff[1]);
                ts.push_back({en.index, em.index, val});
            }
        }
    }
    return {from_triplets(op.combined_size(), s.dof_count(), tw), from_triplets(op.combined_size(), ts)};
}

/// The functional w -> (g, w)_Sigma on the trace space, for traction point values g.
inline Vector trace_load_from_points(const TractionTraceOperator& op, const TraceSpace& s, const std::vector<double>& g)
{
    Vector out = Vector::Zero(static_cast<Eigen::Index>(s.dof_count()));
    for (std::size_t k = 0; k < op.points.size(); ++k) {
        const auto& pt = op.points[k];
        const EdgeBasis b = eval_edge_basis(s.degree, pt.t);
        for (std::size_t i = 0; i < b.count; ++i) {
            for (std::size_t c = 0; c < 2; ++c) {
                out[static_cast<Eigen::Index>(s.dof(s.edges[pt.edge].nodes[i], c))] += pt.weight * b.value[i] * g[2 * k + c];
            }
        }
    }
    return out;
}

/// -pval (n, v)_side as a velocity load vector.
inline Vector assemble_boundary_pressure_load(const FeSpace& v, BoundaryTag tag, double pval)
{
    if (is_interface(tag)) throw std::invalid_argument("assemble_boundary_pressure_load: tag must be SigmaLeft or SigmaRight");
    Vector out = Vector::Zero(static_cast<Eigen::Index>(v.dof_count()));
    if (pval == 0.0) return out;
    const Mesh& m = *v.mesh;
    const int deg = trace_degree(v.kind);
    const QuadRule rule = quad_rule(QuadDomain::Edge, kEdgeQuadDegree);
    for (std::size_t k = 0; k < m.boundary_edges.size(); ++k) {
        const auto& be = m.boundary_edges[k];
        if (be.tag != tag) continue;
        const auto nodes = v.edge_nodes(k);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const EdgeBasis b = eval_edge_basis(deg, rule.points[q][0]);
            const double w = -pval * rule.weights[q] * be.length;
            for (std::size_t i = 0; i < b.count; ++i) {
                out[static_cast<Eigen::Index>(v.dof(nodes[i], 0))] += w * b.value[i] * be.normal.x;
                out[static_cast<Eigen::Index>(v.dof(nodes[i], 1))] += w * b.value[i] * be.normal.y;
            }
        }
    }
    return out;
}

/// Volume functional v -> int value(x).v + flux(x):grad v. `f(Point)` returns
/// std::pair<Vec2, Mat2> with flux[a][b] pairing with d_b v_a.
template <class F>
Vector assemble_velocity_functional(const FeSpace& v, F&& f, int degree = kLoadQuadDegree)
{
    const QuadRule rule = quad_rule(QuadDomain::Triangle, degree);
    Vector out = Vector::Zero(static_cast<Eigen::Index>(v.dof_count()));
    for (std::size_t e = 0; e < v.mesh->triangles.size(); ++e) {
        const auto cb = detail::cell_basis(v, e, rule);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto [val, flux] = f(cb.point[q]);
            for (std::size_t i = 0; i < cb.count; ++i) {
                const Vec2& g = cb.grad[q][i];
                for (std::size_t a = 0; a < 2; ++a) {
                    const double c = val[a] * cb.value[q][i] + flux[a][0] * g[0] + flux[a][1] * g[1];
                    out[static_cast<Eigen::Index>(v.dof(v.cell_nodes[e][i], a))] += cb.weight[q] * c;
                }
            }
        }
    }
    return out;
}

/// Scalar functional q -> int g(x) q.
template <class F>
Vector assemble_scalar_functional(const FeSpace& p, F&& g, int degree = kLoadQuadDegree)
{
    const QuadRule rule = quad_rule(QuadDomain::Triangle, degree);
    Vector out = Vector::Zero(static_cast<Eigen::Index>(p.dof_count()));
    for (std::size_t e = 0; e < p.mesh->triangles.size(); ++e) {
        const auto cb = detail::cell_basis(p, e, rule);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double gv = g(cb.point[q]);
            for (std::size_t i = 0; i < cb.count; ++i) {
                out[static_cast<Eigen::Index>(p.dof(p.cell_nodes[e][i], 0))] += cb.weight[q] * gv * cb.value[q][i];
            }
        }
    }
    return out;
}

/// Trace functional w -> (value, w)_Sigma + (dvalue, dx w)_Sigma where
/// `f(Point, BoundaryTag)` returns std::pair<Vec2, Vec2>.
template <class F>
Vector assemble_trace_functional(const TraceSpace& s, F&& f)
{
    const QuadRule rule = quad_rule(QuadDomain::Edge, kEdgeQuadDegree);
    Vector out = Vector::Zero(static_cast<Eigen::Index>(s.dof_count()));
    for (const auto& e : s.edges) {
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double t = rule.points[q][0];
            const EdgeBasis b = eval_edge_basis(s.degree, t);
            const auto [val, dval] = f(TraceSpace::edge_point(e, t), e.tag);
            const double w = rule.weights[q] * e.length;
            for (std::size_t i = 0; i < b.count; ++i) {
                for (std::size_t c = 0; c < 2; ++c) {
                    out[static_cast<Eigen::Index>(s.dof(e.nodes[i], c))] += w * (val[c] * b.value[i] + dval[c] * b.deriv[i] / e.length);
                }
            }
        }
    }
    return out;
}

}  // namespace fsi
