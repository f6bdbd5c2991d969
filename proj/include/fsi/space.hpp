#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fsi/basis.hpp"
#include "fsi/mesh.hpp"

namespace fsi {

/// Affine map from the reference triangle.
struct TriangleGeometry {
    Point origin;
    double jac[2][2]{};
    double det = 0.0;
    double inv_t[2][2]{};  // J^{-T}

    explicit TriangleGeometry(const Mesh& mesh, std::size_t t)
    {
        const auto& tri = mesh.triangles[t];
        const Point& a = mesh.vertices[tri[0]];
        const Point& b = mesh.vertices[tri[1]];
        const Point& c = mesh.vertices[tri[2]];
        origin = a;
        jac[0][0] = b.x - a.x;
        jac[0][1] = c.x - a.x;
        jac[1][0] = b.y - a.y;
        jac[1][1] = c.y - a.y;
        det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        inv_t[0][0] = jac[1][1] / det;
        inv_t[0][1] = -jac[1][0] / det;
        inv_t[1][0] = -jac[0][1] / det;
        inv_t[1][1] = jac[0][0] / det;
    }

    Point map(double xi, double eta) const
    {
        return {origin.x + jac[0][0] * xi + jac[0][1] * eta, origin.y + jac[1][0] * xi + jac[1][1] * eta};
    }

    Vec2 physical_gradient(const std::array<double, 2>& g) const
    {
        return {inv_t[0][0] * g[0] + inv_t[0][1] * g[1], inv_t[1][0] * g[0] + inv_t[1][1] * g[1]};
    }

    /// Reference coordinates of a physical point (not restricted to the triangle).
    std::array<double, 2> inverse_map(const Point& p) const
    {
        const double dx = p.x - origin.x;
        const double dy = p.y - origin.y;
        return {(jac[1][1] * dx - jac[0][1] * dy) / det, (-jac[1][0] * dx + jac[0][0] * dy) / det};
    }
};

/// Lagrange (or MINI) finite element space over a structured mesh.
///
/// Scalar nodes are numbered vertices first, then edge midpoints (P2) or
/// cell bubbles (P1Bubble), with right-side nodes folded onto their left
/// partners when the mesh is periodic. Vector DOFs are component-major:
/// dof(node, c) = c * node_count + node.
class FeSpace {
public:
    std::shared_ptr<const Mesh> mesh;
    ElementKind kind = ElementKind::P1;
    std::size_t components = 1;

    std::vector<Point> node_coords;
    std::vector<std::array<std::size_t, kMaxLocalNodes>> cell_nodes;
    std::vector<std::size_t> vertex_node;
    /// Global node of the midpoint of each mesh boundary edge (P2 only).
    std::vector<std::size_t> boundary_edge_mid_node;
    std::vector<char> node_constrained;
    std::set<BoundaryTag> dirichlet_tags;

    std::size_t node_count() const { return node_coords.size(); }
    std::size_t dof_count() const { return components * node_count(); }
    std::size_t local_count() const { return local_node_count(kind); }
    std::size_t dof(std::size_t node, std::size_t comp) const { return comp * node_count() + node; }

    bool dof_constrained(std::size_t d) const { return node_constrained[d % node_count()] != 0; }

    std::vector<std::size_t> constrained_dofs() const
    {
        std::vector<std::size_t> out;
        for (std::size_t c = 0; c < components; ++c) {
            for (std::size_t n = 0; n < node_count(); ++n) {
                if (node_constrained[n]) out.push_back(dof(n, c));
            }
        }
        return out;
    }

    /// Scalar nodes of a boundary edge: its two vertices, then the midpoint for P2.
    std::vector<std::size_t> edge_nodes(std::size_t boundary_edge) const
    {
        const auto& e = mesh->boundary_edges[boundary_edge];
        std::vector<std::size_t> out{vertex_node[e.vertices[0]], vertex_node[e.vertices[1]]};
        if (kind == ElementKind::P2) out.push_back(boundary_edge_mid_node[boundary_edge]);
        return out;
    }

    /// Scalar field value in triangle t at barycentric coordinates for component c.
    double value_at(const Eigen::VectorXd& coeffs, std::size_t t, const std::array<double, 3>& bary,
                    std::size_t comp = 0) const
    {
        const BasisValues b = eval_basis(kind, bary);
        double v = 0.0;
        for (std::size_t i = 0; i < b.count; ++i) v += coeffs[static_cast<Eigen::Index>(dof(cell_nodes[t][i], comp))] * b.value[i];
        return v;
    }
};

inline FeSpace build_space(std::shared_ptr<const Mesh> mesh, ElementKind kind, std::size_t components,
                           const std::set<BoundaryTag>& dirichlet_tags = {})
{
    if (!mesh) throw std::invalid_argument("build_space: null mesh");
    if (components != 1 && components != 2) throw std::invalid_argument("build_space: components must be 1 or 2");
    if (components == 1 && kind == ElementKind::P1Bubble) {
        throw std::invalid_argument("build_space: bubble-enriched spaces are velocity spaces");
    }
    for (BoundaryTag tag : dirichlet_tags) {
        if (is_interface(tag)) {
            throw std::invalid_argument(std::string("build_space: Dirichlet constraint on interface side ") + to_string(tag) +
                                        " is not allowed");
        }
        if (mesh->periodic) {
            throw std::invalid_argument("build_space: Dirichlet sides conflict with periodic identification");
        }
    }

    const Mesh& m = *mesh;
    FeSpace space;
    space.mesh = mesh;
    space.kind = kind;
    space.components = components;
    space.dirichlet_tags = dirichlet_tags;

    // raw nodes before identification
    std::vector<Point> raw_coords(m.vertices.begin(), m.vertices.end());
    const std::size_t nloc = local_node_count(kind);
    std::vector<std::array<std::size_t, kMaxLocalNodes>> raw_cells(m.triangles.size());
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_node;

    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        const auto& tri = m.triangles[t];
        auto& cell = raw_cells[t];
        cell.fill(0);
        for (std::size_t i = 0; i < 3; ++i) cell[i] = tri[i];
        if (kind == ElementKind::P2) {
            static constexpr std::array<std::array<std::size_t, 2>, 3> edges{{{0, 1}, {1, 2}, {2, 0}}};
            for (std::size_t e = 0; e < 3; ++e) {
                std::size_t a = tri[edges[e][0]];
                std::size_t b = tri[edges[e][1]];
                auto key = std::minmax(a, b);
                auto it = edge_node.find(key);
                if (it == edge_node.end()) {
                    const Point& pa = m.vertices[a];
                    const Point& pb = m.vertices[b];
                    raw_coords.push_back({0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)});
                    it = edge_node.emplace(key, raw_coords.size() - 1).first;
                }
                cell[3 + e] = it->second;
            }
        }
    }
    if (kind == ElementKind::P1Bubble) {
        for (std::size_t t = 0; t < m.triangles.size(); ++t) {
            const auto& tri = m.triangles[t];
            const Point& a = m.vertices[tri[0]];
            const Point& b = m.vertices[tri[1]];
            const Point& c = m.vertices[tri[2]];
            raw_coords.push_back({(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0});
            raw_cells[t][3] = raw_coords.size() - 1;
        }
    }

    std::vector<std::size_t> raw_mid(m.boundary_edges.size(), 0);
    if (kind == ElementKind::P2) {
        for (std::size_t k = 0; k < m.boundary_edges.size(); ++k) {
            const auto& e = m.boundary_edges[k];
            raw_mid[k] = edge_node.at(std::minmax(e.vertices[0], e.vertices[1]));
        }
    }

    // periodic folding: right-side raw node -> left raw node
    const std::size_t nraw = raw_coords.size();
    std::vector<std::size_t> partner(nraw);
    for (std::size_t i = 0; i < nraw; ++i) partner[i] = i;
    if (m.periodic) {
        for (const auto& [left, right] : m.periodic_pairs) partner[right] = left;
        if (kind == ElementKind::P2) {
            // side edges are stored bottom-to-top, so the j-th left edge pairs with the j-th right edge
            std::vector<std::size_t> left_edges, right_edges;
            for (std::size_t k = 0; k < m.boundary_edges.size(); ++k) {
                if (m.boundary_edges[k].tag == BoundaryTag::SigmaLeft) left_edges.push_back(k);
                if (m.boundary_edges[k].tag == BoundaryTag::SigmaRight) right_edges.push_back(k);
            }
            for (std::size_t j = 0; j < left_edges.size(); ++j) partner[raw_mid[right_edges[j]]] = raw_mid[left_edges[j]];
        }
    }

    std::vector<std::size_t> final_index(nraw, static_cast<std::size_t>(-1));
    for (std::size_t i = 0; i < nraw; ++i) {
        if (partner[i] == i) {
            final_index[i] = space.node_coords.size();
            space.node_coords.push_back(raw_coords[i]);
        }
    }
    for (std::size_t i = 0; i < nraw; ++i) final_index[i] = final_index[partner[i]];

    space.cell_nodes.resize(m.triangles.size());
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        space.cell_nodes[t].fill(0);
        for (std::size_t i = 0; i < nloc; ++i) space.cell_nodes[t][i] = final_index[raw_cells[t][i]];
    }
    space.vertex_node.resize(m.vertices.size());
    for (std::size_t v = 0; v < m.vertices.size(); ++v) space.vertex_node[v] = final_index[v];
    if (kind == ElementKind::P2) {
        space.boundary_edge_mid_node.resize(m.boundary_edges.size());
        for (std::size_t k = 0; k < m.boundary_edges.size(); ++k) space.boundary_edge_mid_node[k] = final_index[raw_mid[k]];
    }

    space.node_constrained.assign(space.node_count(), 0);
    for (std::size_t k = 0; k < m.boundary_edges.size(); ++k) {
        if (dirichlet_tags.count(m.boundary_edges[k].tag) == 0) continue;
        for (std::size_t n : space.edge_nodes(k)) space.node_constrained[n] = 1;
    }
    return space;
}

/// Nodal interpolation. `f(Point)` returns double for scalar spaces and
/// Vec2 for vector spaces. Bubble coefficients make the interpolant match
/// f at each barycenter.
template <class F>
Eigen::VectorXd interpolate(const FeSpace& space, F&& f)
{
    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.dof_count()));
    auto assign = [&](std::size_t node, const Point& p) {
        if constexpr (std::is_convertible_v<std::invoke_result_t<F&, Point>, double>) {
            coeffs[static_cast<Eigen::Index>(space.dof(node, 0))] = f(p);
        } else {
            const Vec2 v = f(p);
            for (std::size_t c = 0; c < space.components; ++c) coeffs[static_cast<Eigen::Index>(space.dof(node, c))] = v[c];
        }
    };
    std::vector<char> bubble(space.node_count(), 0);
    if (space.kind == ElementKind::P1Bubble) {
        for (const auto& cell : space.cell_nodes) bubble[cell[3]] = 1;
    }
    for (std::size_t n = 0; n < space.node_count(); ++n) {
        if (!bubble[n]) assign(n, space.node_coords[n]);
    }
    if (space.kind == ElementKind::P1Bubble) {
        for (const auto& cell : space.cell_nodes) {
            assign(cell[3], space.node_coords[cell[3]]);
            for (std::size_t c = 0; c < space.components; ++c) {
                double mean = 0.0;
                for (std::size_t i = 0; i < 3; ++i) mean += coeffs[static_cast<Eigen::Index>(space.dof(cell[i], c))];
                coeffs[static_cast<Eigen::Index>(space.dof(cell[3], c))] -= mean / 3.0;
            }
        }
    }
    return coeffs;
}

/// Structure end conditions on the interface.
enum class StructureEnds { Natural, Pinned, Periodic };

/// One interface edge of the trace space.
struct TraceEdge {
    std::size_t boundary_edge = 0;  // index into mesh.boundary_edges
    BoundaryTag tag = BoundaryTag::SigmaBottom;
    Point start;
    Point end;
    Point normal;
    double length = 0.0;
    std::array<std::size_t, 3> nodes{};  // start, end, midpoint (degree 2)
};

/// The trace space S_h = { v_h|_Sigma } for a velocity space. Trace nodes are
/// velocity nodes lying on Sigma, enumerated bottom edges first, then top,
/// each from left to right. Vector DOFs are component-major.
class TraceSpace {
public:
    std::size_t velocity_node_total = 0;  // node count of the velocity space
    int degree = 1;
    std::size_t components = 2;
    std::vector<std::size_t> velocity_node;  // trace node -> velocity node
    std::vector<Point> node_coords;
    std::vector<TraceEdge> edges;
    std::vector<char> node_constrained;
    StructureEnds ends = StructureEnds::Natural;

    std::size_t node_count() const { return velocity_node.size(); }
    std::size_t dof_count() const { return components * node_count(); }
    std::size_t dof(std::size_t node, std::size_t comp) const { return comp * node_count() + node; }
    std::size_t edge_local_count() const { return degree == 2 ? 3 : 2; }

    /// Velocity DOF that each trace DOF restricts.
    std::vector<std::size_t> velocity_dofs() const
    {
        std::vector<std::size_t> out(dof_count());
        for (std::size_t c = 0; c < components; ++c) {
            for (std::size_t n = 0; n < node_count(); ++n) out[dof(n, c)] = c * velocity_node_total + velocity_node[n];
        }
        return out;
    }

    std::vector<std::size_t> constrained_dofs() const
    {
        std::vector<std::size_t> out;
        for (std::size_t c = 0; c < components; ++c) {
            for (std::size_t n = 0; n < node_count(); ++n) {
                if (node_constrained[n]) out.push_back(dof(n, c));
            }
        }
        return out;
    }

    /// Restriction v_h -> v_h|_Sigma.
    Eigen::VectorXd restrict(const Eigen::VectorXd& v) const
    {
        Eigen::VectorXd out(static_cast<Eigen::Index>(dof_count()));
        const auto map = velocity_dofs();
        for (std::size_t i = 0; i < map.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(map[i])];
        return out;
    }

    /// Zero-interior discrete extension of a trace field.
    Eigen::VectorXd extend(const Eigen::VectorXd& w) const
    {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(components * velocity_node_total));
        const auto map = velocity_dofs();
        for (std::size_t i = 0; i < map.size(); ++i) out[static_cast<Eigen::Index>(map[i])] = w[static_cast<Eigen::Index>(i)];
        return out;
    }

    /// Point on edge at parameter t in [0,1].
    static Point edge_point(const TraceEdge& e, double t)
    {
        return {e.start.x + t * (e.end.x - e.start.x), e.start.y + t * (e.end.y - e.start.y)};
    }

    double value_at(const Eigen::VectorXd& w, const TraceEdge& e, double t, std::size_t comp) const
    {
        const EdgeBasis b = eval_edge_basis(degree, t);
        double v = 0.0;
        for (std::size_t i = 0; i < b.count; ++i) v += w[static_cast<Eigen::Index>(dof(e.nodes[i], comp))] * b.value[i];
        return v;
    }

    double derivative_at(const Eigen::VectorXd& w, const TraceEdge& e, double t, std::size_t comp) const
    {
        const EdgeBasis b = eval_edge_basis(degree, t);
        double v = 0.0;
        for (std::size_t i = 0; i < b.count; ++i) v += w[static_cast<Eigen::Index>(dof(e.nodes[i], comp))] * b.deriv[i];
        return v / e.length;
    }
};

inline TraceSpace build_trace_space(const FeSpace& velocity, StructureEnds ends = StructureEnds::Natural)
{
    if (velocity.components != 2) throw std::invalid_argument("build_trace_space: velocity space must be a vector space");
    const Mesh& m = *velocity.mesh;
    if ((ends == StructureEnds::Periodic) != m.periodic) {
        throw std::invalid_argument("build_trace_space: periodic structure ends require (and are implied by) a periodic mesh");
    }
    TraceSpace s;
    s.velocity_node_total = velocity.node_count();
    s.degree = trace_degree(velocity.kind);
    s.ends = ends;

    std::map<std::size_t, std::size_t> index_of;
    auto trace_node = [&](std::size_t vnode) {
        auto it = index_of.find(vnode);
        if (it == index_of.end()) {
            it = index_of.emplace(vnode, s.velocity_node.size()).first;
            s.velocity_node.push_back(vnode);
            s.node_coords.push_back(velocity.node_coords[vnode]);
        }
        return it->second;
    };
    for (BoundaryTag tag : {BoundaryTag::SigmaBottom, BoundaryTag::SigmaTop}) {
        for (std::size_t k = 0; k < m.boundary_edges.size(); ++k) {
            const auto& be = m.boundary_edges[k];
            if (be.tag != tag) continue;
            TraceEdge e;
            e.boundary_edge = k;
            e.tag = tag;
            e.start = m.vertices[be.vertices[0]];
            e.end = m.vertices[be.vertices[1]];
            e.normal = be.normal;
            e.length = be.length;
            const auto vn = velocity.edge_nodes(k);
            for (std::size_t i = 0; i < vn.size(); ++i) e.nodes[i] = trace_node(vn[i]);
            s.edges.push_back(e);
        }
    }
    s.node_constrained.assign(s.node_count(), 0);
    if (ends == StructureEnds::Pinned) {
        for (std::size_t n = 0; n < s.node_count(); ++n) {
            const double x = s.node_coords[n].x;
            if (x == 0.0 || x == m.lx) s.node_constrained[n] = 1;
        }
    }
    return s;
}

}  // namespace fsi
