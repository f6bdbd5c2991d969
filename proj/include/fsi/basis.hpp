#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace fsi {

enum class ElementKind { P1, P2, P1Bubble };

inline const char* to_string(ElementKind kind)
{
    switch (kind) {
    case ElementKind::P1: return "P1";
    case ElementKind::P2: return "P2";
    case ElementKind::P1Bubble: return "P1Bubble";
    }
    return "?";
}

inline constexpr std::size_t kMaxLocalNodes = 6;

/// Scalar nodes per triangle.
inline constexpr std::size_t local_node_count(ElementKind kind)
{
    switch (kind) {
    case ElementKind::P1: return 3;
    case ElementKind::P2: return 6;
    case ElementKind::P1Bubble: return 4;
    }
    return 0;
}

/// Polynomial degree of the nodal part; the MINI bubble adds a cubic.
inline constexpr int polynomial_degree(ElementKind kind)
{
    switch (kind) {
    case ElementKind::P1: return 1;
    case ElementKind::P2: return 2;
    case ElementKind::P1Bubble: return 3;
    }
    return 0;
}

/// Degree of the trace on an edge (the bubble vanishes there).
inline constexpr int trace_degree(ElementKind kind) { return kind == ElementKind::P2 ? 2 : 1; }

/// Basis values and gradients with respect to the reference coordinates
/// (xi, eta), where lambda = (1 - xi - eta, xi, eta).
///
/// Local node order: vertices 0,1,2; for P2 the midpoints of edges
/// (0,1), (1,2), (2,0); for P1Bubble the bubble 27 l0 l1 l2.
struct BasisValues {
    std::size_t count = 0;
    std::array<double, kMaxLocalNodes> value{};
    std::array<std::array<double, 2>, kMaxLocalNodes> grad{};
};

inline BasisValues eval_basis(ElementKind kind, const std::array<double, 3>& bary)
{
    static constexpr std::array<std::array<double, 2>, 3> dl{{{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}}};
    const double l0 = bary[0];
    const double l1 = bary[1];
    const double l2 = bary[2];
    const std::array<double, 3> l{l0, l1, l2};

    BasisValues b;
    b.count = local_node_count(kind);
    switch (kind) {
    case ElementKind::P1:
        for (std::size_t i = 0; i < 3; ++i) {
            b.value[i] = l[i];
            b.grad[i] = dl[i];
        }
        break;
    case ElementKind::P2: {
        for (std::size_t i = 0; i < 3; ++i) {
            b.value[i] = l[i] * (2.0 * l[i] - 1.0);
            const double f = 4.0 * l[i] - 1.0;
            b.grad[i] = {f * dl[i][0], f * dl[i][1]};
        }
        static constexpr std::array<std::array<std::size_t, 2>, 3> edges{{{0, 1}, {1, 2}, {2, 0}}};
        for (std::size_t e = 0; e < 3; ++e) {
            const std::size_t i = edges[e][0];
            const std::size_t j = edges[e][1];
            b.value[3 + e] = 4.0 * l[i] * l[j];
            b.grad[3 + e] = {4.0 * (l[i] * dl[j][0] + l[j] * dl[i][0]), 4.0 * (l[i] * dl[j][1] + l[j] * dl[i][1])};
        }
        break;
    }
    case ElementKind::P1Bubble:
        for (std::size_t i = 0; i < 3; ++i) {
            b.value[i] = l[i];
            b.grad[i] = dl[i];
        }
        b.value[3] = 27.0 * l0 * l1 * l2;
        for (std::size_t d = 0; d < 2; ++d) {
            b.grad[3][d] = 27.0 * (dl[0][d] * l1 * l2 + l0 * dl[1][d] * l2 + l0 * l1 * dl[2][d]);
        }
        break;
    }
    return b;
}

inline std::array<double, 3> bary_from_ref(double xi, double eta) { return {1.0 - xi - eta, xi, eta}; }

/// Lagrange basis of the trace on a unit edge parametrized by t in [0,1].
/// Order: start vertex, end vertex, then the midpoint for degree 2.
struct EdgeBasis {
    std::size_t count = 0;
    std::array<double, 3> value{};
    std::array<double, 3> deriv{};  // d/dt
};

inline EdgeBasis eval_edge_basis(int degree, double t)
{
    EdgeBasis b;
    if (degree == 1) {
        b.count = 2;
        b.value = {1.0 - t, t, 0.0};
        b.deriv = {-1.0, 1.0, 0.0};
    } else if (degree == 2) {
        b.count = 3;
        b.value = {(1.0 - t) * (1.0 - 2.0 * t), t * (2.0 * t - 1.0), 4.0 * t * (1.0 - t)};
        b.deriv = {4.0 * t - 3.0, 4.0 * t - 1.0, 4.0 - 8.0 * t};
    } else {
        throw std::invalid_argument("eval_edge_basis: degree must be 1 or 2");
    }
    return b;
}

}  // namespace fsi
