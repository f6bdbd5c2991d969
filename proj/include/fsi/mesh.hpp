#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fsi {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

using Vec2 = std::array<double, 2>;

/// Side of the rectangle. Top and bottom carry the thin structure.
enum class BoundaryTag { SigmaTop, SigmaBottom, SigmaLeft, SigmaRight };

inline bool is_interface(BoundaryTag tag)
{
    return tag == BoundaryTag::SigmaTop || tag == BoundaryTag::SigmaBottom;
}

inline const char* to_string(BoundaryTag tag)
{
    switch (tag) {
    case BoundaryTag::SigmaTop: return "SigmaTop";
    case BoundaryTag::SigmaBottom: return "SigmaBottom";
    case BoundaryTag::SigmaLeft: return "SigmaLeft";
    case BoundaryTag::SigmaRight: return "SigmaRight";
    }
    return "?";
}

inline Point outward_normal(BoundaryTag tag)
{
    switch (tag) {
    case BoundaryTag::SigmaTop: return {0.0, 1.0};
    case BoundaryTag::SigmaBottom: return {0.0, -1.0};
    case BoundaryTag::SigmaLeft: return {-1.0, 0.0};
    case BoundaryTag::SigmaRight: return {1.0, 0.0};
    }
    return {};
}

/// A boundary edge. Vertices are ordered by increasing x (top/bottom) or
/// increasing y (left/right), independent of the owner's orientation.
struct BoundaryEdge {
    std::array<std::size_t, 2> vertices{};
    std::size_t triangle = 0;
    BoundaryTag tag = BoundaryTag::SigmaBottom;
    Point normal;
    double length = 0.0;
};

/// Structured triangulation of [0,lx]x[0,ly]. Each cell is split along its
/// lower-left to upper-right diagonal; triangles are counterclockwise.
class Mesh {
public:
    std::vector<Point> vertices;
    std::vector<std::array<std::size_t, 3>> triangles;
    std::vector<BoundaryEdge> boundary_edges;
    /// (left vertex, right vertex) at equal y; empty unless periodic.
    std::vector<std::pair<std::size_t, std::size_t>> periodic_pairs;

    std::size_t nx = 0;
    std::size_t ny = 0;
    double lx = 0.0;
    double ly = 0.0;
    double h = 0.0;
    bool periodic = false;

    std::size_t vertex_index(std::size_t i, std::size_t j) const { return j * (nx + 1) + i; }

    double signed_area(std::size_t t) const
    {
        const auto& tri = triangles[t];
        const Point& a = vertices[tri[0]];
        const Point& b = vertices[tri[1]];
        const Point& c = vertices[tri[2]];
        return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
    }

    /// Length of the part of the boundary carrying the given tag.
    double tagged_length(BoundaryTag tag) const
    {
        double total = 0.0;
        for (const auto& e : boundary_edges) {
            if (e.tag == tag) total += e.length;
        }
        return total;
    }
};

/// Builds the structured mesh. The nominal size is h = 1/ny (the level M),
/// also on the half-height benchmark channel.
inline Mesh build_rect_mesh(std::size_t nx, std::size_t ny, double lx, double ly, bool periodic)
{
    if (nx < 1 || ny < 1) throw std::invalid_argument("build_rect_mesh: cell counts must be >= 1");
    if (!(lx > 0.0) || !(ly > 0.0)) throw std::invalid_argument("build_rect_mesh: dimensions must be > 0");

    Mesh mesh;
    mesh.nx = nx;
    mesh.ny = ny;
    mesh.lx = lx;
    mesh.ly = ly;
    mesh.h = 1.0 / static_cast<double>(ny);
    mesh.periodic = periodic;

    const double dx = lx / static_cast<double>(nx);
    const double dy = ly / static_cast<double>(ny);
    mesh.vertices.reserve((nx + 1) * (ny + 1));
    for (std::size_t j = 0; j <= ny; ++j) {
        for (std::size_t i = 0; i <= nx; ++i) {
            // exact end coordinates so periodic matching and side tests are bitwise
            const double x = (i == nx) ? lx : static_cast<double>(i) * dx;
            const double y = (j == ny) ? ly : static_cast<double>(j) * dy;
            mesh.vertices.push_back({x, y});
        }
    }

    mesh.triangles.reserve(2 * nx * ny);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const std::size_t v00 = mesh.vertex_index(i, j);
            const std::size_t v10 = mesh.vertex_index(i + 1, j);
            const std::size_t v11 = mesh.vertex_index(i + 1, j + 1);
            const std::size_t v01 = mesh.vertex_index(i, j + 1);
            mesh.triangles.push_back({v00, v10, v11});
            mesh.triangles.push_back({v00, v11, v01});
        }
    }

    auto cell_triangle = [&](std::size_t i, std::size_t j, std::size_t which) {
        return 2 * (j * nx + i) + which;
    };
    auto add_edge = [&](std::size_t a, std::size_t b, std::size_t tri, BoundaryTag tag) {
        const Point& pa = mesh.vertices[a];
        const Point& pb = mesh.vertices[b];
        mesh.boundary_edges.push_back({{a, b}, tri, tag, outward_normal(tag), std::hypot(pb.x - pa.x, pb.y - pa.y)});
    };

    for (std::size_t i = 0; i < nx; ++i) {
        add_edge(mesh.vertex_index(i, 0), mesh.vertex_index(i + 1, 0), cell_triangle(i, 0, 0), BoundaryTag::SigmaBottom);
    }
    for (std::size_t i = 0; i < nx; ++i) {
        add_edge(mesh.vertex_index(i, ny), mesh.vertex_index(i + 1, ny), cell_triangle(i, ny - 1, 1), BoundaryTag::SigmaTop);
    }
    for (std::size_t j = 0; j < ny; ++j) {
        add_edge(mesh.vertex_index(0, j), mesh.vertex_index(0, j + 1), cell_triangle(0, j, 1), BoundaryTag::SigmaLeft);
    }
    for (std::size_t j = 0; j < ny; ++j) {
        add_edge(mesh.vertex_index(nx, j), mesh.vertex_index(nx, j + 1), cell_triangle(nx - 1, j, 0), BoundaryTag::SigmaRight);
    }

    if (periodic) {
        for (std::size_t j = 0; j <= ny; ++j) {
            mesh.periodic_pairs.emplace_back(mesh.vertex_index(0, j), mesh.vertex_index(nx, j));
        }
    }
    return mesh;
}

inline std::vector<BoundaryEdge> boundary_edges_by_tag(const Mesh& mesh, BoundaryTag tag)
{
    std::vector<BoundaryEdge> out;
    for (const auto& e : mesh.boundary_edges) {
        if (e.tag == tag) out.push_back(e);
    }
    return out;
}

}  // namespace fsi
