#include <map>
#include <set>

#include <gtest/gtest.h>

#include "fsi/mesh.hpp"

using namespace fsi;

TEST(Mesh, SingleCellSplit)
{
    const Mesh m = build_rect_mesh(1, 1, 1.0, 1.0, false);
    EXPECT_EQ(m.vertices.size(), 4u);
    EXPECT_EQ(m.triangles.size(), 2u);
    EXPECT_EQ(m.boundary_edges.size(), 4u);
}

TEST(Mesh, CountsAtLevelEight)
{
    const std::size_t M = 8;
    const Mesh m = build_rect_mesh(2 * M, M, 2.0, 1.0, false);
    EXPECT_EQ(m.vertices.size(), (2 * M + 1) * (M + 1));
    EXPECT_EQ(m.vertices.size(), 153u);
    EXPECT_EQ(m.triangles.size(), 256u);
    EXPECT_DOUBLE_EQ(m.h, 1.0 / 8.0);
}

TEST(Mesh, PeriodicPairsOnePerLevel)
{
    const Mesh m = build_rect_mesh(2, 2, 1.0, 1.0, true);
    ASSERT_EQ(m.periodic_pairs.size(), 3u);
    for (const auto& [l, r] : m.periodic_pairs) {
        EXPECT_EQ(m.vertices[l].x, 0.0);
        EXPECT_EQ(m.vertices[r].x, 1.0);
        EXPECT_EQ(m.vertices[l].y, m.vertices[r].y);
    }
}

TEST(Mesh, TaggedEdgesAndNormals)
{
    const Mesh m = build_rect_mesh(4, 2, 2.0, 1.0, false);
    const auto top = boundary_edges_by_tag(m, BoundaryTag::SigmaTop);
    ASSERT_EQ(top.size(), 4u);
    for (const auto& e : top) {
        EXPECT_EQ(e.normal.x, 0.0);
        EXPECT_EQ(e.normal.y, 1.0);
    }
    for (const auto& e : boundary_edges_by_tag(m, BoundaryTag::SigmaBottom)) {
        EXPECT_EQ(e.normal.x, 0.0);
        EXPECT_EQ(e.normal.y, -1.0);
    }
    const Mesh p = build_rect_mesh(4, 2, 2.0, 1.0, true);
    EXPECT_EQ(boundary_edges_by_tag(p, BoundaryTag::SigmaLeft).size(), 2u);
}

TEST(Mesh, RejectsDegenerateInput)
{
    EXPECT_THROW(build_rect_mesh(0, 1, 1.0, 1.0, false), std::invalid_argument);
    EXPECT_THROW(build_rect_mesh(1, 0, 1.0, 1.0, false), std::invalid_argument);
    EXPECT_THROW(build_rect_mesh(1, 1, 0.0, 1.0, false), std::invalid_argument);
    EXPECT_THROW(build_rect_mesh(1, 1, 1.0, -1.0, false), std::invalid_argument);
}

class MeshInvariants : public ::testing::TestWithParam<std::tuple<std::size_t, std::size_t, double, double, bool>> {};

TEST_P(MeshInvariants, Hold)
{
    const auto [nx, ny, lx, ly, periodic] = GetParam();
    const Mesh m = build_rect_mesh(nx, ny, lx, ly, periodic);

    double area = 0.0;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        EXPECT_GT(m.signed_area(t), 0.0);
        area += m.signed_area(t);
    }
    EXPECT_NEAR(area, lx * ly, 1e-12 * lx * ly);

    double sx = 0.0, sy = 0.0;
    for (const auto& e : m.boundary_edges) {
        sx += e.length * e.normal.x;
        sy += e.length * e.normal.y;
    }
    EXPECT_NEAR(sx, 0.0, 1e-12);
    EXPECT_NEAR(sy, 0.0, 1e-12);

    // edge incidence: boundary edges once, interior edges twice
    std::map<std::pair<std::size_t, std::size_t>, int> count;
    for (const auto& t : m.triangles) {
        for (int k = 0; k < 3; ++k) count[std::minmax(t[static_cast<std::size_t>(k)], t[static_cast<std::size_t>((k + 1) % 3)])]++;
    }
    std::set<std::pair<std::size_t, std::size_t>> boundary;
    for (const auto& e : m.boundary_edges) boundary.insert(std::minmax(e.vertices[0], e.vertices[1]));
    EXPECT_EQ(boundary.size(), m.boundary_edges.size());
    for (const auto& [edge, c] : count) EXPECT_EQ(c, boundary.count(edge) ? 1 : 2);

    for (const auto& e : m.boundary_edges) {
        const auto& tri = m.triangles[e.triangle];
        for (std::size_t v : e.vertices) EXPECT_TRUE(tri[0] == v || tri[1] == v || tri[2] == v);
        const Point& a = m.vertices[e.vertices[0]];
        const Point& b = m.vertices[e.vertices[1]];
        if (is_interface(e.tag)) EXPECT_LT(a.x, b.x);
        else EXPECT_LT(a.y, b.y);
    }

    if (periodic) {
        std::set<std::size_t> left, right;
        for (const auto& [l, r] : m.periodic_pairs) {
            EXPECT_EQ(m.vertices[l].y, m.vertices[r].y);
            left.insert(l);
            right.insert(r);
        }
        EXPECT_EQ(left.size(), ny + 1);
        EXPECT_EQ(right.size(), ny + 1);
    } else {
        EXPECT_TRUE(m.periodic_pairs.empty());
    }
    EXPECT_NEAR(m.tagged_length(BoundaryTag::SigmaTop) + m.tagged_length(BoundaryTag::SigmaBottom), 2.0 * lx, 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Shapes, MeshInvariants,
                         ::testing::Values(std::make_tuple(1, 1, 1.0, 1.0, false), std::make_tuple(3, 5, 0.7, 1.3, false),
                                           std::make_tuple(16, 8, 2.0, 1.0, true), std::make_tuple(160, 16, 5.0, 0.5, false),
                                           std::make_tuple(7, 3, 1.0, 3.0, true)));
