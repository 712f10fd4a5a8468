#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "fairmesh/fixtures.hpp"
#include "fairmesh/mesh.hpp"
#include "test_util.hpp"

using namespace fairmesh;

namespace {

void expect_vec_near(const Vec3 &a, const Vec3 &b, double tol) {
    EXPECT_NEAR(a.x(), b.x(), tol);
    EXPECT_NEAR(a.y(), b.y(), tol);
    EXPECT_NEAR(a.z(), b.z(), tol);
}

}  // namespace

TEST(BuildMesh, SingleTriangle) {
    const Mesh m = fixtures::single_triangle();
    EXPECT_EQ(m.num_vertices(), 3u);
    EXPECT_EQ(m.num_edges(), 3u);
    EXPECT_EQ(m.boundary_vertices().size(), 3u);
}

TEST(BuildMesh, ClosedTetrahedronHasNoBoundary) {
    const Mesh m = fixtures::tetrahedron();
    EXPECT_EQ(m.num_edges(), 6u);
    EXPECT_TRUE(m.boundary_vertices().empty());
}

TEST(BuildMesh, RejectsOutOfRangeIndex) {
    std::vector<Vec3> v = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
    try {
        build_mesh(v, {Face{0, 0 + 1, 2}, Face{0, 0, 1}});
        FAIL() << "repeated vertex accepted";
    } catch (const MeshError &e) {
        EXPECT_NE(std::string(e.what()).find("face 1"), std::string::npos);
    }
    try {
        build_mesh(v, {Face{0, 0, 1}});
        FAIL();
    } catch (const MeshError &) {
    }
    try {
        build_mesh(v, {Face{0, 1, 5}});
        FAIL() << "out-of-range index accepted";
    } catch (const MeshError &e) {
        EXPECT_NE(std::string(e.what()).find("face 0"), std::string::npos);
    }
    EXPECT_THROW(build_mesh(v, {}), MeshError);
}

TEST(BuildMesh, PreservesOrientation) {
    const Mesh m = build_mesh({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}, {Face{0, 2, 1}});
    EXPECT_EQ(m.face(0), (Face{0, 2, 1}));
}

TEST(BuildMesh, EdgeSetMatchesFaces) {
    const Mesh m = test::perturbed_grid(4, 0.1, 3);
    std::set<std::pair<std::size_t, std::size_t>> expected;
    for (const Face &f : m.faces())
        for (int k = 0; k < 3; ++k) expected.insert(std::minmax(f[k], f[(k + 1) % 3]));
    std::set<std::pair<std::size_t, std::size_t>> got(m.edges().begin(), m.edges().end());
    EXPECT_EQ(got, expected);
}

TEST(BuildMesh, BoundaryMatchesBruteForce) {
    for (const Mesh &m : {fixtures::make_grid_mesh(3), fixtures::make_grid_mesh(5), fixtures::tetrahedron(),
                          fixtures::make_cube(2), fixtures::make_icosphere(2), test::cube_corner()}) {
        const auto brute = test::brute_force_boundary(m);
        for (std::size_t v = 0; v < m.num_vertices(); ++v) EXPECT_EQ(m.is_boundary(v), brute[v] != 0) << v;
    }
    // Grid boundary is exactly the perimeter.
    const Mesh g = fixtures::make_grid_mesh(5);
    for (std::size_t v = 0; v < g.num_vertices(); ++v) {
        const Vec3 &p = g.vertex(v);
        const bool perimeter = p.x() == 0 || p.y() == 0 || p.x() == 5 || p.y() == 5;
        EXPECT_EQ(g.is_boundary(v), perimeter);
    }
}

TEST(FaceNormal, AxisAlignedAndFlipped) {
    const Mesh m = fixtures::single_triangle();
    expect_vec_near(face_normal(m, 0), Vec3(0, 0, 1), 0);
    const Mesh r = build_mesh(m.vertices(), {Face{0, 2, 1}});
    expect_vec_near(face_normal(r, 0), Vec3(0, 0, -1), 0);
}

TEST(FaceNormal, SlantedPlane) {
    const Mesh m = build_mesh({Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)}, {Face{0, 1, 2}});
    expect_vec_near(face_normal(m, 0), Vec3(1, 1, 1) / std::sqrt(3.0), 1e-15);
}

TEST(FaceNormal, DegenerateFacePolicy) {
    const Mesh m = build_mesh({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(0, 1, 0)},
                              {Face{0, 1, 2}, Face{0, 1, 3}});
    EXPECT_THROW(face_normal(m, 0), DegenerateFaceError);
    const NormalField fn = face_normals(m);
    EXPECT_FALSE(fn.is_valid(0));
    EXPECT_TRUE(fn.is_valid(1));
    EXPECT_EQ(fn.flagged, std::vector<std::size_t>{0});
    EXPECT_THROW(face_normals(m, DegeneratePolicy::Throw), DegenerateFaceError);
    EXPECT_DOUBLE_EQ(face_area(m, 0), 0.0);
}

TEST(FaceNormal, OrthogonalToFaceEdges) {
    const Mesh m = test::perturbed_sphere(3, 0.05, 11);
    for (std::size_t f = 0; f < m.num_faces(); ++f) {
        const Vec3 n = face_normal(m, f);
        EXPECT_NEAR(n.norm(), 1.0, 1e-12);
        for (std::size_t v : m.face(f)) EXPECT_NEAR(n.dot(m.vertex(v) - face_centroid(m, f)), 0.0, 1e-9);
    }
}

TEST(FaceGeometry, CentroidAndArea) {
    const Mesh m = fixtures::single_triangle();
    expect_vec_near(face_centroid(m, 0), Vec3(1.0 / 3, 1.0 / 3, 0), 1e-15);
    EXPECT_DOUBLE_EQ(face_area(m, 0), 0.5);
    const Mesh eq = build_mesh({Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(1, std::sqrt(3.0), 0)}, {Face{0, 1, 2}});
    EXPECT_NEAR(face_area(eq, 0), std::sqrt(3.0), 1e-14);
}

TEST(VertexNormal, FlatGridInterior) {
    const Mesh g = fixtures::make_grid_mesh(4);
    for (auto scheme : {VertexNormalScheme::AngleWeighted, VertexNormalScheme::AreaWeighted})
        expect_vec_near(vertex_normal(g, 6, scheme), Vec3(0, 0, 1), 1e-15);
}

TEST(VertexNormal, PyramidApex) {
    const Mesh p = build_mesh({Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(-1, 0, 0), Vec3(0, -1, 0), Vec3(0, 0, 1)},
                              {Face{0, 1, 4}, Face{1, 2, 4}, Face{2, 3, 4}, Face{3, 0, 4}});
    for (auto scheme : {VertexNormalScheme::AngleWeighted, VertexNormalScheme::AreaWeighted})
        expect_vec_near(vertex_normal(p, 4, scheme), Vec3(0, 0, 1), 1e-15);
}

TEST(VertexNormal, CubeCornerAreaWeighted) {
    const Mesh c = test::cube_corner();
    // Six equal-area triangles, two per axis plane: (2x + 2y + 2z) normalised.
    expect_vec_near(vertex_normal(c, 0, VertexNormalScheme::AreaWeighted), Vec3(1, 1, 1) / std::sqrt(3.0), 1e-15);
}

TEST(VertexNormal, IsolatedVertexThrows) {
    const Mesh m = build_mesh({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(5, 5, 5)}, {Face{0, 1, 2}});
    EXPECT_THROW(vertex_normal(m, 3), MeshError);
    EXPECT_THROW(local_scale(m, 3), MeshError);
}

TEST(VertexNormal, UniformRingReproducesSharedNormal) {
    // A tilted fan: every incident face lies in one plane.
    const Vec3 n = Vec3(0.3, -0.2, 0.9).normalized();
    const Vec3 t1 = n.unitOrthogonal(), t2 = n.cross(t1);
    std::vector<Vec3> v = {Vec3(0.2, 0.1, 0.4)};
    const double angles[5] = {0.0, 1.1, 2.5, 3.9, 5.0};
    for (double a : angles) v.push_back(v[0] + (1.0 + 0.3 * a) * (std::cos(a) * t1 + std::sin(a) * t2));
    std::vector<Face> f;
    for (std::size_t k = 0; k < 5; ++k) f.push_back({0, 1 + k, 1 + (k + 1) % 5});
    const Mesh m = build_mesh(v, f);
    for (auto scheme : {VertexNormalScheme::AngleWeighted, VertexNormalScheme::AreaWeighted})
        expect_vec_near(vertex_normal(m, 0, scheme), n, 1e-14);
}

TEST(VertexFaceRing, Counts) {
    const Mesh g = fixtures::make_grid_mesh(3);
    EXPECT_EQ(vertex_face_ring(g, 5).size(), 6u);  // interior (1,1)
    EXPECT_EQ(vertex_face_ring(g, 0).size(), 2u);  // corner on the split diagonal
    EXPECT_EQ(vertex_face_ring(g, 3).size(), 1u);  // corner off the diagonal
    EXPECT_EQ(vertex_face_ring(g, 12).size(), 1u);
    EXPECT_EQ(vertex_face_ring(g, 15).size(), 2u);
    const Mesh t = fixtures::tetrahedron();
    for (std::size_t v = 0; v < 4; ++v) EXPECT_EQ(vertex_face_ring(t, v).size(), 3u);
}

TEST(FaceNeighborhood, Counts) {
    const Mesh t = fixtures::tetrahedron();
    EXPECT_EQ(face_neighborhood(t, 0), (std::vector<std::size_t>{1, 2, 3}));
    EXPECT_TRUE(face_neighborhood(fixtures::single_triangle(), 0).empty());
    const Mesh g = fixtures::make_grid_mesh(5);
    // Faces of cell (2,2) are interior.
    EXPECT_EQ(face_neighborhood(g, 2 * (2 * 5 + 2)).size(), 12u);
    EXPECT_EQ(face_neighborhood(g, 2 * (2 * 5 + 2) + 1).size(), 12u);
}

TEST(Neighborhoods, AgreeWithBruteForceScan) {
    for (const Mesh &m : {fixtures::make_grid_mesh(4), fixtures::make_icosphere(2), fixtures::make_cube(2),
                          test::skewed_ring()}) {
        for (std::size_t v = 0; v < m.num_vertices(); ++v) {
            std::vector<std::size_t> brute;
            for (std::size_t f = 0; f < m.num_faces(); ++f)
                for (std::size_t k : m.face(f))
                    if (k == v) brute.push_back(f);
            EXPECT_EQ(vertex_face_ring(m, v), brute);
        }
        for (std::size_t f = 0; f < m.num_faces(); ++f) {
            std::vector<std::size_t> brute;
            for (std::size_t g = 0; g < m.num_faces(); ++g) {
                if (g == f) continue;
                bool shares = false;
                for (std::size_t a : m.face(f))
                    for (std::size_t b : m.face(g)) shares |= a == b;
                if (shares) brute.push_back(g);
            }
            EXPECT_EQ(face_neighborhood(m, f), brute);
        }
    }
}

TEST(LocalScale, Examples) {
    const Mesh g = fixtures::make_grid_mesh(3);
    EXPECT_NEAR(local_scale(g, 5), (4.0 + 2.0 * std::sqrt(2.0)) / 6.0, 1e-15);
    const Mesh eq = build_mesh({Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(1, std::sqrt(3.0), 0)}, {Face{0, 1, 2}});
    for (std::size_t v = 0; v < 3; ++v) EXPECT_NEAR(local_scale(eq, v), 2.0, 1e-15);
    EXPECT_DOUBLE_EQ(local_scale(fixtures::single_triangle(), 0), 1.0);
}

TEST(LocalScale, PositiveWhereverEdgesExist) {
    const Mesh m = test::perturbed_sphere(3, 0.05, 5);
    for (double l : local_scales(m)) EXPECT_GT(l, 0.0);
}

TEST(Fixtures, Counts) {
    const Mesh cube = fixtures::benchmark_cube();
    EXPECT_EQ(cube.num_vertices(), 1538u);
    EXPECT_EQ(cube.num_faces(), 3072u);
    EXPECT_TRUE(cube.boundary_vertices().empty());
    const Mesh uv = fixtures::make_uv_sphere(30, 32);
    EXPECT_EQ(uv.num_vertices(), 962u);
    EXPECT_EQ(uv.num_faces(), 1920u);
    EXPECT_TRUE(uv.boundary_vertices().empty());
    const Mesh ico = fixtures::benchmark_sphere();
    EXPECT_EQ(ico.num_vertices(), 1002u);
    EXPECT_EQ(ico.num_faces(), 2000u);
    EXPECT_TRUE(ico.boundary_vertices().empty());
    const Mesh g = fixtures::make_grid_mesh(2);
    EXPECT_EQ(g.num_vertices(), 9u);
    EXPECT_EQ(g.num_faces(), 8u);
}

TEST(Fixtures, ClosedMeshesAreOutwardOriented) {
    for (const Mesh &m : {fixtures::tetrahedron(), fixtures::make_cube(4), fixtures::make_icosphere(3),
                          fixtures::make_uv_sphere(8, 12)}) {
        Vec3 center = Vec3::Zero();
        for (const Vec3 &p : m.vertices()) center += p;
        center /= static_cast<double>(m.num_vertices());
        for (std::size_t f = 0; f < m.num_faces(); ++f)
            EXPECT_GT(face_normal(m, f).dot(face_centroid(m, f) - center), 0.0);
    }
}
