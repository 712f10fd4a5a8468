#ifndef FAIRMESH_FIXTURES_HPP
#define FAIRMESH_FIXTURES_HPP

// Synthetic meshes used by the experiments and tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <tuple>
#include <vector>

#include "fairmesh/mesh.hpp"

namespace fairmesh::fixtures {

inline Mesh single_triangle() {
    return build_mesh({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}, {Face{0, 1, 2}});
}

/// Regular tetrahedron with outward normals.
inline Mesh tetrahedron() {
    return build_mesh({Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1), Vec3(-1, -1, 1)},
                      {Face{0, 1, 2}, Face{0, 3, 1}, Face{0, 2, 3}, Face{1, 3, 2}});
}

/**
 * n x n unit-spaced grid in the z = 0 plane; vertex (row r, col c) has index
 * r*(n+1)+c and position (c, r, 0). Every cell is split along the same
 * diagonal, so corner angles are 45 and 90 degrees and normals are +z.
 */
inline Mesh make_grid_mesh(int n) {
    if (n < 1) throw MeshError("grid size must be at least 1");
    const auto side = static_cast<std::size_t>(n + 1);
    std::vector<Vec3> vs;
    vs.reserve(side * side);
    for (std::size_t r = 0; r < side; ++r)
        for (std::size_t c = 0; c < side; ++c) vs.emplace_back(static_cast<double>(c), static_cast<double>(r), 0.0);
    std::vector<Face> fs;
    fs.reserve(2 * static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (std::size_t r = 0; r + 1 < side; ++r)
        for (std::size_t c = 0; c + 1 < side; ++c) {
            const std::size_t a = r * side + c, b = a + 1, d = a + side + 1, e = a + side;
            fs.push_back({a, b, d});
            fs.push_back({a, d, e});
        }
    return build_mesh(std::move(vs), std::move(fs));
}

/**
 * Corrupts a grid without touching topology: for a random `fraction` of the
 * interior edges (no two sharing a vertex), one endpoint is moved onto the
 * other and then jittered in-plane by up to `jitter` edge lengths. The
 * resulting faces are skinny or folded.
 */
inline Mesh collapse_edges(const Mesh &m, double fraction, std::uint64_t seed, double jitter = 0.15) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw MeshError("collapse fraction must lie in [0,1)");
    if (fraction == 0.0) return m;
    std::vector<std::size_t> interior;
    for (std::size_t e = 0; e < m.num_edges(); ++e) {
        const auto [a, b] = m.edges()[e];
        if (!m.is_boundary(a) && !m.is_boundary(b)) interior.push_back(e);
    }
    std::mt19937_64 rng(seed);
    std::shuffle(interior.begin(), interior.end(), rng);
    const auto target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(interior.size())));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<char> touched(m.num_vertices(), 0);
    std::vector<Vec3> pos = m.vertices();
    const double h = m.mean_edge_length();
    std::size_t done = 0;
    for (std::size_t e : interior) {
        if (done == target) break;
        auto [a, b] = m.edges()[e];
        if (touched[a] || touched[b]) continue;
        if (unit(rng) < 0.5) std::swap(a, b);
        const double angle = 2.0 * std::numbers::pi * unit(rng);
        const double radius = jitter * h * unit(rng);
        pos[b] = pos[a] + Vec3(radius * std::cos(angle), radius * std::sin(angle), 0.0);
        touched[a] = touched[b] = 1;
        ++done;
    }
    return m.with_vertices(std::move(pos));
}

/**
 * Axis-aligned cube [0,1]^3, each side an n x n grid: 6n^2+2 vertices and
 * 12n^2 outward-oriented faces (n = 16 gives 1538 / 3072).
 */
inline Mesh make_cube(int n) {
    if (n < 1) throw MeshError("cube subdivision must be at least 1");
    std::map<std::tuple<long, long, long>, std::size_t> index;
    std::vector<Vec3> vs;
    std::vector<Face> fs;
    auto id = [&](const Vec3 &p) {
        const auto key = std::make_tuple(std::lround(p.x() * n), std::lround(p.y() * n), std::lround(p.z() * n));
        auto [it, inserted] = index.try_emplace(key, vs.size());
        if (inserted) vs.push_back(p);
        return it->second;
    };
    // Each side: origin, two spanning axes, outward normal.
    struct Side {
        Vec3 origin, u, v, normal;
    };
    const Side sides[6] = {
        {Vec3(0, 0, 0), Vec3::UnitX(), Vec3::UnitY(), -Vec3::UnitZ()},
        {Vec3(0, 0, 1), Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()},
        {Vec3(0, 0, 0), Vec3::UnitX(), Vec3::UnitZ(), -Vec3::UnitY()},
        {Vec3(0, 1, 0), Vec3::UnitX(), Vec3::UnitZ(), Vec3::UnitY()},
        {Vec3(0, 0, 0), Vec3::UnitY(), Vec3::UnitZ(), -Vec3::UnitX()},
        {Vec3(1, 0, 0), Vec3::UnitY(), Vec3::UnitZ(), Vec3::UnitX()},
    };
    const double s = 1.0 / n;
    for (const Side &side : sides) {
        const bool flip = side.u.cross(side.v).dot(side.normal) < 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const std::size_t a = id(side.origin + s * (i * side.u + j * side.v));
                const std::size_t b = id(side.origin + s * ((i + 1) * side.u + j * side.v));
                const std::size_t c = id(side.origin + s * ((i + 1) * side.u + (j + 1) * side.v));
                const std::size_t d = id(side.origin + s * (i * side.u + (j + 1) * side.v));
                if (!flip) {
                    fs.push_back({a, b, c});
                    fs.push_back({a, c, d});
                } else {
                    fs.push_back({a, c, b});
                    fs.push_back({a, d, c});
                }
            }
    }
    return build_mesh(std::move(vs), std::move(fs));
}

/**
 * Latitude-longitude sphere centred at the origin with `rings` interior
 * latitude rings and `segments` longitudes: rings*segments + 2 vertices and
 * 2*rings*segments faces (30 x 32 gives 962 / 1920).
 */
inline Mesh make_uv_sphere(int rings, int segments, double radius = 1.0) {
    if (rings < 1 || segments < 3) throw MeshError("sphere needs rings >= 1 and segments >= 3");
    std::vector<Vec3> vs;
    vs.emplace_back(0.0, 0.0, radius);
    for (int r = 1; r <= rings; ++r) {
        const double theta = std::numbers::pi * r / (rings + 1);
        for (int s = 0; s < segments; ++s) {
            const double phi = 2.0 * std::numbers::pi * s / segments;
            vs.emplace_back(radius * std::sin(theta) * std::cos(phi), radius * std::sin(theta) * std::sin(phi),
                            radius * std::cos(theta));
        }
    }
    vs.emplace_back(0.0, 0.0, -radius);
    const std::size_t south = vs.size() - 1;
    const auto seg = static_cast<std::size_t>(segments);
    auto ring_vertex = [&](int r, std::size_t s) { return 1 + static_cast<std::size_t>(r - 1) * seg + (s % seg); };
    std::vector<Face> fs;
    for (std::size_t s = 0; s < seg; ++s) fs.push_back({0, ring_vertex(1, s), ring_vertex(1, s + 1)});
    for (int r = 1; r < rings; ++r)
        for (std::size_t s = 0; s < seg; ++s) {
            const std::size_t a = ring_vertex(r, s), b = ring_vertex(r + 1, s), c = ring_vertex(r + 1, s + 1),
                              d = ring_vertex(r, s + 1);
            fs.push_back({a, b, c});
            fs.push_back({a, c, d});
        }
    for (std::size_t s = 0; s < seg; ++s) fs.push_back({south, ring_vertex(rings, s + 1), ring_vertex(rings, s)});
    return build_mesh(std::move(vs), std::move(fs));
}

/**
 * Geodesic sphere: every icosahedron face split into frequency^2 triangles
 * and projected onto the sphere. 10 f^2 + 2 vertices, 20 f^2 faces.
 */
inline Mesh make_icosphere(int frequency, double radius = 1.0) {
    if (frequency < 1) throw MeshError("icosphere frequency must be at least 1");
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    const Vec3 ico[12] = {Vec3(-1, t, 0), Vec3(1, t, 0), Vec3(-1, -t, 0), Vec3(1, -t, 0),
                          Vec3(0, -1, t), Vec3(0, 1, t), Vec3(0, -1, -t), Vec3(0, 1, -t),
                          Vec3(t, 0, -1), Vec3(t, 0, 1), Vec3(-t, 0, -1), Vec3(-t, 0, 1)};
    const int tris[20][3] = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                             {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    std::map<std::tuple<long long, long long, long long>, std::size_t> index;
    std::vector<Vec3> vs;
    auto id = [&](const Vec3 &p) {
        const Vec3 u = p.normalized();
        const auto key = std::make_tuple(std::llround(u.x() * 1e9), std::llround(u.y() * 1e9), std::llround(u.z() * 1e9));
        auto [it, inserted] = index.try_emplace(key, vs.size());
        if (inserted) vs.push_back(radius * u);
        return it->second;
    };
    const int n = frequency;
    std::vector<Face> fs;
    for (const auto &tri : tris) {
        const Vec3 &A = ico[tri[0]], &B = ico[tri[1]], &C = ico[tri[2]];
        auto P = [&](int i, int j) { return id(A + (B - A) * (double(i) / n) + (C - A) * (double(j) / n)); };
        for (int i = 0; i < n; ++i)
            for (int j = 0; i + j < n; ++j) {
                fs.push_back({P(i, j), P(i + 1, j), P(i, j + 1)});
                if (i + j + 2 <= n) fs.push_back({P(i + 1, j), P(i + 1, j + 1), P(i, j + 1)});
            }
    }
    return build_mesh(std::move(vs), std::move(fs));
}

/// Sphere of the denoising benchmark: frequency-10 icosphere (1002 / 2000), unit diameter.
inline Mesh benchmark_sphere() { return make_icosphere(10, 0.5); }

/// The 1538-vertex cube of the fairness ablation.
inline Mesh benchmark_cube() { return make_cube(16); }

/// Height field and analytic normals for the synthetic fusion experiment.
struct BumpField {
    double amplitude = 0.0;
    double period = 1.0;

    double height(double x, double y) const {
        return amplitude * std::sin(2.0 * std::numbers::pi * x / period) * std::sin(2.0 * std::numbers::pi * y / period);
    }
    Vec3 normal(double x, double y) const {
        const double k = 2.0 * std::numbers::pi / period;
        const double hx = amplitude * k * std::cos(k * x) * std::sin(k * y);
        const double hy = amplitude * k * std::sin(k * x) * std::cos(k * y);
        return Vec3(-hx, -hy, 1.0).normalized();
    }
};

/**
 * Fusion fixture: a flat n x n grid scaled to the unit square (the smooth
 * mesh) and per-vertex normals of a shallow sinusoidal bump over it.
 */
struct FusionFixture {
    Mesh smooth;
    std::vector<Vec3> vertex_normals;
    BumpField bump;
};

inline FusionFixture make_bump_fixture(int n = 32, double amplitude = 0.04, double period = 0.5) {
    FusionFixture fx;
    const Mesh grid = make_grid_mesh(n);
    std::vector<Vec3> pos = grid.vertices();
    for (Vec3 &p : pos) p /= static_cast<double>(n);
    fx.smooth = grid.with_vertices(std::move(pos));
    fx.bump = BumpField{amplitude, period};
    for (const Vec3 &p : fx.smooth.vertices()) fx.vertex_normals.push_back(fx.bump.normal(p.x(), p.y()));
    return fx;
}

}  // namespace fairmesh::fixtures

#endif  // FAIRMESH_FIXTURES_HPP
