#ifndef FAIRMESH_METRICS_HPP
#define FAIRMESH_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fairmesh/mesh.hpp"

namespace fairmesh {

struct Histogram {
    double bin_width_deg = 5.0;
    std::vector<std::size_t> counts;
    /// Faces whose angles were binned by the degenerate {0, 0, 180} convention.
    std::vector<std::size_t> degenerate_faces;

    double lower_edge(std::size_t bin) const { return static_cast<double>(bin) * bin_width_deg; }
    std::size_t total() const {
        std::size_t t = 0;
        for (auto c : counts) t += c;
        return t;
    }
};

struct MetricsReport {
    double mean_NE_deg = 0.0;
    double median_NE_deg = 0.0;
    double mean_VPE = 0.0;
    double median_VPE = 0.0;
    std::size_t flipped_face_count = 0;
    Histogram corner_angle_histogram;
};

namespace detail {

inline double median_of(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

inline double mean_of(const std::vector<double> &xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

inline void require_same_topology(const Mesh &a, const Mesh &b) {
    if (a.num_vertices() != b.num_vertices() || a.faces() != b.faces())
        throw MeshError("meshes do not share topology");
}

}  // namespace detail

struct MeanMedian {
    double mean = 0.0;
    double median = 0.0;
};

/**
 * Displaces every vertex by an i.i.d. Gaussian with per-coordinate standard
 * deviation sigma_rel * (global mean edge length). Deterministic for a seed.
 */
inline Mesh add_gaussian_noise(const Mesh &m, double sigma_rel, std::uint64_t seed) {
    if (!(sigma_rel >= 0.0)) throw MeshError("sigma_rel must be non-negative");
    if (sigma_rel == 0.0) return m;
    const double sigma = sigma_rel * m.mean_edge_length();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    std::vector<Vec3> pos = m.vertices();
    for (Vec3 &p : pos) {
        const double dx = gauss(rng), dy = gauss(rng), dz = gauss(rng);
        p += Vec3(dx, dy, dz);
    }
    return m.with_vertices(std::move(pos));
}

/// Angular deviation (degrees) between corresponding face normals, over faces non-degenerate in both meshes.
inline std::vector<double> face_angle_errors(const Mesh &est, const Mesh &gt) {
    detail::require_same_topology(est, gt);
    const NormalField ne = face_normals(est), ng = face_normals(gt);
    std::vector<double> out;
    out.reserve(est.num_faces());
    for (std::size_t f = 0; f < est.num_faces(); ++f) {
        if (!ne.is_valid(f) || !ng.is_valid(f)) continue;
        const double c = std::clamp(ne[f].dot(ng[f]), -1.0, 1.0);
        out.push_back(std::acos(c) * 180.0 / std::numbers::pi);
    }
    return out;
}

inline MeanMedian normal_angle_error(const Mesh &est, const Mesh &gt) {
    const auto e = face_angle_errors(est, gt);
    return {detail::mean_of(e), detail::median_of(e)};
}

inline MeanMedian vertex_position_error(const Mesh &est, const Mesh &gt) {
    if (est.num_vertices() != gt.num_vertices()) throw MeshError("vertex count mismatch");
    std::vector<double> d(est.num_vertices());
    for (std::size_t v = 0; v < d.size(); ++v) d[v] = (est.vertex(v) - gt.vertex(v)).norm();
    return {detail::mean_of(d), detail::median_of(d)};
}

/// Faces whose current normal points away from the reference (n . ref < 0). Degenerate faces are not counted.
inline std::size_t count_flipped_faces(const Mesh &m, const NormalField &reference) {
    if (reference.size() != m.num_faces()) throw MeshError("reference normal count mismatch");
    const NormalField fn = face_normals(m);
    std::size_t flipped = 0;
    for (std::size_t f = 0; f < m.num_faces(); ++f)
        if (fn.is_valid(f) && fn[f].dot(reference[f]) < 0.0) ++flipped;
    return flipped;
}

/// Per-face reference built from the mesh's own angle-weighted vertex normals (used when no ground truth exists).
inline NormalField vertex_average_face_reference(const Mesh &m) {
    const NormalField vn = vertex_normals(m);
    std::vector<Vec3> ref(m.num_faces());
    for (std::size_t f = 0; f < m.num_faces(); ++f) {
        ref[f].setZero();
        for (std::size_t v : m.face(f)) ref[f] += vn[v];
    }
    return NormalField::from_values(NormalField::Domain::Face, std::move(ref));
}

inline Histogram corner_angle_histogram(const Mesh &m, double bin_width_deg) {
    if (!(bin_width_deg > 0.0)) throw MeshError("bin width must be positive");
    const double nb = 180.0 / bin_width_deg;
    const auto bins = static_cast<std::size_t>(std::llround(nb));
    if (bins == 0 || std::abs(nb - static_cast<double>(bins)) > 1e-9) throw MeshError("bin width must divide 180");
    Histogram h;
    h.bin_width_deg = bin_width_deg;
    h.counts.assign(bins, 0);
    auto put = [&](double deg) {
        // Angles that sit on a bin edge up to rounding (60 deg in an equilateral face) go to the upper bin.
        auto b = static_cast<std::size_t>(std::floor(deg / bin_width_deg + 1e-9));
        h.counts[std::min(b, bins - 1)]++;
    };
    for (std::size_t f = 0; f < m.num_faces(); ++f) {
        if (is_degenerate_face(m, f)) {
            h.degenerate_faces.push_back(f);
            put(0.0);
            put(0.0);
            put(180.0);
            continue;
        }
        for (std::size_t k = 0; k < 3; ++k) put(corner_angle(m, f, k) * 180.0 / std::numbers::pi);
    }
    return h;
}

/// Fraction of all corner angles below lo_deg or above hi_deg; degenerate faces count as {0, 0, 180}.
inline double extreme_angle_fraction(const Mesh &m, double lo_deg, double hi_deg) {
    std::size_t bad = 0;
    for (std::size_t f = 0; f < m.num_faces(); ++f) {
        if (is_degenerate_face(m, f)) {
            bad += 2 + (180.0 > hi_deg ? 1 : 0);
            continue;
        }
        for (std::size_t k = 0; k < 3; ++k) {
            const double a = corner_angle(m, f, k) * 180.0 / std::numbers::pi;
            if (a < lo_deg || a > hi_deg) ++bad;
        }
    }
    return static_cast<double>(bad) / static_cast<double>(3 * m.num_faces());
}

/// Full report of `est` against ground truth `gt` (flips measured against gt face normals).
inline MetricsReport evaluate(const Mesh &est, const Mesh &gt, double bin_width_deg = 5.0) {
    MetricsReport r;
    const auto ne = normal_angle_error(est, gt);
    const auto vpe = vertex_position_error(est, gt);
    r.mean_NE_deg = ne.mean;
    r.median_NE_deg = ne.median;
    r.mean_VPE = vpe.mean;
    r.median_VPE = vpe.median;
    r.flipped_face_count = count_flipped_faces(est, face_normals(gt));
    r.corner_angle_histogram = corner_angle_histogram(est, bin_width_deg);
    return r;
}

}  // namespace fairmesh

#endif  // FAIRMESH_METRICS_HPP
