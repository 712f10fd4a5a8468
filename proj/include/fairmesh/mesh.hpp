#ifndef FAIRMESH_MESH_HPP
#define FAIRMESH_MESH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace fairmesh {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Face = std::array<std::size_t, 3>;

/// Thrown for malformed meshes and invalid topology queries.
class MeshError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when a normal is requested from a face with (numerically) zero area.
class DegenerateFaceError : public MeshError {
public:
    DegenerateFaceError(std::size_t face, const std::string &what)
        : MeshError(what), face_(face) {}
    std::size_t face() const noexcept { return face_; }

private:
    std::size_t face_;
};

enum class VertexNormalScheme { AngleWeighted, AreaWeighted };

/// What to do when a zero-area face is encountered while collecting normals.
enum class DegeneratePolicy { Skip, Throw };

/**
 * Indexed triangle mesh with fixed topology.
 *
 * Positions may be replaced (same count) through with_vertices(); the face
 * list and every derived adjacency structure are shared with the source mesh
 * and never change. All neighbourhood lists are sorted by ascending index.
 */
class Mesh {
public:
    Mesh() = default;

    /// Validates the faces and builds the vertex->face map, edge set and boundary set.
    Mesh(std::vector<Vec3> vertices, std::vector<Face> faces)
        : vertices_(std::move(vertices)), faces_(std::move(faces)) {
        if (faces_.empty()) throw MeshError("mesh has no faces");
        const std::size_t nv = vertices_.size();
        for (std::size_t f = 0; f < faces_.size(); ++f) {
            const Face &t = faces_[f];
            for (std::size_t k = 0; k < 3; ++k) {
                if (t[k] >= nv) {
                    throw MeshError("face " + std::to_string(f) + " references vertex " +
                                    std::to_string(t[k]) + " but mesh has " +
                                    std::to_string(nv) + " vertices");
                }
            }
            if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
                throw MeshError("face " + std::to_string(f) + " repeats a vertex");
            }
        }
        build_topology();
    }

    std::size_t num_vertices() const noexcept { return vertices_.size(); }
    std::size_t num_faces() const noexcept { return faces_.size(); }
    std::size_t num_edges() const noexcept { return edges_.size(); }

    const std::vector<Vec3> &vertices() const noexcept { return vertices_; }
    const std::vector<Face> &faces() const noexcept { return faces_; }
    const Vec3 &vertex(std::size_t v) const { return vertices_.at(v); }
    const Face &face(std::size_t f) const { return faces_.at(f); }

    /// Undirected edges as (lo, hi) pairs, sorted.
    const std::vector<std::pair<std::size_t, std::size_t>> &edges() const noexcept { return edges_; }

    /// Number of faces incident to edges()[e].
    std::size_t edge_face_count(std::size_t e) const { return edge_faces_.at(e); }

    bool is_boundary(std::size_t v) const { return boundary_.at(v) != 0; }

    std::vector<std::size_t> boundary_vertices() const {
        std::vector<std::size_t> out;
        for (std::size_t v = 0; v < boundary_.size(); ++v)
            if (boundary_[v]) out.push_back(v);
        return out;
    }

    /// Faces containing v, ascending.
    std::span<const std::size_t> vertex_faces(std::size_t v) const {
        check_vertex(v);
        return {vertex_faces_.data() + vf_offsets_[v], vf_offsets_[v + 1] - vf_offsets_[v]};
    }

    /// Vertices sharing an edge with v, ascending.
    std::span<const std::size_t> vertex_neighbors(std::size_t v) const {
        check_vertex(v);
        return {vertex_nbrs_.data() + vn_offsets_[v], vn_offsets_[v + 1] - vn_offsets_[v]};
    }

    /// Same topology, new positions.
    Mesh with_vertices(std::vector<Vec3> positions) const {
        if (positions.size() != vertices_.size())
            throw MeshError("with_vertices: expected " + std::to_string(vertices_.size()) +
                            " positions, got " + std::to_string(positions.size()));
        Mesh out = *this;
        out.vertices_ = std::move(positions);
        return out;
    }

    /// Concatenated (x0,y0,z0,x1,...) position vector of length 3*N_V.
    Eigen::VectorXd stacked_positions() const {
        Eigen::VectorXd out(3 * vertices_.size());
        for (std::size_t i = 0; i < vertices_.size(); ++i) out.segment<3>(3 * i) = vertices_[i];
        return out;
    }

    Mesh with_stacked_positions(const Eigen::VectorXd &x) const {
        if (static_cast<std::size_t>(x.size()) != 3 * vertices_.size())
            throw MeshError("with_stacked_positions: dimension mismatch");
        std::vector<Vec3> pos(vertices_.size());
        for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = x.segment<3>(3 * i);
        return with_vertices(std::move(pos));
    }

    double mean_edge_length() const {
        if (edges_.empty()) return 0.0;
        double sum = 0.0;
        for (const auto &[a, b] : edges_) sum += (vertices_[a] - vertices_[b]).norm();
        return sum / static_cast<double>(edges_.size());
    }

private:
    void check_vertex(std::size_t v) const {
        if (v >= vertices_.size()) throw MeshError("vertex index " + std::to_string(v) + " out of range");
    }

    void build_topology() {
        const std::size_t nv = vertices_.size();

        // vertex -> faces (CSR, ascending because faces are visited in order)
        vf_offsets_.assign(nv + 1, 0);
        for (const Face &t : faces_)
            for (std::size_t k : t) ++vf_offsets_[k + 1];
        for (std::size_t v = 0; v < nv; ++v) vf_offsets_[v + 1] += vf_offsets_[v];
        vertex_faces_.assign(vf_offsets_[nv], 0);
        std::vector<std::size_t> cursor(vf_offsets_.begin(), vf_offsets_.end() - 1);
        for (std::size_t f = 0; f < faces_.size(); ++f)
            for (std::size_t k : faces_[f]) vertex_faces_[cursor[k]++] = f;

        std::vector<std::pair<std::size_t, std::size_t>> halfedges;
        halfedges.reserve(3 * faces_.size());
        for (const Face &t : faces_) {
            for (std::size_t k = 0; k < 3; ++k) {
                std::size_t a = t[k], b = t[(k + 1) % 3];
                if (a > b) std::swap(a, b);
                halfedges.emplace_back(a, b);
            }
        }
        std::sort(halfedges.begin(), halfedges.end());
        edges_.clear();
        edge_faces_.clear();
        for (std::size_t i = 0; i < halfedges.size();) {
            std::size_t j = i;
            while (j < halfedges.size() && halfedges[j] == halfedges[i]) ++j;
            edges_.push_back(halfedges[i]);
            edge_faces_.push_back(j - i);
            i = j;
        }

        boundary_.assign(nv, 0);
        std::vector<std::vector<std::size_t>> nbrs(nv);
        for (std::size_t e = 0; e < edges_.size(); ++e) {
            const auto [a, b] = edges_[e];
            nbrs[a].push_back(b);
            nbrs[b].push_back(a);
            if (edge_faces_[e] == 1) boundary_[a] = boundary_[b] = 1;
        }
        vn_offsets_.assign(nv + 1, 0);
        vertex_nbrs_.clear();
        for (std::size_t v = 0; v < nv; ++v) {
            std::sort(nbrs[v].begin(), nbrs[v].end());
            vertex_nbrs_.insert(vertex_nbrs_.end(), nbrs[v].begin(), nbrs[v].end());
            vn_offsets_[v + 1] = vertex_nbrs_.size();
        }
    }

    std::vector<Vec3> vertices_;
    std::vector<Face> faces_;
    std::vector<std::size_t> vf_offsets_, vertex_faces_;
    std::vector<std::size_t> vn_offsets_, vertex_nbrs_;
    std::vector<std::pair<std::size_t, std::size_t>> edges_;
    std::vector<std::size_t> edge_faces_;
    std::vector<char> boundary_;
};

inline Mesh build_mesh(std::vector<Vec3> vertices, std::vector<Face> faces) {
    return Mesh(std::move(vertices), std::move(faces));
}

/// Per-face or per-vertex field of unit vectors. Entries with valid[i] == 0 are zero vectors.
struct NormalField {
    enum class Domain { Face, Vertex };

    Domain domain = Domain::Face;
    std::vector<Vec3> values;
    std::vector<char> valid;
    /// Indices of entries that could not be computed (zero-area faces, isolated vertices).
    std::vector<std::size_t> flagged;

    std::size_t size() const noexcept { return values.size(); }
    const Vec3 &operator[](std::size_t i) const { return values[i]; }
    bool is_valid(std::size_t i) const { return valid[i] != 0; }

    static NormalField from_values(Domain d, std::vector<Vec3> vs) {
        NormalField nf;
        nf.domain = d;
        nf.valid.assign(vs.size(), 1);
        for (std::size_t i = 0; i < vs.size(); ++i) {
            const double n = vs[i].norm();
            if (!(n > 1e-300) || !std::isfinite(n)) {
                vs[i].setZero();
                nf.valid[i] = 0;
                nf.flagged.push_back(i);
            } else {
                vs[i] /= n;
            }
        }
        nf.values = std::move(vs);
        return nf;
    }
};

// ---------------------------------------------------------------------------
// Face geometry

inline Vec3 face_centroid(const Mesh &m, std::size_t f) {
    const Face &t = m.face(f);
    return (m.vertex(t[0]) + m.vertex(t[1]) + m.vertex(t[2])) / 3.0;
}

inline Vec3 face_cross(const Mesh &m, std::size_t f) {
    const Face &t = m.face(f);
    return (m.vertex(t[1]) - m.vertex(t[0])).cross(m.vertex(t[2]) - m.vertex(t[0]));
}

inline double face_area(const Mesh &m, std::size_t f) { return 0.5 * face_cross(m, f).norm(); }

/// Mean squared length of the three edges of f; the scale used by the degeneracy test.
inline double face_edge_scale2(const Mesh &m, std::size_t f) {
    const Face &t = m.face(f);
    const Vec3 &a = m.vertex(t[0]), &b = m.vertex(t[1]), &c = m.vertex(t[2]);
    const double mean = ((b - a).norm() + (c - b).norm() + (a - c).norm()) / 3.0;
    return mean * mean;
}

inline bool is_degenerate_face(const Mesh &m, std::size_t f) {
    const double s2 = face_edge_scale2(m, f);
    return !(face_cross(m, f).norm() > 1e-12 * s2) || s2 == 0.0;
}

/// Unit normal, right-handed w.r.t. the stored (counter-clockwise) vertex order.
inline Vec3 face_normal(const Mesh &m, std::size_t f) {
    if (is_degenerate_face(m, f))
        throw DegenerateFaceError(f, "face " + std::to_string(f) + " has zero area");
    return face_cross(m, f).normalized();
}

inline NormalField face_normals(const Mesh &m, DegeneratePolicy policy = DegeneratePolicy::Skip) {
    NormalField nf;
    nf.domain = NormalField::Domain::Face;
    nf.values.resize(m.num_faces(), Vec3::Zero());
    nf.valid.assign(m.num_faces(), 1);
    for (std::size_t f = 0; f < m.num_faces(); ++f) {
        if (is_degenerate_face(m, f)) {
            if (policy == DegeneratePolicy::Throw)
                throw DegenerateFaceError(f, "face " + std::to_string(f) + " has zero area");
            nf.valid[f] = 0;
            nf.flagged.push_back(f);
            continue;
        }
        nf.values[f] = face_cross(m, f).normalized();
    }
    return nf;
}

/// Interior angle (radians) of face f at its corner k (0..2).
inline double corner_angle(const Mesh &m, std::size_t f, std::size_t k) {
    const Face &t = m.face(f);
    const Vec3 e1 = m.vertex(t[(k + 1) % 3]) - m.vertex(t[k]);
    const Vec3 e2 = m.vertex(t[(k + 2) % 3]) - m.vertex(t[k]);
    return std::atan2(e1.cross(e2).norm(), e1.dot(e2));
}

inline std::size_t corner_of(const Face &t, std::size_t v) {
    return t[0] == v ? 0 : (t[1] == v ? 1 : 2);
}

/**
 * Weighted average of the given face normals around v. Faces flagged invalid
 * in `fn` are skipped. Returns nullopt when nothing contributes.
 */
inline std::optional<Vec3> try_vertex_normal(const Mesh &m, std::size_t v, const NormalField &fn,
                                             VertexNormalScheme scheme = VertexNormalScheme::AngleWeighted) {
    Vec3 acc = Vec3::Zero();
    double wsum = 0.0;
    for (std::size_t f : m.vertex_faces(v)) {
        if (!fn.is_valid(f)) continue;
        const double w = scheme == VertexNormalScheme::AngleWeighted ? corner_angle(m, f, corner_of(m.face(f), v))
                                                                     : face_area(m, f);
        acc += w * fn[f];
        wsum += w;
    }
    const double n = acc.norm();
    if (wsum <= 0.0 || !(n > 1e-300)) return std::nullopt;
    return Vec3(acc / n);
}

inline Vec3 vertex_normal(const Mesh &m, std::size_t v,
                          VertexNormalScheme scheme = VertexNormalScheme::AngleWeighted) {
    if (m.vertex_faces(v).empty())
        throw MeshError("vertex " + std::to_string(v) + " is isolated");
    const NormalField fn = face_normals(m);
    auto n = try_vertex_normal(m, v, fn, scheme);
    if (!n) throw MeshError("vertex " + std::to_string(v) + " has no non-degenerate incident face");
    return *n;
}

/// Vertex normals for every vertex, averaged from an arbitrary face-normal field.
inline NormalField vertex_normals(const Mesh &m, const NormalField &fn,
                                  VertexNormalScheme scheme = VertexNormalScheme::AngleWeighted) {
    NormalField out;
    out.domain = NormalField::Domain::Vertex;
    out.values.resize(m.num_vertices(), Vec3::Zero());
    out.valid.assign(m.num_vertices(), 0);
    for (std::size_t v = 0; v < m.num_vertices(); ++v) {
        if (auto n = try_vertex_normal(m, v, fn, scheme)) {
            out.values[v] = *n;
            out.valid[v] = 1;
        } else {
            out.flagged.push_back(v);
        }
    }
    return out;
}

inline NormalField vertex_normals(const Mesh &m,
                                  VertexNormalScheme scheme = VertexNormalScheme::AngleWeighted) {
    return vertex_normals(m, face_normals(m), scheme);
}

// ---------------------------------------------------------------------------
// Neighbourhoods

inline std::vector<std::size_t> vertex_face_ring(const Mesh &m, std::size_t v) {
    const auto ring = m.vertex_faces(v);
    return {ring.begin(), ring.end()};
}

/// Faces sharing at least one vertex with f, excluding f, ascending.
inline std::vector<std::size_t> face_neighborhood(const Mesh &m, std::size_t f) {
    std::vector<std::size_t> out;
    for (std::size_t v : m.face(f))
        for (std::size_t g : m.vertex_faces(v))
            if (g != f) out.push_back(g);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Neighbourhood lists for all faces at once.
inline std::vector<std::vector<std::size_t>> face_neighborhoods(const Mesh &m) {
    std::vector<std::vector<std::size_t>> out(m.num_faces());
    for (std::size_t f = 0; f < m.num_faces(); ++f) out[f] = face_neighborhood(m, f);
    return out;
}

/// Mean length of the edges incident to v.
inline double local_scale(const Mesh &m, std::size_t v) {
    const auto nbrs = m.vertex_neighbors(v);
    if (nbrs.empty()) throw MeshError("local_scale: vertex " + std::to_string(v) + " has no incident edge");
    double sum = 0.0;
    for (std::size_t u : nbrs) sum += (m.vertex(u) - m.vertex(v)).norm();
    return sum / static_cast<double>(nbrs.size());
}

/// local_scale for every vertex; isolated vertices get 0.
inline std::vector<double> local_scales(const Mesh &m) {
    std::vector<double> out(m.num_vertices(), 0.0);
    for (std::size_t v = 0; v < m.num_vertices(); ++v)
        if (!m.vertex_neighbors(v).empty()) out[v] = local_scale(m, v);
    return out;
}

}  // namespace fairmesh

#endif  // FAIRMESH_MESH_HPP
