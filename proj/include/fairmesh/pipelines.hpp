#ifndef FAIRMESH_PIPELINES_HPP
#define FAIRMESH_PIPELINES_HPP

#include <chrono>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairmesh/fairness.hpp"
#include "fairmesh/mesh.hpp"
#include "fairmesh/metrics.hpp"
#include "fairmesh/mollifier.hpp"

namespace fairmesh {

struct DenoiseConfig {
    MollifyParams mollify;
    SolverParams solver;
    int outer_rounds = 2;
};

struct RoundDiagnostics {
    int round = 0;
    /// Cost of the round's starting positions under the round's frozen operators.
    double initial_cost = 0.0;
    double cost = 0.0;
    double grad_inf = 0.0;
    std::size_t flipped_faces = 0;
    double elapsed_ms = 0.0;
    int solver_iterations = 0;
    bool converged = false;
};

struct PipelineResult {
    Mesh mesh;
    std::vector<RoundDiagnostics> rounds;
};

/// Thrown when a pipeline stage fails; carries the 1-based round.
class PipelineError : public std::runtime_error {
public:
    PipelineError(int round, const std::string &what)
        : std::runtime_error("round " + std::to_string(round) + ": " + what), round_(round) {}
    int round() const noexcept { return round_; }

private:
    int round_;
};

namespace detail {

inline RoundDiagnostics solve_round(const Mesh &current, const NormalField &face_n, const NormalField &vertex_n,
                                    const SolverParams &sp, Mesh &out) {
    const FrozenOperators ops = assemble_operators(current, face_n, vertex_n, sp);
    const Eigen::VectorXd observed = current.stacked_positions();
    const SolveResult sol = solve_vertices(current, observed, ops.L, ops.K, sp);
    out = current.with_stacked_positions(sol.x);
    RoundDiagnostics d;
    d.initial_cost = sol.cost_history.empty() ? sol.cost : sol.cost_history.front();
    d.cost = sol.cost;
    d.grad_inf = sol.grad_inf;
    d.solver_iterations = sol.iterations;
    d.converged = sol.converged;
    return d;
}

}  // namespace detail

/**
 * Mollify the face normals, then correct the vertices against the mollified
 * field; repeated outer_rounds times, each round starting from the previous
 * output (weights, scales and normals recomputed).
 */
inline PipelineResult denoise(const Mesh &mesh, const DenoiseConfig &cfg) {
    if (cfg.outer_rounds < 1) throw std::invalid_argument("outer_rounds must be at least 1");
    cfg.solver.validate();
    cfg.mollify.validate();
    PipelineResult res;
    res.mesh = mesh;
    for (int round = 1; round <= cfg.outer_rounds; ++round) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const Mesh current = res.mesh;
            const NormalField mollified = mollify_normals(current, face_normals(current), cfg.mollify);
            const NormalField vn = vertex_normals(current, mollified);
            Mesh next;
            RoundDiagnostics d = detail::solve_round(current, mollified, vn, cfg.solver, next);
            d.round = round;
            d.flipped_faces = count_flipped_faces(next, vertex_average_face_reference(next));
            d.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            res.rounds.push_back(d);
            res.mesh = std::move(next);
        } catch (const PipelineError &) {
            throw;
        } catch (const std::exception &e) {
            throw PipelineError(round, e.what());
        }
    }
    return res;
}

/**
 * Transfers per-vertex normals to faces: each face takes the normalised sum of
 * its three corners' normals, weighted by max(n_v . n_face, 0) against the
 * smooth face normal. Faces where every weight clips to zero (or that are
 * degenerate) fall back to the smooth normal and are flagged.
 */
inline NormalField vertex_to_face_normals(const Mesh &smooth, const NormalField &vertex_n) {
    if (vertex_n.size() != smooth.num_vertices())
        throw MeshError("vertex normal field has " + std::to_string(vertex_n.size()) + " entries, mesh has " +
                        std::to_string(smooth.num_vertices()) + " vertices");
    const NormalField fs = face_normals(smooth);
    NormalField out;
    out.domain = NormalField::Domain::Face;
    out.values.resize(smooth.num_faces(), Vec3::Zero());
    out.valid.assign(smooth.num_faces(), 1);
    for (std::size_t f = 0; f < smooth.num_faces(); ++f) {
        if (!fs.is_valid(f)) {
            out.valid[f] = 0;
            out.flagged.push_back(f);
            continue;
        }
        Vec3 acc = Vec3::Zero();
        for (std::size_t v : smooth.face(f)) {
            if (!vertex_n.is_valid(v)) continue;
            const double w = std::max(vertex_n[v].dot(fs[f]), 0.0);
            acc += w * vertex_n[v];
        }
        const double n = acc.norm();
        if (n > 1e-300) {
            out.values[f] = acc / n;
        } else {
            out.values[f] = fs[f];
            out.flagged.push_back(f);
        }
    }
    return out;
}

struct FusionInput {
    Mesh smooth;
    NormalField vertex_normals;

    void validate() const {
        if (vertex_normals.size() != smooth.num_vertices())
            throw MeshError("fusion normal field length does not match the vertex count");
        for (std::size_t i = 0; i < vertex_normals.size(); ++i)
            if (!vertex_normals.is_valid(i) || std::abs(vertex_normals[i].norm() - 1.0) > 1e-9)
                throw MeshError("fusion normal " + std::to_string(i) + " is not unit length");
    }
};

/**
 * Fits the smooth mesh to a high-quality vertex-normal field: the Laplacian
 * uses the transferred face normals, the fairness projector uses the given
 * vertex normals, and the data term anchors to the current vertices.
 */
inline PipelineResult fuse_normals_detailed(const FusionInput &in, const SolverParams &p, int outer_rounds = 1) {
    in.validate();
    p.validate();
    if (outer_rounds < 1) throw std::invalid_argument("outer_rounds must be at least 1");
    PipelineResult res;
    res.mesh = in.smooth;
    for (int round = 1; round <= outer_rounds; ++round) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const Mesh current = res.mesh;
            const NormalField face_h = vertex_to_face_normals(current, in.vertex_normals);
            Mesh next;
            RoundDiagnostics d = detail::solve_round(current, face_h, in.vertex_normals, p, next);
            d.round = round;
            d.flipped_faces = count_flipped_faces(next, face_h);
            d.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            res.rounds.push_back(d);
            res.mesh = std::move(next);
        } catch (const std::exception &e) {
            throw PipelineError(round, e.what());
        }
    }
    return res;
}

inline Mesh fuse_normals(const FusionInput &in, const SolverParams &p) { return fuse_normals_detailed(in, p).mesh; }

/// Vertex correction with externally known face and vertex normals (no mollification).
inline PipelineResult optimize_with_normals(const Mesh &mesh, const NormalField &face_n, const NormalField &vertex_n,
                                            const SolverParams &p, int outer_rounds = 1) {
    p.validate();
    PipelineResult res;
    res.mesh = mesh;
    for (int round = 1; round <= outer_rounds; ++round) {
        try {
            Mesh next;
            RoundDiagnostics d = detail::solve_round(res.mesh, face_n, vertex_n, p, next);
            d.round = round;
            d.flipped_faces = count_flipped_faces(next, face_n);
            res.rounds.push_back(d);
            res.mesh = std::move(next);
        } catch (const std::exception &e) {
            throw PipelineError(round, e.what());
        }
    }
    return res;
}

}  // namespace fairmesh

#endif  // FAIRMESH_PIPELINES_HPP
