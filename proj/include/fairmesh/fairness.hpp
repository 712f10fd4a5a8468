#ifndef FAIRMESH_FAIRNESS_HPP
#define FAIRMESH_FAIRNESS_HPP

// Global vertex optimisation: data term + anisotropic bilateral Laplacian +
// tangential face-fairness penalty, with all geometry-dependent weights frozen
// at assembly so the cost is exactly quadratic in the vertex positions.

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "fairmesh/mesh.hpp"

namespace fairmesh {

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Sparse linear operator on the stacked 3*N_V vertex vector, stored as a
 * row-major sparse matrix whose non-zeros come in 3x3 blocks.
 */
class SparseBlockOperator {
public:
    using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

    SparseBlockOperator() = default;
    explicit SparseBlockOperator(std::size_t num_vertices)
        : n_(num_vertices), m_(static_cast<Eigen::Index>(3 * num_vertices), static_cast<Eigen::Index>(3 * num_vertices)) {}

    std::size_t num_vertices() const noexcept { return n_; }
    Eigen::Index dim() const noexcept { return m_.rows(); }
    const Matrix &matrix() const noexcept { return m_; }

    Eigen::VectorXd apply(const Eigen::VectorXd &x) const {
        check_dim(x);
        return m_ * x;
    }

    Eigen::VectorXd apply_transpose(const Eigen::VectorXd &y) const {
        check_dim(y);
        return m_.transpose() * y;
    }

    /// 3x3 block (row vertex i, column vertex j); zero when absent.
    Mat3 block(std::size_t i, std::size_t j) const {
        Mat3 out = Mat3::Zero();
        for (int r = 0; r < 3; ++r)
            for (Matrix::InnerIterator it(m_, static_cast<Eigen::Index>(3 * i + r)); it; ++it) {
                const auto c = static_cast<std::size_t>(it.col());
                if (c / 3 == j) out(r, static_cast<int>(c % 3)) = it.value();
            }
        return out;
    }

    /// True when every entry of the block row of vertex i is zero.
    bool row_is_zero(std::size_t i) const {
        for (int r = 0; r < 3; ++r)
            for (Matrix::InnerIterator it(m_, static_cast<Eigen::Index>(3 * i + r)); it; ++it)
                if (it.value() != 0.0) return false;
        return true;
    }

    bool all_finite() const {
        for (Eigen::Index k = 0; k < m_.nonZeros(); ++k)
            if (!std::isfinite(m_.valuePtr()[k])) return false;
        return true;
    }

    /// Accumulates 3x3 blocks and compresses them into the sparse matrix.
    class Builder {
    public:
        explicit Builder(std::size_t num_vertices) : n_(num_vertices) {}

        void add(std::size_t i, std::size_t j, const Mat3 &b) {
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c)
                    if (b(r, c) != 0.0)
                        trips_.emplace_back(static_cast<int>(3 * i + r), static_cast<int>(3 * j + c), b(r, c));
        }

        SparseBlockOperator build() {
            SparseBlockOperator op(n_);
            op.m_.setFromTriplets(trips_.begin(), trips_.end());
            op.m_.makeCompressed();
            return op;
        }

    private:
        std::size_t n_;
        std::vector<Eigen::Triplet<double>> trips_;
    };

private:
    void check_dim(const Eigen::VectorXd &x) const {
        if (x.size() != m_.cols())
            throw SolverError("operator dimension " + std::to_string(m_.cols()) + " does not match vector length " +
                              std::to_string(x.size()));
    }

    std::size_t n_ = 0;
    Matrix m_;
};

enum class StepPolicy {
    /// Steepest descent, step halved from 1.0 until the Armijo condition holds.
    Backtracking,
    /// Conjugate directions with exact line search (the cost is quadratic).
    ConjugateGradient,
};

enum class SolveMethod { Direct, Iterative };

struct SolverParams {
    double lambda_v = 1.0;
    double eta = 1.0;
    /// Normal-offset bandwidth, in multiples of the local scale l_i.
    double sigma1 = 0.35;
    /// Spatial bandwidth, in multiples of l_i.
    double sigma2 = 1.0;
    double delta = 0.2;
    int max_iters = 500;
    /// Convergence when ||grad||_inf <= grad_tol * mean edge length.
    double grad_tol = 1e-6;
    StepPolicy step = StepPolicy::Backtracking;
    SolveMethod method = SolveMethod::Direct;

    void validate() const {
        if (!(lambda_v >= 0.0) || !(eta >= 0.0)) throw SolverError("lambda_v and eta must be non-negative");
        if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) throw SolverError("bandwidths sigma1, sigma2 must be positive");
        if (!(delta > 0.0 && delta < 1.0)) throw SolverError("delta must lie in (0,1)");
        if (max_iters < 1) throw SolverError("max_iters must be at least 1");
        if (!(grad_tol > 0.0)) throw SolverError("grad_tol must be positive");
    }
};

// ---------------------------------------------------------------------------
// Laplacian

struct LaplacianWeight {
    double a = 0.0;  ///< range kernel along the face normal
    double b = 0.0;  ///< spatial kernel
    double w = 0.0;  ///< a*b / ((1+a) * sum_ring b)
    Mat3 A = Mat3::Zero();  ///< n n^T of the neighbouring face
};

namespace detail {

inline void bilateral_kernels(const Vec3 &n, const Vec3 &dv, double scale, double sigma1, double sigma2,
                              double &a, double &b) {
    const double s2 = scale * scale;
    const double off = n.dot(dv);
    a = std::exp(-(off * off) / (2.0 * sigma1 * sigma1 * s2));
    b = std::exp(-dv.squaredNorm() / (2.0 * sigma2 * sigma2 * s2));
}

}  // namespace detail

/// Bilateral Laplacian weight of face f in the ring of vertex v. Faces with invalid normals are not part of the ring.
inline LaplacianWeight laplacian_weight(const Mesh &m, std::size_t v, std::size_t f, const NormalField &face_n,
                                        const std::vector<double> &scale, double sigma1, double sigma2) {
    const double l = scale.at(v);
    if (!(l > 0.0)) throw SolverError("laplacian_weight: zero local scale at vertex " + std::to_string(v));
    const Vec3 &p = m.vertex(v);
    double bsum = 0.0;
    bool member = false;
    double a_f = 0.0, b_f = 0.0;
    for (std::size_t g : m.vertex_faces(v)) {
        if (!face_n.is_valid(g)) continue;
        double a, b;
        detail::bilateral_kernels(face_n[g], face_centroid(m, g) - p, l, sigma1, sigma2, a, b);
        bsum += b;
        if (g == f) {
            member = true;
            a_f = a;
            b_f = b;
        }
    }
    if (bsum <= 0.0) throw SolverError("laplacian_weight: empty ring at vertex " + std::to_string(v));
    if (!member)
        throw SolverError("laplacian_weight: face " + std::to_string(f) + " is not in the ring of vertex " +
                          std::to_string(v));
    LaplacianWeight out;
    out.a = a_f;
    out.b = b_f;
    out.w = a_f * b_f / ((1.0 + a_f) * bsum);
    out.A = face_n[f] * face_n[f].transpose();
    return out;
}

/// Vertices whose Laplacian row is left empty: interior vertices with fewer than two usable ring faces.
inline bool has_degenerate_ring(const Mesh &m, std::size_t v, const NormalField &face_n) {
    std::size_t count = 0;
    for (std::size_t g : m.vertex_faces(v))
        if (face_n.is_valid(g)) ++count;
    return count == 0 || (!m.is_boundary(v) && count < 2);
}

/**
 * Row i:  sum_j w_ij A_j (v_i - (v_j1 + v_j2 + v_j3)/3)  over the ring faces j of i.
 */
inline SparseBlockOperator assemble_laplacian(const Mesh &m, const NormalField &face_n,
                                              const std::vector<double> &scale, const SolverParams &p) {
    SparseBlockOperator::Builder builder(m.num_vertices());
    for (std::size_t i = 0; i < m.num_vertices(); ++i) {
        if (has_degenerate_ring(m, i, face_n)) continue;
        const double l = scale.at(i);
        if (!(l > 0.0)) throw SolverError("assemble_laplacian: zero local scale at vertex " + std::to_string(i));
        const Vec3 &vi = m.vertex(i);

        const auto ring = m.vertex_faces(i);
        std::vector<double> ab(ring.size(), 0.0), a_plus(ring.size(), 1.0);
        double bsum = 0.0;
        for (std::size_t k = 0; k < ring.size(); ++k) {
            const std::size_t f = ring[k];
            if (!face_n.is_valid(f)) continue;
            double a, b;
            detail::bilateral_kernels(face_n[f], face_centroid(m, f) - vi, l, p.sigma1, p.sigma2, a, b);
            ab[k] = a * b;
            a_plus[k] = 1.0 + a;
            bsum += b;
        }
        for (std::size_t k = 0; k < ring.size(); ++k) {
            const std::size_t f = ring[k];
            if (!face_n.is_valid(f)) continue;
            const double w = ab[k] / (a_plus[k] * bsum);
            const Mat3 wA = w * (face_n[f] * face_n[f].transpose());
            builder.add(i, i, wA);
            for (std::size_t c : m.face(f)) builder.add(i, c, -wA / 3.0);
        }
    }
    return builder.build();
}

// ---------------------------------------------------------------------------
// Fairness

/// r_i: 0 on the boundary, otherwise max(mean over unordered ring-normal pairs of n_p.n_q - delta, 0).
inline double fairness_weight(const Mesh &m, std::size_t v, const NormalField &face_n, double delta) {
    if (m.is_boundary(v)) return 0.0;
    std::vector<std::size_t> ring;
    for (std::size_t f : m.vertex_faces(v))
        if (face_n.is_valid(f)) ring.push_back(f);
    if (ring.size() < 2) return 0.0;
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t p = 0; p < ring.size(); ++p)
        for (std::size_t q = p + 1; q < ring.size(); ++q) {
            sum += face_n[ring[p]].dot(face_n[ring[q]]) - delta;
            ++pairs;
        }
    return std::max(sum / static_cast<double>(pairs), 0.0);
}

/// Arithmetic mean of the centroids of the faces around v.
inline Vec3 ring_centroid(const Mesh &m, std::size_t v) {
    Vec3 c = Vec3::Zero();
    const auto ring = m.vertex_faces(v);
    for (std::size_t f : ring) c += face_centroid(m, f);
    return c / static_cast<double>(ring.size());
}

/**
 * Row i:  r_i (I - n_i n_i^T) (c_i - v_i)  where c_i is the mean of the ring
 * face centroids, written as a linear function of the ring vertices.
 */
inline SparseBlockOperator assemble_fairness(const Mesh &m, const NormalField &vertex_n, const NormalField &face_n,
                                             double delta) {
    if (vertex_n.size() != m.num_vertices()) throw SolverError("assemble_fairness: vertex normal count mismatch");
    SparseBlockOperator::Builder builder(m.num_vertices());
    for (std::size_t i = 0; i < m.num_vertices(); ++i) {
        if (!vertex_n.is_valid(i)) continue;
        const double r = fairness_weight(m, i, face_n, delta);
        if (r == 0.0) continue;
        const auto ring = m.vertex_faces(i);
        const Vec3 &n = vertex_n[i];
        const Mat3 P = r * (Mat3::Identity() - n * n.transpose());
        const Mat3 share = P / (3.0 * static_cast<double>(ring.size()));
        builder.add(i, i, -P);
        for (std::size_t f : ring)
            for (std::size_t c : m.face(f)) builder.add(i, c, share);
    }
    return builder.build();
}

// ---------------------------------------------------------------------------
// Cost and solve

struct CostGradient {
    double cost = 0.0;
    Eigen::VectorXd gradient;
};

/// ||x - v||^2 + lambda_v ||L x||^2 + eta ||K x||^2 and its gradient.
inline CostGradient cost_and_gradient(const Eigen::VectorXd &x, const Eigen::VectorXd &observed,
                                      const SparseBlockOperator &L, const SparseBlockOperator &K, double lambda_v,
                                      double eta) {
    if (x.size() != observed.size() || x.size() != L.dim() || x.size() != K.dim())
        throw SolverError("cost_and_gradient: dimension mismatch");
    const Eigen::VectorXd d = x - observed;
    const Eigen::VectorXd Lx = L.apply(x);
    const Eigen::VectorXd Kx = K.apply(x);
    CostGradient out;
    out.cost = d.squaredNorm() + lambda_v * Lx.squaredNorm() + eta * Kx.squaredNorm();
    out.gradient = 2.0 * d + 2.0 * lambda_v * L.apply_transpose(Lx) + 2.0 * eta * K.apply_transpose(Kx);
    return out;
}

/// Mesh-aware overload: x and the observation are taken as stacked positions of meshes sharing m's topology.
inline CostGradient cost_and_gradient(const Mesh &m, const Eigen::VectorXd &x, const Eigen::VectorXd &observed,
                                      const SparseBlockOperator &L, const SparseBlockOperator &K, double lambda_v,
                                      double eta) {
    if (static_cast<std::size_t>(x.size()) != 3 * m.num_vertices())
        throw SolverError("cost_and_gradient: vector length does not match mesh");
    return cost_and_gradient(x, observed, L, K, lambda_v, eta);
}

/// I + lambda_v L^T L + eta K^T K as a sparse symmetric matrix.
inline Eigen::SparseMatrix<double> system_matrix(const SparseBlockOperator &L, const SparseBlockOperator &K,
                                                 double lambda_v, double eta) {
    const Eigen::SparseMatrix<double> Lc = L.matrix();
    const Eigen::SparseMatrix<double> Kc = K.matrix();
    Eigen::SparseMatrix<double> I(L.dim(), L.dim());
    I.setIdentity();
    Eigen::SparseMatrix<double> A = I;
    if (lambda_v != 0.0) A += lambda_v * Eigen::SparseMatrix<double>(Lc.transpose() * Lc);
    if (eta != 0.0) A += eta * Eigen::SparseMatrix<double>(Kc.transpose() * Kc);
    A.makeCompressed();
    return A;
}

struct SolveResult {
    Eigen::VectorXd x;
    int iterations = 0;
    bool converged = false;
    double cost = 0.0;
    double grad_inf = 0.0;
    /// Cost at the start and after every accepted iteration (iterative path only).
    std::vector<double> cost_history;
};

namespace detail {

inline SolveResult solve_backtracking(const Eigen::VectorXd &v, const SparseBlockOperator &L,
                                      const SparseBlockOperator &K, const SolverParams &p, double tol) {
    SolveResult r;
    r.x = v;
    CostGradient cg = cost_and_gradient(r.x, v, L, K, p.lambda_v, p.eta);
    r.cost_history.push_back(cg.cost);
    constexpr double armijo = 1e-4;
    for (r.iterations = 0; r.iterations < p.max_iters; ++r.iterations) {
        if (cg.gradient.lpNorm<Eigen::Infinity>() <= tol) {
            r.converged = true;
            break;
        }
        const double g2 = cg.gradient.squaredNorm();
        double step = 1.0;
        CostGradient next;
        Eigen::VectorXd trial;
        for (int halvings = 0;; ++halvings) {
            trial = r.x - step * cg.gradient;
            next = cost_and_gradient(trial, v, L, K, p.lambda_v, p.eta);
            if (next.cost <= cg.cost - armijo * step * g2) break;
            if (halvings > 60) throw SolverError("line search failed to find a descent step");
            step *= 0.5;
        }
        r.x = std::move(trial);
        cg = std::move(next);
        r.cost_history.push_back(cg.cost);
    }
    if (!r.converged && cg.gradient.lpNorm<Eigen::Infinity>() <= tol) r.converged = true;
    r.cost = cg.cost;
    r.grad_inf = cg.gradient.lpNorm<Eigen::Infinity>();
    return r;
}

inline SolveResult solve_conjugate(const Eigen::VectorXd &v, const SparseBlockOperator &L,
                                   const SparseBlockOperator &K, const SolverParams &p, double tol) {
    // Hessian-vector product of the quadratic cost: 2 (I + lambda L^T L + eta K^T K).
    auto hess = [&](const Eigen::VectorXd &d) {
        Eigen::VectorXd out = 2.0 * d;
        if (p.lambda_v != 0.0) out += 2.0 * p.lambda_v * L.apply_transpose(L.apply(d));
        if (p.eta != 0.0) out += 2.0 * p.eta * K.apply_transpose(K.apply(d));
        return out;
    };
    SolveResult r;
    r.x = v;
    CostGradient cg = cost_and_gradient(r.x, v, L, K, p.lambda_v, p.eta);
    r.cost_history.push_back(cg.cost);
    Eigen::VectorXd dir = -cg.gradient;
    for (r.iterations = 0; r.iterations < p.max_iters; ++r.iterations) {
        if (cg.gradient.lpNorm<Eigen::Infinity>() <= tol) {
            r.converged = true;
            break;
        }
        const Eigen::VectorXd Hd = hess(dir);
        const double curv = dir.dot(Hd);
        if (!(curv > 0.0)) throw SolverError("non-positive curvature in conjugate gradient");
        const double step = -cg.gradient.dot(dir) / curv;
        r.x += step * dir;
        const Eigen::VectorXd g_old = cg.gradient;
        cg = cost_and_gradient(r.x, v, L, K, p.lambda_v, p.eta);
        r.cost_history.push_back(cg.cost);
        const double beta = std::max(0.0, cg.gradient.dot(cg.gradient - g_old) / g_old.squaredNorm());
        dir = -cg.gradient + beta * dir;
    }
    if (!r.converged && cg.gradient.lpNorm<Eigen::Infinity>() <= tol) r.converged = true;
    r.cost = cg.cost;
    r.grad_inf = cg.gradient.lpNorm<Eigen::Infinity>();
    return r;
}

}  // namespace detail

/**
 * Minimises the frozen quadratic cost, i.e. solves
 * (I + lambda_v L^T L + eta K^T K) x = v.
 *
 * The direct path factors the sparse SPD system; the iterative path runs the
 * selected descent policy until ||grad||_inf <= grad_tol * mean edge length
 * or max_iters is reached (reported in the result, not thrown).
 */
inline SolveResult solve_vertices(const Mesh &m, const Eigen::VectorXd &observed, const SparseBlockOperator &L,
                                  const SparseBlockOperator &K, const SolverParams &p) {
    p.validate();
    if (static_cast<std::size_t>(observed.size()) != 3 * m.num_vertices() || L.dim() != observed.size() ||
        K.dim() != observed.size())
        throw SolverError("solve_vertices: dimension mismatch");
    if (!observed.allFinite()) throw SolverError("solve_vertices: observed positions contain non-finite values");
    if (!L.all_finite() || !K.all_finite()) throw SolverError("solve_vertices: operator contains non-finite values");

    const double tol = p.grad_tol * m.mean_edge_length();
    if (p.lambda_v == 0.0 && p.eta == 0.0) {
        SolveResult r;
        r.x = observed;
        r.converged = true;
        r.cost_history = {0.0};
        return r;
    }

    if (p.method == SolveMethod::Iterative) {
        return p.step == StepPolicy::Backtracking ? detail::solve_backtracking(observed, L, K, p, tol)
                                                  : detail::solve_conjugate(observed, L, K, p, tol);
    }

    const Eigen::SparseMatrix<double> A = system_matrix(L, K, p.lambda_v, p.eta);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw SolverError("sparse factorisation failed");
    SolveResult r;
    r.x = ldlt.solve(observed);
    if (ldlt.info() != Eigen::Success || !r.x.allFinite()) throw SolverError("sparse solve failed");
    const CostGradient cg = cost_and_gradient(r.x, observed, L, K, p.lambda_v, p.eta);
    r.cost = cg.cost;
    r.grad_inf = cg.gradient.lpNorm<Eigen::Infinity>();
    r.converged = true;
    r.iterations = 1;
    r.cost_history = {cost_and_gradient(observed, observed, L, K, p.lambda_v, p.eta).cost, r.cost};
    return r;
}

/// Operators frozen from one mesh state.
struct FrozenOperators {
    SparseBlockOperator L;
    SparseBlockOperator K;
    std::vector<double> scale;
    std::vector<double> fairness;
};

/// Assembles L from `face_n` and K from `vertex_n` (both frozen at m's current geometry).
inline FrozenOperators assemble_operators(const Mesh &m, const NormalField &face_n, const NormalField &vertex_n,
                                          const SolverParams &p) {
    FrozenOperators ops;
    ops.scale = local_scales(m);
    ops.L = assemble_laplacian(m, face_n, ops.scale, p);
    ops.K = assemble_fairness(m, vertex_n, face_n, p.delta);
    ops.fairness.resize(m.num_vertices());
    for (std::size_t i = 0; i < m.num_vertices(); ++i) ops.fairness[i] = fairness_weight(m, i, face_n, p.delta);
    return ops;
}

}  // namespace fairmesh

#endif  // FAIRMESH_FAIRNESS_HPP
