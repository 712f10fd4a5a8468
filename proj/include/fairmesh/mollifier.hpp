#ifndef FAIRMESH_MOLLIFIER_HPP
#define FAIRMESH_MOLLIFIER_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairmesh/mesh.hpp"

namespace fairmesh {

class MollifyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MollifyParams {
    double lambda_n = 2.0;
    /// Normal-difference bandwidth (unitless).
    double sigma1 = 0.4;
    /// Centroid-distance bandwidth, in multiples of the mean edge length.
    double sigma2 = 1.0;
    int max_iters = 50;
    /// Stop once the largest tangential gradient component falls below this.
    double grad_tol = 1e-8;
    bool reweight_every_iter = true;
    /// Measure face areas in units of the mean face area, so lambda_n does not depend on mesh scale.
    bool normalize_area = true;

    void validate() const {
        if (!(lambda_n >= 0.0)) throw MollifyError("lambda_n must be non-negative");
        if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) throw MollifyError("bandwidths must be positive");
        if (max_iters < 0) throw MollifyError("max_iters must be non-negative");
    }
};

/// Units the weight kernel is evaluated in: areas divided by area_unit, distances by length_unit.
struct MollifyUnits {
    double area_unit = 1.0;
    double length_unit = 1.0;

    static MollifyUnits of(const Mesh &m, const MollifyParams &p) {
        MollifyUnits u;
        u.length_unit = m.mean_edge_length();
        if (p.normalize_area) {
            double total = 0.0;
            for (std::size_t f = 0; f < m.num_faces(); ++f) total += face_area(m, f);
            u.area_unit = total / static_cast<double>(m.num_faces());
        }
        if (!(u.area_unit > 0.0) || !(u.length_unit > 0.0)) throw MollifyError("mesh has zero extent");
        return u;
    }
};

namespace detail {

inline double mollify_kernel(double area_j, const Vec3 &ni, const Vec3 &nj, const Vec3 &ci, const Vec3 &cj,
                             const MollifyParams &p, const MollifyUnits &u) {
    const double s2 = p.sigma2 * u.length_unit;
    return (area_j / u.area_unit) *
           std::exp(-(nj - ni).squaredNorm() / (2.0 * p.sigma1 * p.sigma1) - (cj - ci).squaredNorm() / (2.0 * s2 * s2));
}

}  // namespace detail

/**
 * Bilateral weight of neighbour face j seen from face i:
 *   A_j exp(-|n_j - n_i|^2 / (2 s1^2) - |c_j - c_i|^2 / (2 s2^2)).
 * A degenerate face j gets weight 0.
 */
inline double mollify_weight(const Mesh &m, std::size_t i, std::size_t j, const NormalField &normals,
                             const MollifyParams &p, const MollifyUnits &units = {}) {
    bool shares = false;
    if (i != j)
        for (std::size_t a : m.face(i))
            for (std::size_t b : m.face(j)) shares = shares || a == b;
    if (!shares)
        throw MollifyError("face " + std::to_string(j) + " is not in the neighbourhood of face " + std::to_string(i));
    if (!normals.is_valid(j) || !normals.is_valid(i)) return 0.0;
    return detail::mollify_kernel(face_area(m, j), normals[i], normals[j], face_centroid(m, i), face_centroid(m, j), p,
                                  units);
}

struct MollifyResult {
    NormalField normals;
    int iterations = 0;
    /// Full objective (with the weights of that iteration) before the first step and after each accepted step.
    std::vector<double> cost_history;
    /// Smoothness part of the objective, same sampling as cost_history.
    std::vector<double> smoothness_history;
};

/**
 * Smooths a per-face normal field by projected gradient descent on
 *   sum_i |m_i - n_i|^2 + lambda_n sum_i sum_{j in N_F(i)} w_ij^2 |m_j - m_i|^2,   |m_i| = 1.
 *
 * Each step is Jacobi-preconditioned (per-face Hessian diagonal), projected on
 * the tangent plane, followed by renormalisation; the step is halved until the
 * frozen-weight objective does not increase.
 */
class Mollifier {
public:
    Mollifier(const Mesh &m, MollifyParams p) : mesh_(m), p_(p) {
        p_.validate();
        units_ = MollifyUnits::of(m, p_);
        nbrs_ = face_neighborhoods(m);
        area_.resize(m.num_faces());
        centroid_.resize(m.num_faces());
        for (std::size_t f = 0; f < m.num_faces(); ++f) {
            area_[f] = face_area(m, f);
            centroid_[f] = face_centroid(m, f);
        }
    }

    const MollifyUnits &units() const noexcept { return units_; }

    /// Weights w_ij laid out like the neighbourhood lists; zero wherever either face is invalid.
    std::vector<std::vector<double>> weights(const NormalField &n) const {
        std::vector<std::vector<double>> w(nbrs_.size());
        for (std::size_t i = 0; i < nbrs_.size(); ++i) {
            w[i].assign(nbrs_[i].size(), 0.0);
            if (!n.is_valid(i)) continue;
            for (std::size_t k = 0; k < nbrs_[i].size(); ++k) {
                const std::size_t j = nbrs_[i][k];
                if (!n.is_valid(j)) continue;
                w[i][k] = detail::mollify_kernel(area_[j], n[i], n[j], centroid_[i], centroid_[j], p_, units_);
            }
        }
        return w;
    }

    double smoothness(const NormalField &n, const std::vector<std::vector<double>> &w) const {
        double s = 0.0;
        for (std::size_t i = 0; i < nbrs_.size(); ++i)
            for (std::size_t k = 0; k < nbrs_[i].size(); ++k) {
                const double wk = w[i][k];
                if (wk != 0.0) s += wk * wk * (n[nbrs_[i][k]] - n[i]).squaredNorm();
            }
        return s;
    }

    double cost(const NormalField &n, const NormalField &observed, const std::vector<std::vector<double>> &w) const {
        double data = 0.0;
        for (std::size_t i = 0; i < n.size(); ++i) data += (n[i] - observed[i]).squaredNorm();
        return data + p_.lambda_n * smoothness(n, w);
    }

    /// Euclidean gradient of the objective with frozen weights.
    std::vector<Vec3> gradient(const NormalField &n, const NormalField &observed,
                               const std::vector<std::vector<double>> &w) const {
        std::vector<Vec3> g(n.size(), Vec3::Zero());
        for (std::size_t i = 0; i < n.size(); ++i) {
            if (!n.is_valid(i)) continue;
            g[i] += 2.0 * (n[i] - observed[i]);
        }
        for (std::size_t i = 0; i < nbrs_.size(); ++i)
            for (std::size_t k = 0; k < nbrs_[i].size(); ++k) {
                const double wk = w[i][k];
                if (wk == 0.0) continue;
                const std::size_t j = nbrs_[i][k];
                const Vec3 d = 2.0 * p_.lambda_n * wk * wk * (n[j] - n[i]);
                g[j] += d;
                g[i] -= d;
            }
        return g;
    }

    MollifyResult run(const NormalField &observed) const {
        if (observed.size() != mesh_.num_faces() || observed.domain != NormalField::Domain::Face)
            throw MollifyError("mollify: expected a per-face normal field of length " +
                               std::to_string(mesh_.num_faces()));
        for (std::size_t i = 0; i < observed.size(); ++i)
            if (!observed[i].allFinite()) throw MollifyError("mollify: non-finite normal at face " + std::to_string(i));

        MollifyResult res;
        res.normals = observed;
        NormalField &cur = res.normals;
        if (p_.lambda_n == 0.0 || p_.max_iters == 0) {
            auto w = weights(cur);
            res.cost_history.push_back(cost(cur, observed, w));
            res.smoothness_history.push_back(smoothness(cur, w));
            return res;
        }

        std::vector<std::vector<double>> w = weights(cur);
        res.cost_history.push_back(cost(cur, observed, w));
        res.smoothness_history.push_back(smoothness(cur, w));

        for (res.iterations = 0; res.iterations < p_.max_iters; ++res.iterations) {
            if (p_.reweight_every_iter && res.iterations > 0) w = weights(cur);
            const double c0 = cost(cur, observed, w);
            std::vector<Vec3> g = gradient(cur, observed, w);

            // Tangential, Jacobi-scaled descent direction.
            std::vector<double> diag(cur.size(), 2.0);
            for (std::size_t i = 0; i < nbrs_.size(); ++i)
                for (std::size_t k = 0; k < nbrs_[i].size(); ++k) {
                    const double s = 2.0 * p_.lambda_n * w[i][k] * w[i][k];
                    diag[i] += s;
                    diag[nbrs_[i][k]] += s;
                }
            double gmax = 0.0;
            for (std::size_t i = 0; i < cur.size(); ++i) {
                if (!cur.is_valid(i)) continue;
                g[i] -= g[i].dot(cur[i]) * cur[i];
                gmax = std::max(gmax, g[i].lpNorm<Eigen::Infinity>());
                g[i] /= diag[i];
            }
            if (gmax <= p_.grad_tol) break;

            bool accepted = false;
            NormalField trial = cur;
            for (double step = 1.0; step > 1e-10; step *= 0.5) {
                for (std::size_t i = 0; i < cur.size(); ++i) {
                    if (!cur.is_valid(i)) continue;
                    trial.values[i] = (cur[i] - step * g[i]).normalized();
                }
                if (cost(trial, observed, w) <= c0) {
                    accepted = true;
                    break;
                }
            }
            if (!accepted) break;
            cur = std::move(trial);
            res.cost_history.push_back(cost(cur, observed, w));
            res.smoothness_history.push_back(smoothness(cur, w));
        }
        return res;
    }

private:
    const Mesh &mesh_;
    MollifyParams p_;
    MollifyUnits units_;
    std::vector<std::vector<std::size_t>> nbrs_;
    std::vector<double> area_;
    std::vector<Vec3> centroid_;
};

inline MollifyResult mollify_normals_detailed(const Mesh &m, const NormalField &face_n, const MollifyParams &p) {
    return Mollifier(m, p).run(face_n);
}

inline NormalField mollify_normals(const Mesh &m, const NormalField &face_n, const MollifyParams &p) {
    return Mollifier(m, p).run(face_n).normals;
}

}  // namespace fairmesh

#endif  // FAIRMESH_MOLLIFIER_HPP
