#pragma once

// Block coordinate descent for quadratic losses with a group-l2 penalty.
//
// The loss is held in covariance form: every Loss type exposes the constant
// Hessian entry between two coefficients, the current negative gradient, and
// an incremental update after a coefficient moves. The engine owns the
// coefficient vector and the group bookkeeping.
//
//   struct Loss {
//       Eigen::Index size() const;
//       double hess(int a, int b) const;
//       double neg_grad(int a) const;
//       void update(int a, double delta);      // beta_a moved by delta
//       void reset(const Vector& beta);        // recompute the gradient from scratch
//       double value(const Vector& beta) const;
//   };

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "jmmle/errors.hpp"
#include "jmmle/solvers.hpp"

namespace jmmle::detail {

/// Hessian of the loss restricted to a single group, in the form the exact
/// group solve needs.
struct GroupHessian {
    bool diagonal = true;
    Vector evals;  // eigenvalues, or the diagonal when `diagonal`
    Matrix evecs;  // only when !diagonal
};

template <class Loss>
GroupHessian make_group_hessian(const Loss& loss, const std::vector<int>& group) {
    const auto m = static_cast<Eigen::Index>(group.size());
    Matrix H(m, m);
    bool diagonal = true;
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b) {
            H(a, b) = loss.hess(group[a], group[b]);
            if (a != b && H(a, b) != 0.0) diagonal = false;
        }
    GroupHessian gh;
    gh.diagonal = diagonal;
    if (diagonal) {
        gh.evals = H.diagonal();
    } else {
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (H + H.transpose()));
        gh.evals = es.eigenvalues();
        gh.evecs = es.eigenvectors();
    }
    return gh;
}

/// argmin_b 0.5 b'Hb - s'b + lambda ||b||.
///
/// Zero when ||s|| <= lambda. Otherwise b = (H + (lambda/t) I)^{-1} s with
/// t = ||b||, found as the root of sum_i s_i^2 / (h_i t + lambda)^2 = 1 in the
/// eigenbasis of H. That function is convex and decreasing in t, so Newton
/// started left of the root climbs to it monotonically.
inline Vector solve_group(const GroupHessian& gh, const Vector& s, double lambda) {
    const Eigen::Index m = s.size();
    const double snorm = s.norm();
    if (snorm <= lambda) return Vector::Zero(m);

    Vector st = gh.diagonal ? s : Vector(gh.evecs.transpose() * s);
    Vector h = gh.evals;
    const double hmax = std::max(h.maxCoeff(), 0.0);
    const double flat = 1e-12 * std::max(hmax, 1e-300);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (h(i) <= flat) {
            // A direction without curvature: its gradient component must vanish
            // or the subproblem is unbounded.
            if (std::abs(st(i)) > 1e-9 * std::max(1.0, snorm) && std::abs(st(i)) >= lambda * (1 - 1e-12))
                fail(ErrorKind::NonFinite, "group subproblem is unbounded along a zero-curvature direction");
            st(i) = 0.0;
            h(i) = 0.0;
        }
    }

    Vector bt(m);
    if (lambda == 0.0) {
        for (Eigen::Index i = 0; i < m; ++i) bt(i) = h(i) > 0 ? st(i) / h(i) : 0.0;
    } else {
        const double st_norm = st.norm();
        if (st_norm <= lambda) return Vector::Zero(m);
        double t = (st_norm - lambda) / std::max(hmax, 1e-300);
        for (int it = 0; it < 100; ++it) {
            double f = -1.0, df = 0.0;
            for (Eigen::Index i = 0; i < m; ++i) {
                const double denom = h(i) * t + lambda;
                const double r = st(i) * st(i) / (denom * denom);
                f += r;
                df -= 2.0 * r * h(i) / denom;
            }
            if (df >= 0.0) break;  // all curvature-free directions: f is flat
            const double step = f / df;
            t -= step;
            if (std::abs(step) <= 1e-15 * std::max(t, 1e-300)) break;
        }
        for (Eigen::Index i = 0; i < m; ++i) bt(i) = st(i) * t / (h(i) * t + lambda);
    }
    return gh.diagonal ? bt : Vector(gh.evecs * bt);
}

struct EngineOptions {
    SolverOptions solver;
    double penalty = 0.0;
    std::vector<double> group_weights;  // empty means all ones
};

template <class Loss>
class BcdEngine {
public:
    BcdEngine(Loss& loss, std::vector<std::vector<int>> groups, EngineOptions opts)
        : loss_(loss), groups_(std::move(groups)), opts_(std::move(opts)) {
        if (opts_.group_weights.empty()) opts_.group_weights.assign(groups_.size(), 1.0);
        require(opts_.group_weights.size() == groups_.size(), ErrorKind::InvalidArgument,
                "one weight per group required");
        require(opts_.penalty >= 0.0, ErrorKind::InvalidArgument, "penalty must be non-negative");
        hessians_.reserve(groups_.size());
        for (const auto& g : groups_) hessians_.push_back(make_group_hessian(loss_, g));
    }

    GroupLassoResult run(Vector beta) {
        require(beta.size() == loss_.size(), ErrorKind::ShapeMismatch, "initial coefficients have the wrong length");
        loss_.reset(beta);
        GroupLassoResult res;
        active_.assign(groups_.size(), 0);
        for (std::size_t g = 0; g < groups_.size(); ++g) active_[g] = group_norm(beta, g) > 0.0;

        const int max_inner = 20 * opts_.solver.max_sweeps;
        int inner_total = 0;
        for (int sweep = 0; sweep < opts_.solver.max_sweeps; ++sweep) {
            double change = sweep_groups(beta, false);
            ++res.sweeps;
            res.objective_trace.push_back(objective(beta));
            check_finite(beta);
            if (!small(change, beta)) {
                // Settle the values on the current active set before the next full pass.
                while (inner_total < max_inner) {
                    change = sweep_groups(beta, true);
                    ++inner_total;
                    res.objective_trace.push_back(objective(beta));
                    check_finite(beta);
                    if (small(change, beta)) break;
                }
                continue;
            }
            loss_.reset(beta);
            res.kkt_residual = kkt_residual(beta);
            if (res.kkt_residual <= opts_.solver.kkt_tol * std::max(1.0, opts_.penalty)) {
                res.converged = true;
                break;
            }
        }
        if (!res.converged) {
            loss_.reset(beta);
            res.kkt_residual = kkt_residual(beta);
        }
        res.objective = objective(beta);
        res.coef = std::move(beta);
        return res;
    }

    double objective(const Vector& beta) const {
        double pen = 0.0;
        for (std::size_t g = 0; g < groups_.size(); ++g) pen += opts_.group_weights[g] * group_norm(beta, g);
        return loss_.value(beta) + opts_.penalty * pen;
    }

    /// Largest violation of the group-wise stationarity conditions at `beta`.
    double kkt_residual(const Vector& beta) const {
        double worst = 0.0;
        for (std::size_t g = 0; g < groups_.size(); ++g) {
            const auto& idx = groups_[g];
            const double lam = opts_.penalty * opts_.group_weights[g];
            const double bnorm = group_norm(beta, g);
            double r = 0.0;
            if (bnorm > 0.0) {
                double sq = 0.0;
                for (int a : idx) {
                    const double v = -loss_.neg_grad(a) + lam * beta(a) / bnorm;
                    sq += v * v;
                }
                r = std::sqrt(sq);
            } else {
                double sq = 0.0;
                for (int a : idx) sq += loss_.neg_grad(a) * loss_.neg_grad(a);
                r = std::max(0.0, std::sqrt(sq) - lam);
            }
            worst = std::max(worst, r);
        }
        return worst;
    }

private:
    double group_norm(const Vector& beta, std::size_t g) const {
        double sq = 0.0;
        for (int a : groups_[g]) sq += beta(a) * beta(a);
        return std::sqrt(sq);
    }

    bool small(double change, const Vector& beta) const {
        const double scale = beta.size() ? std::max(1.0, beta.cwiseAbs().maxCoeff()) : 1.0;
        return change <= opts_.solver.tol * scale;
    }

    void check_finite(const Vector& beta) const {
        if (!beta.allFinite()) fail(ErrorKind::NonFinite, "block coordinate descent diverged");
    }

    double sweep_groups(Vector& beta, bool active_only) {
        double change = 0.0;
        for (std::size_t g = 0; g < groups_.size(); ++g) {
            if (active_only && !active_[g]) continue;
            const auto& idx = groups_[g];
            const auto m = static_cast<Eigen::Index>(idx.size());
            const auto& gh = hessians_[g];

            Vector old(m), s(m);
            for (Eigen::Index a = 0; a < m; ++a) old(a) = beta(idx[a]);
            // s = -grad + H * old, the linear term of the group subproblem.
            if (gh.diagonal) {
                for (Eigen::Index a = 0; a < m; ++a) s(a) = loss_.neg_grad(idx[a]) + gh.evals(a) * old(a);
            } else {
                Vector ng(m);
                for (Eigen::Index a = 0; a < m; ++a) ng(a) = loss_.neg_grad(idx[a]);
                s = ng + gh.evecs * (gh.evals.asDiagonal() * (gh.evecs.transpose() * old));
            }
            const Vector fresh = solve_group(gh, s, opts_.penalty * opts_.group_weights[g]);
            for (Eigen::Index a = 0; a < m; ++a) {
                const double delta = fresh(a) - old(a);
                if (delta != 0.0) {
                    beta(idx[a]) = fresh(a);
                    loss_.update(idx[a], delta);
                    change = std::max(change, std::abs(delta));
                }
            }
            active_[g] = fresh.squaredNorm() > 0.0;
        }
        return change;
    }

    Loss& loss_;
    std::vector<std::vector<int>> groups_;
    EngineOptions opts_;
    std::vector<GroupHessian> hessians_;
    std::vector<char> active_;
};

/// A least-squares block already reduced to covariance form, scaled so that
/// the block loss is yy - 2 b'lin/2 + b'gram b/2, i.e. gram = 2c D'D,
/// lin = 2c D'y, yy = c y'y for the block's loss factor c.
struct GramBlock {
    Matrix gram;
    Vector lin;
    double yy = 0.0;
};

/// Loss scale * sum_b w_b ||y_b - D_b beta_b||^2 held through per-block Gram matrices.
class DenseBlockLoss {
public:
    explicit DenseBlockLoss(const GroupedLSProblem& prob);
    explicit DenseBlockLoss(std::vector<GramBlock> blocks);

    Eigen::Index size() const { return total_; }
    double hess(int a, int b) const {
        const int ba = block_of_[a], bb = block_of_[b];
        if (ba != bb) return 0.0;
        return blocks_[ba].gram(a - blocks_[ba].offset, b - blocks_[ba].offset);
    }
    double neg_grad(int a) const {
        const auto& blk = blocks_[block_of_[a]];
        return blk.grad(a - blk.offset);
    }
    void update(int a, double delta) {
        auto& blk = blocks_[block_of_[a]];
        blk.grad.noalias() -= blk.gram.col(a - blk.offset) * delta;
    }
    void reset(const Vector& beta);
    double value(const Vector& beta) const;

private:
    struct Block {
        int offset = 0;
        Matrix gram;   // 2 * scale * w * D'D
        Vector lin;    // 2 * scale * w * D'y
        Vector grad;   // lin - gram * beta_b
        double yy = 0; // scale * w * y'y
    };
    std::vector<Block> blocks_;
    std::vector<int> block_of_;
    Eigen::Index total_ = 0;
};

/// Group lasso on blocks given in covariance form.
GroupLassoResult group_lasso_gram(std::vector<GramBlock> blocks, const std::vector<std::vector<int>>& groups,
                                  double penalty, const std::vector<double>& group_weights,
                                  const std::optional<Vector>& init, const SolverOptions& opts);

}  // namespace jmmle::detail
