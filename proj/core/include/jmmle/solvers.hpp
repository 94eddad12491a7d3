#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "jmmle/types.hpp"

namespace jmmle {

/// How a tuning value maps onto the per-group penalty weights.
///
/// AsDisplayed uses the (1/n) squared loss with plain group norms. GroupSizeAdjusted
/// reads the tuning value on the (1/2n) loss scale with sqrt(|g|) group weights,
/// which on the (1/n) scale is a weight of 2 sqrt(|g|) per group.
enum class PenaltyScaling { AsDisplayed, GroupSizeAdjusted };

std::string_view to_string(PenaltyScaling s) noexcept;
PenaltyScaling parse_penalty_scaling(std::string_view name);

/// Weight multiplying the tuning value for a group of `size` coefficients.
double group_penalty_weight(PenaltyScaling s, std::size_t size) noexcept;

/// l1 penalty for the unscaled-loss lasso that corresponds to `lambda` under `s`.
double lasso_penalty(PenaltyScaling s, double lambda, int n) noexcept;

/// One least-squares block. Block b owns a contiguous slice of the stacked
/// coefficient vector whose length is design.cols(); blocks are laid out in
/// order.
struct DesignBlock {
    Matrix design;
    Vector response;
    double weight = 1.0;
};

/// scale * sum_b weight_b * ||y_b - D_b beta_b||^2 + penalty * sum_g w_g ||beta_g||
///
/// The group weight w_g is 1 (plain l2 norms) unless `sqrt_group_weights` is
/// set, in which case w_g = sqrt(|g|).
struct GroupedLSProblem {
    std::vector<DesignBlock> blocks;
    std::vector<std::vector<int>> groups;
    double penalty = 0.0;
    double scale = 1.0;
    bool sqrt_group_weights = false;

    Eigen::Index num_coefficients() const;
};

struct SolverOptions {
    double tol = 1e-6;      ///< relative coefficient change between sweeps
    int max_sweeps = 500;   ///< full passes over every group
    double kkt_tol = 1e-6;  ///< certified KKT residual, relative to max(1, penalty)
};

struct GroupLassoResult {
    Vector coef;
    bool converged = false;
    int sweeps = 0;
    double kkt_residual = 0.0;
    double objective = 0.0;
    std::vector<double> objective_trace;  ///< objective after every sweep
};

/// Block coordinate descent with exact group minimization. Throws NonFinite
/// when the iterates diverge; returns the last iterate with converged=false
/// when the sweep cap is hit before the KKT conditions certify.
GroupLassoResult group_lasso_bcd(const GroupedLSProblem& prob, const std::optional<Vector>& init = std::nullopt,
                                 const SolverOptions& opts = {});

/// Objective of `prob` at `beta`, evaluated directly from the designs.
double grouped_ls_objective(const GroupedLSProblem& prob, const Vector& beta);

/// argmin ||y - X beta||^2 + lambda ||beta||_1 (unscaled loss).
GroupLassoResult lasso_cd(const Matrix& X, const Vector& y, double lambda,
                          const std::optional<Vector>& init = std::nullopt, const SolverOptions& opts = {});

struct PrecisionProblem {
    Matrix S;            ///< symmetric sample covariance
    Adjacency support;   ///< symmetric off-diagonal edges allowed to be non-zero
    double tol = 1e-8;
    int max_iter = 1000;
};

struct PrecisionResult {
    Matrix omega;
    int iterations = 0;
    double stationarity = 0.0;  ///< max |S - omega^{-1}| over the diagonal and the support
};

/// Gaussian MLE of a precision matrix whose off-diagonal zeros are fixed by
/// `support`: argmin tr(S Omega) - log det Omega. Throws NotPD when the
/// restricted problem has no positive-definite solution for this S and
/// NoConverge when the iteration cap is reached.
PrecisionResult restricted_glasso(const PrecisionProblem& prob);

/// Minimum-norm least squares of y on the columns of X in `support`;
/// coefficients off the support are zero. Eigenvalues of X_S^T X_S below
/// 1e-10 * lambda_max are treated as zero.
Vector refit_ols(const Matrix& X, const Vector& y, const std::vector<int>& support);

struct RidgedPrecision {
    Matrix omega;
    bool ridge_used = false;
};

/// restricted_glasso, retried on S + eps * mean(diag S) * I for growing eps when
/// the plain problem is not PD or does not converge. Rethrows if every ridge fails.
RidgedPrecision restricted_glasso_with_ridge(const Matrix& S, const Adjacency& support);

/// tr(S Omega) - log det Omega. Throws NotPD if Omega is not positive definite.
double gaussian_nll(const Matrix& S, const Matrix& omega);

}  // namespace jmmle
