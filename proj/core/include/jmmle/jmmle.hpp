#pragma once

#include <optional>
#include <vector>

#include "jmmle/groups.hpp"
#include "jmmle/jsem.hpp"
#include "jmmle/solvers.hpp"
#include "jmmle/types.hpp"

namespace jmmle {

struct JmmleConfig {
    std::vector<double> lambda_grid;  ///< empty: default_lambda_grid
    std::vector<double> gamma_grid;   ///< empty: default_gamma_grid
    std::vector<double> eta_grid;     ///< empty: default_eta_grid for the upper layer
    bool one_step = true;
    int max_outer = 50;
    double tol_outer = 1e-4;          ///< relative Frobenius change of the stacked B
    bool refit_inside = true;
    /// Full mode picks gamma by BIC again after every B update. With this off the
    /// gamma chosen at initialization is kept, which fixes the objective.
    bool reselect_gamma = true;
    bool fit_upper = true;            ///< run the upper-layer neighborhood fit (needed for testing)
    PenaltyScaling scaling = PenaltyScaling::GroupSizeAdjusted;
    SolverOptions solver{};
    int workers = 1;                  ///< threads across the lambda grid
};

/// {0.4, 0.6, ..., 1.8} * sqrt(log(p) / n).
std::vector<double> default_lambda_grid(int p, int n);
/// {0.3, 0.4, ..., 1.0} * sqrt(log(q) / n).
std::vector<double> default_gamma_grid(int q, int n);

/// T^k with unit diagonal and T^k(j', j) = -theta_{jj'}^k, so that column j of
/// E^k T^k is the node-j residual E_j - E_{-j} theta_j.
std::vector<Matrix> t_matrices(const std::vector<Matrix>& Theta, int K);

/// E^k = Y^k - X^k B^k.
std::vector<Matrix> residuals(const MultiDataset& data, const std::vector<Matrix>& B);

/// Column j of B^k is the unscaled-loss lasso of Y_j^k on X^k, independently
/// over (j, k). The l1 penalty is lasso_penalty(scaling, lambda, n).
std::vector<Matrix> init_B(const MultiDataset& data, double lambda,
                           PenaltyScaling scaling = PenaltyScaling::GroupSizeAdjusted, const SolverOptions& solver = {});

/// Grouped node-wise regression of the residuals Y^k - X^k B^k.
NeighborhoodFit update_theta(const MultiDataset& data, const std::vector<Matrix>& B, const PairPartitions& gy,
                             double gamma, const NeighborhoodOptions& opts = {},
                             const std::vector<Matrix>* warm = nullptr);

/// The initial Theta is update_theta applied to the lasso initializer.
inline NeighborhoodFit init_theta(const MultiDataset& data, const std::vector<Matrix>& B0, const PairPartitions& gy,
                                  double gamma, const NeighborhoodOptions& opts = {}) {
    return update_theta(data, B0, gy, gamma, opts);
}

struct UpdateBOptions {
    PenaltyScaling scaling = PenaltyScaling::GroupSizeAdjusted;
    SolverOptions solver{};
    bool refit = true;
};

struct UpdateBResult {
    std::vector<Matrix> B;          ///< returned estimate (refitted when requested)
    std::vector<Matrix> penalized;  ///< exact minimizer of the penalized loss before any refit
    bool converged = false;
    double kkt_residual = 0.0;
    int sweeps = 0;
};

/// Exact minimization over B of
///   sum_k (1/n) ||(Y^k - X^k B^k) T^k||_F^2 + lambda sum_h w_h ||B^[h]||
/// for fixed Theta, by block coordinate descent over the groups of `h`.
/// With `refit`, every column B_j^k is then replaced by the least-squares fit
/// of Y_j^k on the columns of X^k in its support.
UpdateBResult update_B(const MultiDataset& data, const std::vector<Matrix>& Theta, const CoefficientGroups& h,
                       double lambda, const UpdateBOptions& opts = {},
                       const std::vector<Matrix>* warm = nullptr);

struct OmegaYFit {
    std::vector<Matrix> Omega;
    std::vector<Adjacency> edges;
    std::vector<Matrix> S;  ///< residual covariances the refit used
    bool ridge_used = false;
};

/// OR-rule edges from Theta and the restricted MLE on the residual covariance.
OmegaYFit compute_omega_y(const MultiDataset& data, const std::vector<Matrix>& B, const std::vector<Matrix>& Theta);

/// Penalized objective of the joint problem at (B, Theta).
double jmmle_objective(const MultiDataset& data, const std::vector<Matrix>& B, const std::vector<Matrix>& Theta,
                       const GroupStructure& gs, double lambda, double gamma, PenaltyScaling scaling);

struct GammaFit {
    double gamma = 0.0;
    double bic = 0.0;
    NeighborhoodFit theta;
    OmegaYFit omega;
};

/// Fits Theta at `gamma` on the residuals of B and scores it by
/// sum_k [tr(S^k Omega^k) - log det Omega^k] + log(n)/n sum_k |E^k|.
GammaFit bic_gamma(const MultiDataset& data, const std::vector<Matrix>& B, const PairPartitions& gy, double gamma,
                   const NeighborhoodOptions& opts = {});

/// Minimum-BIC gamma over `grid`; ties go to the larger gamma.
GammaFit select_gamma(const MultiDataset& data, const std::vector<Matrix>& B, const PairPartitions& gy,
                      const std::vector<double>& grid, const NeighborhoodOptions& opts = {});

/// (1/n) sum_{j,k} ||E_j^k - E_{-j}^k theta_j^k||^2
///   + log(log n) log(pq)/n * sum_k (||B^k||_0 + |E_y^k|).
double hbic_lambda(const MultiDataset& data, const std::vector<Matrix>& B, const std::vector<Matrix>& Theta,
                   const std::vector<Adjacency>& edges_y);

/// One model at a fixed lambda, with gamma chosen by BIC.
struct LambdaFit {
    double lambda = 0.0;
    double gamma = 0.0;
    double hbic = 0.0;
    std::vector<Matrix> B;
    std::vector<Matrix> penalized_B;
    std::vector<Matrix> Theta;
    OmegaYFit omega;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;  ///< objective after every B and Theta update (full mode)
};

LambdaFit fit_lambda(const MultiDataset& data, const GroupStructure& gs, const JmmleConfig& cfg, double lambda);

/// Tunes lambda by HBIC over the grid, then attaches the upper-layer fit.
ModelEstimate fit(const MultiDataset& data, const GroupStructure& gs, const JmmleConfig& cfg = {});

}  // namespace jmmle
