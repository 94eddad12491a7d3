#pragma once

#include <vector>

#include "jmmle/groups.hpp"
#include "jmmle/solvers.hpp"
#include "jmmle/types.hpp"

namespace jmmle {

struct NeighborhoodOptions {
    PenaltyScaling scaling = PenaltyScaling::GroupSizeAdjusted;
    SolverOptions solver{};
};

/// Coefficients of every node regressed on the remaining nodes, jointly over
/// the K conditions. coef[d] is (dim-1) x K; see neighbor_slot for the row layout.
struct NeighborhoodFit {
    std::vector<Matrix> coef;
    bool converged = true;      ///< every node's solve certified its KKT conditions
    double max_kkt = 0.0;
    int max_sweeps = 0;
};

/// Grouped node-wise regression computed from the K sample covariances
/// S^k = Z^k' Z^k / n:
///   min (1/n) sum_k ||Z_d^k - Z_{-d}^k c^k||^2 + penalty sum_{d'} sum_{g} w_g ||c_{d'}^{[g]}||
/// with the groups of pair (d, d') taken from `parts`.
NeighborhoodFit grouped_neighborhoods(const std::vector<Matrix>& S, const PairPartitions& parts, double penalty,
                                      const NeighborhoodOptions& opts = {},
                                      const std::vector<Matrix>* warm = nullptr);

/// Edge (a, b) is present in condition k when either directed coefficient is
/// non-zero (|c| > kZeroThreshold).
std::vector<Adjacency> union_edges(const std::vector<Matrix>& coef);

/// K sample covariances Z^k' Z^k / n of already centered data.
std::vector<Matrix> sample_covariances(const std::vector<Matrix>& Z);

/// sum_k [tr(S^k Omega^k) - log det Omega^k] + log(n)/n * sum_k |E^k|.
double precision_bic(const std::vector<Matrix>& S, const std::vector<Matrix>& omega,
                     const std::vector<Adjacency>& edges, int n);

struct JsemPathPoint {
    double eta = 0.0;
    double bic = 0.0;
    std::size_t edges = 0;  ///< summed over k
    bool converged = true;
};

struct JsemFit {
    std::vector<Matrix> zeta;        ///< dim matrices (dim-1) x K
    std::vector<Adjacency> edges;    ///< K symmetric edge sets
    std::vector<Matrix> Omega;       ///< K positive-definite matrices
    double eta_selected = 0.0;
    double bic = 0.0;
    bool ridge_used = false;
    std::vector<JsemPathPoint> path; ///< in decreasing eta order
};

/// {0.3, 0.4, ..., 1.0} * sqrt(log(dim) / n).
std::vector<double> default_eta_grid(int dim, int n);

/// Neighborhood selection over `eta_grid`, restricted-MLE refit on the OR-rule
/// edges, and BIC selection of eta. Ties go to the larger eta.
JsemFit fit_jsem(const std::vector<Matrix>& Z, const PairPartitions& parts, const std::vector<double>& eta_grid,
                 const NeighborhoodOptions& opts = {});

/// fit_jsem on the upper layer of `data`.
JsemFit fit_omega_x(const MultiDataset& data, const PairPartitions& gx, const std::vector<double>& eta_grid,
                    const NeighborhoodOptions& opts = {});

}  // namespace jmmle
