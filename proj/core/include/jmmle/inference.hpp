#pragma once

#include <vector>

#include "jmmle/types.hpp"

namespace jmmle {

/// Debiased row i of every B^k together with its scaling factors.
struct DebiasedRow {
    int i = 0;
    std::vector<Vector> c;   ///< K vectors of length q
    std::vector<double> m;   ///< sqrt(n) t / s
    std::vector<double> t;   ///< z' X_i / n with z = X_i - X_{-i} zeta_i
    std::vector<double> s;   ///< sqrt(z' z / n)
};

/// c^k = b_i^k + z^k' (Y^k - X^k B^k) / (n t^k). Needs est.zeta and est.B.
/// Throws DegenerateProjection when |t^k| < 1e-10 or s^k is zero.
DebiasedRow debias_row(const MultiDataset& data, const ModelEstimate& est, int i);
std::vector<DebiasedRow> debias_rows(const MultiDataset& data, const ModelEstimate& est);

struct CovarianceFromPrecision {
    Matrix sigma;
    bool ridge_used = false;
};

/// Omega^{-1} by Cholesky; a non-PD Omega is retried as Omega + eps I with the
/// fallback flagged.
CovarianceFromPrecision covariance_from_precision(const Matrix& omega);

struct GlobalTest {
    double D = 0.0;
    int df = 0;
    double critical = 0.0;  ///< chi-square (1 - alpha) quantile with df = q
    bool reject = false;
};

/// D = delta' (Sigma^1 / m1^2 + Sigma^2 / m2^2)^{-1} delta with delta = c^1 - c^2,
/// rejected when D >= the chi-square_{q, 1 - alpha} quantile. `sigma` holds the
/// two lower-layer covariances. Requires K = 2.
GlobalTest global_test(const DebiasedRow& row, const std::vector<Matrix>& sigma, double alpha);

/// d_j = (c_j^1 - c_j^2) / sqrt(sigma^1_jj / m1^2 + sigma^2_jj / m2^2).
Vector pairwise_stats(const DebiasedRow& row, const std::vector<Matrix>& sigma);

/// inf{tau : 1 - Phi(tau) <= alpha / (2q) * max(#{j : |d_j| >= tau}, 1)}.
/// The infimum is attained at one of the |d_j| or at a level quantile; every
/// candidate is checked exactly and the smallest feasible one returned.
double fdr_threshold(const Vector& d, double alpha);

/// True when tau satisfies the defining inequality of fdr_threshold.
bool fdr_feasible(const Vector& d, double alpha, double tau);

struct TestReport {
    int i = 0;
    double alpha = 0.0;
    GlobalTest global;
    Vector d;
    double tau_hat = 0.0;
    std::vector<int> rejections;  ///< {j : |d_j| >= tau_hat}
};

/// Global test plus the simultaneous pairwise tests for one row.
TestReport simultaneous_test(const DebiasedRow& row, const std::vector<Matrix>& sigma, double alpha);

struct RowTests {
    std::vector<TestReport> reports;  ///< one per row i
    bool ridge_used = false;
};

/// simultaneous_test for every row (or the listed rows) of a K = 2 estimate.
RowTests test_rows(const MultiDataset& data, const ModelEstimate& est, double alpha,
                   const std::vector<int>& rows = {});

/// Zeroes b_ij^k unless |sqrt(omega_jj^k) m_i^k c_ij^k| >= tau_i^k, the
/// fdr_threshold of that row's statistics.
std::vector<Matrix> threshold_rows(const ModelEstimate& est, const MultiDataset& data, double alpha);

}  // namespace jmmle
