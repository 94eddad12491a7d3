#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace jmmle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
/// Symmetric boolean adjacency with a false diagonal.
using Adjacency = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Entries with magnitude at or below this are treated as exact zeros when
/// reading supports off solver output.
inline constexpr double kZeroThreshold = 1e-10;

/// Node-wise regressions store the coefficients of a node on the remaining
/// dim-1 nodes. Slot r of node `self` refers to variable `r < self ? r : r + 1`.
constexpr int neighbor_slot(int self, int other) noexcept { return other < self ? other : other - 1; }
constexpr int neighbor_of(int self, int slot) noexcept { return slot < self ? slot : slot + 1; }

std::size_t edge_count(const Adjacency& adj);

/// K paired samples (X^k, Y^k) sharing n, p, q. Columns are centered on
/// construction and the object is immutable afterwards.
class MultiDataset {
public:
    /// Validates shapes and finiteness, then centers every column.
    static MultiDataset from_matrices(std::vector<Matrix> X, std::vector<Matrix> Y);

    int K() const noexcept { return static_cast<int>(X_.size()); }
    int n() const noexcept { return n_; }
    int p() const noexcept { return p_; }
    int q() const noexcept { return q_; }

    const Matrix& X(int k) const { return X_.at(k); }
    const Matrix& Y(int k) const { return Y_.at(k); }
    const std::vector<Matrix>& X() const noexcept { return X_; }
    const std::vector<Matrix>& Y() const noexcept { return Y_; }

private:
    MultiDataset() = default;
    int n_ = 0, p_ = 0, q_ = 0;
    std::vector<Matrix> X_, Y_;
};

/// Selection trace for one point of the lambda grid.
struct LambdaTrace {
    double lambda = 0;
    double gamma = 0;
    double hbic = 0;
    int iterations = 0;
    bool converged = false;
};

struct ModelEstimate {
    std::vector<Matrix> B;          ///< K matrices p x q
    std::vector<Matrix> Theta;      ///< q matrices (q-1) x K, lower-layer neighborhoods
    std::vector<Matrix> OmegaY;     ///< K matrices q x q
    std::vector<Adjacency> EdgesY;  ///< K symmetric edge sets the OmegaY support was restricted to
    std::vector<Matrix> OmegaX;     ///< K matrices p x p
    std::vector<Adjacency> EdgesX;
    std::vector<Matrix> zeta;       ///< p matrices (p-1) x K, upper-layer neighborhoods

    double lambda_selected = 0;
    double gamma_selected = 0;
    double eta_selected = 0;
    int iterations = 0;
    bool converged = false;
    bool ridge_used = false;  ///< a precision refit needed the diagonal ridge fallback
    std::vector<LambdaTrace> lambda_path;
};

struct SimTruth {
    std::vector<Matrix> B0;
    std::vector<Matrix> OmegaX0;
    std::vector<Matrix> OmegaY0;
    std::vector<Matrix> SigmaX0;
    std::vector<Matrix> SigmaY0;
    std::vector<Adjacency> EdgesX0;
    std::vector<Adjacency> EdgesY0;
    Matrix D;  ///< B0[1] - B0[0] for the two-condition testing design; empty otherwise
    std::uint64_t seed = 0;
    double pi_x = 0, pi_y = 0, pi = 0;
};

Adjacency support_of(const Matrix& omega, double threshold = kZeroThreshold);
bool is_symmetric(const Matrix& m, double tol);
/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& sym);
/// min_a ( |M_aa| - sum_{a' != a} |M_aa'| ).
double diagonal_dominance_margin(const Matrix& m);

}  // namespace jmmle
