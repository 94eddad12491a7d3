#pragma once

#include <cstddef>
#include <vector>

#include "jmmle/inference.hpp"
#include "jmmle/types.hpp"

namespace jmmle {

/// Which entries count toward support recovery.
enum class SupportScope {
    AllEntries,        ///< every entry (regression matrices)
    OffDiagonalUpper,  ///< a < b only (precision matrices, whose diagonal is never zero)
};

struct SupportMetrics {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
    double tpr = 0.0, tnr = 0.0, mcc = 0.0;
    double fdp = 0.0;             ///< fp / max(tp + fp, 1)
    bool mcc_degenerate = false;  ///< MCC denominator was zero and MCC was set to 0
};

/// Non-zero means |x| > kZeroThreshold. A rate whose denominator is empty is 1.
SupportMetrics support_metrics(const Matrix& est, const Matrix& truth, SupportScope scope = SupportScope::AllEntries);

/// ||est - truth||_F / ||truth||_F; throws ZeroTruth when truth is all zero.
double rel_frobenius(const Matrix& est, const Matrix& truth);

/// Per-condition metrics and their means over k.
struct MatrixScores {
    std::vector<SupportMetrics> per_k;
    std::vector<double> rf_per_k;
    double tpr = 0.0, tnr = 0.0, mcc = 0.0, rf = 0.0, fdp = 0.0;
};

MatrixScores score_matrices(const std::vector<Matrix>& est, const std::vector<Matrix>& truth,
                            SupportScope scope = SupportScope::AllEntries);

/// Testing metrics of one replication.
struct TestingScores {
    double global_power = 0.0;  ///< rejection rate over rows whose difference row is non-zero
    double global_size = 0.0;   ///< rejection rate over rows of the null companion
    double pairwise_power = 0.0;
    double fdr = 0.0;           ///< mean over rows of the row's false discovery proportion
    std::size_t alt_rows = 0, null_rows = 0;
};

/// `alt` holds the reports of every row on data with difference matrix D;
/// `null` (optional) the reports on the companion with D = 0.
TestingScores test_summary(const std::vector<TestReport>& alt, const Matrix& D,
                           const std::vector<TestReport>* null = nullptr);

struct Aggregate {
    double mean = 0.0;
    double sd = 0.0;  ///< sample standard deviation; NaN with fewer than two values
    std::size_t count = 0;
};

Aggregate aggregate(const std::vector<double>& values);

}  // namespace jmmle
