#include "jmmle/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "jmmle/errors.hpp"

namespace jmmle {

namespace {

double ratio_or_one(std::size_t num, std::size_t den) {
    return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

SupportMetrics support_metrics(const Matrix& est, const Matrix& truth, SupportScope scope) {
    require(est.rows() == truth.rows() && est.cols() == truth.cols(), ErrorKind::ShapeMismatch,
            "estimate is " + std::to_string(est.rows()) + "x" + std::to_string(est.cols()) + " but truth is " +
                std::to_string(truth.rows()) + "x" + std::to_string(truth.cols()));
    if (scope == SupportScope::OffDiagonalUpper)
        require(est.rows() == est.cols(), ErrorKind::ShapeMismatch, "off-diagonal scoring needs square matrices");
    SupportMetrics m;
    for (Eigen::Index b = 0; b < est.cols(); ++b)
        for (Eigen::Index a = 0; a < est.rows(); ++a) {
            if (scope == SupportScope::OffDiagonalUpper && a >= b) continue;
            const bool e = std::abs(est(a, b)) > kZeroThreshold;
            const bool t = std::abs(truth(a, b)) > kZeroThreshold;
            if (e && t) ++m.tp;
            else if (!e && !t) ++m.tn;
            else if (e) ++m.fp;
            else ++m.fn;
        }
    m.tpr = ratio_or_one(m.tp, m.tp + m.fn);
    m.tnr = ratio_or_one(m.tn, m.tn + m.fp);
    m.fdp = static_cast<double>(m.fp) / static_cast<double>(std::max<std::size_t>(m.tp + m.fp, 1));
    const double tp = m.tp, tn = m.tn, fp = m.fp, fn = m.fn;
    const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    if (den == 0.0) {
        m.mcc = 0.0;
        m.mcc_degenerate = true;
    } else {
        m.mcc = (tp * tn - fp * fn) / std::sqrt(den);
    }
    return m;
}

double rel_frobenius(const Matrix& est, const Matrix& truth) {
    require(est.rows() == truth.rows() && est.cols() == truth.cols(), ErrorKind::ShapeMismatch,
            "estimate and truth shapes differ");
    const double tn = truth.norm();
    if (!(tn > 0.0)) fail(ErrorKind::ZeroTruth, "relative error is undefined for an all-zero truth");
    return (est - truth).norm() / tn;
}

MatrixScores score_matrices(const std::vector<Matrix>& est, const std::vector<Matrix>& truth, SupportScope scope) {
    require(est.size() == truth.size() && !est.empty(), ErrorKind::KMismatch,
            "estimate and truth disagree on the number of conditions");
    MatrixScores s;
    const double K = static_cast<double>(est.size());
    for (std::size_t k = 0; k < est.size(); ++k) {
        auto m = support_metrics(est[k], truth[k], scope);
        const double rf = rel_frobenius(est[k], truth[k]);
        s.tpr += m.tpr / K;
        s.tnr += m.tnr / K;
        s.mcc += m.mcc / K;
        s.fdp += m.fdp / K;
        s.rf += rf / K;
        s.per_k.push_back(m);
        s.rf_per_k.push_back(rf);
    }
    return s;
}

TestingScores test_summary(const std::vector<TestReport>& alt, const Matrix& D, const std::vector<TestReport>* null) {
    TestingScores s;
    std::size_t global_hits = 0, pair_total = 0, pair_hits = 0;
    double fdp_sum = 0.0;
    for (const auto& rep : alt) {
        require(rep.i >= 0 && rep.i < D.rows() && rep.d.size() == D.cols(), ErrorKind::ShapeMismatch,
                "report does not match the difference matrix");
        const auto row = D.row(rep.i);
        const bool is_alt = (row.array() != 0.0).any();
        if (is_alt) {
            ++s.alt_rows;
            if (rep.global.reject) ++global_hits;
        }
        std::size_t false_rej = 0;
        for (int j : rep.rejections)
            if (row(j) == 0.0) ++false_rej;
        fdp_sum += static_cast<double>(false_rej) / static_cast<double>(std::max<std::size_t>(rep.rejections.size(), 1));
        for (Eigen::Index j = 0; j < D.cols(); ++j)
            if (row(j) != 0.0) ++pair_total;
        for (int j : rep.rejections)
            if (row(j) != 0.0) ++pair_hits;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.global_power = s.alt_rows ? static_cast<double>(global_hits) / s.alt_rows : nan;
    s.pairwise_power = pair_total ? static_cast<double>(pair_hits) / pair_total : nan;
    s.fdr = alt.empty() ? nan : fdp_sum / static_cast<double>(alt.size());
    s.global_size = nan;
    if (null) {
        std::size_t rej = 0;
        for (const auto& rep : *null)
            if (rep.global.reject) ++rej;
        s.null_rows = null->size();
        if (!null->empty()) s.global_size = static_cast<double>(rej) / static_cast<double>(null->size());
    }
    return s;
}

Aggregate aggregate(const std::vector<double>& values) {
    Aggregate a;
    a.count = values.size();
    if (values.empty()) {
        a.mean = a.sd = std::numeric_limits<double>::quiet_NaN();
        return a;
    }
    double sum = 0.0;
    for (double v : values) sum += v;
    a.mean = sum / static_cast<double>(values.size());
    if (values.size() < 2) {
        a.sd = std::numeric_limits<double>::quiet_NaN();
        return a;
    }
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    return a;
}

}  // namespace jmmle
