#include "jmmle/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "jmmle/distributions.hpp"
#include "jmmle/errors.hpp"

namespace jmmle {

namespace {

void check_estimate(const MultiDataset& data, const ModelEstimate& est) {
    require(static_cast<int>(est.B.size()) == data.K(), ErrorKind::KMismatch, "estimate and data disagree on K");
    require(static_cast<int>(est.zeta.size()) == data.p(), ErrorKind::InvalidArgument,
            "estimate carries no upper-layer neighborhoods; fit with the upper layer enabled");
    for (int k = 0; k < data.K(); ++k)
        require(est.B[k].rows() == data.p() && est.B[k].cols() == data.q(), ErrorKind::ShapeMismatch,
                "B^" + std::to_string(k + 1) + " must be p x q");
}

DebiasedRow debias_one(const MultiDataset& data, const ModelEstimate& est, const std::vector<Matrix>& resid, int i) {
    const int K = data.K(), p = data.p();
    const double n = data.n();
    require(i >= 0 && i < p, ErrorKind::IndexOutOfRange, "row " + std::to_string(i + 1) + " out of range");
    require(est.zeta[i].rows() == p - 1 && est.zeta[i].cols() == K, ErrorKind::ShapeMismatch,
            "zeta block " + std::to_string(i + 1) + " has the wrong shape");
    DebiasedRow row;
    row.i = i;
    for (int k = 0; k < K; ++k) {
        Vector w(p);
        w(i) = 1.0;
        for (int r = 0; r < p - 1; ++r) w(neighbor_of(i, r)) = -est.zeta[i](r, k);
        const Vector z = data.X(k) * w;
        const double t = z.dot(data.X(k).col(i)) / n;
        const double s = std::sqrt(z.squaredNorm() / n);
        if (!(std::abs(t) >= 1e-10) || !(s > 0.0))
            fail(ErrorKind::DegenerateProjection,
                 "row " + std::to_string(i + 1) + ", condition " + std::to_string(k + 1) +
                     ": projection of X_i on its neighborhood residual is degenerate");
        row.c.push_back(est.B[k].row(i).transpose() + resid[k].transpose() * z / (n * t));
        row.t.push_back(t);
        row.s.push_back(s);
        row.m.push_back(std::sqrt(n) * t / s);
    }
    return row;
}

std::vector<Matrix> model_residuals(const MultiDataset& data, const ModelEstimate& est) {
    std::vector<Matrix> r;
    for (int k = 0; k < data.K(); ++k) r.push_back(data.Y(k) - data.X(k) * est.B[k]);
    return r;
}

void check_pair(const DebiasedRow& row, const std::vector<Matrix>& sigma) {
    require(row.c.size() == 2 && sigma.size() == 2, ErrorKind::KMismatch, "pairwise tests need exactly K = 2");
    const auto q = row.c[0].size();
    for (const auto& s : sigma)
        require(s.rows() == q && s.cols() == q, ErrorKind::ShapeMismatch, "covariance must be q x q");
}

// Smallest tau with 1 - Phi(tau) <= target.
double level_quantile(double target) {
    double u = normal_upper_quantile(target);
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 64 && normal_upper_tail(u) > target; ++it) u = std::nextafter(u, inf);
    for (int it = 0; it < 64 && normal_upper_tail(std::nextafter(u, -inf)) <= target; ++it) u = std::nextafter(u, -inf);
    return u;
}

}  // namespace

DebiasedRow debias_row(const MultiDataset& data, const ModelEstimate& est, int i) {
    check_estimate(data, est);
    return debias_one(data, est, model_residuals(data, est), i);
}

std::vector<DebiasedRow> debias_rows(const MultiDataset& data, const ModelEstimate& est) {
    check_estimate(data, est);
    const auto resid = model_residuals(data, est);
    std::vector<DebiasedRow> rows;
    rows.reserve(data.p());
    for (int i = 0; i < data.p(); ++i) rows.push_back(debias_one(data, est, resid, i));
    return rows;
}

CovarianceFromPrecision covariance_from_precision(const Matrix& omega) {
    require(omega.rows() == omega.cols(), ErrorKind::ShapeMismatch, "precision must be square");
    const auto q = omega.rows();
    Eigen::LLT<Matrix> llt(omega);
    if (llt.info() == Eigen::Success) return {llt.solve(Matrix::Identity(q, q)), false};
    const double base = std::max(omega.diagonal().cwiseAbs().mean(), 1e-12);
    for (double eps : {1e-6, 1e-4, 1e-2, 1e-1}) {
        Eigen::LLT<Matrix> r(omega + eps * base * Matrix::Identity(q, q));
        if (r.info() == Eigen::Success) return {r.solve(Matrix::Identity(q, q)), true};
    }
    fail(ErrorKind::NotPD, "precision matrix cannot be inverted even with a ridge");
}

GlobalTest global_test(const DebiasedRow& row, const std::vector<Matrix>& sigma, double alpha) {
    require(alpha > 0.0 && alpha < 1.0, ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
    check_pair(row, sigma);
    const Vector delta = row.c[0] - row.c[1];
    const Matrix pooled = sigma[0] / (row.m[0] * row.m[0]) + sigma[1] / (row.m[1] * row.m[1]);
    Eigen::LLT<Matrix> llt(pooled);
    if (llt.info() != Eigen::Success) fail(ErrorKind::NotPD, "pooled covariance of row " + std::to_string(row.i + 1) + " is not PD");
    GlobalTest g;
    g.df = static_cast<int>(delta.size());
    g.D = std::max(0.0, delta.dot(llt.solve(delta)));
    g.critical = chi_squared_quantile(g.df, 1.0 - alpha);
    g.reject = g.D >= g.critical;
    return g;
}

Vector pairwise_stats(const DebiasedRow& row, const std::vector<Matrix>& sigma) {
    check_pair(row, sigma);
    const auto q = row.c[0].size();
    Vector d(q);
    for (Eigen::Index j = 0; j < q; ++j) {
        const double var = sigma[0](j, j) / (row.m[0] * row.m[0]) + sigma[1](j, j) / (row.m[1] * row.m[1]);
        if (!(var > 0.0) || !std::isfinite(var))
            fail(ErrorKind::DegenerateVariance,
                 "row " + std::to_string(row.i + 1) + ", response " + std::to_string(j + 1) + ": variance is not positive");
        d(j) = (row.c[0](j) - row.c[1](j)) / std::sqrt(var);
    }
    return d;
}

bool fdr_feasible(const Vector& d, double alpha, double tau) {
    const auto q = static_cast<double>(d.size());
    const auto count = (d.array().abs() >= tau).count();
    return normal_upper_tail(tau) <= alpha / (2.0 * q) * std::max<double>(static_cast<double>(count), 1.0);
}

double fdr_threshold(const Vector& d, double alpha) {
    require(alpha > 0.0 && alpha < 1.0, ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
    require(d.size() > 0, ErrorKind::InvalidArgument, "no statistics to threshold");
    require(d.allFinite(), ErrorKind::NonFinite, "statistics must be finite");
    const auto q = d.size();
    std::vector<double> cand;
    cand.reserve(2 * q + 1);
    for (Eigen::Index j = 0; j < q; ++j) cand.push_back(std::abs(d(j)));
    for (Eigen::Index r = 0; r <= q; ++r)
        cand.push_back(level_quantile(alpha / (2.0 * q) * std::max<double>(static_cast<double>(r), 1.0)));
    std::sort(cand.begin(), cand.end());

    std::vector<double> sorted_abs(q);
    for (Eigen::Index j = 0; j < q; ++j) sorted_abs[j] = std::abs(d(j));
    std::sort(sorted_abs.begin(), sorted_abs.end());
    for (double tau : cand) {
        const auto count = sorted_abs.end() - std::lower_bound(sorted_abs.begin(), sorted_abs.end(), tau);
        const double rhs = alpha / (2.0 * q) * std::max<double>(static_cast<double>(count), 1.0);
        if (normal_upper_tail(tau) <= rhs) return tau;
    }
    // The r = 0 level quantile is always feasible, so the scan returns above.
    return cand.back();
}

TestReport simultaneous_test(const DebiasedRow& row, const std::vector<Matrix>& sigma, double alpha) {
    TestReport rep;
    rep.i = row.i;
    rep.alpha = alpha;
    rep.global = global_test(row, sigma, alpha);
    rep.d = pairwise_stats(row, sigma);
    rep.tau_hat = fdr_threshold(rep.d, alpha);
    for (Eigen::Index j = 0; j < rep.d.size(); ++j)
        if (std::abs(rep.d(j)) >= rep.tau_hat) rep.rejections.push_back(static_cast<int>(j));
    return rep;
}

RowTests test_rows(const MultiDataset& data, const ModelEstimate& est, double alpha, const std::vector<int>& rows) {
    require(data.K() == 2, ErrorKind::KMismatch, "pairwise tests need K = 2, got K = " + std::to_string(data.K()));
    check_estimate(data, est);
    require(est.OmegaY.size() == 2, ErrorKind::KMismatch, "estimate needs two lower-layer precision matrices");
    RowTests out;
    std::vector<Matrix> sigma;
    for (const auto& om : est.OmegaY) {
        auto c = covariance_from_precision(om);
        out.ridge_used = out.ridge_used || c.ridge_used;
        sigma.push_back(std::move(c.sigma));
    }
    const auto resid = model_residuals(data, est);
    std::vector<int> which = rows;
    if (which.empty())
        for (int i = 0; i < data.p(); ++i) which.push_back(i);
    for (int i : which) out.reports.push_back(simultaneous_test(debias_one(data, est, resid, i), sigma, alpha));
    return out;
}

std::vector<Matrix> threshold_rows(const ModelEstimate& est, const MultiDataset& data, double alpha) {
    check_estimate(data, est);
    require(static_cast<int>(est.OmegaY.size()) == data.K(), ErrorKind::KMismatch, "estimate lacks lower-layer precisions");
    const auto resid = model_residuals(data, est);
    std::vector<Matrix> out = est.B;
    const int q = data.q();
    for (int i = 0; i < data.p(); ++i) {
        const auto row = debias_one(data, est, resid, i);
        for (int k = 0; k < data.K(); ++k) {
            Vector z(q);
            for (int j = 0; j < q; ++j) z(j) = std::sqrt(est.OmegaY[k](j, j)) * row.m[k] * row.c[k](j);
            const double tau = fdr_threshold(z, alpha);
            for (int j = 0; j < q; ++j)
                if (!(std::abs(z(j)) >= tau)) out[k](i, j) = 0.0;
        }
    }
    return out;
}

}  // namespace jmmle
