#include <doctest.h>

#include <cmath>

#include "jmmle/distributions.hpp"
#include "jmmle/errors.hpp"
#include "jmmle/inference.hpp"
#include "support/oracles.hpp"

using namespace jmmle;
namespace jt = jmmle::testing;

namespace {

double tail_oracle(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

struct Setup {
    MultiDataset data;
    ModelEstimate est;
};

Setup make_setup(Rng& rng, int n, int p, int q, int K, double noise, double zeta_scale) {
    std::vector<Matrix> X, Y;
    ModelEstimate est;
    for (int k = 0; k < K; ++k) {
        X.push_back(jt::gaussian_matrix(rng, n, p));
        est.B.push_back(jt::gaussian_matrix(rng, p, q));
        Y.push_back(X.back() * est.B.back() + noise * jt::gaussian_matrix(rng, n, q));
        est.OmegaY.push_back(Matrix::Identity(q, q));
    }
    auto data = MultiDataset::from_matrices(std::move(X), std::move(Y));
    for (int i = 0; i < p; ++i) est.zeta.push_back(zeta_scale * jt::gaussian_matrix(rng, p - 1, K));
    // centering moved the data; refit B exactly so a noiseless Y stays a perfect fit
    for (int k = 0; k < K && noise == 0.0; ++k)
        est.B[k] = data.X(k).colPivHouseholderQr().solve(data.Y(k));
    return {std::move(data), std::move(est)};
}

DebiasedRow manual_row(const Vector& c1, const Vector& c2, double m1, double m2) {
    DebiasedRow r;
    r.c = {c1, c2};
    r.m = {m1, m2};
    r.t = {1.0, 1.0};
    r.s = {1.0, 1.0};
    return r;
}

}  // namespace

TEST_CASE("a perfect fit leaves the coefficients unchanged") {
    Rng rng(71);
    auto s = make_setup(rng, 30, 4, 3, 2, 0.0, 0.3);
    for (const auto& row : debias_rows(s.data, s.est))
        for (int k = 0; k < 2; ++k) CHECK((row.c[k] - s.est.B[k].row(row.i).transpose()).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("with zeta = 0 the projection is the column itself") {
    Rng rng(72);
    auto s = make_setup(rng, 40, 5, 3, 2, 1.0, 0.0);
    for (int i = 0; i < 5; ++i) {
        const auto row = debias_row(s.data, s.est, i);
        for (int k = 0; k < 2; ++k) {
            const Vector xi = s.data.X(k).col(i);
            const Matrix E = s.data.Y(k) - s.data.X(k) * s.est.B[k];
            const Vector expect = s.est.B[k].row(i).transpose() + E.transpose() * xi / xi.squaredNorm();
            CHECK((row.c[k] - expect).cwiseAbs().maxCoeff() <= 1e-10);
            CHECK(row.m[k] == doctest::Approx(xi.norm()).epsilon(1e-12));
        }
    }
}

TEST_CASE("m equals sqrt(n) t / s for arbitrary neighborhoods") {
    Rng rng(73);
    auto s = make_setup(rng, 50, 6, 2, 2, 1.0, 0.4);
    for (const auto& row : debias_rows(s.data, s.est))
        for (int k = 0; k < 2; ++k) {
            Vector w = Vector::Zero(6);
            w(row.i) = 1.0;
            for (int r = 0; r < 5; ++r) w(neighbor_of(row.i, r)) = -s.est.zeta[row.i](r, k);
            const Vector z = s.data.X(k) * w;
            const double t = z.dot(s.data.X(k).col(row.i)) / 50.0, sd = z.norm() / std::sqrt(50.0);
            CHECK(row.t[k] == doctest::Approx(t));
            CHECK(row.s[k] == doctest::Approx(sd));
            CHECK(row.m[k] == doctest::Approx(std::sqrt(50.0) * t / sd));
        }
}

TEST_CASE("a collinear column makes the projection degenerate") {
    Rng rng(74);
    Matrix X = jt::gaussian_matrix(rng, 20, 3);
    X.col(1) = X.col(0);
    const auto data = MultiDataset::from_matrices({X, X}, {jt::gaussian_matrix(rng, 20, 2), jt::gaussian_matrix(rng, 20, 2)});
    ModelEstimate est;
    est.B.assign(2, Matrix::Zero(3, 2));
    est.OmegaY.assign(2, Matrix::Identity(2, 2));
    est.zeta.assign(3, Matrix::Zero(2, 2));
    est.zeta[0](0, 0) = est.zeta[0](0, 1) = 1.0;  // X_1 regressed exactly on X_2
    try {
        debias_row(data, est, 0);
        FAIL("expected a DegenerateProjection error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateProjection);
    }
}

TEST_CASE("the global test with q = 1 is a chi-square(1) test") {
    const auto row = manual_row(Vector::Constant(1, 2.0), Vector::Constant(1, 0.5), 2.0, 4.0);
    const std::vector<Matrix> sigma{Matrix::Constant(1, 1, 1.5), Matrix::Constant(1, 1, 0.8)};
    const auto g = global_test(row, sigma, 0.05);
    CHECK(g.df == 1);
    CHECK(g.critical == doctest::Approx(3.841458820694124).epsilon(1e-10));
    CHECK(g.D == doctest::Approx(1.5 * 1.5 / (1.5 / 4.0 + 0.8 / 16.0)));
    CHECK(g.reject == (g.D >= g.critical));
}

TEST_CASE("pairwise statistics with identity covariance scale by m / sqrt(2)") {
    const Vector c1 = (Vector(3) << 1.0, -0.5, 0.0).finished(), c2 = (Vector(3) << 0.0, 0.5, 0.0).finished();
    const auto row = manual_row(c1, c2, 3.0, 3.0);
    const std::vector<Matrix> sigma(2, Matrix::Identity(3, 3));
    const Vector d = pairwise_stats(row, sigma);
    for (int j = 0; j < 3; ++j) CHECK(d(j) == doctest::Approx(3.0 * (c1(j) - c2(j)) / std::sqrt(2.0)));
}

TEST_CASE("property: the global statistic is invariant to permuting responses") {
    for (int trial = 0; trial < 20; ++trial) {
        Rng rng(7500 + trial);
        const int q = jt::uniform_int(rng, 2, 6);
        const auto row = manual_row(jt::gaussian_matrix(rng, q, 1).col(0), jt::gaussian_matrix(rng, q, 1).col(0),
                                    rng.uniform(1.0, 5.0), rng.uniform(1.0, 5.0));
        const std::vector<Matrix> sigma{jt::random_spd(rng, q), jt::random_spd(rng, q)};
        Eigen::PermutationMatrix<Eigen::Dynamic> perm(q);
        perm.setIdentity();
        for (int a = q - 1; a > 0; --a) std::swap(perm.indices()(a), perm.indices()(jt::uniform_int(rng, 0, a)));
        auto prow = row;
        for (auto& c : prow.c) c = perm * c;
        std::vector<Matrix> psig;
        for (const auto& s : sigma) psig.push_back(perm * s * perm.transpose());
        CHECK(global_test(prow, psig, 0.05).D == doctest::Approx(global_test(row, sigma, 0.05).D).epsilon(1e-10));
    }
}

TEST_CASE("fdr_threshold closed forms") {
    CHECK(fdr_threshold(Vector::Constant(4, 10.0), 0.2) == doctest::Approx(normal_quantile(0.9)).epsilon(1e-12));
    CHECK(fdr_threshold(Vector::Zero(4), 0.2) == doctest::Approx(normal_quantile(1.0 - 0.2 / 8)).epsilon(1e-12));
    const double z = normal_quantile(0.975);
    for (double d : {0.5, 1.9, 1.97, 2.5, -3.0}) {
        const double tau = fdr_threshold(Vector::Constant(1, d), 0.05);
        CHECK((std::abs(d) >= tau) == (std::abs(d) >= z));
    }
}

TEST_CASE("property: fdr_threshold is the smallest feasible level") {
    for (int trial = 0; trial < 200; ++trial) {
        Rng rng(7600 + trial);
        const int q = jt::uniform_int(rng, 1, 30);
        Vector d = jt::gaussian_matrix(rng, q, 1).col(0);
        for (int j = 0; j < q; ++j)
            if (rng.bernoulli(0.3)) d(j) *= 4.0;
        const double alpha = rng.uniform(0.01, 0.3);
        const double tau = fdr_threshold(d, alpha);
        auto feasible = [&](double t) {
            const double count = static_cast<double>((d.array().abs() >= t).count());
            return tail_oracle(t) <= alpha / (2.0 * q) * std::max(count, 1.0);
        };
        CAPTURE(trial);
        CHECK(feasible(tau * (1 + 1e-12)));
        std::vector<double> probes;
        for (int a = 0; a < 500; ++a) probes.push_back(tau * a / 500.0);
        for (int j = 0; j < q; ++j)
            if (std::abs(d(j)) < tau) probes.push_back(std::abs(d(j)));
        bool any = false;
        for (double t : probes)
            if (t < tau * (1 - 1e-9) && feasible(t)) any = true;
        CHECK_FALSE(any);
    }
}

TEST_CASE("property: a larger alpha never raises the threshold") {
    for (int trial = 0; trial < 100; ++trial) {
        Rng rng(7700 + trial);
        const int q = jt::uniform_int(rng, 1, 20);
        const Vector d = 2.5 * jt::gaussian_matrix(rng, q, 1).col(0);
        const double a1 = rng.uniform(0.01, 0.2), a2 = a1 + rng.uniform(0.0, 0.2);
        CHECK(fdr_threshold(d, a2) <= fdr_threshold(d, a1));
    }
}

TEST_CASE("covariance_from_precision inverts PD input and ridges the rest") {
    Rng rng(78);
    const Matrix om = jt::random_spd(rng, 4);
    const auto c = covariance_from_precision(om);
    CHECK_FALSE(c.ridge_used);
    CHECK((c.sigma * om - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-10);
    Matrix singular = Matrix::Ones(3, 3);
    const auto r = covariance_from_precision(singular);
    CHECK(r.ridge_used);
}

TEST_CASE("test_rows needs two conditions") {
    Rng rng(79);
    auto s = make_setup(rng, 20, 3, 2, 3, 1.0, 0.1);
    try {
        test_rows(s.data, s.est, 0.05);
        FAIL("expected KMismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::KMismatch);
    }
}

TEST_CASE("test_rows reports every row and rejections follow tau") {
    Rng rng(80);
    auto s = make_setup(rng, 60, 5, 4, 2, 1.0, 0.1);
    s.est.B[1] = s.est.B[0];
    const auto res = test_rows(s.data, s.est, 0.2);
    REQUIRE(res.reports.size() == 5);
    for (const auto& rep : res.reports) {
        std::vector<int> expect;
        for (int j = 0; j < 4; ++j)
            if (std::abs(rep.d(j)) >= rep.tau_hat) expect.push_back(j);
        CHECK(rep.rejections == expect);
        CHECK(fdr_feasible(rep.d, 0.2, rep.tau_hat));
    }
    CHECK(test_rows(s.data, s.est, 0.2, {2}).reports.at(0).i == 2);
}

TEST_CASE("threshold_rows only removes entries") {
    Rng rng(81);
    auto s = make_setup(rng, 60, 5, 4, 2, 1.0, 0.1);
    s.est.B[0].row(1).setZero();
    s.est.B[0](2, 3) = 1e-3;
    const auto th = threshold_rows(s.est, s.data, 0.2);
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 4; ++j) CHECK((th[k](i, j) == 0.0 || th[k](i, j) == s.est.B[k](i, j)));
    CHECK(th[0].row(1).isZero());
}
