#include <doctest.h>

#include "jmmle/errors.hpp"
#include "jmmle/metrics.hpp"
#include "support/oracles.hpp"

using namespace jmmle;
namespace jt = jmmle::testing;

namespace {

Matrix sparse_random(Rng& rng, int r, int c, double density) {
    Matrix m = jt::gaussian_matrix(rng, r, c);
    for (Eigen::Index a = 0; a < m.size(); ++a)
        if (!rng.bernoulli(density)) m(a) = 0.0;
    return m;
}

double mcc_oracle(const jt::Confusion& c) {
    const double tp = c.tp, tn = c.tn, fp = c.fp, fn = c.fn;
    const double den = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
    return den > 0.0 ? (tp * tn - fp * fn) / den : 0.0;
}

TestReport report(int i, std::vector<int> rej, bool global, int q) {
    TestReport r;
    r.i = i;
    r.rejections = std::move(rej);
    r.global.reject = global;
    r.d = Vector::Zero(q);
    return r;
}

}  // namespace

TEST_CASE("property: support metrics agree with a brute-force count") {
    for (int trial = 0; trial < 100; ++trial) {
        Rng rng(8100 + trial);
        const int r = jt::uniform_int(rng, 2, 9), c = jt::uniform_int(rng, 2, 9);
        const bool square = rng.bernoulli(0.5);
        const Matrix truth = sparse_random(rng, r, square ? r : c, 0.4);
        const Matrix est = sparse_random(rng, r, square ? r : c, 0.4);
        const auto scope = square ? SupportScope::OffDiagonalUpper : SupportScope::AllEntries;
        const auto m = support_metrics(est, truth, scope);
        const auto bc = jt::brute_confusion(est, truth, square);
        CAPTURE(trial);
        CHECK(m.tp == std::size_t(bc.tp));
        CHECK(m.tn == std::size_t(bc.tn));
        CHECK(m.fp == std::size_t(bc.fp));
        CHECK(m.fn == std::size_t(bc.fn));
        CHECK(m.tpr == doctest::Approx(bc.tp + bc.fn ? double(bc.tp) / (bc.tp + bc.fn) : 1.0));
        CHECK(m.tnr == doctest::Approx(bc.tn + bc.fp ? double(bc.tn) / (bc.tn + bc.fp) : 1.0));
        CHECK(m.mcc == doctest::Approx(mcc_oracle(bc)));
        CHECK(m.fdp == doctest::Approx(double(bc.fp) / std::max<long>(bc.tp + bc.fp, 1)));
    }
}

TEST_CASE("identical, empty and doubled estimates") {
    Rng rng(82);
    const Matrix truth = sparse_random(rng, 6, 5, 0.5);
    const auto same = support_metrics(truth, truth);
    CHECK(same.tpr == 1.0);
    CHECK(same.tnr == 1.0);
    CHECK(same.mcc == doctest::Approx(1.0));
    CHECK(rel_frobenius(truth, truth) == 0.0);
    const auto zero = support_metrics(Matrix::Zero(6, 5), truth);
    CHECK(zero.tpr == 0.0);
    CHECK(zero.tnr == 1.0);
    CHECK(rel_frobenius(Matrix::Zero(6, 5), truth) == doctest::Approx(1.0));
    CHECK(rel_frobenius(2.0 * truth, truth) == doctest::Approx(1.0));
    CHECK(support_metrics(2.0 * truth, truth).mcc == doctest::Approx(1.0));
}

TEST_CASE("degenerate denominators") {
    const Matrix z = Matrix::Zero(3, 3);
    const auto m = support_metrics(z, z);
    CHECK(m.tpr == 1.0);
    CHECK(m.tnr == 1.0);
    CHECK(m.mcc == 0.0);
    CHECK(m.mcc_degenerate);
    CHECK_THROWS_AS(rel_frobenius(Matrix::Ones(3, 3), z), Error);
    const auto full = support_metrics(Matrix::Ones(3, 3), Matrix::Ones(3, 3));
    CHECK(full.tnr == 1.0);
    CHECK(full.mcc_degenerate);
}

TEST_CASE("tiny entries count as zero") {
    Matrix est = Matrix::Zero(2, 2), truth = Matrix::Zero(2, 2);
    est(0, 1) = 1e-11;
    truth(0, 1) = 1.0;
    CHECK(support_metrics(est, truth).tp == 0);
    est(0, 1) = 1e-9;
    CHECK(support_metrics(est, truth).tp == 1);
}

TEST_CASE("property: metrics are invariant to a joint row and column permutation") {
    for (int trial = 0; trial < 30; ++trial) {
        Rng rng(8300 + trial);
        const int n = jt::uniform_int(rng, 3, 8);
        Matrix truth = sparse_random(rng, n, n, 0.4), est = sparse_random(rng, n, n, 0.4);
        truth = (truth + truth.transpose()).eval();
        est = (est + est.transpose()).eval();
        Eigen::PermutationMatrix<Eigen::Dynamic> perm(n);
        perm.setIdentity();
        for (int a = n - 1; a > 0; --a) std::swap(perm.indices()(a), perm.indices()(jt::uniform_int(rng, 0, a)));
        const auto m1 = support_metrics(est, truth, SupportScope::OffDiagonalUpper);
        const auto m2 = support_metrics(perm * est * perm.transpose(), perm * truth * perm.transpose(),
                                        SupportScope::OffDiagonalUpper);
        CHECK(m1.tp == m2.tp);
        CHECK(m1.fp == m2.fp);
        CHECK(m1.tn == m2.tn);
        CHECK(m1.fn == m2.fn);
    }
}

TEST_CASE("score_matrices averages the per-condition metrics") {
    Rng rng(84);
    std::vector<Matrix> est, truth;
    for (int k = 0; k < 3; ++k) {
        truth.push_back(sparse_random(rng, 5, 4, 0.5) + Matrix::Constant(5, 4, 0.0));
        truth.back()(0, 0) = 1.0;
        est.push_back(sparse_random(rng, 5, 4, 0.5));
    }
    const auto s = score_matrices(est, truth);
    double tpr = 0.0, rf = 0.0;
    for (int k = 0; k < 3; ++k) {
        tpr += support_metrics(est[k], truth[k]).tpr / 3.0;
        rf += rel_frobenius(est[k], truth[k]) / 3.0;
    }
    CHECK(s.tpr == doctest::Approx(tpr));
    CHECK(s.rf == doctest::Approx(rf));
    CHECK(s.per_k.size() == 3);
    CHECK_THROWS_AS(score_matrices({est[0]}, truth), Error);
}

TEST_CASE("test_summary on a hand-built replication") {
    Matrix D = Matrix::Zero(3, 4);
    D(0, 1) = 1.0;
    D(0, 2) = -1.0;
    D(2, 3) = 1.0;
    const std::vector<TestReport> alt{report(0, {1, 3}, true, 4), report(1, {0}, true, 4), report(2, {}, false, 4)};
    const std::vector<TestReport> null{report(0, {}, false, 4), report(1, {}, true, 4), report(2, {}, false, 4),
                                       report(3, {}, false, 4)};
    const auto s = test_summary(alt, D, &null);
    CHECK(s.alt_rows == 2);
    CHECK(s.global_power == doctest::Approx(0.5));
    CHECK(s.pairwise_power == doctest::Approx(1.0 / 3.0));
    CHECK(s.fdr == doctest::Approx((0.5 + 1.0 + 0.0) / 3.0));
    CHECK(s.null_rows == 4);
    CHECK(s.global_size == doctest::Approx(0.25));
    CHECK(std::isnan(test_summary(alt, D).global_size));
}

TEST_CASE("aggregate uses the sample standard deviation") {
    const auto a = aggregate({1.0, 2.0, 3.0, 4.0});
    CHECK(a.mean == doctest::Approx(2.5));
    CHECK(a.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(a.count == 4);
    const auto one = aggregate({7.0});
    CHECK(one.mean == 7.0);
    CHECK(std::isnan(one.sd));
}
