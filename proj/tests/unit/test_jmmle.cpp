#include <doctest.h>

#include "jmmle/errors.hpp"
#include "jmmle/jmmle.hpp"
#include "jmmle/metrics.hpp"
#include "jmmle/simulate.hpp"
#include "support/oracles.hpp"

using namespace jmmle;
namespace jt = jmmle::testing;

namespace {

MultiDataset random_regression(Rng& rng, int n, int p, int q, int K, double signal = 1.0, double density = 0.2) {
    std::vector<Matrix> X, Y;
    Matrix B = Matrix::Zero(p, q);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < q; ++j)
            if (rng.bernoulli(density)) B(i, j) = signal * (rng.bernoulli(0.5) ? 1.0 : -1.0);
    for (int k = 0; k < K; ++k) {
        X.push_back(jt::gaussian_matrix(rng, n, p));
        Y.push_back(X.back() * B + jt::gaussian_matrix(rng, n, q));
    }
    return MultiDataset::from_matrices(std::move(X), std::move(Y));
}

std::vector<Matrix> random_theta(Rng& rng, int q, int K, double scale) {
    std::vector<Matrix> th;
    for (int j = 0; j < q; ++j) th.push_back(scale * jt::gaussian_matrix(rng, q - 1, K));
    return th;
}

double max_abs(const std::vector<Matrix>& ms) {
    double m = 0.0;
    for (const auto& a : ms) m = std::max(m, a.cwiseAbs().maxCoeff());
    return m;
}

}  // namespace

TEST_CASE("default grids follow the documented multipliers") {
    const auto lg = default_lambda_grid(60, 100);
    const double base = std::sqrt(std::log(60.0) / 100);
    REQUIRE(lg.size() == 8);
    CHECK(lg.front() == doctest::Approx(0.4 * base));
    CHECK(lg.back() == doctest::Approx(1.8 * base));
    const auto gg = default_gamma_grid(30, 100);
    REQUIRE(gg.size() == 8);
    CHECK(gg.front() == doctest::Approx(0.3 * std::sqrt(std::log(30.0) / 100)));
}

TEST_CASE("t_matrices places minus theta below a unit diagonal") {
    std::vector<Matrix> th(3, Matrix::Zero(2, 1));
    th[0](0, 0) = 0.5;   // node 1 on node 2
    th[2](1, 0) = -0.25; // node 3 on node 2
    const Matrix T = t_matrices(th, 1)[0];
    Matrix expect = Matrix::Identity(3, 3);
    expect(1, 0) = -0.5;
    expect(1, 2) = 0.25;
    CHECK(T == expect);
}

TEST_CASE("init_B is the column-wise lasso at the scaled penalty") {
    Rng rng(51);
    const auto data = random_regression(rng, 40, 8, 3, 2);
    const double lambda = 0.2;
    const auto B = init_B(data, lambda);
    for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 3; ++j) {
            const auto ref = lasso_cd(data.X(k), data.Y(k).col(j), 2.0 * 40 * lambda);
            CHECK((B[k].col(j) - ref.coef).cwiseAbs().maxCoeff() <= 1e-9);
        }
    CHECK(max_abs(init_B(data, 1e4)) == 0.0);
}

TEST_CASE("update_B with Theta = 0 and singleton groups decouples into lassos") {
    Rng rng(52);
    const auto data = random_regression(rng, 50, 6, 4, 2);
    const std::vector<Matrix> theta(4, Matrix::Zero(3, 2));
    UpdateBOptions opts;
    opts.refit = false;
    opts.solver.tol = 1e-12;
    opts.solver.kkt_tol = 1e-10;
    const auto upd = update_B(data, theta, GroupStructure::singleton().h, 0.15, opts);
    SolverOptions tight;
    tight.tol = 1e-12;
    tight.kkt_tol = 1e-10;
    const auto B0 = init_B(data, 0.15, PenaltyScaling::GroupSizeAdjusted, tight);
    for (int k = 0; k < 2; ++k) CHECK((upd.penalized[k] - B0[k]).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(upd.converged);
}

TEST_CASE("property: update_B satisfies the coupled KKT conditions") {
    for (int trial = 0; trial < 15; ++trial) {
        Rng rng(5300 + trial);
        const int n = jt::uniform_int(rng, 20, 60), p = jt::uniform_int(rng, 3, 8), q = jt::uniform_int(rng, 2, 5);
        const int K = jt::uniform_int(rng, 1, 3);
        const auto data = random_regression(rng, n, p, q, K);
        const auto theta = random_theta(rng, q, K, 0.2);
        const double lambda = rng.uniform(0.05, 0.4);
        UpdateBOptions opts;
        opts.refit = false;
        opts.solver.tol = 1e-12;
        opts.solver.kkt_tol = 1e-9;
        opts.solver.max_sweeps = 5000;
        const auto upd = update_B(data, theta, CoefficientGroups{}, lambda, opts);
        const auto T = t_matrices(theta, K);
        const int pq = p * q;
        Vector grad(pq * K), beta(pq * K);
        for (int k = 0; k < K; ++k) {
            const Matrix G = -(2.0 / n) * data.X(k).transpose() * (data.Y(k) - data.X(k) * upd.penalized[k]) * T[k] *
                             T[k].transpose();
            grad.segment(k * pq, pq) = Eigen::Map<const Vector>(G.data(), pq);
            beta.segment(k * pq, pq) = Eigen::Map<const Vector>(upd.penalized[k].data(), pq);
        }
        std::vector<std::vector<int>> groups;
        for (int e = 0; e < pq; ++e) {
            std::vector<int> g;
            for (int k = 0; k < K; ++k) g.push_back(k * pq + e);
            groups.push_back(g);
        }
        const std::vector<double> w(groups.size(), 2.0 * std::sqrt(double(K)));
        CAPTURE(trial);
        CHECK(jt::group_kkt_violation(grad, beta, groups, w, lambda) <= 1e-5);
    }
}

TEST_CASE("shared groups give a common support and the refit is least squares on it") {
    Rng rng(53);
    const auto data = random_regression(rng, 60, 10, 4, 3);
    const auto theta = random_theta(rng, 4, 3, 0.1);
    const auto upd = update_B(data, theta, CoefficientGroups{}, 0.1);
    for (int k = 1; k < 3; ++k)
        CHECK((upd.penalized[k].array() != 0.0).matrix() == (upd.penalized[0].array() != 0.0).matrix());
    for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 4; ++j) {
            std::vector<int> supp;
            for (int i = 0; i < 10; ++i)
                if (upd.penalized[k](i, j) != 0.0) supp.push_back(i);
            const Vector ref = jt::svd_refit(data.X(k), data.Y(k).col(j), supp);
            if (supp.empty())
                CHECK(upd.B[k].col(j).isZero());
            else
                CHECK((upd.B[k].col(j) - ref).cwiseAbs().maxCoeff() <= 1e-8);
        }
}

TEST_CASE("compute_omega_y with empty neighborhoods inverts the residual variances") {
    Rng rng(54);
    const auto data = random_regression(rng, 40, 5, 3, 2);
    const std::vector<Matrix> B(2, Matrix::Zero(5, 3));
    const auto om = compute_omega_y(data, B, std::vector<Matrix>(3, Matrix::Zero(2, 2)));
    for (int k = 0; k < 2; ++k) {
        const Matrix S = data.Y(k).transpose() * data.Y(k) / 40.0;
        CHECK(edge_count(om.edges[k]) == 0);
        for (int j = 0; j < 3; ++j) CHECK(om.Omega[k](j, j) == doctest::Approx(1.0 / S(j, j)).epsilon(1e-8));
        CHECK(om.Omega[k].isDiagonal());
    }
}

TEST_CASE("bic_gamma and hbic_lambda match their formulas") {
    Rng rng(55);
    const int n = 80, p = 6, q = 5;
    const auto data = random_regression(rng, n, p, q, 2);
    const auto B = init_B(data, 0.2);
    const auto g = bic_gamma(data, B, PairPartitions{}, 0.05);
    double nll = 0.0, edges = 0.0;
    for (int k = 0; k < 2; ++k) {
        const Matrix E = data.Y(k) - data.X(k) * B[k];
        nll += jt::reference_nll(E.transpose() * E / n, g.omega.Omega[k]);
        for (int a = 0; a < q; ++a)
            for (int b = a + 1; b < q; ++b) edges += g.omega.edges[k](a, b);
    }
    CHECK(g.bic == doctest::Approx(nll + std::log(double(n)) / n * edges).epsilon(1e-10));

    double loss = 0.0, count = edges;
    for (int k = 0; k < 2; ++k) {
        const Matrix E = data.Y(k) - data.X(k) * B[k];
        for (int j = 0; j < q; ++j) {
            Vector r = E.col(j);
            for (int s = 0; s < q - 1; ++s) r -= g.theta.coef[j](s, k) * E.col(neighbor_of(j, s));
            loss += r.squaredNorm() / n;
        }
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < q; ++j) count += B[k](i, j) != 0.0;
    }
    const double expect = loss + std::log(std::log(double(n))) * std::log(double(p * q)) / n * count;
    CHECK(hbic_lambda(data, B, g.theta.coef, g.omega.edges) == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("select_gamma returns the minimum BIC with ties to the larger gamma") {
    Rng rng(56);
    const auto data = random_regression(rng, 60, 5, 6, 2);
    const auto B = init_B(data, 0.2);
    const std::vector<double> grid{0.02, 0.05, 0.1, 0.2};
    const auto sel = select_gamma(data, B, PairPartitions{}, grid);
    double best = std::numeric_limits<double>::infinity(), arg = 0.0;
    for (double gm : {0.2, 0.1, 0.05, 0.02}) {
        const double b = bic_gamma(data, B, PairPartitions{}, gm).bic;
        if (b < best - 1e-12) {
            best = b;
            arg = gm;
        }
    }
    CHECK(sel.gamma == arg);
    CHECK(sel.bic == doctest::Approx(best).epsilon(1e-8));
    const auto tie = select_gamma(data, B, PairPartitions{}, {50.0, 100.0});
    CHECK(tie.gamma == 100.0);
}

TEST_CASE("a huge lambda gives an all-zero B") {
    Rng rng(57);
    const auto data = random_regression(rng, 40, 6, 4, 2);
    JmmleConfig cfg;
    cfg.lambda_grid = {1e4};
    cfg.fit_upper = false;
    const auto est = fit(data, GroupStructure{}, cfg);
    CHECK(max_abs(est.B) == 0.0);
    CHECK(est.lambda_selected == 1e4);
}

TEST_CASE("identical conditions give identical estimates") {
    Rng rng(58);
    const Matrix X = jt::gaussian_matrix(rng, 50, 6);
    const Matrix Y = X.leftCols(3) + jt::gaussian_matrix(rng, 50, 3);
    const auto data = MultiDataset::from_matrices({X, X}, {Y, Y});
    JmmleConfig cfg;
    cfg.fit_upper = false;
    const auto est = fit(data, GroupStructure{}, cfg);
    CHECK(est.B[0] == est.B[1]);
    CHECK(est.OmegaY[0] == est.OmegaY[1]);
}

TEST_CASE("independent errors with many samples give near-empty lower-layer neighborhoods") {
    Rng rng(59);
    const auto data = random_regression(rng, 2000, 8, 6, 2);
    JmmleConfig cfg;
    cfg.fit_upper = false;
    const auto est = fit(data, GroupStructure{}, cfg);
    CHECK(max_abs(est.Theta) < 0.1);
    for (const auto& om : est.OmegaY) {
        Matrix off = om;
        off.diagonal().setZero();
        CHECK(off.cwiseAbs().maxCoeff() < 0.1);
    }
}

TEST_CASE("no signal gives a sparse B") {
    Rng rng(60);
    const auto data = random_regression(rng, 100, 20, 10, 2, 0.0);
    JmmleConfig cfg;
    cfg.fit_upper = false;
    const auto est = fit(data, GroupStructure{}, cfg);
    double nz = 0.0;
    for (const auto& b : est.B) nz += (b.array() != 0.0).count();
    CHECK(nz / (2 * 20 * 10) < 0.05);
}

TEST_CASE("full mode with a fixed gamma and no refit never increases the objective") {
    SimConfig sc;
    sc.seed = 61;
    sc.K = 2;
    sc.p = 15;
    sc.q = 8;
    sc.structure = StructurePreset::IdenticalPairs;
    const auto sim = gen_estimation_dataset(sc);
    JmmleConfig cfg;
    cfg.one_step = false;
    cfg.refit_inside = false;
    cfg.reselect_gamma = false;
    cfg.fit_upper = false;
    cfg.max_outer = 10;
    cfg.solver.tol = 1e-10;
    cfg.solver.kkt_tol = 1e-9;
    const auto lf = fit_lambda(sim.data, sim.groups, cfg, default_lambda_grid(sc.p, sc.n)[3]);
    REQUIRE(lf.objective_trace.size() >= 3);
    for (std::size_t a = 1; a < lf.objective_trace.size(); ++a)
        CHECK(lf.objective_trace[a] <= lf.objective_trace[a - 1] * (1.0 + 1e-8) + 1e-12);
}

TEST_CASE("fits are deterministic and independent of the worker count") {
    SimConfig sc;
    sc.seed = 62;
    sc.K = 2;
    sc.p = 12;
    sc.q = 6;
    sc.structure = StructurePreset::IdenticalPairs;
    const auto sim = gen_estimation_dataset(sc);
    JmmleConfig cfg;
    const auto a = fit(sim.data, sim.groups, cfg);
    cfg.workers = 3;
    const auto b = fit(sim.data, sim.groups, cfg);
    for (int k = 0; k < 2; ++k) {
        CHECK(a.B[k] == b.B[k]);
        CHECK(a.OmegaY[k] == b.OmegaY[k]);
        CHECK(a.OmegaX[k] == b.OmegaX[k]);
    }
    CHECK(a.lambda_selected == b.lambda_selected);
    CHECK(a.gamma_selected == b.gamma_selected);
}

TEST_CASE("fit rejects group structures that do not match the data") {
    Rng rng(63);
    const auto data = random_regression(rng, 30, 4, 3, 2);
    GroupStructure gs;
    gs.gy.set(0, 5, {{0, 1}});
    CHECK_THROWS_AS(fit(data, gs), Error);
    JmmleConfig cfg;
    cfg.max_outer = 0;
    CHECK_THROWS_AS(fit(data, GroupStructure{}, cfg), Error);
}
