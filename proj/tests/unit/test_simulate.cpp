#include <doctest.h>

#include <random>

#include "jmmle/errors.hpp"
#include "jmmle/simulate.hpp"

using namespace jmmle;

namespace {

SimConfig small_config(std::uint64_t seed) {
    SimConfig sc;
    sc.seed = seed;
    sc.p = 20;
    sc.q = 10;
    sc.n = 50;
    sc.K = 2;
    sc.structure = StructurePreset::IdenticalPairs;
    return sc;
}

}  // namespace

TEST_CASE("the engine is the standard mt19937_64") {
    std::mt19937_64 ref;
    ref.discard(9999);
    CHECK(ref() == 9981545732273789042ULL);
    std::mt19937_64 raw(5489);
    Rng rng(5489);
    CHECK(rng.uniform() == static_cast<double>(raw() >> 11) * 0x1.0p-53);
}

TEST_CASE("streams are deterministic and distinct") {
    CHECK(stream_seed(7, 1, 0) == stream_seed(7, 1, 0));
    CHECK(stream_seed(7, 1, 0) != stream_seed(7, 2, 0));
    CHECK(stream_seed(7, 1, 0) != stream_seed(7, 1, 1));
    CHECK(stream_seed(7, 1, 0) != stream_seed(8, 1, 0));
    Rng a(11), b(11);
    for (int t = 0; t < 100; ++t) CHECK(a.normal() == b.normal());
}

TEST_CASE("normal draws have the right first two moments") {
    Rng rng(12);
    double s = 0.0, ss = 0.0;
    const int n = 200000;
    for (int t = 0; t < n; ++t) {
        const double z = rng.normal();
        s += z;
        ss += z * z;
    }
    CHECK(std::abs(s / n) < 5.0 / std::sqrt(double(n)));
    CHECK(std::abs(ss / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("zero edge probability gives identity precision matrices") {
    Rng rng(13);
    const auto draw = gen_shared_precision(8, 3, PairPartitions{}, 0.0, rng);
    for (const auto& om : draw.omega) CHECK(om == Matrix::Identity(8, 8));
    for (const auto& e : draw.edges) CHECK(edge_count(e) == 0);
}

TEST_CASE("property: the eigen-shift rule puts the smallest eigenvalue at one") {
    for (int trial = 0; trial < 30; ++trial) {
        Rng rng(1400 + trial);
        const auto draw = gen_shared_precision(15, 2, PairPartitions{}, 0.2, rng);
        for (const auto& om : draw.omega) {
            CHECK(min_eigenvalue(om) == doctest::Approx(1.0).epsilon(1e-10));
            CHECK(is_symmetric(om, 0.0));
            CHECK((om.diagonal().array() == om(0, 0)).all());
        }
    }
}

TEST_CASE("property: the row-dominant rule gives diagonally dominant PD matrices") {
    for (int trial = 0; trial < 50; ++trial) {
        Rng rng(1500 + trial);
        const auto draw = gen_shared_precision(20, 3, PairPartitions{}, 0.25, rng, false, DiagonalRule::RowDominant);
        for (const auto& om : draw.omega) {
            CHECK(diagonal_dominance_margin(om) > 0.0);
            CHECK(min_eigenvalue(om) >= 1.0 - 1e-10);
        }
    }
}

TEST_CASE("shared groups share their support and off-support entries are exact zeros") {
    Rng rng(16);
    const int dim = 20;
    const auto draw = gen_shared_precision(dim, 5, structure_partitions(StructurePreset::FiveConditionBlocks, dim, 5), 0.3, rng);
    for (int a = 0; a < dim; ++a)
        for (int b = a + 1; b < dim; ++b) {
            const auto& e = draw.edges;
            if (a < dim / 2) {
                CHECK(e[0](a, b) == e[1](a, b));
                CHECK(e[2](a, b) == e[3](a, b));
            } else {
                CHECK(e[0](a, b) == e[2](a, b));
                CHECK(e[2](a, b) == e[4](a, b));
                CHECK(e[1](a, b) == e[3](a, b));
            }
            for (int k = 0; k < 5; ++k) CHECK((draw.omega[k](a, b) != 0.0) == e[k](a, b));
        }
    CHECK(block_partition(0, 15, 20) == KPartition{{0, 1}, {2, 3}, {4}});
    CHECK(block_partition(12, 15, 20) == KPartition{{0, 2, 4}, {1, 3}});
}

TEST_CASE("precision_to_cov matches the 2 x 2 closed form") {
    Matrix om(2, 2);
    om << 2.0, -0.6, -0.6, 1.5;
    const Matrix s = precision_to_cov(om);
    CHECK(s(0, 0) == 1.0);
    CHECK(s(1, 1) == 1.0);
    CHECK(s(0, 1) == doctest::Approx(0.6 / std::sqrt(3.0)).epsilon(1e-12));
    CHECK(s(1, 0) == s(0, 1));
}

TEST_CASE("the estimation design has the expected number of non-zero coefficients") {
    SimConfig sc;
    sc.seed = 17;
    const auto sim = gen_estimation_dataset(sc);
    const double pi = sc.pi, cells = double(sc.p) * sc.q;
    const double sd = std::sqrt(cells * pi * (1 - pi));
    for (const auto& b : sim.truth.B0) {
        const double nz = (b.array() != 0.0).count();
        CHECK(std::abs(nz - cells * pi) <= 4.0 * sd);
        for (Eigen::Index a = 0; a < b.size(); ++a)
            if (b(a) != 0.0) CHECK((std::abs(b(a)) >= 0.5 && std::abs(b(a)) <= 1.0));
    }
    CHECK(sim.data.K() == 5);
    CHECK(sim.data.n() == 100);
}

TEST_CASE("the testing design has D = B2 - B1 with about 20% non-zeros") {
    SimConfig sc = small_config(18);
    sc.p = 60;
    sc.q = 30;
    const auto t = gen_testing_dataset(sc);
    const Matrix& D = t.alt.truth.D;
    CHECK((D - (t.alt.truth.B0[1] - t.alt.truth.B0[0])).cwiseAbs().maxCoeff() <= 1e-15);
    const double cells = 60.0 * 30.0, nz = (D.array() != 0.0).count();
    CHECK(std::abs(nz - 0.2 * cells) <= 4.0 * std::sqrt(cells * 0.2 * 0.8));
    CHECK((D.array().abs() == 1.0 || D.array() == 0.0).all());
    CHECK(t.null.truth.B0[0] == t.null.truth.B0[1]);
    CHECK(t.null.truth.B0[0] == t.alt.truth.B0[0]);
    CHECK(t.null.truth.D.isZero());
    CHECK(t.null.data.X(0) != t.alt.data.X(0));
}

TEST_CASE("sampled columns are centered and match the target covariance") {
    SimConfig sc = small_config(19);
    sc.n = 5000;
    const auto sim = gen_estimation_dataset(sc);
    const double tol = 5.0 * std::sqrt(std::log(double(sc.p)) / sc.n);
    for (int k = 0; k < 2; ++k) {
        CHECK(sim.data.X(k).colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
        const Matrix S = sim.data.X(k).transpose() * sim.data.X(k) / sc.n;
        CHECK((S - sim.truth.SigmaX0[k]).cwiseAbs().maxCoeff() < tol);
    }
}

TEST_CASE("misspecification zeros only remove entries") {
    SimConfig sc = small_config(20);
    const auto base = gen_estimation_dataset(sc);
    sc.within_group_zero = 0.5;
    const auto mis = gen_estimation_dataset(sc);
    for (int k = 0; k < 2; ++k) {
        CHECK(((mis.truth.B0[k].array() == 0.0) || (mis.truth.B0[k].array() == base.truth.B0[k].array())).all());
        CHECK((mis.truth.B0[k].array() != 0.0).count() < (base.truth.B0[k].array() != 0.0).count());
    }
    CHECK(mis.truth.OmegaY0[0] == base.truth.OmegaY0[0]);
}

TEST_CASE("datasets are reproducible from the seed") {
    const auto a = gen_estimation_dataset(small_config(21));
    const auto b = gen_estimation_dataset(small_config(21));
    const auto c = gen_estimation_dataset(small_config(22));
    for (int k = 0; k < 2; ++k) {
        CHECK(a.data.X(k) == b.data.X(k));
        CHECK(a.data.Y(k) == b.data.Y(k));
        CHECK(a.truth.B0[k] == b.truth.B0[k]);
    }
    CHECK(a.data.X(0) != c.data.X(0));
}

TEST_CASE("bad configurations name the field") {
    SimConfig sc = small_config(23);
    sc.diff_zero = 0.5;
    try {
        validate_sim_config(sc);
        FAIL("expected a Config error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Config);
        CHECK(std::string(e.what()).find("difference") != std::string::npos);
    }
    sc = small_config(23);
    sc.pi_x = 1.5;
    CHECK_THROWS_WITH_AS(validate_sim_config(sc), doctest::Contains("pi_x"), Error);
    CHECK(parse_structure(to_string(StructurePreset::IdenticalPairs)) == StructurePreset::IdenticalPairs);
    CHECK(parse_diagonal_rule(to_string(DiagonalRule::RowDominant)) == DiagonalRule::RowDominant);
}
