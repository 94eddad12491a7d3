#include <benchmark/benchmark.h>

#include "jmmle/rng.hpp"
#include "jmmle/solvers.hpp"

using namespace jmmle;

namespace {

Matrix normals(Rng& rng, Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index a = 0; a < m.size(); ++a) m(a) = rng.normal();
    return m;
}

GroupedLSProblem shared_groups(int n, int p, int K, double penalty) {
    Rng rng(1);
    GroupedLSProblem prob;
    Vector truth = Vector::Zero(p);
    for (int i = 0; i < p; i += 10) truth(i) = 1.0;
    for (int k = 0; k < K; ++k) {
        Matrix X = normals(rng, n, p);
        prob.blocks.push_back({X, X * truth + normals(rng, n, 1).col(0), 1.0});
    }
    for (int i = 0; i < p; ++i) {
        std::vector<int> g;
        for (int k = 0; k < K; ++k) g.push_back(k * p + i);
        prob.groups.push_back(g);
    }
    prob.scale = 1.0 / n;
    prob.penalty = penalty;
    prob.sqrt_group_weights = true;
    return prob;
}

}  // namespace

static void BM_GroupLassoBcd(benchmark::State& state) {
    const auto prob = shared_groups(100, static_cast<int>(state.range(0)), 5, 0.2);
    for (auto _ : state) benchmark::DoNotOptimize(group_lasso_bcd(prob).coef.data());
}
BENCHMARK(BM_GroupLassoBcd)->Arg(30)->Arg(60)->Arg(120)->Unit(benchmark::kMillisecond);

static void BM_LassoCd(benchmark::State& state) {
    Rng rng(2);
    const int p = static_cast<int>(state.range(0));
    const Matrix X = normals(rng, 100, p);
    const Vector y = X.leftCols(5).rowwise().sum() + normals(rng, 100, 1).col(0);
    for (auto _ : state) benchmark::DoNotOptimize(lasso_cd(X, y, 20.0).coef.data());
}
BENCHMARK(BM_LassoCd)->Arg(60)->Arg(240)->Unit(benchmark::kMicrosecond);

static void BM_RestrictedGlasso(benchmark::State& state) {
    Rng rng(3);
    const int q = static_cast<int>(state.range(0));
    const Matrix Z = normals(rng, 200, q);
    PrecisionProblem prob;
    prob.S = Z.transpose() * Z / 200.0;
    prob.support = Adjacency::Constant(q, q, false);
    for (int a = 0; a + 1 < q; ++a) prob.support(a, a + 1) = prob.support(a + 1, a) = true;
    for (int a = 0; a + 5 < q; a += 5) prob.support(a, a + 5) = prob.support(a + 5, a) = true;
    for (auto _ : state) benchmark::DoNotOptimize(restricted_glasso(prob).omega.data());
}
BENCHMARK(BM_RestrictedGlasso)->Arg(30)->Arg(60)->Unit(benchmark::kMicrosecond);
