#include "jmmle/simulate.hpp"

#include <cmath>
#include <string>

#include "jmmle/errors.hpp"

namespace jmmle {

namespace {

enum Stream : std::uint64_t {
    kOmegaX = 1,
    kOmegaY = 2,
    kCoef = 3,
    kX = 4,
    kE = 5,
    kDiff = 6,
    kNullX = 7,
    kNullE = 8,
    kMisspec = 9,
};

double draw_value(Rng& rng, bool literal) {
    if (literal) return rng.uniform(-1.0, 1.0);
    const double mag = rng.uniform(0.5, 1.0);
    return rng.uniform() < 0.5 ? -mag : mag;
}

Matrix gaussian_sample(int n, const Matrix& sigma, Rng& rng) {
    const auto dim = sigma.rows();
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) fail(ErrorKind::NotPD, "sampling covariance is not PD");
    Matrix Z(n, dim);
    for (int r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < dim; ++c) Z(r, c) = rng.normal();
    return Z * llt.matrixL().transpose();
}

struct LayerTruth {
    std::vector<Matrix> omega0, sigma0;
    std::vector<Adjacency> edges;
};

LayerTruth make_layer(int dim, int K, const PairPartitions& parts, double pi, std::uint64_t seed,
                      const SimConfig& cfg) {
    Rng rng(seed);
    auto draw = gen_shared_precision(dim, K, parts, pi, rng, cfg.literal_interval, cfg.diagonal);
    LayerTruth t;
    for (int k = 0; k < K; ++k) {
        Matrix sigma = precision_to_cov(draw.omega[k]);
        // The inverse of the rescaled covariance is D^{1/2} Omega D^{1/2} with
        // D = diag(Omega^{-1}); forming it directly keeps the zeros exact.
        const Matrix w = draw.omega[k].llt().solve(Matrix::Identity(dim, dim));
        const Vector root = w.diagonal().cwiseSqrt();
        t.omega0.push_back(root.asDiagonal() * draw.omega[k] * root.asDiagonal());
        t.sigma0.push_back(std::move(sigma));
    }
    t.edges = std::move(draw.edges);
    return t;
}

PairPartitions layer_partitions(const SimConfig& cfg, int dim, bool upper) {
    if (cfg.structure == StructurePreset::Custom) return upper ? cfg.custom_groups->gx : cfg.custom_groups->gy;
    return structure_partitions(cfg.structure, dim, cfg.K);
}

GroupStructure dataset_groups(const SimConfig& cfg) {
    if (cfg.structure == StructurePreset::Custom) return *cfg.custom_groups;
    GroupStructure gs;
    gs.gx = structure_partitions(cfg.structure, cfg.p, cfg.K);
    gs.gy = structure_partitions(cfg.structure, cfg.q, cfg.K);
    gs.h = CoefficientGroups{};
    return gs;
}

SimTruth base_truth(const SimConfig& cfg, LayerTruth&& x, LayerTruth&& y) {
    SimTruth t;
    t.OmegaX0 = std::move(x.omega0);
    t.SigmaX0 = std::move(x.sigma0);
    t.EdgesX0 = std::move(x.edges);
    t.OmegaY0 = std::move(y.omega0);
    t.SigmaY0 = std::move(y.sigma0);
    t.EdgesY0 = std::move(y.edges);
    t.seed = cfg.seed;
    t.pi_x = cfg.pi_x;
    t.pi_y = cfg.pi_y;
    t.pi = cfg.pi;
    return t;
}

MultiDataset sample_data(const SimConfig& cfg, const SimTruth& t, std::uint64_t x_stream, std::uint64_t e_stream) {
    std::vector<Matrix> X, Y;
    for (int k = 0; k < cfg.K; ++k) {
        Rng rx(stream_seed(cfg.seed, x_stream, k));
        Rng re(stream_seed(cfg.seed, e_stream, k));
        Matrix xk = gaussian_sample(cfg.n, t.SigmaX0[k], rx);
        Matrix ek = gaussian_sample(cfg.n, t.SigmaY0[k], re);
        Y.push_back(xk * t.B0[k] + ek);
        X.push_back(std::move(xk));
    }
    return MultiDataset::from_matrices(std::move(X), std::move(Y));
}

}  // namespace

std::string_view to_string(StructurePreset s) noexcept {
    switch (s) {
        case StructurePreset::FiveConditionBlocks: return "blocks";
        case StructurePreset::IdenticalPairs: return "identical-pairs";
        case StructurePreset::Custom: return "custom";
    }
    return "?";
}

StructurePreset parse_structure(std::string_view name) {
    if (name == "blocks") return StructurePreset::FiveConditionBlocks;
    if (name == "identical-pairs") return StructurePreset::IdenticalPairs;
    if (name == "custom") return StructurePreset::Custom;
    fail(ErrorKind::Config, "unknown structure preset '" + std::string(name) + "'");
}

std::string_view to_string(DiagonalRule r) noexcept {
    return r == DiagonalRule::ShiftMinEigen ? "shift-min-eigen" : "row-dominant";
}

DiagonalRule parse_diagonal_rule(std::string_view name) {
    if (name == "shift-min-eigen") return DiagonalRule::ShiftMinEigen;
    if (name == "row-dominant") return DiagonalRule::RowDominant;
    fail(ErrorKind::Config, "unknown diagonal rule '" + std::string(name) + "'");
}

void validate_sim_config(const SimConfig& cfg) {
    auto prob = [](double v, const char* name) {
        require(v >= 0.0 && v <= 1.0, ErrorKind::Config, std::string(name) + " must lie in [0, 1]");
    };
    require(cfg.p >= 1 && cfg.q >= 1 && cfg.n >= 1 && cfg.K >= 1, ErrorKind::Config, "p, q, n and K must be >= 1");
    prob(cfg.pi_x, "pi_x");
    prob(cfg.pi_y, "pi_y");
    prob(cfg.pi, "pi");
    prob(cfg.within_group_zero, "within_group_zero");
    prob(cfg.diff_minus, "diff_minus");
    prob(cfg.diff_plus, "diff_plus");
    prob(cfg.diff_zero, "diff_zero");
    require(std::abs(cfg.diff_minus + cfg.diff_plus + cfg.diff_zero - 1.0) < 1e-9, ErrorKind::Config,
            "difference probabilities must sum to 1");
    if (cfg.structure == StructurePreset::Custom) {
        require(cfg.custom_groups.has_value(), ErrorKind::Config, "custom structure needs explicit groups");
        validate_groups(*cfg.custom_groups, cfg.p, cfg.q, cfg.K);
    }
}

KPartition block_partition(int a, int b, int dim) {
    const int half = dim / 2;
    if (a < half || b < half) return {{0, 1}, {2, 3}, {4}};
    return {{0, 2, 4}, {1, 3}};
}

PairPartitions structure_partitions(StructurePreset s, int dim, int K) {
    PairPartitions parts(GroupPreset::AllShared, true);
    if (s != StructurePreset::FiveConditionBlocks || K != 5) return parts;
    require(dim % 2 == 0, ErrorKind::Config, "the block preset needs an even dimension, got " + std::to_string(dim));
    for (int a = 0; a < dim; ++a)
        for (int b = a + 1; b < dim; ++b) parts.set(a, b, block_partition(a, b, dim));
    return parts;
}

PrecisionDraw gen_shared_precision(int dim, int K, const PairPartitions& parts, double pi, Rng& rng,
                                   bool literal_interval, DiagonalRule rule) {
    require(dim >= 1 && K >= 1, ErrorKind::InvalidArgument, "dimension and K must be positive");
    require(pi >= 0.0 && pi <= 1.0, ErrorKind::InvalidArgument, "pi must lie in [0, 1]");
    PrecisionDraw out;
    out.omega.assign(K, Matrix::Zero(dim, dim));
    out.edges.assign(K, Adjacency::Constant(dim, dim, false));
    for (int a = 0; a < dim; ++a)
        for (int b = a + 1; b < dim; ++b)
            for (const auto& group : parts.partition(a, b, K)) {
                if (!rng.bernoulli(pi)) continue;
                for (int k : group) {
                    const double v = draw_value(rng, literal_interval);
                    out.omega[k](a, b) = out.omega[k](b, a) = v;
                    out.edges[k](a, b) = out.edges[k](b, a) = true;
                }
            }
    for (int k = 0; k < K; ++k) {
        Matrix& om = out.omega[k];
        double shift = std::abs(std::min(0.0, min_eigenvalue(om)));
        if (rule == DiagonalRule::RowDominant) shift = std::max(shift, om.cwiseAbs().rowwise().sum().maxCoeff());
        om.diagonal().setConstant(1.0 + shift);
    }
    return out;
}

Matrix precision_to_cov(const Matrix& omega) {
    require(omega.rows() == omega.cols(), ErrorKind::ShapeMismatch, "precision must be square");
    Eigen::LLT<Matrix> llt(omega);
    if (llt.info() != Eigen::Success) fail(ErrorKind::NotPD, "precision matrix is not PD");
    const Matrix w = llt.solve(Matrix::Identity(omega.rows(), omega.cols()));
    const Vector inv = w.diagonal().cwiseSqrt().cwiseInverse();
    Matrix sigma = inv.asDiagonal() * w * inv.asDiagonal();
    sigma = 0.5 * (sigma + sigma.transpose()).eval();
    sigma.diagonal().setOnes();
    return sigma;
}

SimDataset gen_estimation_dataset(const SimConfig& cfg) {
    validate_sim_config(cfg);
    auto x = make_layer(cfg.p, cfg.K, layer_partitions(cfg, cfg.p, true), cfg.pi_x,
                        stream_seed(cfg.seed, kOmegaX), cfg);
    auto y = make_layer(cfg.q, cfg.K, layer_partitions(cfg, cfg.q, false), cfg.pi_y,
                        stream_seed(cfg.seed, kOmegaY), cfg);
    SimTruth truth = base_truth(cfg, std::move(x), std::move(y));
    GroupStructure gs = dataset_groups(cfg);

    truth.B0.assign(cfg.K, Matrix::Zero(cfg.p, cfg.q));
    Rng rb(stream_seed(cfg.seed, kCoef));
    Rng rz(stream_seed(cfg.seed, kMisspec));
    if (gs.h.is_explicit()) {
        for (const auto& g : gs.h.explicit_groups) {
            if (!rb.bernoulli(cfg.pi)) continue;
            for (const auto& c : g) truth.B0[c.k](c.i, c.j) = draw_value(rb, cfg.literal_interval);
        }
    } else {
        for (int j = 0; j < cfg.q; ++j)
            for (int i = 0; i < cfg.p; ++i)
                for (const auto& part : gs.h.by_entry.partition(i, j, cfg.K)) {
                    if (!rb.bernoulli(cfg.pi)) continue;
                    for (int k : part) truth.B0[k](i, j) = draw_value(rb, cfg.literal_interval);
                }
    }
    if (cfg.within_group_zero > 0.0)
        for (int k = 0; k < cfg.K; ++k)
            for (int j = 0; j < cfg.q; ++j)
                for (int i = 0; i < cfg.p; ++i)
                    if (truth.B0[k](i, j) != 0.0 && rz.bernoulli(cfg.within_group_zero)) truth.B0[k](i, j) = 0.0;

    auto data = sample_data(cfg, truth, kX, kE);
    return {std::move(data), std::move(truth), std::move(gs)};
}

TestingDataset gen_testing_dataset(SimConfig cfg) {
    cfg.K = 2;
    if (cfg.structure == StructurePreset::FiveConditionBlocks) cfg.structure = StructurePreset::IdenticalPairs;
    validate_sim_config(cfg);
    auto x = make_layer(cfg.p, cfg.K, layer_partitions(cfg, cfg.p, true), cfg.pi_x,
                        stream_seed(cfg.seed, kOmegaX), cfg);
    auto y = make_layer(cfg.q, cfg.K, layer_partitions(cfg, cfg.q, false), cfg.pi_y,
                        stream_seed(cfg.seed, kOmegaY), cfg);
    SimTruth truth = base_truth(cfg, std::move(x), std::move(y));
    GroupStructure gs = dataset_groups(cfg);

    Matrix b1 = Matrix::Zero(cfg.p, cfg.q);
    Rng rb(stream_seed(cfg.seed, kCoef));
    for (int j = 0; j < cfg.q; ++j)
        for (int i = 0; i < cfg.p; ++i)
            if (rb.bernoulli(cfg.pi)) b1(i, j) = draw_value(rb, cfg.literal_interval);
    Matrix D = Matrix::Zero(cfg.p, cfg.q);
    Rng rd(stream_seed(cfg.seed, kDiff));
    for (int j = 0; j < cfg.q; ++j)
        for (int i = 0; i < cfg.p; ++i) {
            const double u = rd.uniform();
            if (u < cfg.diff_minus)
                D(i, j) = -1.0;
            else if (u < cfg.diff_minus + cfg.diff_plus)
                D(i, j) = 1.0;
        }

    SimTruth null_truth = truth;
    null_truth.B0 = {b1, b1};
    null_truth.D = Matrix::Zero(cfg.p, cfg.q);
    truth.B0 = {b1, b1 + D};
    truth.D = D;

    auto alt_data = sample_data(cfg, truth, kX, kE);
    auto null_data = sample_data(cfg, null_truth, kNullX, kNullE);
    TestingDataset out{{std::move(alt_data), std::move(truth), gs}, {std::move(null_data), std::move(null_truth), gs}};
    return out;
}

}  // namespace jmmle
