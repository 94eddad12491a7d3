#include "jmmle/jsem.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "bcd_engine.hpp"
#include "jmmle/errors.hpp"

namespace jmmle {

namespace {

void check_covariances(const std::vector<Matrix>& S) {
    require(!S.empty(), ErrorKind::InvalidArgument, "at least one condition is required");
    const auto dim = S.front().rows();
    for (std::size_t k = 0; k < S.size(); ++k) {
        require(S[k].rows() == dim && S[k].cols() == dim, ErrorKind::ShapeMismatch,
                "covariance " + std::to_string(k + 1) + " has the wrong shape");
        require(S[k].allFinite(), ErrorKind::NonFinite, "covariance " + std::to_string(k + 1) + " is not finite");
    }
}

}  // namespace

NeighborhoodFit grouped_neighborhoods(const std::vector<Matrix>& S, const PairPartitions& parts, double penalty,
                                      const NeighborhoodOptions& opts, const std::vector<Matrix>* warm) {
    check_covariances(S);
    require(penalty >= 0.0, ErrorKind::InvalidArgument, "penalty must be non-negative");
    const int K = static_cast<int>(S.size());
    const int dim = static_cast<int>(S.front().rows());
    const int m = dim - 1;
    if (warm)
        require(static_cast<int>(warm->size()) == dim, ErrorKind::ShapeMismatch, "warm start has the wrong node count");

    NeighborhoodFit fit;
    fit.coef.assign(dim, Matrix::Zero(m, K));
    if (m == 0) return fit;

    std::vector<int> rest(m);
    for (int d = 0; d < dim; ++d) {
        for (int r = 0; r < m; ++r) rest[r] = neighbor_of(d, r);

        std::vector<detail::GramBlock> blocks(K);
        for (int k = 0; k < K; ++k) {
            blocks[k].gram = 2.0 * S[k](rest, rest);
            blocks[k].lin = 2.0 * S[k](rest, d);
            blocks[k].yy = S[k](d, d);
        }
        std::vector<std::vector<int>> groups;
        std::vector<double> weights;
        for (int r = 0; r < m; ++r) {
            for (const auto& part : parts.partition(d, rest[r], K)) {
                std::vector<int> g;
                g.reserve(part.size());
                for (int k : part) g.push_back(k * m + r);
                weights.push_back(group_penalty_weight(opts.scaling, g.size()));
                groups.push_back(std::move(g));
            }
        }
        std::optional<Vector> init;
        if (warm) {
            const Matrix& w = (*warm)[d];
            require(w.rows() == m && w.cols() == K, ErrorKind::ShapeMismatch, "warm start block has the wrong shape");
            init = Eigen::Map<const Vector>(w.data(), w.size());
        }
        auto res = detail::group_lasso_gram(std::move(blocks), groups, penalty, weights, init, opts.solver);
        fit.coef[d] = Eigen::Map<const Matrix>(res.coef.data(), m, K);
        fit.converged = fit.converged && res.converged;
        fit.max_kkt = std::max(fit.max_kkt, res.kkt_residual);
        fit.max_sweeps = std::max(fit.max_sweeps, res.sweeps);
    }
    return fit;
}

std::vector<Adjacency> union_edges(const std::vector<Matrix>& coef) {
    const int dim = static_cast<int>(coef.size());
    if (dim == 0) return {};
    const int K = static_cast<int>(coef.front().cols());
    for (const auto& c : coef)
        require(c.rows() == dim - 1 && c.cols() == K, ErrorKind::ShapeMismatch, "neighborhood coefficient shapes differ");
    std::vector<Adjacency> edges(K, Adjacency::Constant(dim, dim, false));
    for (int d = 0; d < dim; ++d)
        for (int r = 0; r < dim - 1; ++r)
            for (int k = 0; k < K; ++k)
                if (std::abs(coef[d](r, k)) > kZeroThreshold) {
                    const int o = neighbor_of(d, r);
                    edges[k](d, o) = true;
                    edges[k](o, d) = true;
                }
    return edges;
}

std::vector<Matrix> sample_covariances(const std::vector<Matrix>& Z) {
    std::vector<Matrix> S;
    S.reserve(Z.size());
    for (const auto& z : Z) {
        require(z.rows() > 0, ErrorKind::InvalidArgument, "empty sample");
        Matrix s(z.cols(), z.cols());
        s.setZero();
        s.selfadjointView<Eigen::Lower>().rankUpdate(z.transpose(), 1.0 / static_cast<double>(z.rows()));
        S.push_back(s.selfadjointView<Eigen::Lower>());
    }
    return S;
}

double precision_bic(const std::vector<Matrix>& S, const std::vector<Matrix>& omega,
                     const std::vector<Adjacency>& edges, int n) {
    require(S.size() == omega.size() && S.size() == edges.size(), ErrorKind::ShapeMismatch,
            "BIC inputs disagree on the number of conditions");
    double fit = 0.0;
    double count = 0.0;
    for (std::size_t k = 0; k < S.size(); ++k) {
        fit += gaussian_nll(S[k], omega[k]);
        count += static_cast<double>(edge_count(edges[k]));
    }
    return fit + std::log(static_cast<double>(n)) / n * count;
}

std::vector<double> default_eta_grid(int dim, int n) {
    require(dim >= 2 && n >= 2, ErrorKind::InvalidArgument, "default grid needs dim >= 2 and n >= 2");
    const double base = std::sqrt(std::log(static_cast<double>(dim)) / n);
    std::vector<double> grid;
    for (int a = 3; a <= 10; ++a) grid.push_back(0.1 * a * base);
    return grid;
}

JsemFit fit_jsem(const std::vector<Matrix>& Z, const PairPartitions& parts, const std::vector<double>& eta_grid,
                 const NeighborhoodOptions& opts) {
    require(!eta_grid.empty(), ErrorKind::InvalidArgument, "eta grid is empty");
    for (double e : eta_grid) require(e >= 0.0 && std::isfinite(e), ErrorKind::InvalidArgument, "eta must be >= 0");
    require(!Z.empty(), ErrorKind::InvalidArgument, "at least one condition is required");
    const int n = static_cast<int>(Z.front().rows());
    const auto S = sample_covariances(Z);

    std::vector<double> grid = eta_grid;
    std::sort(grid.begin(), grid.end(), std::greater<>());

    JsemFit best;
    bool have = false;
    std::vector<Matrix> warm;
    for (double eta : grid) {
        auto nb = grouped_neighborhoods(S, parts, eta, opts, warm.empty() ? nullptr : &warm);
        auto edges = union_edges(nb.coef);
        std::vector<Matrix> omega;
        bool ridge = false;
        for (std::size_t k = 0; k < S.size(); ++k) {
            auto r = restricted_glasso_with_ridge(S[k], edges[k]);
            ridge = ridge || r.ridge_used;
            omega.push_back(std::move(r.omega));
        }
        const double bic = precision_bic(S, omega, edges, n);
        std::size_t total = 0;
        for (const auto& e : edges) total += edge_count(e);
        best.path.push_back({eta, bic, total, nb.converged});
        if (!have || bic < best.bic) {
            have = true;
            best.zeta = nb.coef;
            best.edges = std::move(edges);
            best.Omega = std::move(omega);
            best.eta_selected = eta;
            best.bic = bic;
            best.ridge_used = ridge;
        }
        warm = std::move(nb.coef);
    }
    return best;
}

JsemFit fit_omega_x(const MultiDataset& data, const PairPartitions& gx, const std::vector<double>& eta_grid,
                    const NeighborhoodOptions& opts) {
    return fit_jsem(data.X(), gx, eta_grid, opts);
}

}  // namespace jmmle
