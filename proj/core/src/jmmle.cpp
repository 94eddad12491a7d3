#include "jmmle/jmmle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bcd_engine.hpp"
#include "jmmle/errors.hpp"
#include "jmmle/parallel.hpp"

namespace jmmle {

namespace {

// sum_k (1/n) ||(Y^k - X^k B^k) T^k||_F^2 in covariance form. Coefficient
// a = k*p*q + j*p + i addresses B^k(i, j), i.e. the column-major storage of
// the stacked B matrices.
class CoupledLoss {
public:
    CoupledLoss(const MultiDataset& data, const std::vector<Matrix>& T) : p_(data.p()), q_(data.q()) {
        const double inv_n = 1.0 / data.n();
        for (int k = 0; k < data.K(); ++k) {
            Cond c;
            const Matrix& X = data.X(k);
            const Matrix& Y = data.Y(k);
            c.G.noalias() = inv_n * (X.transpose() * X);
            c.M.noalias() = T[k] * T[k].transpose();
            const Matrix P = inv_n * (X.transpose() * Y);
            c.H0.noalias() = 2.0 * P * c.M;
            c.c0 = inv_n * (Y.transpose() * Y).cwiseProduct(c.M).sum();
            c.F = c.H0;
            conds_.push_back(std::move(c));
        }
    }

    Eigen::Index size() const { return static_cast<Eigen::Index>(conds_.size()) * p_ * q_; }

    double hess(int a, int b) const {
        const auto [ka, ia, ja] = split(a);
        const auto [kb, ib, jb] = split(b);
        if (ka != kb) return 0.0;
        return 2.0 * conds_[ka].G(ia, ib) * conds_[ka].M(ja, jb);
    }
    double neg_grad(int a) const {
        const auto [k, i, j] = split(a);
        return conds_[k].F(i, j);
    }
    void update(int a, double delta) {
        const auto [k, i, j] = split(a);
        auto& c = conds_[k];
        c.F.noalias() -= (2.0 * delta) * c.G.col(i) * c.M.row(j);
    }
    void reset(const Vector& beta) {
        for (std::size_t k = 0; k < conds_.size(); ++k) {
            auto& c = conds_[k];
            const Eigen::Map<const Matrix> B(beta.data() + k * p_ * q_, p_, q_);
            c.F = c.H0 - 2.0 * c.G * B * c.M;
        }
    }
    double value(const Vector& beta) const {
        double v = 0.0;
        for (std::size_t k = 0; k < conds_.size(); ++k) {
            const auto& c = conds_[k];
            const Eigen::Map<const Matrix> B(beta.data() + k * p_ * q_, p_, q_);
            v += c.c0 - 0.5 * B.cwiseProduct(c.H0 + c.F).sum();
        }
        return v;
    }

private:
    struct Idx {
        int k, i, j;
    };
    Idx split(int a) const {
        const int pq = p_ * q_;
        const int k = a / pq;
        const int r = a - k * pq;
        return {k, r % p_, r / p_};
    }
    struct Cond {
        Matrix G, M, H0, F;
        double c0 = 0.0;
    };
    int p_, q_;
    std::vector<Cond> conds_;
};

std::vector<std::vector<int>> coefficient_groups(const CoefficientGroups& h, int p, int q, int K) {
    std::vector<std::vector<int>> groups;
    const int pq = p * q;
    if (h.is_explicit()) {
        for (const auto& g : h.explicit_groups) {
            std::vector<int> idx;
            for (const auto& c : g) {
                require(c.i >= 0 && c.i < p && c.j >= 0 && c.j < q && c.k >= 0 && c.k < K, ErrorKind::IndexOutOfRange,
                        "coefficient group index out of range");
                idx.push_back(c.k * pq + c.j * p + c.i);
            }
            groups.push_back(std::move(idx));
        }
        return groups;
    }
    for (int j = 0; j < q; ++j)
        for (int i = 0; i < p; ++i)
            for (const auto& part : h.by_entry.partition(i, j, K)) {
                std::vector<int> idx;
                for (int k : part) idx.push_back(k * pq + j * p + i);
                groups.push_back(std::move(idx));
            }
    return groups;
}

double stacked_norm(const std::vector<Matrix>& B) {
    double s = 0.0;
    for (const auto& b : B) s += b.squaredNorm();
    return std::sqrt(s);
}

double stacked_diff(const std::vector<Matrix>& A, const std::vector<Matrix>& B) {
    double s = 0.0;
    for (std::size_t k = 0; k < A.size(); ++k) s += (A[k] - B[k]).squaredNorm();
    return std::sqrt(s);
}

NeighborhoodOptions neighborhood_options(const JmmleConfig& cfg) { return {cfg.scaling, cfg.solver}; }

}  // namespace

std::vector<double> default_lambda_grid(int p, int n) {
    require(p >= 2 && n >= 2, ErrorKind::InvalidArgument, "default lambda grid needs p >= 2 and n >= 2");
    const double base = std::sqrt(std::log(static_cast<double>(p)) / n);
    std::vector<double> grid;
    for (int a = 2; a <= 9; ++a) grid.push_back(0.2 * a * base);
    return grid;
}

std::vector<double> default_gamma_grid(int q, int n) { return default_eta_grid(q, n); }

std::vector<Matrix> t_matrices(const std::vector<Matrix>& Theta, int K) {
    const int q = static_cast<int>(Theta.size());
    std::vector<Matrix> T(K, Matrix::Identity(q, q));
    for (int j = 0; j < q; ++j) {
        require(Theta[j].rows() == q - 1 && Theta[j].cols() == K, ErrorKind::ShapeMismatch,
                "Theta block " + std::to_string(j + 1) + " has the wrong shape");
        for (int r = 0; r < q - 1; ++r)
            for (int k = 0; k < K; ++k) T[k](neighbor_of(j, r), j) = -Theta[j](r, k);
    }
    return T;
}

std::vector<Matrix> residuals(const MultiDataset& data, const std::vector<Matrix>& B) {
    require(static_cast<int>(B.size()) == data.K(), ErrorKind::KMismatch, "B has the wrong number of conditions");
    std::vector<Matrix> E;
    for (int k = 0; k < data.K(); ++k) {
        require(B[k].rows() == data.p() && B[k].cols() == data.q(), ErrorKind::ShapeMismatch, "B^k must be p x q");
        E.push_back(data.Y(k) - data.X(k) * B[k]);
    }
    return E;
}

std::vector<Matrix> init_B(const MultiDataset& data, double lambda, PenaltyScaling scaling,
                           const SolverOptions& solver) {
    require(lambda >= 0.0, ErrorKind::InvalidArgument, "lambda must be non-negative");
    const double pen = lasso_penalty(scaling, lambda, data.n());
    std::vector<Matrix> B(data.K(), Matrix::Zero(data.p(), data.q()));
    for (int k = 0; k < data.K(); ++k) {
        const Matrix& X = data.X(k);
        for (int j = 0; j < data.q(); ++j) B[k].col(j) = lasso_cd(X, data.Y(k).col(j), pen, std::nullopt, solver).coef;
    }
    return B;
}

NeighborhoodFit update_theta(const MultiDataset& data, const std::vector<Matrix>& B, const PairPartitions& gy,
                             double gamma, const NeighborhoodOptions& opts, const std::vector<Matrix>* warm) {
    return grouped_neighborhoods(sample_covariances(residuals(data, B)), gy, gamma, opts, warm);
}

UpdateBResult update_B(const MultiDataset& data, const std::vector<Matrix>& Theta, const CoefficientGroups& h,
                       double lambda, const UpdateBOptions& opts, const std::vector<Matrix>* warm) {
    require(lambda >= 0.0, ErrorKind::InvalidArgument, "lambda must be non-negative");
    require(static_cast<int>(Theta.size()) == data.q(), ErrorKind::ShapeMismatch, "Theta needs one block per response");
    const int K = data.K(), p = data.p(), q = data.q();
    const auto T = t_matrices(Theta, K);
    CoupledLoss loss(data, T);

    auto groups = coefficient_groups(h, p, q, K);
    std::vector<double> weights;
    weights.reserve(groups.size());
    for (const auto& g : groups) weights.push_back(group_penalty_weight(opts.scaling, g.size()));

    Vector init = Vector::Zero(loss.size());
    if (warm) {
        require(static_cast<int>(warm->size()) == K, ErrorKind::KMismatch, "warm start has the wrong K");
        for (int k = 0; k < K; ++k) {
            require((*warm)[k].rows() == p && (*warm)[k].cols() == q, ErrorKind::ShapeMismatch, "warm B^k must be p x q");
            init.segment(static_cast<Eigen::Index>(k) * p * q, p * q) =
                Eigen::Map<const Vector>((*warm)[k].data(), p * q);
        }
    }
    detail::EngineOptions eo{opts.solver, lambda, weights};
    detail::BcdEngine<CoupledLoss> engine(loss, std::move(groups), eo);
    auto res = engine.run(std::move(init));

    UpdateBResult out;
    out.converged = res.converged;
    out.kkt_residual = res.kkt_residual;
    out.sweeps = res.sweeps;
    for (int k = 0; k < K; ++k) {
        Matrix b = Eigen::Map<const Matrix>(res.coef.data() + static_cast<Eigen::Index>(k) * p * q, p, q);
        b = (b.array().abs() > kZeroThreshold).select(b, 0.0);
        out.penalized.push_back(b);
    }
    out.B = out.penalized;
    if (opts.refit) {
        for (int k = 0; k < K; ++k)
            for (int j = 0; j < q; ++j) {
                std::vector<int> supp;
                for (int i = 0; i < p; ++i)
                    if (out.penalized[k](i, j) != 0.0) supp.push_back(i);
                if (!supp.empty()) out.B[k].col(j) = refit_ols(data.X(k), data.Y(k).col(j), supp);
            }
    }
    return out;
}

OmegaYFit compute_omega_y(const MultiDataset& data, const std::vector<Matrix>& B, const std::vector<Matrix>& Theta) {
    OmegaYFit out;
    out.S = sample_covariances(residuals(data, B));
    out.edges = union_edges(Theta);
    require(static_cast<int>(out.edges.size()) == data.K(), ErrorKind::KMismatch, "Theta has the wrong K");
    for (int k = 0; k < data.K(); ++k) {
        auto r = restricted_glasso_with_ridge(out.S[k], out.edges[k]);
        out.ridge_used = out.ridge_used || r.ridge_used;
        out.Omega.push_back(std::move(r.omega));
    }
    return out;
}

double jmmle_objective(const MultiDataset& data, const std::vector<Matrix>& B, const std::vector<Matrix>& Theta,
                       const GroupStructure& gs, double lambda, double gamma, PenaltyScaling scaling) {
    const int K = data.K(), p = data.p(), q = data.q();
    const auto E = residuals(data, B);
    const auto T = t_matrices(Theta, K);
    double loss = 0.0;
    for (int k = 0; k < K; ++k) loss += (E[k] * T[k]).squaredNorm() / data.n();

    double pen_b = 0.0;
    for (const auto& g : coefficient_groups(gs.h, p, q, K)) {
        double sq = 0.0;
        for (int a : g) {
            const int k = a / (p * q), r = a % (p * q);
            sq += B[k](r % p, r / p) * B[k](r % p, r / p);
        }
        pen_b += group_penalty_weight(scaling, g.size()) * std::sqrt(sq);
    }
    double pen_t = 0.0;
    for (int j = 0; j < q; ++j)
        for (int r = 0; r < q - 1; ++r)
            for (const auto& part : gs.gy.partition(j, neighbor_of(j, r), K)) {
                double sq = 0.0;
                for (int k : part) sq += Theta[j](r, k) * Theta[j](r, k);
                pen_t += group_penalty_weight(scaling, part.size()) * std::sqrt(sq);
            }
    return loss + lambda * pen_b + gamma * pen_t;
}

GammaFit bic_gamma(const MultiDataset& data, const std::vector<Matrix>& B, const PairPartitions& gy, double gamma,
                   const NeighborhoodOptions& opts) {
    GammaFit g;
    g.gamma = gamma;
    g.theta = update_theta(data, B, gy, gamma, opts);
    g.omega = compute_omega_y(data, B, g.theta.coef);
    g.bic = precision_bic(g.omega.S, g.omega.Omega, g.omega.edges, data.n());
    return g;
}

GammaFit select_gamma(const MultiDataset& data, const std::vector<Matrix>& B, const PairPartitions& gy,
                      const std::vector<double>& grid, const NeighborhoodOptions& opts) {
    require(!grid.empty(), ErrorKind::InvalidArgument, "gamma grid is empty");
    std::vector<double> sorted = grid;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const auto S = sample_covariances(residuals(data, B));
    GammaFit best;
    bool have = false;
    std::vector<Matrix> warm;
    for (double gamma : sorted) {
        require(gamma >= 0.0 && std::isfinite(gamma), ErrorKind::InvalidArgument, "gamma must be >= 0");
        GammaFit g;
        g.gamma = gamma;
        g.theta = grouped_neighborhoods(S, gy, gamma, opts, warm.empty() ? nullptr : &warm);
        g.omega.S = S;
        g.omega.edges = union_edges(g.theta.coef);
        for (int k = 0; k < data.K(); ++k) {
            auto r = restricted_glasso_with_ridge(S[k], g.omega.edges[k]);
            g.omega.ridge_used = g.omega.ridge_used || r.ridge_used;
            g.omega.Omega.push_back(std::move(r.omega));
        }
        g.bic = precision_bic(S, g.omega.Omega, g.omega.edges, data.n());
        warm = g.theta.coef;
        if (!have || g.bic < best.bic) {
            best = std::move(g);
            have = true;
        }
    }
    return best;
}

double hbic_lambda(const MultiDataset& data, const std::vector<Matrix>& B, const std::vector<Matrix>& Theta,
                   const std::vector<Adjacency>& edges_y) {
    const int K = data.K();
    const double n = data.n();
    require(static_cast<int>(edges_y.size()) == K, ErrorKind::KMismatch, "edge sets must match K");
    const auto E = residuals(data, B);
    const auto T = t_matrices(Theta, K);
    double loss = 0.0, count = 0.0;
    for (int k = 0; k < K; ++k) {
        loss += (E[k] * T[k]).squaredNorm() / n;
        count += static_cast<double>((B[k].array().abs() > kZeroThreshold).count());
        count += static_cast<double>(edge_count(edges_y[k]));
    }
    const double pq = static_cast<double>(data.p()) * data.q();
    return loss + std::log(std::log(n)) * std::log(pq) / n * count;
}

LambdaFit fit_lambda(const MultiDataset& data, const GroupStructure& gs, const JmmleConfig& cfg, double lambda) {
    const auto gamma_grid = cfg.gamma_grid.empty() ? default_gamma_grid(data.q(), data.n()) : cfg.gamma_grid;
    const auto nb = neighborhood_options(cfg);
    const UpdateBOptions ub{cfg.scaling, cfg.solver, cfg.refit_inside};

    LambdaFit out;
    out.lambda = lambda;
    std::vector<Matrix> B = init_B(data, lambda, cfg.scaling, cfg.solver);
    GammaFit gfit = select_gamma(data, B, gs.gy, gamma_grid, nb);
    const double fixed_gamma = gfit.gamma;
    auto objective = [&](const std::vector<Matrix>& b, const std::vector<Matrix>& th) {
        return jmmle_objective(data, b, th, gs, lambda, cfg.reselect_gamma ? gfit.gamma : fixed_gamma, cfg.scaling);
    };

    std::vector<Matrix> Theta = gfit.theta.coef;
    std::vector<Matrix> warm;
    bool converged = false;
    int it = 0;
    const bool full = !cfg.one_step;
    if (full) out.objective_trace.push_back(objective(B, Theta));
    for (; it < cfg.max_outer && !converged; ++it) {
        auto upd = update_B(data, Theta, gs.h, lambda, ub, warm.empty() ? nullptr : &warm);
        const double change = stacked_diff(upd.B, B) / std::max(stacked_norm(B), 1e-12);
        const bool b_still = stacked_diff(upd.B, B) == 0.0 || change < cfg.tol_outer;
        B = std::move(upd.B);
        warm = std::move(upd.penalized);
        out.penalized_B = warm;
        if (full) {
            out.objective_trace.push_back(objective(B, Theta));
            if (cfg.reselect_gamma) {
                gfit = select_gamma(data, B, gs.gy, gamma_grid, nb);
                Theta = gfit.theta.coef;
            } else {
                auto th = update_theta(data, B, gs.gy, fixed_gamma, nb, &Theta);
                Theta = std::move(th.coef);
            }
            out.objective_trace.push_back(objective(B, Theta));
        }
        converged = b_still && it > 0;
    }
    out.iterations = it;
    out.converged = converged;

    // The last Theta pass, tuned on the final B; full mode already has it.
    if (!full || !cfg.reselect_gamma) gfit = select_gamma(data, B, gs.gy, gamma_grid, nb);
    out.gamma = gfit.gamma;
    out.Theta = gfit.theta.coef;
    out.omega = std::move(gfit.omega);
    out.B = std::move(B);
    out.hbic = hbic_lambda(data, out.B, out.Theta, out.omega.edges);
    return out;
}

ModelEstimate fit(const MultiDataset& data, const GroupStructure& gs, const JmmleConfig& cfg) {
    validate_groups(gs, data.p(), data.q(), data.K());
    require(cfg.max_outer >= 1, ErrorKind::InvalidArgument, "max_outer must be at least 1");
    require(cfg.tol_outer > 0.0, ErrorKind::InvalidArgument, "tol_outer must be positive");
    auto lambda_grid = cfg.lambda_grid.empty() ? default_lambda_grid(data.p(), data.n()) : cfg.lambda_grid;
    for (double l : lambda_grid) require(l >= 0.0 && std::isfinite(l), ErrorKind::InvalidArgument, "lambda must be >= 0");
    std::sort(lambda_grid.begin(), lambda_grid.end(), std::greater<>());

    std::vector<LambdaFit> fits(lambda_grid.size());
    parallel_for(lambda_grid.size(), cfg.workers,
                 [&](std::size_t a) { fits[a] = fit_lambda(data, gs, cfg, lambda_grid[a]); });

    std::size_t best = 0;
    for (std::size_t a = 1; a < fits.size(); ++a)
        if (fits[a].hbic < fits[best].hbic) best = a;

    ModelEstimate est;
    for (const auto& f : fits)
        est.lambda_path.push_back({f.lambda, f.gamma, f.hbic, f.iterations, f.converged});
    auto& f = fits[best];
    est.B = std::move(f.B);
    est.Theta = std::move(f.Theta);
    est.OmegaY = std::move(f.omega.Omega);
    est.EdgesY = std::move(f.omega.edges);
    est.lambda_selected = f.lambda;
    est.gamma_selected = f.gamma;
    est.iterations = f.iterations;
    est.converged = f.converged;
    est.ridge_used = f.omega.ridge_used;

    if (cfg.fit_upper) {
        const auto eta_grid = cfg.eta_grid.empty() ? default_eta_grid(data.p(), data.n()) : cfg.eta_grid;
        auto jf = fit_omega_x(data, gs.gx, eta_grid, neighborhood_options(cfg));
        est.zeta = std::move(jf.zeta);
        est.OmegaX = std::move(jf.Omega);
        est.EdgesX = std::move(jf.edges);
        est.eta_selected = jf.eta_selected;
        est.ridge_used = est.ridge_used || jf.ridge_used;
    }
    return est;
}

}  // namespace jmmle
