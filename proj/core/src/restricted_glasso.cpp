#include <cmath>
#include <string>
#include <vector>

#include "jmmle/errors.hpp"
#include "jmmle/solvers.hpp"

namespace jmmle {

namespace {

std::vector<int> neighbors(const Adjacency& support, int j) {
    std::vector<int> out;
    for (int l = 0; l < static_cast<int>(support.cols()); ++l)
        if (l != j && support(j, l)) out.push_back(l);
    return out;
}

// Solves W[S,S] beta = S[S, j]; throws NotPD when W[S,S] is not positive definite.
Vector neighbor_coefficients(const Matrix& W, const Matrix& S, const std::vector<int>& nb, int j) {
    const auto m = static_cast<Eigen::Index>(nb.size());
    Matrix w11(m, m);
    Vector s12(m);
    for (Eigen::Index a = 0; a < m; ++a) {
        s12(a) = S(nb[a], j);
        for (Eigen::Index b = 0; b < m; ++b) w11(a, b) = W(nb[a], nb[b]);
    }
    Eigen::LLT<Matrix> llt(w11);
    if (llt.info() != Eigen::Success)
        fail(ErrorKind::NotPD, "restricted covariance block of node " + std::to_string(j + 1) + " is not PD");
    return llt.solve(s12);
}

}  // namespace

double gaussian_nll(const Matrix& S, const Matrix& omega) {
    Eigen::LLT<Matrix> llt(omega);
    if (llt.info() != Eigen::Success) fail(ErrorKind::NotPD, "precision matrix is not positive definite");
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return S.cwiseProduct(omega).sum() - logdet;
}

PrecisionResult restricted_glasso(const PrecisionProblem& prob) {
    const Matrix& S = prob.S;
    const auto q = static_cast<int>(S.rows());
    require(S.rows() == S.cols(), ErrorKind::ShapeMismatch, "S must be square");
    require(prob.support.rows() == q && prob.support.cols() == q, ErrorKind::ShapeMismatch,
            "support must match S");
    require(S.allFinite(), ErrorKind::NonFinite, "S has non-finite entries");
    require(is_symmetric(S, 1e-10 * std::max(1.0, S.cwiseAbs().maxCoeff())), ErrorKind::InvalidArgument,
            "S must be symmetric");
    for (int j = 0; j < q; ++j)
        require(S(j, j) > 0.0, ErrorKind::NotPD, "S has a non-positive diagonal entry at " + std::to_string(j + 1));

    std::vector<std::vector<int>> nbrs(q);
    bool any_edge = false;
    for (int j = 0; j < q; ++j) {
        nbrs[j] = neighbors(prob.support, j);
        for (int l : nbrs[j])
            require(prob.support(l, j), ErrorKind::InvalidArgument, "support must be symmetric");
        any_edge = any_edge || !nbrs[j].empty();
    }

    PrecisionResult res;
    if (!any_edge) {
        res.omega = S.diagonal().cwiseInverse().asDiagonal();
        return res;
    }

    // W tracks the fitted covariance; its diagonal stays at diag(S). Each node
    // update makes W[-j, j] = W[-j, S] beta with beta solving the restricted
    // normal equations, which forces W to agree with S on the support.
    Matrix W = S;
    const double scale = S.diagonal().mean();
    bool converged = false;
    for (int it = 0; it < prob.max_iter; ++it) {
        double change = 0.0;
        for (int j = 0; j < q; ++j) {
            Vector w12 = Vector::Zero(q);
            if (!nbrs[j].empty()) {
                const Vector beta = neighbor_coefficients(W, S, nbrs[j], j);
                for (std::size_t a = 0; a < nbrs[j].size(); ++a) w12 += W.col(nbrs[j][a]) * beta(a);
            }
            for (int l = 0; l < q; ++l) {
                if (l == j) continue;
                change = std::max(change, std::abs(W(l, j) - w12(l)));
                W(l, j) = w12(l);
                W(j, l) = w12(l);
            }
        }
        res.iterations = it + 1;
        if (!W.allFinite()) fail(ErrorKind::NonFinite, "restricted graphical lasso diverged");
        if (change <= prob.tol * scale) {
            converged = true;
            break;
        }
    }
    if (!converged)
        fail(ErrorKind::NoConverge,
             "restricted graphical lasso did not converge in " + std::to_string(prob.max_iter) + " iterations");

    Matrix omega = Matrix::Zero(q, q);
    for (int j = 0; j < q; ++j) {
        double fitted = 0.0;
        Vector beta;
        if (!nbrs[j].empty()) {
            beta = neighbor_coefficients(W, S, nbrs[j], j);
            for (std::size_t a = 0; a < nbrs[j].size(); ++a) fitted += W(j, nbrs[j][a]) * beta(a);
        }
        const double resid = S(j, j) - fitted;
        if (!(resid > 0.0))
            fail(ErrorKind::NotPD, "conditional variance of node " + std::to_string(j + 1) + " is not positive");
        const double diag = 1.0 / resid;
        omega(j, j) = diag;
        for (std::size_t a = 0; a < nbrs[j].size(); ++a) omega(nbrs[j][a], j) = -beta(a) * diag;
    }
    omega = 0.5 * (omega + omega.transpose()).eval();

    Eigen::LLT<Matrix> llt(omega);
    if (llt.info() != Eigen::Success) fail(ErrorKind::NotPD, "restricted precision estimate is not PD");
    const Matrix sigma = llt.solve(Matrix::Identity(q, q));
    double stat = 0.0;
    for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b)
            if (a == b || prob.support(a, b)) stat = std::max(stat, std::abs(sigma(a, b) - S(a, b)));
    res.stationarity = stat;
    res.omega = std::move(omega);
    return res;
}

RidgedPrecision restricted_glasso_with_ridge(const Matrix& S, const Adjacency& support) {
    PrecisionProblem prob{S, support};
    try {
        return {restricted_glasso(prob).omega, false};
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::NotPD && e.kind() != ErrorKind::NoConverge) throw;
    }
    const double base = S.diagonal().mean();
    const auto q = S.rows();
    for (double eps : {1e-4, 1e-3, 1e-2, 1e-1}) {
        prob.S = S + eps * base * Matrix::Identity(q, q);
        try {
            return {restricted_glasso(prob).omega, true};
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NotPD && e.kind() != ErrorKind::NoConverge) throw;
        }
    }
    fail(ErrorKind::NotPD, "restricted precision refit failed even with a diagonal ridge");
}

}  // namespace jmmle
