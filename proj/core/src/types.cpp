#include "jmmle/types.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "jmmle/errors.hpp"

namespace jmmle {

std::size_t edge_count(const Adjacency& adj) {
    std::size_t count = 0;
    for (Eigen::Index a = 0; a < adj.rows(); ++a)
        for (Eigen::Index b = a + 1; b < adj.cols(); ++b)
            if (adj(a, b)) ++count;
    return count;
}

MultiDataset MultiDataset::from_matrices(std::vector<Matrix> X, std::vector<Matrix> Y) {
    require(!X.empty(), ErrorKind::InvalidArgument, "dataset needs at least one condition");
    require(X.size() == Y.size(), ErrorKind::ShapeMismatch,
            "got " + std::to_string(X.size()) + " X matrices and " + std::to_string(Y.size()) + " Y matrices");
    MultiDataset d;
    d.n_ = static_cast<int>(X[0].rows());
    d.p_ = static_cast<int>(X[0].cols());
    d.q_ = static_cast<int>(Y[0].cols());
    require(d.n_ > 1 && d.p_ > 0 && d.q_ > 0, ErrorKind::InvalidArgument, "empty data matrices");
    for (std::size_t k = 0; k < X.size(); ++k) {
        const auto tag = "condition " + std::to_string(k + 1);
        require(X[k].rows() == d.n_ && X[k].cols() == d.p_, ErrorKind::ShapeMismatch, tag + ": X shape differs");
        require(Y[k].rows() == d.n_ && Y[k].cols() == d.q_, ErrorKind::ShapeMismatch, tag + ": Y shape differs");
        require(X[k].allFinite() && Y[k].allFinite(), ErrorKind::NonFinite, tag + ": non-finite entries");
        X[k].rowwise() -= X[k].colwise().mean();
        Y[k].rowwise() -= Y[k].colwise().mean();
    }
    d.X_ = std::move(X);
    d.Y_ = std::move(Y);
    return d;
}

Adjacency support_of(const Matrix& omega, double threshold) {
    Adjacency adj = Adjacency::Constant(omega.rows(), omega.cols(), false);
    for (Eigen::Index a = 0; a < omega.rows(); ++a)
        for (Eigen::Index b = 0; b < omega.cols(); ++b)
            if (a != b && (std::abs(omega(a, b)) > threshold || std::abs(omega(b, a)) > threshold))
                adj(a, b) = true;
    return adj;
}

bool is_symmetric(const Matrix& m, double tol) {
    return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

double min_eigenvalue(const Matrix& sym) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

double diagonal_dominance_margin(const Matrix& m) {
    double margin = std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < m.rows(); ++a) {
        const double off = m.row(a).cwiseAbs().sum() - std::abs(m(a, a));
        margin = std::min(margin, std::abs(m(a, a)) - off);
    }
    return margin;
}

}  // namespace jmmle
