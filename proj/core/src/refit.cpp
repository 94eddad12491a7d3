#include <string>

#include "jmmle/errors.hpp"
#include "jmmle/solvers.hpp"

namespace jmmle {

Vector refit_ols(const Matrix& X, const Vector& y, const std::vector<int>& support) {
    require(X.rows() == y.size(), ErrorKind::ShapeMismatch, "refit: X rows differ from y length");
    Vector coef = Vector::Zero(X.cols());
    if (support.empty()) return coef;
    const auto m = static_cast<Eigen::Index>(support.size());
    Matrix xs(X.rows(), m);
    for (Eigen::Index a = 0; a < m; ++a) {
        require(support[a] >= 0 && support[a] < X.cols(), ErrorKind::IndexOutOfRange,
                "refit support index " + std::to_string(support[a]) + " out of range");
        xs.col(a) = X.col(support[a]);
    }
    const Matrix gram = xs.transpose() * xs;
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    const Vector& ev = es.eigenvalues();
    const double cutoff = 1e-10 * std::max(ev.maxCoeff(), 0.0);
    const Vector proj = es.eigenvectors().transpose() * (xs.transpose() * y);
    Vector scaled = Vector::Zero(m);
    for (Eigen::Index a = 0; a < m; ++a)
        if (ev(a) > cutoff) scaled(a) = proj(a) / ev(a);
    const Vector sol = es.eigenvectors() * scaled;
    for (Eigen::Index a = 0; a < m; ++a) coef(support[a]) = sol(a);
    return coef;
}

}  // namespace jmmle
