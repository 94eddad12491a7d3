#include "jmmle/solvers.hpp"

#include "jmmle/errors.hpp"

namespace jmmle {

GroupLassoResult lasso_cd(const Matrix& X, const Vector& y, double lambda, const std::optional<Vector>& init,
                          const SolverOptions& opts) {
    require(lambda >= 0.0, ErrorKind::InvalidArgument, "lasso penalty must be non-negative");
    GroupedLSProblem prob;
    prob.blocks.push_back({X, y, 1.0});
    prob.scale = 1.0;  // unscaled squared loss
    prob.penalty = lambda;
    prob.groups.resize(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index a = 0; a < X.cols(); ++a) prob.groups[a] = {static_cast<int>(a)};
    return group_lasso_bcd(prob, init, opts);
}

}  // namespace jmmle
