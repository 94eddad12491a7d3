#include <string>

#include "bcd_engine.hpp"
#include "jmmle/solvers.hpp"

namespace jmmle {

std::string_view to_string(PenaltyScaling s) noexcept {
    return s == PenaltyScaling::AsDisplayed ? "as-displayed" : "group-size-adjusted";
}

PenaltyScaling parse_penalty_scaling(std::string_view name) {
    if (name == "as-displayed") return PenaltyScaling::AsDisplayed;
    if (name == "group-size-adjusted") return PenaltyScaling::GroupSizeAdjusted;
    fail(ErrorKind::Config, "unknown penalty scaling '" + std::string(name) + "'");
}

double group_penalty_weight(PenaltyScaling s, std::size_t size) noexcept {
    return s == PenaltyScaling::AsDisplayed ? 1.0 : 2.0 * std::sqrt(static_cast<double>(size));
}

double lasso_penalty(PenaltyScaling s, double lambda, int n) noexcept {
    return s == PenaltyScaling::AsDisplayed ? lambda : 2.0 * n * lambda;
}

Eigen::Index GroupedLSProblem::num_coefficients() const {
    Eigen::Index m = 0;
    for (const auto& b : blocks) m += b.design.cols();
    return m;
}

namespace detail {

DenseBlockLoss::DenseBlockLoss(const GroupedLSProblem& prob) {
    int offset = 0;
    for (std::size_t b = 0; b < prob.blocks.size(); ++b) {
        const auto& src = prob.blocks[b];
        require(src.design.rows() == src.response.size(), ErrorKind::ShapeMismatch,
                "block " + std::to_string(b) + ": design rows differ from response length");
        require(src.design.allFinite() && src.response.allFinite(), ErrorKind::NonFinite,
                "block " + std::to_string(b) + ": non-finite design or response");
        require(src.weight >= 0.0, ErrorKind::InvalidArgument, "block weights must be non-negative");
        const double c = 2.0 * prob.scale * src.weight;
        Block blk;
        blk.offset = offset;
        blk.gram.noalias() = c * (src.design.transpose() * src.design);
        blk.lin.noalias() = c * (src.design.transpose() * src.response);
        blk.grad = blk.lin;
        blk.yy = prob.scale * src.weight * src.response.squaredNorm();
        for (Eigen::Index a = 0; a < src.design.cols(); ++a) block_of_.push_back(static_cast<int>(b));
        offset += static_cast<int>(src.design.cols());
        blocks_.push_back(std::move(blk));
    }
    total_ = offset;
}

DenseBlockLoss::DenseBlockLoss(std::vector<GramBlock> blocks) {
    int offset = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        auto& src = blocks[b];
        require(src.gram.rows() == src.gram.cols() && src.gram.rows() == src.lin.size(), ErrorKind::ShapeMismatch,
                "Gram block " + std::to_string(b) + " is inconsistent");
        Block blk;
        blk.offset = offset;
        const auto m = src.gram.rows();
        blk.gram = std::move(src.gram);
        blk.lin = std::move(src.lin);
        blk.grad = blk.lin;
        blk.yy = src.yy;
        for (Eigen::Index a = 0; a < m; ++a) block_of_.push_back(static_cast<int>(b));
        offset += static_cast<int>(m);
        blocks_.push_back(std::move(blk));
    }
    total_ = offset;
}

GroupLassoResult group_lasso_gram(std::vector<GramBlock> blocks, const std::vector<std::vector<int>>& groups,
                                  double penalty, const std::vector<double>& group_weights,
                                  const std::optional<Vector>& init, const SolverOptions& opts) {
    DenseBlockLoss loss(std::move(blocks));
    EngineOptions eo{opts, penalty, group_weights};
    BcdEngine<DenseBlockLoss> engine(loss, groups, eo);
    return engine.run(init ? *init : Vector::Zero(loss.size()));
}

void DenseBlockLoss::reset(const Vector& beta) {
    for (auto& blk : blocks_) {
        const auto m = blk.gram.rows();
        blk.grad.noalias() = blk.lin - blk.gram * beta.segment(blk.offset, m);
    }
}

double DenseBlockLoss::value(const Vector& beta) const {
    // w*scale*||y - D b||^2 = yy - 0.5 * b'(lin + grad)
    double v = 0.0;
    for (const auto& blk : blocks_) {
        const auto seg = beta.segment(blk.offset, blk.gram.rows());
        v += blk.yy - 0.5 * seg.dot(blk.lin + blk.grad);
    }
    return v;
}

}  // namespace detail

namespace {

void check_groups(const std::vector<std::vector<int>>& groups, Eigen::Index m) {
    std::vector<char> seen(static_cast<std::size_t>(m), 0);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        require(!groups[g].empty(), ErrorKind::IncompleteCover, "group " + std::to_string(g) + " is empty");
        for (int a : groups[g]) {
            require(a >= 0 && a < m, ErrorKind::IndexOutOfRange,
                    "group " + std::to_string(g) + " references coefficient " + std::to_string(a));
            require(!seen[a]++, ErrorKind::OverlappingGroups,
                    "coefficient " + std::to_string(a) + " belongs to more than one group");
        }
    }
    for (Eigen::Index a = 0; a < m; ++a)
        require(seen[a], ErrorKind::IncompleteCover, "coefficient " + std::to_string(a) + " is in no group");
}

std::vector<double> group_weights(const GroupedLSProblem& prob) {
    std::vector<double> w(prob.groups.size(), 1.0);
    if (prob.sqrt_group_weights)
        for (std::size_t g = 0; g < w.size(); ++g) w[g] = std::sqrt(static_cast<double>(prob.groups[g].size()));
    return w;
}

}  // namespace

GroupLassoResult group_lasso_bcd(const GroupedLSProblem& prob, const std::optional<Vector>& init,
                                 const SolverOptions& opts) {
    require(prob.penalty >= 0.0, ErrorKind::InvalidArgument, "penalty must be non-negative");
    require(prob.scale > 0.0, ErrorKind::InvalidArgument, "loss scale must be positive");
    const Eigen::Index m = prob.num_coefficients();
    check_groups(prob.groups, m);

    detail::DenseBlockLoss loss(prob);
    detail::EngineOptions eo{opts, prob.penalty, group_weights(prob)};
    detail::BcdEngine<detail::DenseBlockLoss> engine(loss, prob.groups, eo);
    return engine.run(init ? *init : Vector::Zero(m));
}

double grouped_ls_objective(const GroupedLSProblem& prob, const Vector& beta) {
    require(beta.size() == prob.num_coefficients(), ErrorKind::ShapeMismatch, "coefficient length mismatch");
    double loss = 0.0;
    Eigen::Index offset = 0;
    for (const auto& b : prob.blocks) {
        const auto m = b.design.cols();
        loss += prob.scale * b.weight * (b.response - b.design * beta.segment(offset, m)).squaredNorm();
        offset += m;
    }
    const auto w = group_weights(prob);
    double pen = 0.0;
    for (std::size_t g = 0; g < prob.groups.size(); ++g) {
        double sq = 0.0;
        for (int a : prob.groups[g]) sq += beta(a) * beta(a);
        pen += w[g] * std::sqrt(sq);
    }
    return loss + prob.penalty * pen;
}

}  // namespace jmmle
