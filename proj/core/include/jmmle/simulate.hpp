#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "jmmle/groups.hpp"
#include "jmmle/rng.hpp"
#include "jmmle/types.hpp"

namespace jmmle {

/// Cross-condition sharing pattern of the simulated precision matrices.
enum class StructurePreset {
    FiveConditionBlocks,      ///< K = 5 block pattern; any other K falls back to all-shared
    IdenticalPairs,  ///< one group over all conditions
    Custom,          ///< SimConfig::custom_groups
};

std::string_view to_string(StructurePreset s) noexcept;
StructurePreset parse_structure(std::string_view name);

/// How the diagonal of a simulated precision matrix is set.
enum class DiagonalRule {
    ShiftMinEigen,  ///< 1 + |lambda_min| of the off-diagonal part, so lambda_min = 1
    RowDominant,    ///< 1 + max(|lambda_min|, largest absolute off-diagonal row sum)
};

std::string_view to_string(DiagonalRule r) noexcept;
DiagonalRule parse_diagonal_rule(std::string_view name);

struct SimConfig {
    int p = 60, q = 30, n = 100, K = 5;
    double pi_x = 5.0 / 60, pi_y = 5.0 / 30, pi = 5.0 / 60;
    StructurePreset structure = StructurePreset::FiveConditionBlocks;
    std::optional<GroupStructure> custom_groups;
    std::uint64_t seed = 1;
    /// Draw non-zero values uniformly on [-1, 1] instead of [-1, -0.5] U [0.5, 1].
    bool literal_interval = false;
    /// Probability that an entry of an active B group is zeroed in one condition.
    double within_group_zero = 0.0;
    DiagonalRule diagonal = DiagonalRule::ShiftMinEigen;
    /// Probabilities of -1, +1 and 0 for the entries of the difference matrix.
    double diff_minus = 0.1, diff_plus = 0.1, diff_zero = 0.8;
};

/// Checks ranges; throws Config naming the bad field.
void validate_sim_config(const SimConfig& cfg);

/// Partitions of the condition pairs for a dim x dim precision matrix.
PairPartitions structure_partitions(StructurePreset s, int dim, int K);

/// Pair partition of the block preset: pairs touching the first dim/2 variables
/// share {1,2},{3,4},{5}; pairs inside the last dim/2 share {1,3,5},{2,4}.
KPartition block_partition(int a, int b, int dim);

struct PrecisionDraw {
    std::vector<Matrix> omega;     ///< K positive-definite matrices
    std::vector<Adjacency> edges;  ///< their off-diagonal supports
};

/// Shared-support precision matrices. For every pair and every group of its
/// partition the entry is non-zero with probability pi in all conditions of
/// the group; values are drawn independently per condition.
PrecisionDraw gen_shared_precision(int dim, int K, const PairPartitions& parts, double pi, Rng& rng,
                                   bool literal_interval = false,
                                   DiagonalRule rule = DiagonalRule::ShiftMinEigen);

/// Correlation matrix of Omega^{-1}: sigma_ab = W_ab / sqrt(W_aa W_bb), W = Omega^{-1}.
Matrix precision_to_cov(const Matrix& omega);

struct SimDataset {
    MultiDataset data;
    SimTruth truth;
    GroupStructure groups;
};

/// Upper and lower layers with shared precision supports, B with supports shared
/// across conditions, and Y^k = X^k B^k + E^k.
SimDataset gen_estimation_dataset(const SimConfig& cfg);

struct TestingDataset {
    SimDataset alt;   ///< B^2 = B^1 + D
    SimDataset null;  ///< same truths with D = 0 and fresh noise
};

/// Two conditions with identical precision supports across the pair, B^1 with
/// independent entries and B^2 = B^1 + D.
TestingDataset gen_testing_dataset(SimConfig cfg);

}  // namespace jmmle
