#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "jmmle/groups.hpp"
#include "jmmle/types.hpp"

namespace jmmle {

namespace fs = std::filesystem;

/// 64-bit FNV-1a of `text` as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view text);

/// Writes to a sibling temporary file and renames it over `path`, creating
/// parent directories as needed. Throws Io naming the path.
void write_file_atomic(const fs::path& path, std::string_view content);
std::string read_file(const fs::path& path);

/// CSV with a leading "# config_hash=<hash>" line, a header row of column
/// names, and one line per matrix row. Values round-trip exactly.
std::string matrix_to_csv(const Matrix& m, std::string_view config_hash, std::string_view column_prefix = "V");
/// Lines starting with '#' are skipped and the first remaining line is the header.
Matrix matrix_from_csv(std::string_view text, const std::string& source = "<memory>");

void write_matrix(const fs::path& path, const Matrix& m, std::string_view config_hash,
                  std::string_view column_prefix = "V");
Matrix read_matrix(const fs::path& path);
/// The hash recorded in a CSV's comment line, or empty.
std::string read_config_hash(const fs::path& path);

struct LoadedDataset {
    MultiDataset data;
    GroupStructure groups;
    std::uint64_t seed = 0;
    std::string config_hash;
    fs::path root;
    std::optional<SimTruth> truth;
    std::optional<fs::path> null_dir;  ///< companion dataset directory, when present
};

/// dir/X_k<k>.csv, dir/Y_k<k>.csv (1-based k), dir/manifest.json, and the truth
/// under dir/truth/ when given. `extra_json` (an object) is merged into the manifest.
void save_dataset(const fs::path& dir, const MultiDataset& data, const GroupStructure& groups, std::uint64_t seed,
                  std::string_view config_hash, const SimTruth* truth = nullptr,
                  std::string_view extra_json = "{}");
/// Accepts the manifest path or its directory.
LoadedDataset load_dataset(const fs::path& manifest);

void save_truth(const fs::path& dir, const SimTruth& truth, std::string_view config_hash);
SimTruth load_truth(const fs::path& dir, int K);

/// B, Theta, Omega and edge matrices as CSV plus estimate.json with the
/// selection metadata. `extra_json` (an object) is merged into estimate.json.
void save_estimate(const fs::path& dir, const ModelEstimate& est, std::string_view config_hash,
                   std::string_view extra_json = "{}");
ModelEstimate load_estimate(const fs::path& dir);

/// Theta as K q x q matrices with entry (j, j') = theta_{jj'}^k and a zero diagonal.
std::vector<Matrix> neighborhoods_to_square(const std::vector<Matrix>& coef);
std::vector<Matrix> neighborhoods_from_square(const std::vector<Matrix>& square);

Matrix adjacency_to_matrix(const Adjacency& a);
Adjacency adjacency_from_matrix(const Matrix& m);

}  // namespace jmmle
