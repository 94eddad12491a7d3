#pragma once

#include <compare>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace jmmle {

/// A partition of the condition indices {0, ..., K-1}.
using KPartition = std::vector<std::vector<int>>;

enum class GroupPreset {
    AllShared,  ///< one group {0..K-1}
    Singleton,  ///< K groups {k}
};

std::string_view to_string(GroupPreset preset) noexcept;
GroupPreset parse_preset(std::string_view name);

KPartition preset_partition(GroupPreset preset, int K);

struct PairKey {
    int a = 0;
    int b = 0;
    auto operator<=>(const PairKey&) const = default;
};

/// Per-pair partitions of the K conditions, stored as a preset plus explicit
/// overrides. Symmetric maps canonicalize keys to a < b, so (a,b) and (b,a)
/// always resolve to the same partition.
class PairPartitions {
public:
    explicit PairPartitions(GroupPreset preset = GroupPreset::AllShared, bool symmetric = true)
        : preset_(preset), symmetric_(symmetric) {}

    void set(int a, int b, KPartition partition);
    KPartition partition(int a, int b, int K) const;

    GroupPreset preset() const noexcept { return preset_; }
    bool symmetric() const noexcept { return symmetric_; }
    const std::map<PairKey, KPartition>& overrides() const noexcept { return overrides_; }

    PairKey canonical(int a, int b) const noexcept;

    bool operator==(const PairPartitions&) const = default;

private:
    GroupPreset preset_;
    bool symmetric_;
    std::map<PairKey, KPartition> overrides_;
};

struct CubeIndex {
    int i = 0;  ///< upper-layer variable
    int j = 0;  ///< lower-layer variable
    int k = 0;  ///< condition
    auto operator<=>(const CubeIndex&) const = default;
};

/// Grouping of the regression coefficients b_ij^k. The common case partitions
/// the K conditions separately for every (i, j); an arbitrary partition of the
/// full index cube can be given explicitly instead.
struct CoefficientGroups {
    PairPartitions by_entry{GroupPreset::AllShared, false};
    std::vector<std::vector<CubeIndex>> explicit_groups;

    bool is_explicit() const noexcept { return !explicit_groups.empty(); }
    bool operator==(const CoefficientGroups&) const = default;
};

struct GroupStructure {
    PairPartitions gx{GroupPreset::AllShared, true};
    PairPartitions gy{GroupPreset::AllShared, true};
    CoefficientGroups h;

    static GroupStructure all_shared();
    static GroupStructure singleton();

    bool operator==(const GroupStructure&) const = default;
};

/// Checks every partition invariant. Returns `gs` unchanged on success and
/// throws OverlappingGroups / IncompleteCover / IndexOutOfRange naming the
/// offending pair or group otherwise.
const GroupStructure& validate_groups(const GroupStructure& gs, int p, int q, int K);

/// JSON with 1-based indices on disk:
/// {"gx": {"preset": "...", "overrides": [{"pair": [i, i'], "groups": [[k, ...], ...]}]},
///  "gy": {...}, "h": {...} or {"groups": [[[i, j, k], ...], ...]}}
std::string groups_to_json(const GroupStructure& gs);
GroupStructure groups_from_json(std::string_view text);

}  // namespace jmmle
