#include "jmmle/groups.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "jmmle/errors.hpp"

namespace jmmle {

using nlohmann::json;

std::string_view to_string(GroupPreset preset) noexcept {
    switch (preset) {
        case GroupPreset::AllShared: return "all-shared";
        case GroupPreset::Singleton: return "singleton";
    }
    return "all-shared";
}

GroupPreset parse_preset(std::string_view name) {
    if (name == "all-shared") return GroupPreset::AllShared;
    if (name == "singleton") return GroupPreset::Singleton;
    fail(ErrorKind::Config, "unknown group preset '" + std::string(name) + "'");
}

KPartition preset_partition(GroupPreset preset, int K) {
    KPartition out;
    if (preset == GroupPreset::AllShared) {
        std::vector<int> all(K);
        for (int k = 0; k < K; ++k) all[k] = k;
        out.push_back(std::move(all));
    } else {
        for (int k = 0; k < K; ++k) out.push_back({k});
    }
    return out;
}

PairKey PairPartitions::canonical(int a, int b) const noexcept {
    if (symmetric_ && b < a) return {b, a};
    return {a, b};
}

void PairPartitions::set(int a, int b, KPartition partition) {
    overrides_[canonical(a, b)] = std::move(partition);
}

KPartition PairPartitions::partition(int a, int b, int K) const {
    if (auto it = overrides_.find(canonical(a, b)); it != overrides_.end()) return it->second;
    return preset_partition(preset_, K);
}

GroupStructure GroupStructure::all_shared() { return GroupStructure{}; }

GroupStructure GroupStructure::singleton() {
    GroupStructure gs;
    gs.gx = PairPartitions(GroupPreset::Singleton, true);
    gs.gy = PairPartitions(GroupPreset::Singleton, true);
    gs.h.by_entry = PairPartitions(GroupPreset::Singleton, false);
    return gs;
}

namespace {

std::string pair_name(std::string_view map, PairKey key) {
    std::ostringstream os;
    os << map << " pair (" << key.a + 1 << "," << key.b + 1 << ")";
    return os.str();
}

void validate_partition(const KPartition& part, int K, const std::string& where) {
    std::vector<int> seen(K, 0);
    for (const auto& group : part) {
        if (group.empty()) fail(ErrorKind::IncompleteCover, where + ": empty group");
        for (int k : group) {
            if (k < 0 || k >= K)
                fail(ErrorKind::IndexOutOfRange,
                     where + ": condition " + std::to_string(k + 1) + " outside 1.." + std::to_string(K));
            if (seen[k]++)
                fail(ErrorKind::OverlappingGroups,
                     where + ": condition " + std::to_string(k + 1) + " appears in more than one group");
        }
    }
    for (int k = 0; k < K; ++k)
        if (!seen[k])
            fail(ErrorKind::IncompleteCover, where + ": condition " + std::to_string(k + 1) + " not covered");
}

void validate_pairs(const PairPartitions& pp, std::string_view name, int rows, int cols, int K) {
    for (const auto& [key, part] : pp.overrides()) {
        const auto where = pair_name(name, key);
        if (key.a < 0 || key.a >= rows || key.b < 0 || key.b >= cols)
            fail(ErrorKind::IndexOutOfRange, where + " outside the variable range");
        if (pp.symmetric() && key.a == key.b)
            fail(ErrorKind::IndexOutOfRange, where + " is a diagonal pair");
        validate_partition(part, K, where);
    }
}

}  // namespace

const GroupStructure& validate_groups(const GroupStructure& gs, int p, int q, int K) {
    require(p > 0 && q > 0 && K > 0, ErrorKind::InvalidArgument, "dimensions must be positive");
    require(gs.gx.symmetric() && gs.gy.symmetric(), ErrorKind::InvalidArgument,
            "gx and gy must be symmetric pair maps");
    validate_pairs(gs.gx, "gx", p, p, K);
    validate_pairs(gs.gy, "gy", q, q, K);
    if (!gs.h.is_explicit()) {
        validate_pairs(gs.h.by_entry, "h", p, q, K);
        return gs;
    }
    const std::size_t cube = static_cast<std::size_t>(p) * q * K;
    std::vector<char> seen(cube, 0);
    std::size_t covered = 0;
    for (std::size_t g = 0; g < gs.h.explicit_groups.size(); ++g) {
        const auto& group = gs.h.explicit_groups[g];
        const std::string where = "h group " + std::to_string(g + 1);
        if (group.empty()) fail(ErrorKind::IncompleteCover, where + ": empty group");
        for (const auto& c : group) {
            if (c.i < 0 || c.i >= p || c.j < 0 || c.j >= q || c.k < 0 || c.k >= K)
                fail(ErrorKind::IndexOutOfRange, where + ": index outside the cube");
            const std::size_t flat = (static_cast<std::size_t>(c.k) * p + c.i) * q + c.j;
            if (seen[flat]++)
                fail(ErrorKind::OverlappingGroups,
                     where + ": entry (" + std::to_string(c.i + 1) + "," + std::to_string(c.j + 1) + "," +
                         std::to_string(c.k + 1) + ") already grouped");
            ++covered;
        }
    }
    if (covered != cube)
        fail(ErrorKind::IncompleteCover, "h covers " + std::to_string(covered) + " of " +
                                             std::to_string(cube) + " coefficients");
    return gs;
}

namespace {

json pairs_to_json(const PairPartitions& pp) {
    json j;
    j["preset"] = std::string(to_string(pp.preset()));
    json ov = json::array();
    for (const auto& [key, part] : pp.overrides()) {
        json groups = json::array();
        for (const auto& g : part) {
            json members = json::array();
            for (int k : g) members.push_back(k + 1);
            groups.push_back(std::move(members));
        }
        ov.push_back({{"pair", {key.a + 1, key.b + 1}}, {"groups", std::move(groups)}});
    }
    j["overrides"] = std::move(ov);
    return j;
}

PairPartitions pairs_from_json(const json& j, bool symmetric) {
    PairPartitions pp(parse_preset(j.value("preset", std::string("all-shared"))), symmetric);
    if (j.contains("overrides")) {
        for (const auto& entry : j.at("overrides")) {
            const auto& pair = entry.at("pair");
            require(pair.is_array() && pair.size() == 2, ErrorKind::Config, "override pair must have two indices");
            KPartition part;
            for (const auto& g : entry.at("groups")) {
                std::vector<int> members;
                for (const auto& k : g) members.push_back(k.get<int>() - 1);
                part.push_back(std::move(members));
            }
            pp.set(pair[0].get<int>() - 1, pair[1].get<int>() - 1, std::move(part));
        }
    }
    return pp;
}

}  // namespace

std::string groups_to_json(const GroupStructure& gs) {
    json j;
    j["gx"] = pairs_to_json(gs.gx);
    j["gy"] = pairs_to_json(gs.gy);
    if (gs.h.is_explicit()) {
        json groups = json::array();
        for (const auto& g : gs.h.explicit_groups) {
            json members = json::array();
            for (const auto& c : g) members.push_back({c.i + 1, c.j + 1, c.k + 1});
            groups.push_back(std::move(members));
        }
        j["h"] = {{"groups", std::move(groups)}};
    } else {
        j["h"] = pairs_to_json(gs.h.by_entry);
    }
    return j.dump();
}

GroupStructure groups_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, std::string("group structure is not valid JSON: ") + e.what());
    }
    GroupStructure gs;
    try {
        if (j.contains("gx")) gs.gx = pairs_from_json(j.at("gx"), true);
        if (j.contains("gy")) gs.gy = pairs_from_json(j.at("gy"), true);
        if (j.contains("h")) {
            const auto& h = j.at("h");
            if (h.contains("groups")) {
                for (const auto& g : h.at("groups")) {
                    std::vector<CubeIndex> members;
                    for (const auto& c : g)
                        members.push_back({c.at(0).get<int>() - 1, c.at(1).get<int>() - 1, c.at(2).get<int>() - 1});
                    gs.h.explicit_groups.push_back(std::move(members));
                }
            } else {
                gs.h.by_entry = pairs_from_json(h, false);
            }
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, std::string("malformed group structure: ") + e.what());
    }
    return gs;
}

}  // namespace jmmle
