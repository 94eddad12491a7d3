#include "run_config.hpp"

#include <cstdlib>
#include <set>

#include "jmmle/errors.hpp"
#include "jmmle/io.hpp"

namespace jmmle::cli {

using nlohmann::json;

json to_json(const RunConfig& c) {
    json j{{"manifest", c.manifest},
           {"estimate", c.estimate},
           {"tests", c.tests},
           {"out", c.out},
           {"preset", c.preset},
           {"structure", c.structure},
           {"diagonal", c.diagonal},
           {"baseline", c.baseline},
           {"p", c.p},
           {"q", c.q},
           {"n", c.n},
           {"K", c.K},
           {"seed", c.seed},
           {"reps", c.reps},
           {"alpha", c.alpha},
           {"within_group_zero", c.within_group_zero},
           {"one_step", c.one_step},
           {"fit_upper", c.fit_upper},
           {"threshold_b", c.threshold_b},
           {"lambda_grid", c.lambda_grid},
           {"gamma_grid", c.gamma_grid},
           {"eta_grid", c.eta_grid},
           {"rows", c.rows},
           {"workers", c.workers}};
    j["global_alpha"] = c.global_alpha ? json(*c.global_alpha) : json(nullptr);
    return j;
}

RunConfig from_json(const json& j, RunConfig c) {
    if (!j.is_object()) fail(ErrorKind::Config, "config must be a JSON object");
    const std::set<std::string> known = [] {
        std::set<std::string> keys;
        const json defaults = to_json(RunConfig{});
        for (const auto& [k, v] : defaults.items()) keys.insert(k);
        return keys;
    }();
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) fail(ErrorKind::Config, "unknown config key '" + key + "'");
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) j.at(key).get_to(field);
        };
        get("manifest", c.manifest);
        get("estimate", c.estimate);
        get("tests", c.tests);
        get("out", c.out);
        get("preset", c.preset);
        get("structure", c.structure);
        get("diagonal", c.diagonal);
        get("baseline", c.baseline);
        get("p", c.p);
        get("q", c.q);
        get("n", c.n);
        get("K", c.K);
        get("seed", c.seed);
        get("reps", c.reps);
        get("alpha", c.alpha);
        get("within_group_zero", c.within_group_zero);
        get("one_step", c.one_step);
        get("fit_upper", c.fit_upper);
        get("threshold_b", c.threshold_b);
        get("lambda_grid", c.lambda_grid);
        get("gamma_grid", c.gamma_grid);
        get("eta_grid", c.eta_grid);
        get("rows", c.rows);
        get("workers", c.workers);
        if (j.contains("global_alpha") && !j.at("global_alpha").is_null())
            c.global_alpha = j.at("global_alpha").get<double>();
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, std::string("bad config value: ") + e.what());
    }
    return c;
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
    const auto text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, path + ": not valid JSON: " + e.what());
    }
    return from_json(j, std::move(base));
}

void apply_environment(RunConfig& cfg) {
    if (const char* out = std::getenv("JMMLE_OUT"); out && *out) cfg.out = out;
    if (const char* w = std::getenv("JMMLE_WORKERS"); w && *w) {
        try {
            cfg.workers = std::stoi(w);
        } catch (const std::exception&) {
            fail(ErrorKind::Config, std::string("JMMLE_WORKERS is not an integer: '") + w + "'");
        }
    }
}

std::string config_hash(const RunConfig& cfg) {
    json j = to_json(cfg);
    for (const char* key : {"manifest", "estimate", "tests", "out", "workers"}) j.erase(key);
    return fnv1a_hex(j.dump());
}

}  // namespace jmmle::cli
