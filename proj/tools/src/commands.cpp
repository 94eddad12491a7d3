#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <sstream>

#include "jmmle/errors.hpp"
#include "jmmle/inference.hpp"
#include "jmmle/io.hpp"
#include "jmmle/jmmle.hpp"
#include "jmmle/jsem.hpp"
#include "jmmle/metrics.hpp"
#include "jmmle/parallel.hpp"
#include "jmmle/simulate.hpp"

namespace jmmle::cli {

using nlohmann::json;

namespace {

enum class Preset { Estimation, Testing, Misspec };

Preset parse_run_preset(const std::string& name) {
    if (name == "estimation") return Preset::Estimation;
    if (name == "testing") return Preset::Testing;
    if (name == "misspec") return Preset::Misspec;
    fail(ErrorKind::Config, "unknown preset '" + name + "' (estimation, testing, misspec)");
}

SimConfig sim_config(const RunConfig& cfg, std::uint64_t seed) {
    SimConfig sc;
    sc.p = cfg.p;
    sc.q = cfg.q;
    sc.n = cfg.n;
    sc.K = cfg.K;
    sc.seed = seed;
    require(cfg.p > 1 && cfg.q > 1, ErrorKind::Config, "p and q must be at least 2");
    sc.pi_x = 5.0 / cfg.p;
    sc.pi = 5.0 / cfg.p;
    sc.pi_y = 5.0 / cfg.q;
    const auto preset = parse_run_preset(cfg.preset);
    if (!cfg.structure.empty())
        sc.structure = parse_structure(cfg.structure);
    else if (preset == Preset::Testing || cfg.K != 5)
        sc.structure = StructurePreset::IdenticalPairs;
    sc.diagonal = parse_diagonal_rule(cfg.diagonal);
    if (cfg.within_group_zero >= 0.0)
        sc.within_group_zero = cfg.within_group_zero;
    else if (preset == Preset::Misspec)
        sc.within_group_zero = 0.2;
    validate_sim_config(sc);
    return sc;
}

JmmleConfig fit_config(const RunConfig& cfg, int workers) {
    JmmleConfig jc;
    jc.lambda_grid = cfg.lambda_grid;
    jc.gamma_grid = cfg.gamma_grid;
    jc.eta_grid = cfg.eta_grid;
    jc.one_step = cfg.one_step;
    jc.fit_upper = cfg.fit_upper;
    jc.workers = workers;
    return jc;
}

void check_baseline(const std::string& b) {
    if (b != "none" && b != "separate" && b != "jsem")
        fail(ErrorKind::Config, "unknown baseline '" + b + "' (none, separate, jsem)");
}

/// Lower-layer estimate of the JSEM-only comparator: JSEM on the centered Y alone.
ModelEstimate jsem_only(const MultiDataset& data, const PairPartitions& gy, const RunConfig& cfg) {
    const auto grid = cfg.gamma_grid.empty() ? default_eta_grid(data.q(), data.n()) : cfg.gamma_grid;
    const auto js = fit_jsem(data.Y(), gy, grid);
    ModelEstimate est;
    est.B.assign(data.K(), Matrix::Zero(data.p(), data.q()));
    est.Theta = js.zeta;
    est.OmegaY = js.Omega;
    est.EdgesY = js.edges;
    est.gamma_selected = js.eta_selected;
    est.ridge_used = js.ridge_used;
    est.converged = true;
    return est;
}

ModelEstimate run_fit(const MultiDataset& data, const GroupStructure& gs, const RunConfig& cfg,
                      const std::string& method, int workers) {
    if (method == "jsem") return jsem_only(data, gs.gy, cfg);
    if (method == "separate") return fit(data, GroupStructure::singleton(), fit_config(cfg, workers));
    return fit(data, gs, fit_config(cfg, workers));
}

std::string combined_hash(const RunConfig& cfg, const std::string& upstream) {
    return fnv1a_hex(config_hash(cfg) + "/" + upstream);
}

fs::path require_path(const std::string& value, const char* flag) {
    require(!value.empty(), ErrorKind::Config, std::string(flag) + " is required");
    return fs::path(value);
}

std::string fmt(double v) {
    if (std::isnan(v)) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string cell(const Aggregate& a) {
    if (a.count == 0) return "NA";
    return fmt(a.mean) + "(" + (a.count > 1 ? fmt(a.sd) : "") + ")";
}

json scores_json(const MatrixScores& s) {
    return {{"TPR", s.tpr}, {"TNR", s.tnr}, {"MCC", s.mcc}, {"RF", s.rf}, {"FDP", s.fdp}};
}

json report_json(const TestReport& rep, const GlobalTest& global) {
    std::vector<int> rej;
    for (int j : rep.rejections) rej.push_back(j + 1);
    return {{"row", rep.i + 1},     {"D", global.D},         {"df", global.df},
            {"critical", global.critical}, {"global_reject", global.reject}, {"tau", rep.tau_hat},
            {"d", std::vector<double>(rep.d.data(), rep.d.data() + rep.d.size())},
            {"rejections", rej}};
}

std::vector<int> zero_based_rows(const RunConfig& cfg, int p) {
    std::vector<int> rows;
    for (int r : cfg.rows) {
        require(r >= 1 && r <= p, ErrorKind::Config, "row " + std::to_string(r) + " outside 1.." + std::to_string(p));
        rows.push_back(r - 1);
    }
    return rows;
}

}  // namespace

int cmd_simulate(const RunConfig& cfg) {
    const auto preset = parse_run_preset(cfg.preset);
    const auto hash = config_hash(cfg);
    const fs::path out = require_path(cfg.out, "--out");
    const json extra{{"preset", cfg.preset}, {"config", [&] {
                          json j = to_json(cfg);
                          for (const char* k : {"manifest", "estimate", "tests", "out", "workers"}) j.erase(k);
                          return j;
                      }()}};
    if (preset == Preset::Testing) {
        const auto td = gen_testing_dataset(sim_config(cfg, cfg.seed));
        json alt = extra;
        alt["null"] = "null";
        save_dataset(out, td.alt.data, td.alt.groups, cfg.seed, hash, &td.alt.truth, alt.dump());
        json nul = extra;
        nul["companion_of"] = "..";
        save_dataset(out / "null", td.null.data, td.null.groups, cfg.seed, hash, &td.null.truth, nul.dump());
        std::cout << "simulated testing dataset K=2 n=" << cfg.n << " p=" << cfg.p << " q=" << cfg.q
                  << " seed=" << cfg.seed << " -> " << out.string() << " (null companion in null/, hash " << hash
                  << ")\n";
    } else {
        const auto sim = gen_estimation_dataset(sim_config(cfg, cfg.seed));
        save_dataset(out, sim.data, sim.groups, cfg.seed, hash, &sim.truth, extra.dump());
        std::cout << "simulated " << cfg.preset << " dataset K=" << sim.data.K() << " n=" << cfg.n << " p=" << cfg.p
                  << " q=" << cfg.q << " seed=" << cfg.seed << " -> " << out.string() << " (hash " << hash << ")\n";
    }
    return 0;
}

int cmd_estimate(const RunConfig& cfg) {
    check_baseline(cfg.baseline);
    const auto ds = load_dataset(require_path(cfg.manifest, "--manifest"));
    const fs::path out = require_path(cfg.out, "--out");
    const auto t0 = std::chrono::steady_clock::now();
    const auto est = run_fit(ds.data, ds.groups, cfg, cfg.baseline, resolve_workers(cfg.workers));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const json extra{{"method", cfg.baseline == "none" ? "jmmle" : cfg.baseline},
                     {"one_step", cfg.one_step},
                     {"wall_time_sec", secs},
                     {"dataset", fs::absolute(ds.root).string()},
                     {"dataset_hash", ds.config_hash}};
    save_estimate(out, est, combined_hash(cfg, ds.config_hash), extra.dump());
    std::cout << "estimated K=" << ds.data.K() << " lambda=" << est.lambda_selected << " gamma=" << est.gamma_selected
              << " iterations=" << est.iterations << " in " << fmt(secs) << " s -> " << out.string() << "\n";
    return 0;
}

int cmd_test(const RunConfig& cfg) {
    const auto ds = load_dataset(require_path(cfg.manifest, "--manifest"));
    const fs::path est_dir = require_path(cfg.estimate, "--estimate");
    const auto est = load_estimate(est_dir);
    const fs::path out = require_path(cfg.out, "--out");
    const auto est_meta = json::parse(read_file(est_dir / "estimate.json"));
    const auto hash = combined_hash(cfg, est_meta.value("config_hash", std::string()));
    const bool pairwise = ds.data.K() == 2 || !cfg.threshold_b;
    json meta{{"alpha", cfg.alpha}, {"global_alpha", cfg.level_global()}, {"config_hash", hash},
              {"estimate", fs::absolute(est_dir).string()}};
    if (pairwise) {
        const auto rows = zero_based_rows(cfg, ds.data.p());
        const auto fdr = test_rows(ds.data, est, cfg.alpha, rows);
        const auto global = cfg.level_global() == cfg.alpha ? fdr : test_rows(ds.data, est, cfg.level_global(), rows);
        json reports = json::array();
        std::ostringstream csv;
        csv << "# config_hash=" << hash << "\nrow,D,df,critical,global_reject,tau,rejections\n";
        for (std::size_t a = 0; a < fdr.reports.size(); ++a) {
            const auto& rep = fdr.reports[a];
            const auto& g = global.reports[a].global;
            reports.push_back(report_json(rep, g));
            csv << rep.i + 1 << ',' << g.D << ',' << g.df << ',' << g.critical << ',' << (g.reject ? 1 : 0) << ','
                << rep.tau_hat << ',';
            for (std::size_t r = 0; r < rep.rejections.size(); ++r) csv << (r ? ";" : "") << rep.rejections[r] + 1;
            csv << '\n';
        }
        meta["ridge_used"] = fdr.ridge_used;
        meta["reports"] = std::move(reports);
        write_file_atomic(out / "tests.csv", csv.str());
        std::size_t rejected = 0;
        for (const auto& r : global.reports) rejected += r.global.reject;
        std::cout << "tested " << fdr.reports.size() << " rows: " << rejected << " global rejections at alpha "
                  << cfg.level_global() << "\n";
    } else {
        std::cout << "K=" << ds.data.K() << ": pairwise tests skipped, thresholding only\n";
    }
    if (cfg.threshold_b) {
        const auto thr = threshold_rows(est, ds.data, cfg.alpha);
        for (std::size_t k = 0; k < thr.size(); ++k)
            write_matrix(out / ("B_thresholded_k" + std::to_string(k + 1) + ".csv"), thr[k], hash);
        meta["thresholded_K"] = thr.size();
        std::cout << "wrote " << thr.size() << " thresholded coefficient matrices\n";
    }
    write_file_atomic(out / "tests.json", meta.dump(2) + "\n");
    return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
    const auto ds = load_dataset(require_path(cfg.manifest, "--manifest"));
    require(ds.truth.has_value(), ErrorKind::Config, "dataset " + ds.root.string() + " has no truth to score against");
    const auto& truth = *ds.truth;
    const fs::path est_dir = require_path(cfg.estimate, "--estimate");
    const auto est = load_estimate(est_dir);
    const fs::path out = require_path(cfg.out, "--out");
    const auto hash = combined_hash(cfg, ds.config_hash);

    json scores;
    std::ostringstream csv;
    csv << "# config_hash=" << hash << "\nMatrix,TPR,TNR,MCC,RF\n";
    auto add = [&](const std::string& name, const MatrixScores& s) {
        scores[name] = scores_json(s);
        csv << name << ',' << fmt(s.tpr) << ',' << fmt(s.tnr) << ',' << fmt(s.mcc) << ',' << fmt(s.rf) << '\n';
    };
    add("B", score_matrices(est.B, truth.B0));
    add("OmegaY", score_matrices(est.OmegaY, truth.OmegaY0, SupportScope::OffDiagonalUpper));
    if (!est.OmegaX.empty()) add("OmegaX", score_matrices(est.OmegaX, truth.OmegaX0, SupportScope::OffDiagonalUpper));
    if (!cfg.tests.empty()) {
        const fs::path tdir = cfg.tests;
        std::vector<Matrix> thr;
        for (int k = 1; fs::exists(tdir / ("B_thresholded_k" + std::to_string(k) + ".csv")); ++k)
            thr.push_back(read_matrix(tdir / ("B_thresholded_k" + std::to_string(k) + ".csv")));
        if (!thr.empty()) add("B_thresholded", score_matrices(thr, truth.B0));
        if (fs::exists(tdir / "tests.json") && truth.D.size() > 0) {
            const json tj = json::parse(read_file(tdir / "tests.json"));
            std::vector<TestReport> reps;
            for (const auto& r : tj.value("reports", json::array())) {
                TestReport rep;
                rep.i = r.at("row").get<int>() - 1;
                rep.global.reject = r.at("global_reject").get<bool>();
                const auto d = r.at("d").get<std::vector<double>>();
                rep.d = Eigen::Map<const Vector>(d.data(), static_cast<Eigen::Index>(d.size()));
                for (int j : r.at("rejections").get<std::vector<int>>()) rep.rejections.push_back(j - 1);
                reps.push_back(std::move(rep));
            }
            if (!reps.empty()) {
                const auto ts = test_summary(reps, truth.D);
                scores["testing"] = {{"global_power", ts.global_power},
                                     {"pairwise_power", ts.pairwise_power},
                                     {"fdr", ts.fdr},
                                     {"alt_rows", ts.alt_rows}};
            }
        }
    }
    scores["config_hash"] = hash;
    write_file_atomic(out / "scores.json", scores.dump(2) + "\n");
    write_file_atomic(out / "scores.csv", csv.str());
    std::cout << csv.str().substr(csv.str().find('\n') + 1);
    return 0;
}

namespace {

struct RepResult {
    bool ok = false;
    std::string error;
    std::exception_ptr exception;
    std::map<std::string, MatrixScores> est;  ///< "Method|Matrix" -> scores
    std::map<std::string, TestingScores> tests;
};

void run_replicate(const RunConfig& cfg, Preset preset, std::uint64_t seed, RepResult& r) {
    const std::vector<std::string> methods = [&] {
        std::vector<std::string> m{"JMMLE"};
        if (cfg.baseline == "separate") m.push_back("Separate");
        if (cfg.baseline == "jsem") m.push_back("JSEM");
        return m;
    }();
    const auto method_key = [](const std::string& m) {
        return m == "JMMLE" ? std::string("none") : m == "Separate" ? std::string("separate") : std::string("jsem");
    };
    auto sc = sim_config(cfg, seed);
    if (preset == Preset::Testing) {
        const auto td = gen_testing_dataset(sc);
        for (const auto& m : methods) {
            if (m == "JSEM") continue;  // the JSEM comparator has no coefficient estimate to test
            RunConfig c = cfg;
            c.fit_upper = true;
            const auto alt = run_fit(td.alt.data, td.alt.groups, c, method_key(m), 1);
            const auto nul = run_fit(td.null.data, td.null.groups, c, method_key(m), 1);
            auto fdr = test_rows(td.alt.data, alt, cfg.alpha).reports;
            const auto glob = test_rows(td.alt.data, alt, cfg.level_global()).reports;
            for (std::size_t a = 0; a < fdr.size(); ++a) fdr[a].global = glob[a].global;
            const auto null_glob = test_rows(td.null.data, nul, cfg.level_global()).reports;
            r.tests[m] = test_summary(fdr, td.alt.truth.D, &null_glob);
        }
    } else {
        const auto sim = gen_estimation_dataset(sc);
        for (const auto& m : methods) {
            RunConfig c = cfg;
            if (preset == Preset::Misspec) c.fit_upper = true;
            const auto est = run_fit(sim.data, sim.groups, c, method_key(m), 1);
            if (m != "JSEM") r.est[m + "|B"] = score_matrices(est.B, sim.truth.B0);
            r.est[m + "|OmegaY"] = score_matrices(est.OmegaY, sim.truth.OmegaY0, SupportScope::OffDiagonalUpper);
            if (preset == Preset::Misspec && m != "JSEM")
                r.est[m + "|B_thresholded"] = score_matrices(threshold_rows(est, sim.data, cfg.alpha), sim.truth.B0);
        }
    }
    r.ok = true;
}

}  // namespace

int cmd_replicate(const RunConfig& cfg) {
    const auto preset = parse_run_preset(cfg.preset);
    check_baseline(cfg.baseline);
    require(cfg.reps >= 1, ErrorKind::Config, "--reps must be at least 1");
    sim_config(cfg, cfg.seed);  // validate before fanning out
    const fs::path out = require_path(cfg.out, "--out");
    const auto hash = config_hash(cfg);

    std::vector<RepResult> results(cfg.reps);
    parallel_for(results.size(), resolve_workers(cfg.workers), [&](std::size_t a) {
        const auto seed = cfg.seed + a;
        try {
            run_replicate(cfg, preset, seed, results[a]);
        } catch (const Error& e) {
            results[a].ok = false;
            results[a].error = e.what();
            results[a].exception = std::current_exception();
        }
    });

    std::ostringstream per, card, failures;
    const std::string head = "# config_hash=" + hash + "\n";
    per << head;
    card << head;
    failures << head << "seed,error\n";
    std::vector<std::uint64_t> failed;
    for (std::size_t a = 0; a < results.size(); ++a)
        if (!results[a].ok) {
            failed.push_back(cfg.seed + a);
            std::string msg = results[a].error;
            for (auto& ch : msg)
                if (ch == ',' || ch == '\n') ch = ';';
            failures << cfg.seed + a << ',' << msg << '\n';
        }

    // Keys in first-seen order of a successful replicate.
    std::vector<std::string> keys;
    for (const auto& r : results) {
        if (!r.ok) continue;
        if (preset == Preset::Testing)
            for (const auto& [k, v] : r.tests) keys.push_back(k);
        else
            for (const auto& [k, v] : r.est) keys.push_back(k);
        break;
    }
    std::sort(keys.begin(), keys.end(), [](const std::string& x, const std::string& y) {
        auto rank = [](const std::string& k) { return k.rfind("JMMLE", 0) == 0 ? 0 : 1; };
        return std::pair(rank(x), x) < std::pair(rank(y), y);
    });

    json summary{{"config_hash", hash}, {"reps", cfg.reps}, {"failed_seeds", failed},
                 {"succeeded", cfg.reps - static_cast<int>(failed.size())}};
    if (preset == Preset::Testing) {
        per << "seed,Method,Power,Size,SimPower,FDR\n";
        card << "Method,Count,Power,Size,SimPower,FDR\n";
        for (const auto& key : keys) {
            std::vector<double> pw, sz, sp, fd;
            for (std::size_t a = 0; a < results.size(); ++a) {
                if (!results[a].ok) continue;
                const auto& t = results[a].tests.at(key);
                pw.push_back(t.global_power);
                sz.push_back(t.global_size);
                sp.push_back(t.pairwise_power);
                fd.push_back(t.fdr);
                per << cfg.seed + a << ',' << key << ',' << fmt(t.global_power) << ',' << fmt(t.global_size) << ','
                    << fmt(t.pairwise_power) << ',' << fmt(t.fdr) << '\n';
            }
            card << key << ',' << pw.size() << ',' << cell(aggregate(pw)) << ',' << cell(aggregate(sz)) << ','
                 << cell(aggregate(sp)) << ',' << cell(aggregate(fd)) << '\n';
        }
    } else {
        const bool with_fdr = preset == Preset::Misspec;
        per << "seed,Method,Matrix,TPR,TNR,MCC,RF" << (with_fdr ? ",FDR" : "") << '\n';
        card << "Method,Matrix,Count,TPR,TNR,MCC,RF" << (with_fdr ? ",FDR" : "") << '\n';
        for (const auto& key : keys) {
            const auto bar = key.find('|');
            const std::string method = key.substr(0, bar), matrix = key.substr(bar + 1);
            std::vector<double> tpr, tnr, mcc, rf, fdp;
            for (std::size_t a = 0; a < results.size(); ++a) {
                if (!results[a].ok) continue;
                const auto& s = results[a].est.at(key);
                tpr.push_back(s.tpr);
                tnr.push_back(s.tnr);
                mcc.push_back(s.mcc);
                rf.push_back(s.rf);
                fdp.push_back(s.fdp);
                per << cfg.seed + a << ',' << method << ',' << matrix << ',' << fmt(s.tpr) << ',' << fmt(s.tnr) << ','
                    << fmt(s.mcc) << ',' << fmt(s.rf);
                if (with_fdr) per << ',' << fmt(s.fdp);
                per << '\n';
            }
            card << method << ',' << matrix << ',' << tpr.size() << ',' << cell(aggregate(tpr)) << ','
                 << cell(aggregate(tnr)) << ',' << cell(aggregate(mcc)) << ',' << cell(aggregate(rf));
            if (with_fdr) card << ',' << cell(aggregate(fdp));
            card << '\n';
        }
    }
    write_file_atomic(out / "replicates.csv", per.str());
    write_file_atomic(out / "scorecard.csv", card.str());
    write_file_atomic(out / "failures.csv", failures.str());
    write_file_atomic(out / "scorecard.json", summary.dump(2) + "\n");
    std::cout << card.str().substr(head.size());
    if (!failed.empty()) std::cout << failed.size() << " of " << cfg.reps << " replicates failed; see failures.csv\n";
    if (failed.size() == results.size()) std::rethrow_exception(results.front().exception);
    return 0;
}

}  // namespace jmmle::cli
