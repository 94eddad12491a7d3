#include "jmmle/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "jmmle/errors.hpp"

namespace jmmle {

using nlohmann::json;

namespace {

std::string kname(std::string_view stem, int k) { return std::string(stem) + "_k" + std::to_string(k + 1) + ".csv"; }

json parse_json(std::string_view text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, source + ": invalid JSON: " + e.what());
    }
}

json merged(std::string_view extra, json base) {
    const json add = parse_json(extra, "metadata");
    require(add.is_object(), ErrorKind::InvalidArgument, "extra metadata must be a JSON object");
    for (auto it = add.begin(); it != add.end(); ++it) base[it.key()] = it.value();
    return base;
}

void append_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

std::vector<Matrix> read_series(const fs::path& dir, std::string_view stem, int K) {
    std::vector<Matrix> out;
    for (int k = 0; k < K; ++k) out.push_back(read_matrix(dir / kname(stem, k)));
    return out;
}

void write_series(const fs::path& dir, std::string_view stem, const std::vector<Matrix>& ms, std::string_view hash) {
    for (std::size_t k = 0; k < ms.size(); ++k) write_matrix(dir / kname(stem, static_cast<int>(k)), ms[k], hash);
}

std::vector<Matrix> adjacency_series(const std::vector<Adjacency>& a) {
    std::vector<Matrix> out;
    for (const auto& e : a) out.push_back(adjacency_to_matrix(e));
    return out;
}

std::vector<Adjacency> adjacency_series(const std::vector<Matrix>& m) {
    std::vector<Adjacency> out;
    for (const auto& e : m) out.push_back(adjacency_from_matrix(e));
    return out;
}

}  // namespace

std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec) fail(ErrorKind::Io, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) fail(ErrorKind::Io, "write failed for " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) fail(ErrorKind::Io, "cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string matrix_to_csv(const Matrix& m, std::string_view config_hash, std::string_view column_prefix) {
    std::string out = "# config_hash=";
    out += config_hash;
    out += '\n';
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (c) out += ',';
        out += column_prefix;
        out += std::to_string(c + 1);
    }
    out += '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out += ',';
            append_double(out, m(r, c));
        }
        out += '\n';
    }
    return out;
}

Matrix matrix_from_csv(std::string_view text, const std::string& source) {
    std::vector<std::vector<double>> rows;
    bool header_seen = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::vector<double> vals;
        std::size_t a = 0;
        while (a <= line.size()) {
            std::size_t b = line.find(',', a);
            if (b == std::string_view::npos) b = line.size();
            std::string_view cell = line.substr(a, b - a);
            while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
            while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
                fail(ErrorKind::Io, source + ":" + std::to_string(line_no) + ": cannot parse '" + std::string(cell) + "'");
            vals.push_back(v);
            a = b + 1;
        }
        if (!rows.empty() && vals.size() != rows.front().size())
            fail(ErrorKind::Io, source + ":" + std::to_string(line_no) + ": expected " +
                                    std::to_string(rows.front().size()) + " columns, got " + std::to_string(vals.size()));
        rows.push_back(std::move(vals));
    }
    if (!header_seen) fail(ErrorKind::Io, source + ": missing header row");
    if (rows.empty()) return Matrix(0, 0);
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    return m;
}

void write_matrix(const fs::path& path, const Matrix& m, std::string_view config_hash, std::string_view column_prefix) {
    write_file_atomic(path, matrix_to_csv(m, config_hash, column_prefix));
}

Matrix read_matrix(const fs::path& path) { return matrix_from_csv(read_file(path), path.string()); }

std::string read_config_hash(const fs::path& path) {
    const std::string text = read_file(path);
    const std::string key = "# config_hash=";
    if (text.rfind(key, 0) != 0) return {};
    const auto end = text.find('\n');
    return text.substr(key.size(), end == std::string::npos ? std::string::npos : end - key.size());
}

Matrix adjacency_to_matrix(const Adjacency& a) { return a.cast<double>(); }

Adjacency adjacency_from_matrix(const Matrix& m) { return (m.array() != 0.0).matrix(); }

std::vector<Matrix> neighborhoods_to_square(const std::vector<Matrix>& coef) {
    const int dim = static_cast<int>(coef.size());
    if (dim == 0) return {};
    const int K = static_cast<int>(coef.front().cols());
    std::vector<Matrix> out(K, Matrix::Zero(dim, dim));
    for (int d = 0; d < dim; ++d)
        for (int r = 0; r < dim - 1; ++r)
            for (int k = 0; k < K; ++k) out[k](d, neighbor_of(d, r)) = coef[d](r, k);
    return out;
}

std::vector<Matrix> neighborhoods_from_square(const std::vector<Matrix>& square) {
    if (square.empty()) return {};
    const int K = static_cast<int>(square.size());
    const int dim = static_cast<int>(square.front().rows());
    std::vector<Matrix> out(dim, Matrix::Zero(dim - 1, K));
    for (int k = 0; k < K; ++k) {
        require(square[k].rows() == dim && square[k].cols() == dim, ErrorKind::ShapeMismatch,
                "neighborhood matrices must be square and equal in size");
        for (int d = 0; d < dim; ++d)
            for (int r = 0; r < dim - 1; ++r) out[d](r, k) = square[k](d, neighbor_of(d, r));
    }
    return out;
}

void save_truth(const fs::path& dir, const SimTruth& t, std::string_view hash) {
    write_series(dir, "B0", t.B0, hash);
    write_series(dir, "OmegaX0", t.OmegaX0, hash);
    write_series(dir, "OmegaY0", t.OmegaY0, hash);
    write_series(dir, "SigmaX0", t.SigmaX0, hash);
    write_series(dir, "SigmaY0", t.SigmaY0, hash);
    if (t.D.size() > 0) write_matrix(dir / "D.csv", t.D, hash);
    json meta{{"seed", t.seed}, {"pi_x", t.pi_x}, {"pi_y", t.pi_y}, {"pi", t.pi}, {"K", t.B0.size()},
              {"config_hash", hash}};
    write_file_atomic(dir / "truth.json", meta.dump(2) + "\n");
}

SimTruth load_truth(const fs::path& dir, int K) {
    SimTruth t;
    t.B0 = read_series(dir, "B0", K);
    t.OmegaX0 = read_series(dir, "OmegaX0", K);
    t.OmegaY0 = read_series(dir, "OmegaY0", K);
    t.SigmaX0 = read_series(dir, "SigmaX0", K);
    t.SigmaY0 = read_series(dir, "SigmaY0", K);
    for (const auto& o : t.OmegaX0) t.EdgesX0.push_back(support_of(o));
    for (const auto& o : t.OmegaY0) t.EdgesY0.push_back(support_of(o));
    if (fs::exists(dir / "D.csv")) t.D = read_matrix(dir / "D.csv");
    if (fs::exists(dir / "truth.json")) {
        const json meta = parse_json(read_file(dir / "truth.json"), (dir / "truth.json").string());
        t.seed = meta.value("seed", std::uint64_t{0});
        t.pi_x = meta.value("pi_x", 0.0);
        t.pi_y = meta.value("pi_y", 0.0);
        t.pi = meta.value("pi", 0.0);
    }
    return t;
}

void save_dataset(const fs::path& dir, const MultiDataset& data, const GroupStructure& groups, std::uint64_t seed,
                  std::string_view hash, const SimTruth* truth, std::string_view extra_json) {
    json x = json::array(), y = json::array();
    for (int k = 0; k < data.K(); ++k) {
        write_matrix(dir / kname("X", k), data.X(k), hash, "X");
        write_matrix(dir / kname("Y", k), data.Y(k), hash, "Y");
        x.push_back(kname("X", k));
        y.push_back(kname("Y", k));
    }
    json m{{"n", data.n()}, {"p", data.p()}, {"q", data.q()}, {"K", data.K()}, {"seed", seed},
           {"config_hash", hash}, {"x", x}, {"y", y}, {"groups", json::parse(groups_to_json(groups))}};
    if (truth) {
        save_truth(dir / "truth", *truth, hash);
        m["truth"] = "truth";
    }
    write_file_atomic(dir / "manifest.json", merged(extra_json, m).dump(2) + "\n");
}

LoadedDataset load_dataset(const fs::path& manifest) {
    fs::path file = manifest;
    if (fs::is_directory(file)) file /= "manifest.json";
    const fs::path root = file.parent_path();
    const json m = parse_json(read_file(file), file.string());
    try {
        const int K = m.at("K").get<int>();
        std::vector<Matrix> X, Y;
        for (int k = 0; k < K; ++k) {
            X.push_back(read_matrix(root / m.at("x").at(k).get<std::string>()));
            Y.push_back(read_matrix(root / m.at("y").at(k).get<std::string>()));
        }
        LoadedDataset out{MultiDataset::from_matrices(std::move(X), std::move(Y)),
                          m.contains("groups") ? groups_from_json(m.at("groups").dump()) : GroupStructure::all_shared(),
                          m.value("seed", std::uint64_t{0}),
                          m.value("config_hash", std::string{}),
                          root,
                          std::nullopt,
                          std::nullopt};
        require(out.data.n() == m.at("n").get<int>() && out.data.p() == m.at("p").get<int>() &&
                    out.data.q() == m.at("q").get<int>(),
                ErrorKind::ShapeMismatch, file.string() + ": matrix shapes disagree with the manifest");
        if (m.contains("truth") && m.at("truth").is_string()) out.truth = load_truth(root / m.at("truth").get<std::string>(), K);
        if (m.contains("null") && m.at("null").is_string()) out.null_dir = root / m.at("null").get<std::string>();
        return out;
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, file.string() + ": malformed manifest: " + e.what());
    }
}

void save_estimate(const fs::path& dir, const ModelEstimate& est, std::string_view hash, std::string_view extra_json) {
    write_series(dir, "B", est.B, hash);
    write_series(dir, "Theta", neighborhoods_to_square(est.Theta), hash);
    write_series(dir, "OmegaY", est.OmegaY, hash);
    write_series(dir, "EdgesY", adjacency_series(est.EdgesY), hash);
    write_series(dir, "OmegaX", est.OmegaX, hash);
    write_series(dir, "EdgesX", adjacency_series(est.EdgesX), hash);
    write_series(dir, "zeta", neighborhoods_to_square(est.zeta), hash);
    json path = json::array();
    for (const auto& l : est.lambda_path)
        path.push_back({{"lambda", l.lambda}, {"gamma", l.gamma}, {"hbic", l.hbic}, {"iterations", l.iterations},
                        {"converged", l.converged}});
    json meta{{"K", est.B.size()},
              {"p", est.B.empty() ? 0 : est.B.front().rows()},
              {"q", est.B.empty() ? 0 : est.B.front().cols()},
              {"lambda_selected", est.lambda_selected},
              {"gamma_selected", est.gamma_selected},
              {"eta_selected", est.eta_selected},
              {"iterations", est.iterations},
              {"converged", est.converged},
              {"ridge_used", est.ridge_used},
              {"has_upper_layer", !est.zeta.empty()},
              {"lambda_path", path},
              {"config_hash", hash}};
    write_file_atomic(dir / "estimate.json", merged(extra_json, meta).dump(2) + "\n");
}

ModelEstimate load_estimate(const fs::path& dir) {
    const fs::path file = dir / "estimate.json";
    const json meta = parse_json(read_file(file), file.string());
    ModelEstimate est;
    try {
        const int K = meta.at("K").get<int>();
        est.B = read_series(dir, "B", K);
        est.Theta = neighborhoods_from_square(read_series(dir, "Theta", K));
        est.OmegaY = read_series(dir, "OmegaY", K);
        est.EdgesY = adjacency_series(read_series(dir, "EdgesY", K));
        if (meta.value("has_upper_layer", false)) {
            est.OmegaX = read_series(dir, "OmegaX", K);
            est.EdgesX = adjacency_series(read_series(dir, "EdgesX", K));
            est.zeta = neighborhoods_from_square(read_series(dir, "zeta", K));
        }
        est.lambda_selected = meta.at("lambda_selected").get<double>();
        est.gamma_selected = meta.at("gamma_selected").get<double>();
        est.eta_selected = meta.value("eta_selected", 0.0);
        est.iterations = meta.value("iterations", 0);
        est.converged = meta.value("converged", false);
        est.ridge_used = meta.value("ridge_used", false);
        for (const auto& l : meta.value("lambda_path", json::array()))
            est.lambda_path.push_back({l.at("lambda").get<double>(), l.at("gamma").get<double>(),
                                       l.at("hbic").get<double>(), l.at("iterations").get<int>(),
                                       l.at("converged").get<bool>()});
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, file.string() + ": malformed estimate metadata: " + e.what());
    }
    return est;
}

}  // namespace jmmle
