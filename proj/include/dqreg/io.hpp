#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dqreg/fitter.hpp"
#include "dqreg/inference.hpp"
#include "dqreg/simulate.hpp"

namespace dqreg {

using json = nlohmann::ordered_json;

// exit-code buckets for the CLI front
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

struct CsvData {
    Dataset data;
    std::vector<std::string> covariate_names;
    bool log_time = false;
    bool standardized = false;
    std::vector<double> cov_mean, cov_sd;  // filled when standardized
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    for (auto& s : out) {
        std::size_t a = s.find_first_not_of(" \t");
        std::size_t b = s.find_last_not_of(" \t");
        s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
    }
    return out;
}

inline double parse_number(const std::string& s, std::size_t row, const std::string& col) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("row " + std::to_string(row) + ": column '" + col + "' is not numeric: '" + s + "'");
    }
}

}  // namespace detail

// Header row required; columns y and delta by name, every other column is a
// numeric covariate. --log-time applies log to y; --standardize z-scores the
// covariates.
inline CsvData read_csv(const std::string& path, bool log_time, bool standardize) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty CSV file: " + path);
    auto header = detail::split_csv_line(line);
    std::ptrdiff_t iy = -1, id = -1;
    std::vector<std::size_t> icov;
    std::vector<std::string> names;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "y")
            iy = static_cast<std::ptrdiff_t>(c);
        else if (header[c] == "delta")
            id = static_cast<std::ptrdiff_t>(c);
        else {
            icov.push_back(c);
            names.push_back(header[c]);
        }
    }
    if (iy < 0) throw DataError("missing required column 'y'");
    if (id < 0) throw DataError("missing required column 'delta'");

    std::vector<double> ys, xs;
    std::vector<int> ds;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw DataError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(cells.size()));
        double y = detail::parse_number(cells[iy], row, "y");
        if (log_time) {
            if (!(y > 0.0)) throw DataError("row " + std::to_string(row) + ": y must be positive under --log-time");
            y = std::log(y);
        }
        if (!std::isfinite(y)) throw DataError("row " + std::to_string(row) + ": non-finite y");
        double dv = detail::parse_number(cells[id], row, "delta");
        if (dv != 0.0 && dv != 1.0)
            throw DataError("row " + std::to_string(row) + ": delta must be 0 or 1, found " + cells[id]);
        ys.push_back(y);
        ds.push_back(static_cast<int>(dv));
        xs.push_back(1.0);
        for (std::size_t k = 0; k < icov.size(); ++k) {
            double v = detail::parse_number(cells[icov[k]], row, names[k]);
            if (!std::isfinite(v)) throw DataError("row " + std::to_string(row) + ": non-finite covariate");
            xs.push_back(v);
        }
    }
    if (ys.empty()) throw DataError("CSV has a header but no data rows: " + path);

    CsvData out{Dataset({}, {}, {}, 0), names, log_time, false, {}, {}};
    std::size_t p = icov.size();
    if (standardize && p > 0) {
        std::size_t n = ys.size();
        out.cov_mean.assign(p, 0.0);
        out.cov_sd.assign(p, 0.0);
        for (std::size_t j = 0; j < p; ++j) {
            double m = 0.0;
            for (std::size_t i = 0; i < n; ++i) m += xs[i * (p + 1) + 1 + j];
            m /= static_cast<double>(n);
            double ss = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double d = xs[i * (p + 1) + 1 + j] - m;
                ss += d * d;
            }
            double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 1.0;
            if (sd <= 0.0) throw DataError("column '" + names[j] + "' is constant; cannot standardize");
            out.cov_mean[j] = m;
            out.cov_sd[j] = sd;
            for (std::size_t i = 0; i < n; ++i) {
                double& v = xs[i * (p + 1) + 1 + j];
                v = (v - m) / sd;
            }
        }
        out.standardized = true;
    }
    out.data = Dataset(std::move(ys), std::move(ds), std::move(xs), p);
    return out;
}

// ---------------------------------------------------------------------------
// config documents
// ---------------------------------------------------------------------------

namespace detail {

inline void reject_unknown_keys(const json& j, const std::vector<std::string>& allowed,
                                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const auto& k : allowed) ok = ok || it.key() == k;
        if (!ok) throw UsageError("unknown key '" + it.key() + "' in " + where);
    }
}

}  // namespace detail

inline json fit_config_to_json(const FitConfig& fc, bool log_time, bool standardize) {
    json j;
    j["seed"] = fc.seed;
    j["copula"] = family_name(fc.family);
    j["heteroscedastic"] = fc.hetero;
    if (fc.lambda_mode == LambdaMode::Variable)
        j["lambda"] = "free";
    else
        j["lambda"] = fc.lambda_fixed;
    j["max_degree"] = fc.max_degree;
    j["starts"] = fc.starts;
    j["budgets"] = {{"basis", fc.budgets.basis}, {"nm", fc.budgets.nm}, {"constrained", fc.budgets.constrained}};
    j["log_time"] = log_time;
    j["standardize"] = standardize;
    return j;
}

struct ParsedFitConfig {
    FitConfig fit;
    bool log_time = false;
    bool standardize = false;
};

inline ParsedFitConfig fit_config_from_json(const json& raw) {
    json j = raw;
    if (j.contains("kind") && j["kind"] == "fit" && j.contains("config")) j = j["config"];
    detail::reject_unknown_keys(j,
                                {"seed", "copula", "heteroscedastic", "lambda", "max_degree", "starts",
                                 "budgets", "log_time", "standardize"},
                                "fit config");
    ParsedFitConfig out;
    if (j.contains("seed")) out.fit.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("copula")) out.fit.family = family_from_name(j["copula"].get<std::string>());
    if (j.contains("heteroscedastic")) out.fit.hetero = j["heteroscedastic"].get<bool>();
    if (j.contains("lambda")) {
        if (j["lambda"].is_string()) {
            if (j["lambda"] != "free") throw UsageError("lambda must be a number or \"free\"");
            out.fit.lambda_mode = LambdaMode::Variable;
        } else {
            out.fit.lambda_mode = LambdaMode::Fixed;
            out.fit.lambda_fixed = j["lambda"].get<double>();
        }
    }
    if (j.contains("max_degree")) out.fit.max_degree = j["max_degree"].get<int>();
    if (j.contains("starts")) out.fit.starts = j["starts"].get<int>();
    if (j.contains("budgets")) {
        detail::reject_unknown_keys(j["budgets"], {"basis", "nm", "constrained"}, "budgets");
        if (j["budgets"].contains("basis")) out.fit.budgets.basis = j["budgets"]["basis"].get<int>();
        if (j["budgets"].contains("nm")) out.fit.budgets.nm = j["budgets"]["nm"].get<int>();
        if (j["budgets"].contains("constrained"))
            out.fit.budgets.constrained = j["budgets"]["constrained"].get<int>();
    }
    if (j.contains("log_time")) out.log_time = j["log_time"].get<bool>();
    if (j.contains("standardize")) out.standardize = j["standardize"].get<bool>();
    return out;
}

// ---------------------------------------------------------------------------
// result documents
// ---------------------------------------------------------------------------

inline json fit_result_to_json(const FitResult& fr, const CsvData& src, const FitConfig& fc) {
    ModelParams mp = fr.params();
    json j;
    j["kind"] = "fit";
    j["config"] = fit_config_to_json(fc, src.log_time, src.standardized);
    j["data"] = {{"n", src.data.n()}, {"p", src.data.p()}, {"covariates", src.covariate_names}};
    if (src.standardized) {
        j["data"]["standardize"] = {{"mean", src.cov_mean}, {"sd", src.cov_sd}};
    }
    j["degrees"] = {{"m_neg", fr.layout.m_neg}, {"m_pos", fr.layout.m_pos}};
    j["loglik"] = fr.loglik;
    j["aic"] = fr.aic;
    j["q"] = fr.q;
    j["continuity_residual"] = fr.continuity_res;
    json params;
    if (fr.layout.has_theta()) {
        params["copula"] = {{"family", family_name(fr.layout.family)},
                            {"theta", mp.copula.theta},
                            {"tau", theta_to_tau(fr.layout.family, mp.copula.theta)}};
    } else {
        params["copula"] = {{"family", "independence"}};
    }
    params["t"] = {{"beta", mp.t.beta},
                   {"gamma", mp.t.gamma},
                   {"sigma_t0", std::exp(mp.t.gamma[0])},
                   {"lambda", mp.t.eal.lambda()},
                   {"lambda_mode", fr.layout.has_lambda() ? "free" : "fixed"},
                   {"phi_neg", mp.t.eal.phi_neg()},
                   {"phi_pos", mp.t.eal.phi_pos()}};
    params["c"] = {{"alpha", mp.c.alpha}, {"sigma_c", mp.c.sigma_c}};
    j["params"] = params;
    j["packed"] = fr.packed;
    j["convergence"] = {{"small_sample_warning", fr.small_sample_warning}};
    json grid = json::array();
    for (const auto& c : fr.grid)
        grid.push_back({{"m_neg", c.m_neg}, {"m_pos", c.m_pos}, {"loglik", c.loglik}, {"aic", c.aic}});
    j["traces"] = {{"basis_loglik", fr.basis_loglik},
                   {"basis_start_logliks", fr.basis_start_logliks},
                   {"grid", grid},
                   {"final_start_logliks", fr.final_start_logliks}};
    return j;
}

// reconstruct enough of a FitResult from its JSON document to predict quantiles
struct LoadedFit {
    ParamLayout layout;
    FitResult result;
    bool standardized = false;
    std::vector<double> cov_mean, cov_sd;
    double lambda_hat = 0.5;
};

inline LoadedFit fit_result_from_json(const json& j) {
    if (!j.contains("kind") || j["kind"] != "fit") throw DataError("not a fit document");
    LoadedFit out;
    ParamLayout lay;
    lay.family = family_from_name(j["params"]["copula"]["family"].get<std::string>());
    lay.p = j["data"]["p"].get<std::size_t>();
    lay.hetero = j["config"]["heteroscedastic"].get<bool>();
    if (j["config"]["lambda"].is_string())
        lay.lambda_mode = LambdaMode::Variable;
    else {
        lay.lambda_mode = LambdaMode::Fixed;
        lay.lambda_fixed = j["config"]["lambda"].get<double>();
    }
    lay.m_neg = j["degrees"]["m_neg"].get<int>();
    lay.m_pos = j["degrees"]["m_pos"].get<int>();
    out.layout = lay;
    out.result.layout = lay;
    out.result.packed = j["packed"].get<std::vector<double>>();
    if (out.result.packed.size() != lay.size()) throw DataError("fit document: packed length mismatch");
    out.result.loglik = j["loglik"].get<double>();
    out.result.aic = j["aic"].get<double>();
    out.result.q = j["q"].get<std::size_t>();
    if (j["data"].contains("standardize")) {
        out.standardized = true;
        out.cov_mean = j["data"]["standardize"]["mean"].get<std::vector<double>>();
        out.cov_sd = j["data"]["standardize"]["sd"].get<std::vector<double>>();
    }
    out.lambda_hat = j["params"]["t"]["lambda"].get<double>();
    return out;
}

inline json metrics_to_json(const MetricsTable& t) {
    json rec = json::array();
    for (const auto& c : t.cells)
        rec.push_back({{"scenario", t.scenario},
                       {"p", c.p},
                       {"x", c.x},
                       {"true", c.truth},
                       {"avg", c.avg},
                       {"evar10", c.evar10},
                       {"rbias", c.rbias},
                       {"reps", t.reps},
                       {"dropped", t.dropped}});
    json j;
    j["kind"] = "simulate";
    j["scenario"] = t.scenario;
    j["reps"] = t.reps;
    j["dropped"] = t.dropped;
    j["records"] = rec;
    return j;
}

inline std::string format_metrics_table(const MetricsTable& t) {
    std::ostringstream os;
    os << "scenario " << t.scenario << " (" << t.reps << " reps";
    if (t.dropped) os << ", " << t.dropped << " dropped";
    os << ")\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-8s %-6s %10s %10s %10s %10s\n", "p", "x", "true", "avg", "eVarx10",
                  "rBias");
    os << buf;
    for (const auto& c : t.cells) {
        std::snprintf(buf, sizeof(buf), "%-8.2f %-6.2f %10.3f %10.3f %10.3f %+10.3f\n", c.p, c.x, c.truth,
                      c.avg, c.evar10, c.rbias);
        os << buf;
    }
    return os.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << content;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open JSON file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

}  // namespace dqreg
