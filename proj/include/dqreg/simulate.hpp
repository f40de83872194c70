#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dqreg/fitter.hpp"
#include "dqreg/inference.hpp"
#include "dqreg/likelihood.hpp"
#include "dqreg/parallel.hpp"
#include "dqreg/rng.hpp"

namespace dqreg {

// generator margin for T: normal or EAL location-scale on top of the same
// linear predictor / exp-variance structure
struct GeneratorTMargin {
    enum class Kind { Normal, Eal } kind = Kind::Normal;
    std::vector<double> beta;
    std::vector<double> gamma;
    double eal_lambda = 0.5;
    std::vector<double> eal_phi_neg{1.0};
    std::vector<double> eal_phi_pos{1.0};

    double quantile(double p, const std::vector<double>& x) const {
        double mu = dot(x, beta);
        double s = std::exp(dot(x, gamma));
        if (kind == Kind::Normal) return mu + s * norm_quantile(p);
        EalParams e(eal_lambda, eal_phi_neg, eal_phi_pos);
        return mu + s * eal_quantile(e, p);
    }

    double cdf(double y, const std::vector<double>& x) const {
        double mu = dot(x, beta);
        double s = std::exp(dot(x, gamma));
        if (kind == Kind::Normal) return norm_cdf((y - mu) / s);
        EalParams e(eal_lambda, eal_phi_neg, eal_phi_pos);
        return eal_cdf(e, (y - mu) / s);
    }
};

struct ScenarioConfig {
    std::string name = "custom";
    GeneratorTMargin t_margin;
    CMarginParams c_margin;
    CopulaFamily gen_family = CopulaFamily::Frank;
    double gen_tau = 0.5;  // 0 with Independence
    double cov_lo = 0.0, cov_hi = 4.0;
    std::size_t n = 500;
    double target_uncensored = 0.54;  // informational
    FitConfig fit;

    CopulaSpec gen_copula() const {
        if (gen_family == CopulaFamily::Independence) return CopulaSpec{CopulaFamily::Independence, 0.0};
        return make_copula(gen_family, tau_to_theta(gen_family, gen_tau));
    }
};

// conditional-distribution sampling of (T, C) | X through the copula
inline std::pair<double, double> sample_pair(const CopulaSpec& c, const GeneratorTMargin& tm,
                                             const CMarginParams& cm, const std::vector<double>& x, Rng& rng) {
    double u = rng.uniform(), w = rng.uniform();
    double v = inverse_h(c, w, u);
    return {tm.quantile(u, x), c_quantile(cm, v, x)};
}

// per row: draw x, couple the margins, emit (min(t,c), I(t<=c), x)
inline Dataset generate_dataset(const ScenarioConfig& sc, std::uint64_t seed) {
    Rng rng(derive_seed(seed, Stream::Dataset));
    CopulaSpec cop = sc.gen_copula();
    std::vector<double> y, xs;
    std::vector<int> d;
    std::vector<double> x{1.0, 0.0};
    for (std::size_t i = 0; i < sc.n; ++i) {
        x[1] = rng.uniform(sc.cov_lo, sc.cov_hi);
        auto [t, c] = sample_pair(cop, sc.t_margin, sc.c_margin, x, rng);
        y.push_back(std::min(t, c));
        d.push_back(t <= c ? 1 : 0);
        xs.push_back(1.0);
        xs.push_back(x[1]);
    }
    return Dataset(std::move(y), std::move(d), std::move(xs), 1);
}

// ---------------------------------------------------------------------------
// named subscenarios (Scenario 1 family)
// ---------------------------------------------------------------------------

inline std::vector<std::string> scenario_names() {
    return {"basis-het", "basis-hom", "less-cens", "more-cens", "size-s",    "size-l",
            "size-xl",   "less-dep",  "more-dep",  "fit-pos",   "hom-0.3",   "hom-0.7",
            "fit-indep", "gen-indep", "all-indep", "fit-indep-hom", "mscop-het", "mscop-hom"};
}

inline ScenarioConfig scenario_by_name(const std::string& name) {
    ScenarioConfig sc;
    sc.name = name;
    sc.t_margin.kind = GeneratorTMargin::Kind::Normal;
    sc.t_margin.beta = {2.8, 0.6};
    sc.t_margin.gamma = {-1.5, 0.45};
    sc.c_margin = CMarginParams{{3.15, 0.45}, 0.8};
    sc.gen_family = CopulaFamily::Frank;
    sc.gen_tau = 0.5;
    sc.n = 500;
    sc.target_uncensored = 0.54;
    sc.fit.family = CopulaFamily::Frank;
    sc.fit.hetero = true;
    sc.fit.lambda_mode = LambdaMode::Variable;

    auto homoscedastic = [&](double lambda_fixed) {
        sc.t_margin.gamma = {-1.7, 0.0};
        sc.gen_family = CopulaFamily::Clayton;
        sc.fit.family = CopulaFamily::Clayton;
        sc.fit.hetero = false;
        sc.fit.lambda_mode = LambdaMode::Fixed;
        sc.fit.lambda_fixed = lambda_fixed;
        sc.target_uncensored = 0.51;
    };

    if (name == "basis-het") {
    } else if (name == "basis-hom") {
        homoscedastic(0.5);
    } else if (name == "less-cens") {
        sc.c_margin.alpha[0] = 3.5;
        sc.target_uncensored = 0.74;
    } else if (name == "more-cens") {
        sc.c_margin.alpha[0] = 2.85;
        sc.target_uncensored = 0.35;
    } else if (name == "size-s") {
        sc.n = 250;
    } else if (name == "size-l") {
        sc.n = 1000;
    } else if (name == "size-xl") {
        sc.n = 2000;
    } else if (name == "less-dep") {
        sc.gen_tau = 0.25;
    } else if (name == "more-dep") {
        sc.gen_tau = 0.75;
    } else if (name == "fit-pos") {
        sc.fit.family = CopulaFamily::FrankPos;
    } else if (name == "hom-0.3") {
        homoscedastic(0.3);
    } else if (name == "hom-0.7") {
        homoscedastic(0.7);
    } else if (name == "fit-indep") {
        sc.fit.family = CopulaFamily::Independence;
    } else if (name == "gen-indep") {
        sc.gen_family = CopulaFamily::Independence;
        sc.gen_tau = 0.0;
        sc.target_uncensored = 0.53;
    } else if (name == "all-indep") {
        sc.gen_family = CopulaFamily::Independence;
        sc.gen_tau = 0.0;
        sc.fit.family = CopulaFamily::Independence;
        sc.target_uncensored = 0.53;
    } else if (name == "fit-indep-hom") {
        homoscedastic(0.5);
        sc.fit.family = CopulaFamily::Independence;
    } else if (name == "mscop-het") {
        sc.fit.family = CopulaFamily::Gumbel;
    } else if (name == "mscop-hom") {
        homoscedastic(0.5);
        sc.fit.family = CopulaFamily::Gumbel;
    } else {
        throw std::invalid_argument("unknown scenario: " + name);
    }
    return sc;
}

// ---------------------------------------------------------------------------
// replication studies
// ---------------------------------------------------------------------------

struct MetricCell {
    double p = 0.0;
    double x = 0.0;
    double truth = 0.0;
    double avg = 0.0;
    double evar10 = 0.0;
    double rbias = 0.0;
};

struct MetricsTable {
    std::string scenario;
    std::vector<double> levels;
    std::vector<double> xs;
    std::vector<MetricCell> cells;  // levels-major, xs-minor
    std::size_t reps = 0;
    std::size_t dropped = 0;
};

// pure aggregation: truth per cell plus per-replication quantile estimates
inline MetricsTable aggregate_metrics(const std::string& scenario, const std::vector<double>& levels,
                                      const std::vector<double>& xs, const std::vector<double>& truths,
                                      const std::vector<std::vector<double>>& rep_quantiles,
                                      std::size_t dropped) {
    MetricsTable tab;
    tab.scenario = scenario;
    tab.levels = levels;
    tab.xs = xs;
    tab.reps = rep_quantiles.size();
    tab.dropped = dropped;
    std::size_t ncell = truths.size();
    for (std::size_t c = 0; c < ncell; ++c) {
        MetricCell cell;
        cell.p = levels[c / xs.size()];
        cell.x = xs[c % xs.size()];
        cell.truth = truths[c];
        std::vector<double> vals;
        vals.reserve(rep_quantiles.size());
        for (const auto& r : rep_quantiles) vals.push_back(r[c]);
        double m = pairwise_sum(vals) / static_cast<double>(vals.size());
        double ss = 0.0;
        for (double v : vals) ss += (v - m) * (v - m);
        cell.avg = m;
        cell.evar10 = vals.size() > 1 ? 10.0 * ss / static_cast<double>(vals.size() - 1) : 0.0;
        cell.rbias = (m - cell.truth) / cell.truth;
        tab.cells.push_back(cell);
    }
    return tab;
}

// Replications run concurrently under derived seeds; failed fits are dropped
// and counted. Quantile grid defaults to the quartiles at x~ in {1,2,3}.
inline MetricsTable run_scenario(const ScenarioConfig& sc, std::size_t reps,
                                 const std::vector<double>& levels = {0.25, 0.5, 0.75},
                                 const std::vector<double>& xs = {1.0, 2.0, 3.0}, std::uint64_t seed = 1,
                                 unsigned threads = 1) {
    if (reps < 2) throw std::invalid_argument("run_scenario: reps must be >= 2");

    std::vector<double> truths;
    for (double p : levels)
        for (double xv : xs) truths.push_back(sc.t_margin.quantile(p, {1.0, xv}));

    struct RepOut {
        bool ok = false;
        std::vector<double> q;
    };
    std::vector<RepOut> outs(reps);
    parallel_for(reps, threads, [&](std::size_t r) {
        try {
            Dataset data = generate_dataset(sc, derive_seed(seed, Stream::Replication, r));
            FitConfig fc = sc.fit;
            fc.seed = derive_seed(seed, Stream::Replication, r, 1);
            fc.threads = 1;  // parallelism lives at the replication level here
            FitResult fr = fit(data, fc);
            RepOut ro;
            ro.ok = true;
            for (double p : levels)
                for (double xv : xs) ro.q.push_back(predict_quantile(fr, p, {1.0, xv}));
            outs[r] = std::move(ro);
        } catch (const std::exception&) {
            outs[r].ok = false;
        }
    });

    std::vector<std::vector<double>> kept;
    std::size_t dropped = 0;
    for (auto& o : outs)
        (o.ok ? void(kept.push_back(std::move(o.q))) : void(++dropped));
    if (kept.size() < 2) throw std::runtime_error("run_scenario: fewer than two successful replications");
    return aggregate_metrics(sc.name, levels, xs, truths, kept, dropped);
}

}  // namespace dqreg
