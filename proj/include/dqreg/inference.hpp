#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dqreg/fitter.hpp"
#include "dqreg/likelihood.hpp"
#include "dqreg/parallel.hpp"
#include "dqreg/rng.hpp"

namespace dqreg {

struct QuantileRequest {
    std::vector<double> levels;            // in (0,1)
    std::vector<std::vector<double>> xs;   // covariate points with intercept 1

    void validate() const {
        for (double p : levels)
            if (!(p > 0.0 && p < 1.0)) throw std::domain_error("QuantileRequest: level outside (0,1)");
    }
};

// x'beta + sigma(x;gamma) Q_eps(p); one fit serves every level
inline double predict_quantile(const FitResult& fr, double p, const std::vector<double>& x) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("predict_quantile: p outside (0,1)");
    ModelParams mp = fr.params();
    return t_quantile(mp.t, p, x);
}

// ---------------------------------------------------------------------------
// bootstrap standard errors
// ---------------------------------------------------------------------------

struct BootstrapResult {
    std::size_t requested = 0;
    std::size_t used = 0;
    std::size_t dropped = 0;
    // natural-scale parameter SEs; Laguerre coefficients are omitted since
    // their dimension varies across replications
    std::map<std::string, double> param_se;
    // [level][x point]
    std::vector<std::vector<double>> quantile_se;
};

using IndexSampler = std::function<std::vector<std::size_t>(std::size_t n, Rng& rng)>;

inline std::vector<std::size_t> resample_with_replacement(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = rng.index(n);
    return idx;
}

namespace detail {

inline std::map<std::string, double> natural_param_map(const FitResult& fr) {
    ModelParams mp = fr.params();
    std::map<std::string, double> m;
    if (fr.layout.has_theta()) {
        m["theta"] = mp.copula.theta;
        m["tau"] = theta_to_tau(fr.layout.family, mp.copula.theta);
    }
    for (std::size_t i = 0; i < mp.t.beta.size(); ++i) m["beta" + std::to_string(i)] = mp.t.beta[i];
    if (fr.layout.hetero) {
        for (std::size_t i = 0; i < mp.t.gamma.size(); ++i) m["gamma" + std::to_string(i)] = mp.t.gamma[i];
    } else {
        m["sigma_t"] = std::exp(mp.t.gamma[0]);
    }
    if (fr.layout.has_lambda()) m["lambda"] = mp.t.eal.lambda();
    for (std::size_t i = 0; i < mp.c.alpha.size(); ++i) m["alpha" + std::to_string(i)] = mp.c.alpha[i];
    m["sigma_c"] = mp.c.sigma_c;
    return m;
}

inline double sd_from(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = pairwise_sum(v) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace detail

// Nonparametric row resampling; each replication reruns the full fit,
// including degree selection. Replication seeds derive from the master seed;
// failed replications are dropped and counted, erroring past 20%.
inline BootstrapResult bootstrap_se(const Dataset& data, const FitConfig& config, std::size_t B,
                                    std::uint64_t seed, const QuantileRequest& req = {},
                                    unsigned threads = 1,
                                    const IndexSampler& sampler = resample_with_replacement) {
    if (B < 2) throw std::invalid_argument("bootstrap_se: B must be >= 2");
    req.validate();

    struct RepOut {
        bool ok = false;
        std::map<std::string, double> params;
        std::vector<double> quantiles;  // levels-major over req
    };
    std::vector<RepOut> outs(B);
    parallel_for(B, threads, [&](std::size_t b) {
        try {
            Rng rng(derive_seed(seed, Stream::Bootstrap, b));
            Dataset resampled = data.subset(sampler(data.n(), rng));
            FitConfig fc = config;
            fc.seed = derive_seed(seed, Stream::Bootstrap, b, 1);
            fc.threads = 1;
            FitResult fr = fit(resampled, fc);
            RepOut ro;
            ro.ok = true;
            ro.params = detail::natural_param_map(fr);
            for (double p : req.levels)
                for (const auto& x : req.xs) ro.quantiles.push_back(predict_quantile(fr, p, x));
            outs[b] = std::move(ro);
        } catch (const std::exception&) {
            outs[b].ok = false;
        }
    });

    BootstrapResult out;
    out.requested = B;
    for (const auto& o : outs) (o.ok ? ++out.used : ++out.dropped);
    if (out.dropped * 5 > B) throw std::runtime_error("bootstrap_se: more than 20% of replications failed");

    // aggregate in replication order (stable under any thread count)
    std::vector<std::string> keys;
    for (const auto& o : outs)
        if (o.ok) {
            for (const auto& kv : o.params) keys.push_back(kv.first);
            break;
        }
    for (const auto& key : keys) {
        std::vector<double> vals;
        for (const auto& o : outs)
            if (o.ok) vals.push_back(o.params.at(key));
        out.param_se[key] = detail::sd_from(vals);
    }
    out.quantile_se.assign(req.levels.size(), std::vector<double>(req.xs.size(), 0.0));
    for (std::size_t li = 0; li < req.levels.size(); ++li)
        for (std::size_t xi = 0; xi < req.xs.size(); ++xi) {
            std::vector<double> vals;
            for (const auto& o : outs)
                if (o.ok) vals.push_back(o.quantiles[li * req.xs.size() + xi]);
            out.quantile_se[li][xi] = detail::sd_from(vals);
        }
    return out;
}

// ---------------------------------------------------------------------------
// likelihood-ratio comparison via AIC bookkeeping
// ---------------------------------------------------------------------------

struct LrtResult {
    double statistic = 0.0;
    double critical_value_95 = 0.0;
    bool reject = false;
};

// Statistic from the published AIC computation: the AIC difference corrected
// once for the parameter-count difference, referred to chi^2_{df,0.95}.
inline LrtResult lrt(double aic_nested, std::size_t q_nested, double aic_full, std::size_t q_full, int df) {
    if (df <= 0) throw std::domain_error("lrt: df must be positive");
    LrtResult r;
    r.statistic = (aic_nested - aic_full) -
                  (static_cast<double>(q_nested) - static_cast<double>(q_full));
    r.critical_value_95 = chi2_quantile(df, 0.95);
    r.reject = r.statistic > r.critical_value_95;
    return r;
}

inline LrtResult lrt(const FitResult& nested, const FitResult& full, int df) {
    return lrt(nested.aic, nested.q, full.aic, full.q, df);
}

// ---------------------------------------------------------------------------
// h-function limit diagnostics
// ---------------------------------------------------------------------------

enum class LimitDirection { Lower, Upper };

struct HLimitDiagnostic {
    std::vector<double> ys;
    std::vector<double> h_t_given_c;  // h_{T|C}(F_T | F_C) along the grid
    std::vector<double> h_c_given_t;  // h_{C|T}(F_C | F_T) along the grid
    bool tc_vanishing = false;
    bool ct_vanishing = false;
};

namespace detail {

// log-domain h-functions: both PITs supplied as log u, log v so the deep
// tails stay resolved far beyond double-precision CDF underflow
inline double h_tc_from_logs(const CopulaSpec& c, double lu, double lv) {
    if (is_independent(c)) return std::exp(lu);
    switch (c.family) {
        case CopulaFamily::Frank:
        case CopulaFamily::FrankPos: {
            double th = c.theta;
            if (lu < -36.0) {
                // first-argument PIT below double resolution: h ~ th u e^{-th v} / (1 - e^{-th})
                double v = std::exp(lv);
                return std::exp(std::log(th / (1.0 - std::exp(-th))) + lu - th * v);
            }
            double u = std::exp(lu), v = std::exp(lv);
            double r = std::exp(th * (v - u)) * std::expm1(-th * (1.0 - u)) / std::expm1(-th * u);
            return 1.0 / (1.0 + r);
        }
        case CopulaFamily::Clayton: {
            double th = c.theta;
            double a = -th * lu, b = -th * lv;  // log u^{-th}, log v^{-th}
            double mx = std::max(a, b);
            double ls = mx + std::log(std::exp(a - mx) + std::exp(b - mx) - std::exp(-mx));
            return std::exp(-(th + 1.0) * lv - (1.0 / th + 1.0) * ls);
        }
        case CopulaFamily::Gumbel: {
            double th = c.theta, a = -lu, b = -lv;
            double t = std::pow(1.0 + std::pow(a / b, th), 1.0 / th);  // s^{1/th} = b t
            return std::exp(-b * t + b + (1.0 - th) * std::log(t));
        }
        default:
            return std::exp(lu);
    }
}

inline double h_ct_from_logs(const CopulaSpec& c, double lv, double lu) { return h_tc_from_logs(c, lv, lu); }

inline bool vanishing_verdict(const std::vector<double>& seq) {
    for (std::size_t i = 1; i < seq.size(); ++i)
        if (seq[i] > seq[i - 1] + 1e-12) return false;
    return seq.back() < 1e-3;
}

}  // namespace detail

// March y toward the limit and record both conditional h-sequences. Lower
// direction: y = mu_C - k sigma_C for k in [5, 40]. Upper direction (the
// bounded-support regime the Gumbel family needs): the censoring margin is
// truncated at M_r = mu_C + sigma_C and the grid closes in geometrically.
inline HLimitDiagnostic h_limit_diagnostic(const CopulaSpec& c, const TMarginParams& tp,
                                           const CMarginParams& cp, const std::vector<double>& x,
                                           LimitDirection direction) {
    HLimitDiagnostic out;
    double mu_c = dot(x, cp.alpha), sd_c = cp.sigma_c;
    double mu_t = dot(x, tp.beta), sd_t = tp.sigma(x);
    const int npts = 20;

    auto log_ft = [&](double y) {  // log F_T; the EAL lower tail is exponential
        double z = (y - mu_t) / sd_t;
        double f = eal_cdf(tp.eal, z);
        if (f > 1e-280) return std::log(f);
        // beyond CDF underflow: F(z) ~ lam c_top zz^{2m~} e^{-zz} / ||phi~||^2
        double lam = tp.eal.lambda();
        double zz = (lam - 1.0) * z;
        const auto& cc = tp.eal.sq_neg();
        double lead = std::max(cc.back(), 1e-300);
        return std::log(lam) + std::log(lead / tp.eal.norm_neg()) +
               static_cast<double>(cc.size() - 1) * std::log(zz) - zz;
    };

    if (direction == LimitDirection::Lower) {
        for (int j = 0; j < npts; ++j) {
            double k = 5.0 + 35.0 * j / (npts - 1.0);
            double y = mu_c - k * sd_c;
            out.ys.push_back(y);
            double lu = log_ft(y);
            double lv = norm_log_cdf((y - mu_c) / sd_c);
            out.h_t_given_c.push_back(detail::h_tc_from_logs(c, lu, lv));
            out.h_c_given_t.push_back(detail::h_ct_from_logs(c, lv, lu));
        }
    } else {
        double m_r = mu_c + sd_c;  // truncation point standing in for a bounded support
        double log_fc_mr = norm_log_cdf((m_r - mu_c) / sd_c);
        for (int j = 0; j < npts; ++j) {
            double eps = std::pow(10.0, -0.5 * (j + 1));  // sigma units, 10^-0.5 .. 10^-10
            double y = m_r - eps * sd_c;
            out.ys.push_back(y);
            double lu = log_ft(y);
            double lv = norm_log_cdf((y - mu_c) / sd_c) - log_fc_mr;  // truncated C margin
            out.h_t_given_c.push_back(detail::h_tc_from_logs(c, lu, lv));
            out.h_c_given_t.push_back(detail::h_ct_from_logs(c, lv, lu));
        }
    }
    out.tc_vanishing = detail::vanishing_verdict(out.h_t_given_c);
    out.ct_vanishing = detail::vanishing_verdict(out.h_c_given_t);
    return out;
}

}  // namespace dqreg
