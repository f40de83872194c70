#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dqreg/likelihood.hpp"
#include "dqreg/optimizer.hpp"
#include "dqreg/parallel.hpp"
#include "dqreg/rng.hpp"

namespace dqreg {

struct OptBudgets {
    int basis = 500;        // basis step, plain NM
    int nm = 400;           // nmcob unconstrained phase
    int constrained = 100;  // nmcob constrained phase
};

struct FitConfig {
    CopulaFamily family = CopulaFamily::Frank;
    bool hetero = true;
    LambdaMode lambda_mode = LambdaMode::Variable;
    double lambda_fixed = 0.5;
    int max_degree = 4;
    int starts = 10;
    std::uint64_t seed = 1;
    OptBudgets budgets;
    unsigned threads = 1;

    void validate() const {
        if (!hetero && lambda_mode == LambdaMode::Variable)
            throw std::invalid_argument("config: the homoscedastic model requires a fixed lambda");
        if (lambda_mode == LambdaMode::Fixed && !(lambda_fixed > 0.0 && lambda_fixed < 1.0))
            throw std::invalid_argument("config: fixed lambda must lie in (0,1)");
        if (max_degree < 0 || max_degree > 10) throw std::invalid_argument("config: max_degree outside [0,10]");
        if (starts < 1) throw std::invalid_argument("config: starts must be >= 1");
        if (budgets.basis < 1 || budgets.nm < 1 || budgets.constrained < 1)
            throw std::invalid_argument("config: iteration budgets must be positive");
    }

    ParamLayout layout(std::size_t p, int m_neg, int m_pos) const {
        ParamLayout lay;
        lay.family = family;
        lay.p = p;
        lay.hetero = hetero;
        lay.lambda_mode = lambda_mode;
        lay.lambda_fixed = lambda_fixed;
        lay.m_neg = m_neg;
        lay.m_pos = m_pos;
        return lay;
    }
};

struct GridCell {
    int m_neg = 0;
    int m_pos = 0;
    double loglik = 0.0;
    double aic = 0.0;
};

struct FitResult {
    ParamLayout layout;
    std::vector<double> packed;
    double loglik = 0.0;
    double aic = 0.0;
    std::size_t q = 0;
    double continuity_res = 0.0;
    bool small_sample_warning = false;
    // per-step traces
    std::vector<double> basis_start_logliks;
    double basis_loglik = 0.0;
    std::vector<GridCell> grid;
    std::vector<double> final_start_logliks;

    ModelParams params() const { return unpack(layout, packed); }
};

namespace detail {

inline double checked_negloglik(const ParamLayout& lay, const std::vector<double>& v, const Dataset& data) {
    try {
        return -loglik(lay, v, data);
    } catch (const std::exception&) {
        return -kLoglikPenalty;
    }
}

// continuity residual read straight off packed coordinates
inline double packed_residual(const ParamLayout& lay, const std::vector<double>& v) {
    if (lay.m_neg == 0 && lay.m_pos == 0) return 0.0;
    std::vector<double> pn(static_cast<std::size_t>(lay.m_neg) + 1, 1.0);
    for (int i = 0; i < lay.m_neg; ++i) pn[i + 1] = v[lay.i_phi_neg() + i];
    std::vector<double> pp(static_cast<std::size_t>(lay.m_pos) + 1, 1.0);
    for (int i = 0; i < lay.m_pos; ++i) pp[i + 1] = v[lay.i_phi_pos() + i];
    return continuity_residual(pn, pp);
}

// check-loss rho_lambda(z) = z(lambda - I(z<0)) minimized over the regression
// coefficients; the quantile-regression start for beta
inline std::vector<double> check_loss_regression(const Dataset& data, const std::vector<std::size_t>& rows,
                                                 double level) {
    std::size_t k = data.p() + 1;
    std::vector<double> X, y;
    for (auto i : rows) {
        const double* r = data.x_row(i);
        X.insert(X.end(), r, r + k);
        y.push_back(data.y(i));
    }
    std::vector<double> b0 = least_squares(X, y, rows.size(), k);
    if (b0.empty()) {
        b0.assign(k, 0.0);
        std::vector<double> ys = y;
        std::nth_element(ys.begin(), ys.begin() + ys.size() / 2, ys.end());
        b0[0] = ys[ys.size() / 2];
    }
    auto obj = [&](const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            double z = y[i];
            for (std::size_t j = 0; j < k; ++j) z -= X[i * k + j] * b[j];
            s += z * (level - (z < 0.0 ? 1.0 : 0.0));
        }
        return s;
    };
    return nelder_mead(obj, b0, OptBudget{200, 0.0, 1e-10}).x;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::size_t m = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + m, v.end());
    double hi = v[m];
    if (v.size() % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + m - 1, v.end());
    return 0.5 * (v[m - 1] + hi);
}

inline double theta_coordinate(CopulaFamily family, double theta) {
    switch (family) {
        case CopulaFamily::Clayton:
        case CopulaFamily::FrankPos:
            return std::log(theta);
        case CopulaFamily::Gumbel:
            return std::log(theta - 1.0);
        default:
            return theta;
    }
}

}  // namespace detail

// Data-driven starting points at Laguerre degrees (0,0): beta from check-loss
// quantile regression on the uncensored rows, (alpha, log sigma_C) from least
// squares on the censored rows, gamma_0 = log MAD of the uncensored
// residuals, lambda at 1/2 when variable, theta from tau in {-0.4, 0, 0.4}
// intersected with the family range. Gaussian perturbations (sd 0.2 per
// transformed coordinate) fill the list up to the configured count.
inline std::vector<std::vector<double>> initial_values(const Dataset& data, const FitConfig& config) {
    std::vector<std::size_t> unc, cen;
    for (std::size_t i = 0; i < data.n(); ++i) (data.delta(i) == 1 ? unc : cen).push_back(i);
    if (unc.empty() || cen.empty())
        throw std::invalid_argument("initial_values: need both uncensored and censored rows");

    ParamLayout lay = config.layout(data.p(), 0, 0);
    double level = config.lambda_mode == LambdaMode::Fixed ? config.lambda_fixed : 0.5;

    std::vector<double> beta = detail::check_loss_regression(data, unc, level);

    std::vector<double> resid;
    for (auto i : unc) {
        double z = data.y(i);
        const double* r = data.x_row(i);
        for (std::size_t j = 0; j <= data.p(); ++j) z -= r[j] * beta[j];
        resid.push_back(z);
    }
    double med = detail::median(resid);
    for (auto& z : resid) z = std::fabs(z - med);
    double mad = std::max(detail::median(resid), 1e-3);

    std::size_t k = data.p() + 1;
    std::vector<double> Xc, yc;
    for (auto i : cen) {
        const double* r = data.x_row(i);
        Xc.insert(Xc.end(), r, r + k);
        yc.push_back(data.y(i));
    }
    std::vector<double> alpha = least_squares(Xc, yc, cen.size(), k);
    double sigma_c;
    if (alpha.empty()) {
        alpha.assign(k, 0.0);
        double m = 0.0;
        for (double v : yc) m += v;
        alpha[0] = m / static_cast<double>(yc.size());
        sigma_c = 1.0;
    } else {
        double ssr = 0.0;
        for (std::size_t i = 0; i < cen.size(); ++i) {
            double z = yc[i];
            for (std::size_t j = 0; j < k; ++j) z -= Xc[i * k + j] * alpha[j];
            ssr += z * z;
        }
        std::size_t dof = cen.size() > k ? cen.size() - k : 1;
        sigma_c = std::sqrt(std::max(ssr / static_cast<double>(dof), 1e-6));
    }

    std::vector<double> taus;
    switch (config.family) {
        case CopulaFamily::Frank:
            taus = {-0.4, 0.4};
            break;
        case CopulaFamily::FrankPos:
        case CopulaFamily::Clayton:
        case CopulaFamily::Gumbel:
            taus = {0.4};  // {-0.4, 0, 0.4} restricted to the attainable (0,1)
            break;
        case CopulaFamily::Independence:
            break;
    }

    std::vector<std::vector<double>> bases;
    std::size_t nb = std::max<std::size_t>(taus.size(), 1);
    for (std::size_t bi = 0; bi < nb; ++bi) {
        std::vector<double> v(lay.size(), 0.0);
        if (lay.has_theta())
            v[lay.i_theta()] = detail::theta_coordinate(config.family, tau_to_theta(config.family, taus[bi]));
        for (std::size_t j = 0; j < k; ++j) v[lay.i_beta() + j] = beta[j];
        if (lay.has_lambda()) v[lay.i_lambda()] = 0.0;  // logit(1/2)
        v[lay.i_gamma()] = std::log(mad);
        for (std::size_t j = 0; j < k; ++j) v[lay.i_alpha() + j] = alpha[j];
        v[lay.i_log_sigma_c()] = std::log(sigma_c);
        bases.push_back(std::move(v));
    }

    Rng rng(derive_seed(config.seed, Stream::InitialValues));
    std::vector<std::vector<double>> list = bases;
    if (list.size() > static_cast<std::size_t>(config.starts)) list.resize(config.starts);
    std::size_t bi = 0;
    while (list.size() < static_cast<std::size_t>(config.starts)) {
        std::vector<double> v = bases[bi % bases.size()];
        for (auto& c : v) c += 0.2 * rng.normal();
        list.push_back(std::move(v));
        ++bi;
    }
    return list;
}

struct BasisResult {
    std::vector<double> packed;  // degrees (0,0) layout
    double loglik = 0.0;
    std::vector<double> start_logliks;
};

// Simultaneous optimisation with the Laguerre degrees pinned to zero; the
// continuity constraint is void, so plain NM suffices.
inline BasisResult basis_step(const Dataset& data, const FitConfig& config,
                              const std::vector<std::vector<double>>& starts) {
    ParamLayout lay = config.layout(data.p(), 0, 0);
    Objective obj = [&lay, &data](const std::vector<double>& v) {
        return detail::checked_negloglik(lay, v, data);
    };
    std::vector<NmResult> results(starts.size());
    parallel_for(starts.size(), config.threads, [&](std::size_t i) {
        results[i] = nelder_mead(obj, starts[i], OptBudget{config.budgets.basis, 0.0, 1e-8});
    });
    BasisResult out;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_i = starts.size();
    for (std::size_t i = 0; i < results.size(); ++i) {
        out.start_logliks.push_back(results[i].degenerate_start ? kLoglikPenalty : -results[i].f);
        if (!results[i].degenerate_start && results[i].f < best) {
            best = results[i].f;
            best_i = i;
        }
    }
    if (best_i == starts.size()) throw std::runtime_error("basis_step: every start was degenerate");
    out.packed = results[best_i].x;
    out.loglik = -best;
    return out;
}

struct IntermediateResult {
    int m_neg = 0;
    int m_pos = 0;
    std::vector<double> t_coords;  // T block of the selected-degree layout
    double loglik = 0.0;
    std::vector<GridCell> grid;
};

namespace detail {

// embed a degrees-(0,0) packed vector into a (m_neg, m_pos) layout with the
// new Laguerre coordinates at zero
inline std::vector<double> embed_packed(const ParamLayout& from, const std::vector<double>& v,
                                        const ParamLayout& to) {
    std::vector<double> out(to.size(), 0.0);
    if (to.has_theta()) out[to.i_theta()] = v[from.i_theta()];
    for (std::size_t j = 0; j < to.n_beta(); ++j) out[to.i_beta() + j] = v[from.i_beta() + j];
    if (to.has_lambda()) out[to.i_lambda()] = v[from.i_lambda()];
    for (std::size_t j = 0; j < to.n_gamma(); ++j) out[to.i_gamma() + j] = v[from.i_gamma() + j];
    for (std::size_t j = 0; j <= to.p; ++j) out[to.i_alpha() + j] = v[from.i_alpha() + j];
    out[to.i_log_sigma_c()] = v[from.i_log_sigma_c()];
    return out;
}

inline double t_block_residual(const ParamLayout& lay, const std::vector<double>& t) {
    if (lay.m_neg == 0 && lay.m_pos == 0) return 0.0;
    std::size_t off = lay.t_block_begin();
    std::vector<double> pn(static_cast<std::size_t>(lay.m_neg) + 1, 1.0);
    for (int i = 0; i < lay.m_neg; ++i) pn[i + 1] = t[lay.i_phi_neg() - off + i];
    std::vector<double> pp(static_cast<std::size_t>(lay.m_pos) + 1, 1.0);
    for (int i = 0; i < lay.m_pos; ++i) pp[i + 1] = t[lay.i_phi_pos() - off + i];
    return continuity_residual(pn, pp);
}

}  // namespace detail

// NMCob over the degree grid, optimising T's parameters only with the copula
// and censoring frozen at the basis values; AIC picks the degrees, ties break
// toward m~+m then m~.
inline IntermediateResult intermediate_step(const Dataset& data, const FitConfig& config,
                                            const BasisResult& basis) {
    ParamLayout lay0 = config.layout(data.p(), 0, 0);
    IntermediateResult out;

    if (config.max_degree == 0) {
        // degenerate grid: keep the basis T-parameters as-is
        out.t_coords.assign(basis.packed.begin() + lay0.t_block_begin(),
                            basis.packed.begin() + lay0.t_block_end());
        out.loglik = basis.loglik;
        out.grid.push_back({0, 0, basis.loglik, 2.0 * static_cast<double>(lay0.size()) - 2.0 * basis.loglik});
        return out;
    }

    int g = config.max_degree + 1;
    struct CellOut {
        double loglik = kLoglikPenalty;
        std::vector<double> t;
    };
    std::vector<CellOut> cells(static_cast<std::size_t>(g) * g);

    parallel_for(cells.size(), config.threads, [&](std::size_t ci) {
        int mn = static_cast<int>(ci) / g, mp = static_cast<int>(ci) % g;
        ParamLayout layd = config.layout(data.p(), mn, mp);
        std::vector<double> frozen = detail::embed_packed(lay0, basis.packed, layd);
        TOnlyObjective obj(layd, frozen, data);
        Objective fn = [&obj](const std::vector<double>& t) { return obj(t); };
        Residual rs = [&layd](const std::vector<double>& t) { return detail::t_block_residual(layd, t); };

        std::vector<double> t0 = obj.t_coords();
        std::vector<std::vector<double>> starts{t0};
        Rng rng(derive_seed(config.seed, Stream::Intermediate, ci));
        while (starts.size() < static_cast<std::size_t>(config.starts)) {
            std::vector<double> t = t0;
            for (auto& c : t) c += 0.2 * rng.normal();
            starts.push_back(std::move(t));
        }

        CellOut best;
        for (auto& s : starts) {
            NmResult r = nmcob(fn, rs, s, NmcobBudget{config.budgets.nm, config.budgets.constrained, 1e-8});
            if (r.degenerate_start) continue;
            double ll = -fn(r.x);
            if (ll > best.loglik) {
                best.loglik = ll;
                best.t = r.x;
            }
        }
        cells[ci] = std::move(best);
    });

    double best_aic = std::numeric_limits<double>::infinity();
    int best_mn = 0, best_mp = 0;
    for (int mn = 0; mn < g; ++mn)
        for (int mp = 0; mp < g; ++mp) {
            const CellOut& c = cells[static_cast<std::size_t>(mn) * g + mp];
            ParamLayout layd = config.layout(data.p(), mn, mp);
            double aic = 2.0 * static_cast<double>(layd.size()) - 2.0 * c.loglik;
            out.grid.push_back({mn, mp, c.loglik, aic});
            bool better = aic < best_aic - 1e-12;
            bool tie = std::fabs(aic - best_aic) <= 1e-12;
            if (tie) {
                int cur = mn + mp, prev = best_mn + best_mp;
                better = cur < prev || (cur == prev && mn < best_mn);
            }
            if (better) {
                best_aic = aic;
                best_mn = mn;
                best_mp = mp;
            }
        }

    const CellOut& sel = cells[static_cast<std::size_t>(best_mn) * g + best_mp];
    if (sel.t.empty()) throw std::runtime_error("intermediate_step: selected cell produced no feasible fit");
    out.m_neg = best_mn;
    out.m_pos = best_mp;
    out.t_coords = sel.t;
    out.loglik = sel.loglik;
    return out;
}

// Final simultaneous optimisation over all parameters at the selected
// degrees, warm started and NMCob-constrained.
inline FitResult final_step(const Dataset& data, const FitConfig& config, const IntermediateResult& inter,
                            const BasisResult& basis) {
    ParamLayout lay0 = config.layout(data.p(), 0, 0);
    ParamLayout lay = config.layout(data.p(), inter.m_neg, inter.m_pos);

    std::vector<double> warm = detail::embed_packed(lay0, basis.packed, lay);
    std::copy(inter.t_coords.begin(), inter.t_coords.end(), warm.begin() + lay.t_block_begin());

    Objective fn = [&lay, &data](const std::vector<double>& v) {
        return detail::checked_negloglik(lay, v, data);
    };
    Residual rs = [&lay](const std::vector<double>& v) { return detail::packed_residual(lay, v); };

    // Warm start plus theta-refreshed variants spanning the dependence range:
    // the margins adapt to whatever theta the earlier steps settled on, which
    // strands plain perturbations in that basin. Restarting theta across the
    // attainable range lets the joint optimisation cross over.
    std::vector<std::vector<double>> starts{warm};
    if (lay.has_theta()) {
        std::vector<double> coords;
        // near-independence boundary first, then spread over the tau range
        switch (config.family) {
            case CopulaFamily::Frank:
                coords.push_back(kFrankZeroGuard);
                for (double tau : {-0.75, -0.5, -0.25, 0.25, 0.5, 0.75})
                    coords.push_back(tau_to_theta(CopulaFamily::Frank, tau));
                break;
            case CopulaFamily::FrankPos:
            case CopulaFamily::Clayton:
                coords.push_back(std::log(0.01));
                for (double tau : {0.25, 0.5, 0.75})
                    coords.push_back(std::log(tau_to_theta(config.family, tau)));
                break;
            case CopulaFamily::Gumbel:
                coords.push_back(std::log(0.01));  // theta = 1.01
                for (double tau : {0.25, 0.5, 0.75})
                    coords.push_back(std::log(tau_to_theta(config.family, tau) - 1.0));
                break;
            default:
                break;
        }
        for (double c : coords) {
            if (starts.size() >= static_cast<std::size_t>(config.starts)) break;
            std::vector<double> v = warm;
            v[lay.i_theta()] = c;
            starts.push_back(std::move(v));
        }
    }
    Rng rng(derive_seed(config.seed, Stream::Final));
    while (starts.size() < static_cast<std::size_t>(config.starts)) {
        std::vector<double> v = warm;
        for (auto& c : v) c += 0.2 * rng.normal();
        starts.push_back(std::move(v));
    }

    std::vector<NmResult> results(starts.size());
    parallel_for(starts.size(), config.threads, [&](std::size_t i) {
        results[i] = nmcob(fn, rs, starts[i], NmcobBudget{config.budgets.nm, config.budgets.constrained, 1e-8});
    });

    FitResult out;
    out.layout = lay;
    // the warm start is feasible (it went through the intermediate NMCob);
    // keep the best feasible candidate so the pipeline is monotone
    std::vector<double> best_x = warm;
    double best_ll = -fn(warm);
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i].degenerate_start) {
            out.final_start_logliks.push_back(kLoglikPenalty);
            continue;
        }
        double ll = -fn(results[i].x);
        out.final_start_logliks.push_back(ll);
        if (std::fabs(rs(results[i].x)) < 1e-6 && ll > best_ll) {
            best_ll = ll;
            best_x = results[i].x;
        }
    }
    out.packed = std::move(best_x);
    out.loglik = best_ll;
    out.q = lay.size();
    out.aic = 2.0 * static_cast<double>(out.q) - 2.0 * out.loglik;
    out.continuity_res = detail::packed_residual(lay, out.packed);
    return out;
}

// The three-step pipeline: data-driven starts, degree-zero basis fit, AIC
// degree selection over the grid, then the full constrained fit.
inline FitResult fit(const Dataset& data, const FitConfig& config) {
    config.validate();
    auto starts = initial_values(data, config);
    BasisResult basis = basis_step(data, config, starts);
    IntermediateResult inter = intermediate_step(data, config, basis);
    FitResult out = final_step(data, config, inter, basis);
    out.basis_start_logliks = basis.start_logliks;
    out.basis_loglik = basis.loglik;
    out.grid = inter.grid;
    out.small_sample_warning = data.n() < 10 * out.q;
    return out;
}

}  // namespace dqreg
