#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "dqreg/math.hpp"

namespace dqreg {

using Objective = std::function<double(const std::vector<double>&)>;
using Residual = std::function<double(const std::vector<double>&)>;

struct OptBudget {
    int max_iters = 500;
    double xtol = 0.0;      // 0 disables the x-diameter criterion
    double ftol = 1e-8;     // simplex f-spread termination
};

struct NmResult {
    std::vector<double> x;
    double f = 0.0;
    int iters = 0;
    long evals = 0;
    bool degenerate_start = false;  // every initial vertex hit the penalty value
    bool converged = false;         // stopped on ftol/xtol rather than budget
};

// Standard Nelder-Mead simplex, minimizing. Coefficients (reflection,
// expansion, contraction, shrink) = (1, 2, 0.5, 0.5); initial simplex is x0
// plus per-coordinate steps max(0.05, 0.1|x0_i|). Deterministic; tracks the
// best point ever evaluated.
inline NmResult nelder_mead(const Objective& f, const std::vector<double>& x0, const OptBudget& budget) {
    const double kPenaltyLevel = -kLoglikPenalty;  // objective value treated as "infeasible"
    std::size_t n = x0.size();
    NmResult out;
    out.x = x0;

    std::vector<std::vector<double>> sx(n + 1, x0);
    std::vector<double> sf(n + 1);
    long evals = 0;
    for (std::size_t i = 0; i < n; ++i) sx[i + 1][i] += std::max(0.05, 0.1 * std::fabs(x0[i]));
    for (std::size_t i = 0; i <= n; ++i) {
        sf[i] = f(sx[i]);
        ++evals;
    }

    bool all_penalty = true;
    for (double v : sf)
        if (v < kPenaltyLevel) all_penalty = false;
    if (all_penalty) {
        out.f = sf[0];
        out.evals = evals;
        out.degenerate_start = true;
        return out;
    }

    std::vector<double> best_x = sx[0];
    double best_f = sf[0];
    auto track = [&](const std::vector<double>& x, double v) {
        if (v < best_f) {
            best_f = v;
            best_x = x;
        }
    };
    for (std::size_t i = 0; i <= n; ++i) track(sx[i], sf[i]);

    std::vector<std::size_t> ord(n + 1);
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    int it = 0;
    for (; it < budget.max_iters; ++it) {
        for (std::size_t i = 0; i <= n; ++i) ord[i] = i;
        std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return sf[a] < sf[b]; });
        std::size_t lo = ord[0], hi = ord[n], nh = ord[n - 1];

        if (std::fabs(sf[hi] - sf[lo]) < budget.ftol) {
            out.converged = true;
            break;
        }
        if (budget.xtol > 0.0) {
            double diam = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                diam = std::max(diam, std::fabs(sx[hi][i] - sx[lo][i]));
            if (diam < budget.xtol) {
                out.converged = true;
                break;
            }
        }

        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i <= n; ++i)
                if (i != hi) s += sx[i][j];
            centroid[j] = s / static_cast<double>(n);
        }

        for (std::size_t j = 0; j < n; ++j) xr[j] = centroid[j] + (centroid[j] - sx[hi][j]);
        double fr = f(xr);
        ++evals;
        track(xr, fr);

        if (fr < sf[lo]) {
            for (std::size_t j = 0; j < n; ++j) xe[j] = centroid[j] + 2.0 * (centroid[j] - sx[hi][j]);
            double fe = f(xe);
            ++evals;
            track(xe, fe);
            if (fe < fr) {
                sx[hi] = xe;
                sf[hi] = fe;
            } else {
                sx[hi] = xr;
                sf[hi] = fr;
            }
        } else if (fr < sf[nh]) {
            sx[hi] = xr;
            sf[hi] = fr;
        } else {
            bool outside = fr < sf[hi];
            const std::vector<double>& base = outside ? xr : sx[hi];
            for (std::size_t j = 0; j < n; ++j) xc[j] = centroid[j] + 0.5 * (base[j] - centroid[j]);
            double fc = f(xc);
            ++evals;
            track(xc, fc);
            if (fc < (outside ? fr : sf[hi])) {
                sx[hi] = xc;
                sf[hi] = fc;
            } else {
                // shrink toward the best vertex
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == lo) continue;
                    for (std::size_t j = 0; j < n; ++j) sx[i][j] = sx[lo][j] + 0.5 * (sx[i][j] - sx[lo][j]);
                    sf[i] = f(sx[i]);
                    ++evals;
                    track(sx[i], sf[i]);
                }
            }
        }
    }
    out.x = best_x;
    out.f = best_f;
    out.iters = it;
    out.evals = evals;
    return out;
}

namespace detail {

// Newton steps on the scalar residual along its numerical gradient; pulls a
// near-feasible point onto {r = 0} without disturbing coordinates the
// residual does not depend on.
inline std::vector<double> restore_feasibility(const Residual& r, std::vector<double> x, long& evals) {
    const double h = 1e-7;
    for (int it = 0; it < 8; ++it) {
        double res = r(x);
        ++evals;
        if (std::fabs(res) < 1e-12) break;
        std::vector<double> g(x.size());
        double gnorm2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            std::vector<double> xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            g[i] = (r(xp) - r(xm)) / (2.0 * h);
            evals += 2;
            gnorm2 += g[i] * g[i];
        }
        if (gnorm2 < 1e-20) break;  // critical point; nothing to project along
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= res * g[i] / gnorm2;
    }
    return x;
}

}  // namespace detail

// Equality-constrained refinement: NM on f + mu * r^2 with the penalty
// schedule mu in {1e2, 1e4, 1e6} split across the budget, then a Newton
// restoration of the residual. Contract: final |r| < 1e-6 and objective no
// worse than the start's penalized value.
inline NmResult constrained_refine(const Objective& f, const Residual& r, const std::vector<double>& x0,
                                   const OptBudget& budget) {
    static const double mus[] = {1e2, 1e4, 1e6};
    int per_phase = std::max(1, budget.max_iters / 3);
    std::vector<double> x = x0;
    NmResult last;
    last.x = x0;
    long evals = 0;
    int iters = 0;
    for (int phase = 0; phase < 3; ++phase) {
        double mu = mus[phase];
        Objective pen = [&f, &r, mu](const std::vector<double>& v) {
            double res = r(v);
            return f(v) + mu * res * res;
        };
        OptBudget b = budget;
        b.max_iters = phase == 2 ? budget.max_iters - 2 * per_phase : per_phase;
        last = nelder_mead(pen, x, b);
        evals += last.evals;
        iters += last.iters;
        if (last.degenerate_start) break;
        x = last.x;
    }
    if (!last.degenerate_start && std::fabs(r(x)) > 1e-12) {
        std::vector<double> xp = detail::restore_feasibility(r, x, evals);
        double res = r(x), resp = r(xp);
        double fp = f(xp);
        double r0 = r(x0), f0 = f(x0);
        evals += 5;
        // feasibility wins: accept while staying within the start's penalized value
        if (std::fabs(resp) <= std::fabs(res) && std::isfinite(fp) && fp <= f0 + mus[2] * r0 * r0)
            x = std::move(xp);
    }
    NmResult out = last;
    out.x = x;
    out.f = f(x);
    ++evals;
    out.evals = evals;
    out.iters = iters;
    return out;
}

struct NmcobBudget {
    int nm_iters = 400;           // unconstrained exploration
    int constrained_iters = 100;  // continuity enforcement
    double ftol = 1e-8;
};

// NM stability first, constraint enforcement last: 400 unconstrained NM
// iterations, then 100 penalized iterations from the NM result with every
// coordinate still free.
inline NmResult nmcob(const Objective& f, const Residual& r, const std::vector<double>& x0,
                      const NmcobBudget& budget = {}) {
    OptBudget b1{budget.nm_iters, 0.0, budget.ftol};
    NmResult stage1 = nelder_mead(f, x0, b1);
    if (stage1.degenerate_start) return stage1;
    OptBudget b2{budget.constrained_iters, 0.0, budget.ftol};
    NmResult stage2 = constrained_refine(f, r, stage1.x, b2);
    stage2.iters += stage1.iters;
    stage2.evals += stage1.evals;
    return stage2;
}

}  // namespace dqreg
