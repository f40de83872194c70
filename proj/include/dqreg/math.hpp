#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace dqreg {

inline constexpr double kProbClamp = 1e-12;      // probabilities kept in [kProbClamp, 1-kProbClamp]
inline constexpr double kDensityFloor = 1e-300;  // densities floored before taking logs
inline constexpr double kLoglikPenalty = -1e10;  // returned when a likelihood term is non-finite

inline double clamp_prob(double p) {
    if (p < kProbClamp) return kProbClamp;
    if (p > 1.0 - kProbClamp) return 1.0 - kProbClamp;
    return p;
}

inline double safe_log(double v) {
    return std::log(v < kDensityFloor ? kDensityFloor : v);
}

// ---------------------------------------------------------------------------
// standard normal
// ---------------------------------------------------------------------------

inline double norm_pdf(double z) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    if (std::fabs(z) > 40.0) return 0.0;
    return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

inline double norm_cdf(double z) {
    return 0.5 * std::erfc(-z * 0.70710678118654752440);
}

// log Phi(z), stable deep in the lower tail where erfc underflows
inline double norm_log_cdf(double z) {
    if (z > -37.0) {
        double c = norm_cdf(z);
        if (c > 0.0) return std::log(c);
    }
    // asymptotic expansion: Phi(z) ~ phi(z)/(-z) (1 - 1/z^2 + 3/z^4 - 15/z^6 + 105/z^8)
    double z2 = z * z;
    double corr = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2) + 105.0 / (z2 * z2 * z2 * z2);
    return -0.5 * z2 - 0.91893853320467274178 - std::log(-z) + std::log(corr);
}

// inverse normal CDF: Acklam's rational approximation polished by one Halley step
inline double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("norm_quantile: p outside (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01,  -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // one Halley refinement; skipped in the far tails where exp(x^2/2) overflows
    if (std::fabs(x) < 8.0) {
        double e = norm_cdf(x) - p;
        double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(0.5 * x * x);
        x = x - u / (1.0 + 0.5 * x * u);
    }
    return x;
}

// ---------------------------------------------------------------------------
// incomplete gamma (regularized) and chi-squared quantile
// ---------------------------------------------------------------------------

namespace detail {

inline double gamma_p_series(double a, double x) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

// P(a,x) = gamma(a,x)/Gamma(a)
inline double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::domain_error("gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_contfrac(a, x);
}

inline double chi2_cdf(double x, int df) { return x <= 0.0 ? 0.0 : gamma_p(0.5 * df, 0.5 * x); }

inline double chi2_quantile(int df, double p) {
    if (df <= 0) throw std::domain_error("chi2_quantile: df must be positive");
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("chi2_quantile: p outside (0,1)");
    double lo = 0.0, hi = 1.0;
    while (chi2_cdf(hi, df) < p) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (chi2_cdf(mid, df) < p ? lo : hi) = mid;
        if (hi - lo < 1e-12 * (1.0 + hi)) break;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// deterministic summation (pairwise reduction, independent of thread count)
// ---------------------------------------------------------------------------

inline double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

// ---------------------------------------------------------------------------
// small dense least squares (normal equations with Gaussian elimination)
// ---------------------------------------------------------------------------

// Solves min ||X b - y||; X row-major n x k. Returns empty vector if singular.
inline std::vector<double> least_squares(const std::vector<double>& X, const std::vector<double>& y,
                                         std::size_t n, std::size_t k) {
    std::vector<double> A(k * k, 0.0), g(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < k; ++a) {
            g[a] += X[i * k + a] * y[i];
            for (std::size_t b = 0; b <= a; ++b) A[a * k + b] += X[i * k + a] * X[i * k + b];
        }
    }
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a + 1; b < k; ++b) A[a * k + b] = A[b * k + a];
    // Gaussian elimination with partial pivoting
    std::vector<std::size_t> piv(k);
    for (std::size_t i = 0; i < k; ++i) piv[i] = i;
    for (std::size_t col = 0; col < k; ++col) {
        std::size_t best = col;
        for (std::size_t r = col + 1; r < k; ++r)
            if (std::fabs(A[r * k + col]) > std::fabs(A[best * k + col])) best = r;
        if (std::fabs(A[best * k + col]) < 1e-12) return {};
        if (best != col) {
            for (std::size_t c = 0; c < k; ++c) std::swap(A[col * k + c], A[best * k + c]);
            std::swap(g[col], g[best]);
        }
        for (std::size_t r = col + 1; r < k; ++r) {
            double f = A[r * k + col] / A[col * k + col];
            for (std::size_t c = col; c < k; ++c) A[r * k + c] -= f * A[col * k + c];
            g[r] -= f * g[col];
        }
    }
    std::vector<double> b(k);
    for (std::size_t i = k; i-- > 0;) {
        double s = g[i];
        for (std::size_t c = i + 1; c < k; ++c) s -= A[i * k + c] * b[c];
        b[i] = s / A[i * k + i];
    }
    return b;
}

}  // namespace dqreg
