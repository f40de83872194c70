#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "dqreg/math.hpp"

namespace dqreg {

enum class CopulaFamily { Independence, Frank, FrankPos, Clayton, Gumbel };

inline constexpr double kFrankZeroGuard = 1e-6;  // |theta| below this behaves as independence
inline constexpr double kFrankThetaBox = 50.0;   // admissible |theta| during fitting

inline const char* family_name(CopulaFamily f) {
    switch (f) {
        case CopulaFamily::Independence: return "independence";
        case CopulaFamily::Frank: return "frank";
        case CopulaFamily::FrankPos: return "frankpos";
        case CopulaFamily::Clayton: return "clayton";
        case CopulaFamily::Gumbel: return "gumbel";
    }
    return "?";
}

inline CopulaFamily family_from_name(const std::string& s) {
    if (s == "independence") return CopulaFamily::Independence;
    if (s == "frank") return CopulaFamily::Frank;
    if (s == "frankpos") return CopulaFamily::FrankPos;
    if (s == "clayton") return CopulaFamily::Clayton;
    if (s == "gumbel") return CopulaFamily::Gumbel;
    throw std::domain_error("unknown copula family: " + s);
}

struct CopulaSpec {
    CopulaFamily family = CopulaFamily::Independence;
    double theta = 0.0;
};

inline CopulaSpec make_copula(CopulaFamily family, double theta = 0.0) {
    switch (family) {
        case CopulaFamily::Independence:
            return {family, 0.0};
        case CopulaFamily::Frank:
            if (std::fabs(theta) < kFrankZeroGuard) throw std::domain_error("Frank: |theta| below 1e-6");
            break;
        case CopulaFamily::FrankPos:
            if (theta < kFrankZeroGuard) throw std::domain_error("FrankPos: theta must be positive");
            break;
        case CopulaFamily::Clayton:
            if (theta <= 0.0) throw std::domain_error("Clayton: theta must be positive");
            break;
        case CopulaFamily::Gumbel:
            if (theta < 1.0) throw std::domain_error("Gumbel: theta must be >= 1");
            break;
    }
    return {family, theta};
}

namespace detail {

inline bool frank_like(CopulaFamily f) { return f == CopulaFamily::Frank || f == CopulaFamily::FrankPos; }

// Gumbel theta = 1 is the independence copula
inline bool is_independent(const CopulaSpec& c) {
    return c.family == CopulaFamily::Independence ||
           (frank_like(c.family) && std::fabs(c.theta) < kFrankZeroGuard) ||
           (c.family == CopulaFamily::Gumbel && c.theta == 1.0);
}

}  // namespace detail

inline double copula_cdf(const CopulaSpec& c, double u, double v) {
    if (u <= 0.0 || v <= 0.0) return 0.0;
    if (u >= 1.0 && v >= 1.0) return 1.0;
    if (u >= 1.0) return v;
    if (v >= 1.0) return u;
    if (detail::is_independent(c)) return u * v;
    double th = c.theta;
    switch (c.family) {
        case CopulaFamily::Frank:
        case CopulaFamily::FrankPos: {
            double a = std::expm1(-th * u), b = std::expm1(-th * v), d = std::expm1(-th);
            return -std::log1p(a * b / d) / th;
        }
        case CopulaFamily::Clayton:
            return std::pow(std::pow(u, -th) + std::pow(v, -th) - 1.0, -1.0 / th);
        case CopulaFamily::Gumbel: {
            double a = std::pow(-std::log(u), th), b = std::pow(-std::log(v), th);
            return std::exp(-std::pow(a + b, 1.0 / th));
        }
        default:
            return u * v;
    }
}

// h_{C|T}(v|u) = dC(u,v)/du, the conditional distribution of C's PIT given T's
inline double h_c_given_t(const CopulaSpec& c, double v, double u) {
    u = clamp_prob(u);
    v = clamp_prob(v);
    if (detail::is_independent(c)) return v;
    double th = c.theta;
    switch (c.family) {
        case CopulaFamily::Frank:
        case CopulaFamily::FrankPos: {
            // 1/h = 1 + e^{th(u-v)} expm1(-th(1-v)) / expm1(-th v); cancellation-free
            double r = std::exp(th * (u - v)) * std::expm1(-th * (1.0 - v)) / std::expm1(-th * v);
            return 1.0 / (1.0 + r);
        }
        case CopulaFamily::Clayton: {
            // s - 1 = expm1(-th log u) + expm1(-th log v) stays accurate for small th
            double sm1 = std::expm1(-th * std::log(u)) + std::expm1(-th * std::log(v));
            return std::exp(-(th + 1.0) * std::log(u) - (1.0 / th + 1.0) * std::log1p(sm1));
        }
        case CopulaFamily::Gumbel: {
            double lu = -std::log(u), lv = -std::log(v);
            double a = std::pow(lu, th), b = std::pow(lv, th);
            double s = a + b;
            double cc = std::exp(-std::pow(s, 1.0 / th));
            return cc * std::pow(s, 1.0 / th - 1.0) * std::pow(lu, th - 1.0) / u;
        }
        default:
            return v;
    }
}

// h_{T|C}(u|v) = dC(u,v)/dv; all implemented families are exchangeable
inline double h_t_given_c(const CopulaSpec& c, double u, double v) { return h_c_given_t(c, u, v); }

// v solving h_{C|T}(v|u) = w. Closed form for Independence and Frank;
// monotone bisection for Clayton and Gumbel.
inline double inverse_h(const CopulaSpec& c, double w, double u) {
    w = clamp_prob(w);
    u = clamp_prob(u);
    if (detail::is_independent(c)) return w;
    if (detail::frank_like(c.family)) {
        // v = -(1/th) log[(e^{-th u}(1-w) + w e^{-th}) / (e^{-th u}(1-w) + w)],
        // all-positive numerator and denominator
        double th = c.theta;
        double eu = std::exp(-th * u);
        double num = eu * (1.0 - w) + w * std::exp(-th);
        double den = eu * (1.0 - w) + w;
        return -std::log(num / den) / th;
    }
    double lo = kProbClamp, hi = 1.0 - kProbClamp;
    for (int it = 0; it < 100; ++it) {
        double mid = 0.5 * (lo + hi);
        (h_c_given_t(c, mid, u) < w ? lo : hi) = mid;
        if (hi - lo < 1e-10) break;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Kendall tau conversions
// ---------------------------------------------------------------------------

namespace detail {

// Debye function D1(x) = (1/x) int_0^x t/(e^t - 1) dt, by adaptive Simpson
inline double debye1(double x) {
    if (x == 0.0) return 1.0;
    auto g = [](double t) { return std::fabs(t) < 1e-8 ? 1.0 - 0.5 * t : t / std::expm1(t); };
    // fixed-panel Simpson with many panels; g is smooth
    int n = 2000;
    double h = x / n, s = g(0.0) + g(x);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * g(i * h);
    return s * h / (3.0 * x);
}

}  // namespace detail

inline double theta_to_tau(CopulaFamily family, double theta) {
    switch (family) {
        case CopulaFamily::Independence:
            return 0.0;
        case CopulaFamily::Clayton:
            if (theta <= 0.0) throw std::domain_error("theta_to_tau: Clayton theta must be positive");
            return theta / (theta + 2.0);
        case CopulaFamily::Gumbel:
            if (theta < 1.0) throw std::domain_error("theta_to_tau: Gumbel theta must be >= 1");
            return 1.0 - 1.0 / theta;
        case CopulaFamily::Frank:
        case CopulaFamily::FrankPos: {
            if (std::fabs(theta) < kFrankZeroGuard) return 0.0;
            return 1.0 - 4.0 / theta * (1.0 - detail::debye1(theta));
        }
    }
    return 0.0;
}

inline double tau_to_theta(CopulaFamily family, double tau) {
    switch (family) {
        case CopulaFamily::Independence:
            if (tau != 0.0) throw std::domain_error("tau_to_theta: independence attains only tau = 0");
            return 0.0;
        case CopulaFamily::Clayton:
            if (!(tau > 0.0 && tau < 1.0)) throw std::domain_error("tau_to_theta: Clayton needs tau in (0,1)");
            return 2.0 * tau / (1.0 - tau);
        case CopulaFamily::Gumbel:
            if (!(tau > 0.0 && tau < 1.0)) throw std::domain_error("tau_to_theta: Gumbel needs tau in (0,1)");
            return 1.0 / (1.0 - tau);
        case CopulaFamily::FrankPos:
            if (!(tau > 0.0 && tau < 1.0)) throw std::domain_error("tau_to_theta: FrankPos needs tau in (0,1)");
            break;
        case CopulaFamily::Frank:
            if (!(tau > -1.0 && tau < 1.0) || tau == 0.0)
                throw std::domain_error("tau_to_theta: Frank needs tau in (-1,1) \\ {0}");
            break;
    }
    // Frank: invert the Debye relation by bisection; tau is odd in theta
    double sign = tau < 0.0 ? -1.0 : 1.0;
    double at = std::fabs(tau);
    double lo = kFrankZeroGuard, hi = kFrankThetaBox;
    if (theta_to_tau(CopulaFamily::Frank, hi) < at)
        throw std::domain_error("tau_to_theta: tau outside the Frank fitting box");
    for (int it = 0; it < 100; ++it) {
        double mid = 0.5 * (lo + hi);
        (theta_to_tau(CopulaFamily::Frank, mid) < at ? lo : hi) = mid;
        if (hi - lo < 1e-11) break;
    }
    return sign * 0.5 * (lo + hi);
}

}  // namespace dqreg
