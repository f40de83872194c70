#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "dqreg/eal.hpp"
#include "dqreg/math.hpp"

namespace dqreg {

enum class LambdaMode { Fixed, Variable };

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// EAL location-scale regression for T|X:
//   T = x'beta + sigma(x;gamma) * eps,  sigma(x;gamma) = exp(x'gamma).
// Homoscedastic fits keep the non-intercept entries of gamma at zero.
struct TMarginParams {
    std::vector<double> beta;   // (beta_0, beta~), length 1+p
    std::vector<double> gamma;  // (gamma_0, gamma~), length 1+p
    EalParams eal;
    LambdaMode lambda_mode = LambdaMode::Variable;

    double sigma(const std::vector<double>& x) const {
        double e = dot(x, gamma);
        if (e > 700.0) e = 700.0;
        if (e < -700.0) e = -700.0;
        return std::exp(e);
    }
};

// normal location-scale for C|X with homoscedastic error
struct CMarginParams {
    std::vector<double> alpha;  // length 1+p
    double sigma_c = 1.0;
};

inline double t_cdf(const TMarginParams& tp, double y, const std::vector<double>& x) {
    return eal_cdf(tp.eal, (y - dot(x, tp.beta)) / tp.sigma(x));
}

inline double t_pdf(const TMarginParams& tp, double y, const std::vector<double>& x) {
    double s = tp.sigma(x);
    return eal_pdf(tp.eal, (y - dot(x, tp.beta)) / s) / s;
}

// Q(p|x) = x'beta + sigma(x;gamma) * Q_eps(p); one fitted model serves every level
inline double t_quantile(const TMarginParams& tp, double p, const std::vector<double>& x) {
    double base = dot(x, tp.beta);
    if (p == tp.eal.lambda()) return base;
    return base + tp.sigma(x) * eal_quantile(tp.eal, p);
}

inline double c_cdf(const CMarginParams& cp, double y, const std::vector<double>& x) {
    return norm_cdf((y - dot(x, cp.alpha)) / cp.sigma_c);
}

inline double c_pdf(const CMarginParams& cp, double y, const std::vector<double>& x) {
    return norm_pdf((y - dot(x, cp.alpha)) / cp.sigma_c) / cp.sigma_c;
}

inline double c_quantile(const CMarginParams& cp, double p, const std::vector<double>& x) {
    return dot(x, cp.alpha) + cp.sigma_c * norm_quantile(p);
}

}  // namespace dqreg
