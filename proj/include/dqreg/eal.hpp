#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "dqreg/laguerre.hpp"
#include "dqreg/math.hpp"

namespace dqreg {

// Enriched asymmetric Laplace: an AL(lambda) density multiplied on each side
// of the origin by a squared Laguerre series, which keeps the lambda-quantile
// at zero. Coefficient vectors carry the fixed leading 1.
//
//   f(y) = lambda (1-lambda) e^{-z} S(z)^2 / ||phi||^2,
//   z = lambda*y (y > 0, phi_pos) or (lambda-1)*y (y <= 0, phi_neg).
//
// The y = 0 point belongs to the negative branch.
class EalParams {
public:
    EalParams(double lambda, std::vector<double> phi_neg, std::vector<double> phi_pos)
        : lambda_(lambda), phi_neg_(std::move(phi_neg)), phi_pos_(std::move(phi_pos)) {
        if (!(lambda_ > 0.0 && lambda_ < 1.0)) throw std::domain_error("EalParams: lambda outside (0,1)");
        if (phi_neg_.empty() || phi_pos_.empty()) throw std::domain_error("EalParams: empty coefficient vector");
        if (phi_neg_[0] != 1.0 || phi_pos_[0] != 1.0)
            throw std::domain_error("EalParams: leading coefficient must equal 1");
        if (degree_neg() > kMaxLaguerreDegree || degree_pos() > kMaxLaguerreDegree)
            throw std::domain_error("EalParams: degree above guard");
        build_cache();
    }

    double lambda() const { return lambda_; }
    const std::vector<double>& phi_neg() const { return phi_neg_; }
    const std::vector<double>& phi_pos() const { return phi_pos_; }
    int degree_neg() const { return static_cast<int>(phi_neg_.size()) - 1; }
    int degree_pos() const { return static_cast<int>(phi_pos_.size()) - 1; }

    // squared-series monomial coefficients, built once per parameter vector
    const std::vector<double>& sq_neg() const { return sq_neg_; }
    const std::vector<double>& sq_pos() const { return sq_pos_; }
    // ||phi||^2 evaluated as sum_j c_j j! = integral of S^2 e^{-u}; using the
    // same summation path for the norm and the CDF makes F(0) = lambda and
    // F(inf) = 1 exact.
    double norm_neg() const { return norm_neg_; }
    double norm_pos() const { return norm_pos_; }

private:
    void build_cache() {
        sq_neg_ = squared_series(phi_neg_);
        sq_pos_ = squared_series(phi_pos_);
        norm_neg_ = series_norm(sq_neg_);
        norm_pos_ = series_norm(sq_pos_);
    }

    static std::vector<double> squared_series(const std::vector<double>& phi) {
        int m = static_cast<int>(phi.size()) - 1;
        std::vector<double> b(static_cast<std::size_t>(m) + 1, 0.0);
        for (int k = 0; k <= m; ++k) {
            auto a = laguerre_monomial_coeffs(k);
            for (int j = 0; j <= k; ++j) b[j] += phi[k] * a[j];
        }
        std::vector<double> c(static_cast<std::size_t>(2 * m) + 1, 0.0);
        for (int i = 0; i <= m; ++i)
            for (int j = 0; j <= m; ++j) c[i + j] += b[i] * b[j];
        return c;
    }

    static double series_norm(const std::vector<double>& c) {
        double fact = 1.0, s = 0.0;
        for (std::size_t j = 0; j < c.size(); ++j) {
            if (j > 0) fact *= static_cast<double>(j);
            s += c[j] * fact;
        }
        return s;
    }

    double lambda_;
    std::vector<double> phi_neg_, phi_pos_;
    std::vector<double> sq_neg_, sq_pos_;
    double norm_neg_ = 1.0, norm_pos_ = 1.0;
};

namespace detail {

// sum_j c_j Gamma(j+1, z) with Gamma(j+1,z) = j Gamma(j,z) + z^j e^{-z}
inline double upper_gamma_combination(const std::vector<double>& c, double z) {
    if (z > 745.0) return 0.0;  // e^{-z} underflows; all terms vanish
    double ez = std::exp(-z);
    double g = ez;   // Gamma(1, z)
    double zp = ez;  // z^j e^{-z} at j = 0
    double s = c[0] * g;
    for (std::size_t j = 1; j < c.size(); ++j) {
        zp *= z;
        g = static_cast<double>(j) * g + zp;
        s += c[j] * g;
    }
    return s;
}

// sum_j c_j * lower-gamma(j+1, z), via the series
// gamma(j+1,z) = z^{j+1} e^{-z} sum_n z^n / ((j+1)...(j+1+n)),
// stable for small z where j! - Gamma(j+1,z) would cancel.
inline double lower_gamma_combination(const std::vector<double>& c, double z) {
    double s = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
        double denom = static_cast<double>(j) + 1.0;
        double term = 1.0 / denom, acc = term;
        for (int n = 1; n < 200; ++n) {
            denom += 1.0;
            term *= z / denom;
            acc += term;
            if (term < acc * 1e-17) break;
        }
        s += c[j] * std::pow(z, static_cast<double>(j) + 1.0) * std::exp(-z) * acc;
    }
    return s;
}

}  // namespace detail

inline double eal_pdf(const EalParams& p, double y) {
    double lam = p.lambda();
    double amp = lam * (1.0 - lam);
    if (y > 0.0) {
        double z = lam * y;
        if (z > 745.0) return 0.0;
        double s = laguerre_series(p.phi_pos(), z);
        return amp * std::exp(-z) * s * s / p.norm_pos();
    }
    double z = (lam - 1.0) * y;  // >= 0
    if (z > 745.0) return 0.0;
    double s = laguerre_series(p.phi_neg(), z);
    return amp * std::exp(-z) * s * s / p.norm_neg();
}

// Closed-form CDF via integer incomplete-gamma sums of the squared series;
// F(y) = lambda * sum_j c~_j Gamma(j+1,(lambda-1)y) / ||phi~||^2     (y <= 0)
//      = lambda + (1-lambda) * sum_j c_j gamma(j+1, lambda y) / ||phi||^2  (y > 0)
inline double eal_cdf(const EalParams& p, double y) {
    double lam = p.lambda();
    if (y <= 0.0) {
        double z = (lam - 1.0) * y;
        // ratio first: numerator and denominator share the summation path, so
        // F(0) = lambda exactly
        double f = lam * (detail::upper_gamma_combination(p.sq_neg(), z) / p.norm_neg());
        return f < 0.0 ? 0.0 : (f > 1.0 ? 1.0 : f);
    }
    double z = lam * y;
    double inc;
    if (z > 745.0) {
        inc = p.norm_pos();  // gamma(j+1,z) -> j!, combination -> series norm
    } else if (z < 1.0) {
        inc = detail::lower_gamma_combination(p.sq_pos(), z);
    } else {
        inc = p.norm_pos() - detail::upper_gamma_combination(p.sq_pos(), z);
    }
    double f = lam + (1.0 - lam) * (inc / p.norm_pos());
    return f < 0.0 ? 0.0 : (f > 1.0 ? 1.0 : f);
}

// Quantile by monotone bracketing plus bisection/Newton; the bracket starts
// from the AL(lambda) quantile and expands geometrically.
inline double eal_quantile(const EalParams& p, double prob) {
    if (!(prob > 0.0 && prob < 1.0)) throw std::domain_error("eal_quantile: prob outside (0,1)");
    double lam = p.lambda();
    if (prob == lam) return 0.0;
    // AL(lambda) quantile as the pilot point
    double pilot = prob <= lam ? std::log(prob / lam) / (1.0 - lam) : -std::log((1.0 - prob) / (1.0 - lam)) / lam;
    double lo = pilot - 1.0, hi = pilot + 1.0, step = 1.0;
    while (eal_cdf(p, lo) > prob) {
        step *= 2.0;
        lo -= step;
    }
    step = 1.0;
    while (eal_cdf(p, hi) < prob) {
        step *= 2.0;
        hi += step;
    }
    double x = std::fmin(std::fmax(pilot, lo), hi);
    for (int it = 0; it < 200; ++it) {
        double f = eal_cdf(p, x) - prob;
        if (f > 0.0)
            hi = x;
        else
            lo = x;
        double d = eal_pdf(p, x);
        double nx = d > 0.0 ? x - f / d : x;
        if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
        if (std::fabs(nx - x) < 1e-13 * (1.0 + std::fabs(x)) && std::fabs(f) < 1e-12) return nx;
        x = nx;
        if (hi - lo < 1e-14 * (1.0 + std::fabs(x))) break;
    }
    return x;
}

// inverse-transform sampling hook for the simulator
inline double eal_sample(const EalParams& p, double u) {
    if (!(u > 0.0 && u < 1.0)) throw std::domain_error("eal_sample: u outside (0,1)");
    return eal_quantile(p, u);
}

// (sum phi~)^2/||phi~||^2 - (sum phi)^2/||phi||^2; zero iff the density is
// continuous at the origin. Plain sums here, matching the constraint as the
// optimizer sees it.
inline double continuity_residual(const std::vector<double>& phi_neg, const std::vector<double>& phi_pos) {
    if (phi_neg.empty() || phi_pos.empty() || phi_neg[0] != 1.0 || phi_pos[0] != 1.0)
        throw std::domain_error("continuity_residual: leading coefficients must equal 1");
    auto ratio = [](const std::vector<double>& v) {
        double s = 0.0, n = 0.0;
        for (double x : v) {
            s += x;
            n += x * x;
        }
        return s * s / n;
    };
    return ratio(phi_neg) - ratio(phi_pos);
}

}  // namespace dqreg
