#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dqreg/copula.hpp"
#include "dqreg/margins.hpp"
#include "dqreg/math.hpp"

namespace dqreg {

// Observed triplets (y, delta, x); covariate rows carry the leading intercept 1.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<double> y, std::vector<int> delta, std::vector<double> x_rowmajor, std::size_t p)
        : y_(std::move(y)), delta_(std::move(delta)), x_(std::move(x_rowmajor)), p_(p) {
        if (delta_.size() != y_.size() || x_.size() != y_.size() * (p_ + 1))
            throw std::invalid_argument("Dataset: inconsistent sizes");
        for (std::size_t i = 0; i < y_.size(); ++i) {
            if (!std::isfinite(y_[i])) throw std::invalid_argument("Dataset: non-finite y at row " + std::to_string(i + 1));
            if (delta_[i] != 0 && delta_[i] != 1)
                throw std::invalid_argument("Dataset: delta not in {0,1} at row " + std::to_string(i + 1));
            if (x_[i * (p_ + 1)] != 1.0)
                throw std::invalid_argument("Dataset: missing intercept 1 at row " + std::to_string(i + 1));
        }
    }

    std::size_t n() const { return y_.size(); }
    std::size_t p() const { return p_; }
    double y(std::size_t i) const { return y_[i]; }
    int delta(std::size_t i) const { return delta_[i]; }
    const double* x_row(std::size_t i) const { return x_.data() + i * (p_ + 1); }
    std::vector<double> x_vec(std::size_t i) const {
        return std::vector<double>(x_row(i), x_row(i) + p_ + 1);
    }

    Dataset subset(const std::vector<std::size_t>& idx) const {
        std::vector<double> y2;
        std::vector<int> d2;
        std::vector<double> x2;
        y2.reserve(idx.size());
        d2.reserve(idx.size());
        x2.reserve(idx.size() * (p_ + 1));
        for (auto i : idx) {
            y2.push_back(y_[i]);
            d2.push_back(delta_[i]);
            x2.insert(x2.end(), x_row(i), x_row(i) + p_ + 1);
        }
        return Dataset(std::move(y2), std::move(d2), std::move(x2), p_);
    }

private:
    std::vector<double> y_;
    std::vector<int> delta_;
    std::vector<double> x_;  // row-major n x (1+p)
    std::size_t p_ = 0;
};

// ---------------------------------------------------------------------------
// packed parameter vector
// ---------------------------------------------------------------------------

// Flat coordinate layout (in order):
//   [theta'] [beta 1+p] [lambda'] [gamma 1+p | gamma_0] [phi~_1..m~] [phi_1..m] [alpha 1+p] [log sigma_C]
// Transformed coordinates: lambda via logit, sigma_C via log, Clayton/FrankPos
// theta via log, Gumbel theta via log(theta-1); Frank theta raw with the
// (-1e-6, 1e-6) sliver snapped to its boundary.
struct ParamLayout {
    CopulaFamily family = CopulaFamily::Independence;
    std::size_t p = 0;
    bool hetero = true;
    LambdaMode lambda_mode = LambdaMode::Variable;
    double lambda_fixed = 0.5;
    int m_neg = 0;
    int m_pos = 0;

    bool has_theta() const { return family != CopulaFamily::Independence; }
    std::size_t n_beta() const { return p + 1; }
    std::size_t n_gamma() const { return hetero ? p + 1 : 1; }
    bool has_lambda() const { return lambda_mode == LambdaMode::Variable; }

    std::size_t i_theta() const { return 0; }
    std::size_t i_beta() const { return has_theta() ? 1 : 0; }
    std::size_t i_lambda() const { return i_beta() + n_beta(); }
    std::size_t i_gamma() const { return i_lambda() + (has_lambda() ? 1 : 0); }
    std::size_t i_phi_neg() const { return i_gamma() + n_gamma(); }
    std::size_t i_phi_pos() const { return i_phi_neg() + m_neg; }
    std::size_t i_alpha() const { return i_phi_pos() + m_pos; }
    std::size_t i_log_sigma_c() const { return i_alpha() + p + 1; }
    std::size_t size() const { return i_log_sigma_c() + 1; }

    // T-parameter block for the intermediate step: beta .. phi (contiguous)
    std::size_t t_block_begin() const { return i_beta(); }
    std::size_t t_block_end() const { return i_alpha(); }
};

struct ModelParams {
    CopulaSpec copula;
    TMarginParams t;
    CMarginParams c;
    // original packed coordinates, kept so pack() is exact
    std::optional<std::vector<double>> packed_src;
};

inline double logit(double p) { return std::log(p / (1.0 - p)); }
inline double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

inline ModelParams unpack(const ParamLayout& lay, const std::vector<double>& v) {
    if (v.size() != lay.size()) throw std::invalid_argument("unpack: wrong packed length");
    CopulaSpec cop{lay.family, 0.0};
    if (lay.has_theta()) {
        double t = v[lay.i_theta()];
        switch (lay.family) {
            case CopulaFamily::Clayton:
            case CopulaFamily::FrankPos:
                cop.theta = std::exp(t);
                break;
            case CopulaFamily::Gumbel:
                cop.theta = 1.0 + std::exp(t);
                break;
            case CopulaFamily::Frank: {
                double th = t;
                if (th > kFrankThetaBox) th = kFrankThetaBox;
                if (th < -kFrankThetaBox) th = -kFrankThetaBox;
                if (std::fabs(th) < kFrankZeroGuard) th = th < 0.0 ? -kFrankZeroGuard : kFrankZeroGuard;
                cop.theta = th;
                break;
            }
            default:
                break;
        }
    }
    std::vector<double> beta(v.begin() + lay.i_beta(), v.begin() + lay.i_beta() + lay.n_beta());
    double lambda = lay.has_lambda() ? logistic(v[lay.i_lambda()]) : lay.lambda_fixed;
    std::vector<double> gamma(lay.p + 1, 0.0);
    for (std::size_t i = 0; i < lay.n_gamma(); ++i) gamma[i] = v[lay.i_gamma() + i];
    std::vector<double> pn(static_cast<std::size_t>(lay.m_neg) + 1, 1.0);
    for (int i = 0; i < lay.m_neg; ++i) pn[i + 1] = v[lay.i_phi_neg() + i];
    std::vector<double> pp(static_cast<std::size_t>(lay.m_pos) + 1, 1.0);
    for (int i = 0; i < lay.m_pos; ++i) pp[i + 1] = v[lay.i_phi_pos() + i];
    std::vector<double> alpha(v.begin() + lay.i_alpha(), v.begin() + lay.i_alpha() + lay.p + 1);
    double sigma_c = std::exp(v[lay.i_log_sigma_c()]);

    ModelParams mp{cop,
                   TMarginParams{std::move(beta), std::move(gamma), EalParams(lambda, pn, pp), lay.lambda_mode},
                   CMarginParams{std::move(alpha), sigma_c},
                   v};
    return mp;
}

inline std::vector<double> pack(const ParamLayout& lay, const ModelParams& mp) {
    if (mp.packed_src && mp.packed_src->size() == lay.size()) return *mp.packed_src;
    std::vector<double> v(lay.size(), 0.0);
    if (lay.has_theta()) {
        switch (lay.family) {
            case CopulaFamily::Clayton:
            case CopulaFamily::FrankPos:
                v[lay.i_theta()] = std::log(mp.copula.theta);
                break;
            case CopulaFamily::Gumbel:
                v[lay.i_theta()] = std::log(mp.copula.theta - 1.0);
                break;
            case CopulaFamily::Frank:
                v[lay.i_theta()] = mp.copula.theta;
                break;
            default:
                break;
        }
    }
    for (std::size_t i = 0; i < lay.n_beta(); ++i) v[lay.i_beta() + i] = mp.t.beta[i];
    if (lay.has_lambda()) v[lay.i_lambda()] = logit(mp.t.eal.lambda());
    for (std::size_t i = 0; i < lay.n_gamma(); ++i) v[lay.i_gamma() + i] = mp.t.gamma[i];
    for (int i = 0; i < lay.m_neg; ++i) v[lay.i_phi_neg() + i] = mp.t.eal.phi_neg()[i + 1];
    for (int i = 0; i < lay.m_pos; ++i) v[lay.i_phi_pos() + i] = mp.t.eal.phi_pos()[i + 1];
    for (std::size_t i = 0; i <= lay.p; ++i) v[lay.i_alpha() + i] = mp.c.alpha[i];
    v[lay.i_log_sigma_c()] = std::log(mp.c.sigma_c);
    return v;
}

// ---------------------------------------------------------------------------
// censored joint log-likelihood
// ---------------------------------------------------------------------------

// One observation's contribution:
//   delta = 1:  log f_T + log(1 - h_{C|T}(F_C | F_T))
//   delta = 0:  log f_C + log(1 - h_{T|C}(F_T | F_C))
inline double loglik_contribution(const ModelParams& mp, double y, const std::vector<double>& x, int delta) {
    double u = clamp_prob(t_cdf(mp.t, y, x));
    double v = clamp_prob(c_cdf(mp.c, y, x));
    double ll;
    if (delta == 1) {
        ll = safe_log(t_pdf(mp.t, y, x)) + safe_log(1.0 - h_c_given_t(mp.copula, v, u));
    } else {
        ll = safe_log(c_pdf(mp.c, y, x)) + safe_log(1.0 - h_t_given_c(mp.copula, u, v));
    }
    return std::isfinite(ll) ? ll : kLoglikPenalty;
}

// Row contributions summed by deterministic pairwise reduction, so the value
// is bitwise reproducible however rows are evaluated.
inline double loglik(const ModelParams& mp, const Dataset& data) {
    std::vector<double> contrib(data.n());
    std::vector<double> x(data.p() + 1);
    for (std::size_t i = 0; i < data.n(); ++i) {
        const double* row = data.x_row(i);
        std::copy(row, row + x.size(), x.begin());
        contrib[i] = loglik_contribution(mp, data.y(i), x, data.delta(i));
    }
    return pairwise_sum(contrib);
}

inline double loglik(const ParamLayout& lay, const std::vector<double>& packed, const Dataset& data) {
    ModelParams mp = unpack(lay, packed);
    return loglik(mp, data);
}

// ---------------------------------------------------------------------------
// T-only objective: copula and censoring parameters frozen (intermediate step)
// ---------------------------------------------------------------------------

class TOnlyObjective {
public:
    TOnlyObjective(ParamLayout lay, std::vector<double> frozen_packed, const Dataset& data)
        : lay_(lay), packed_(std::move(frozen_packed)), data_(&data) {
        if (packed_.size() != lay_.size()) throw std::invalid_argument("TOnlyObjective: wrong packed length");
        // C margin does not move: precompute its per-row CDF/log-density
        CMarginParams c = unpack(lay_, packed_).c;
        fc_.resize(data.n());
        log_fc_.resize(data.n());
        std::vector<double> x(data.p() + 1);
        for (std::size_t i = 0; i < data.n(); ++i) {
            const double* row = data.x_row(i);
            std::copy(row, row + x.size(), x.begin());
            fc_[i] = clamp_prob(c_cdf(c, data.y(i), x));
            log_fc_[i] = safe_log(c_pdf(c, data.y(i), x));
        }
        cop_ = unpack(lay_, packed_).copula;
    }

    std::size_t t_dim() const { return lay_.t_block_end() - lay_.t_block_begin(); }

    std::vector<double> t_coords() const {
        return std::vector<double>(packed_.begin() + lay_.t_block_begin(),
                                   packed_.begin() + lay_.t_block_end());
    }

    std::vector<double> full_packed(const std::vector<double>& t_coords) const {
        std::vector<double> v = packed_;
        std::copy(t_coords.begin(), t_coords.end(), v.begin() + lay_.t_block_begin());
        return v;
    }

    // negative log-likelihood over the T coordinates
    double operator()(const std::vector<double>& t_coords) const {
        std::vector<double> contrib(data_->n());
        try {
            ModelParams mp = unpack(lay_, full_packed(t_coords));
            std::vector<double> x(data_->p() + 1);
            for (std::size_t i = 0; i < data_->n(); ++i) {
                const double* row = data_->x_row(i);
                std::copy(row, row + x.size(), x.begin());
                double y = data_->y(i);
                double u = clamp_prob(t_cdf(mp.t, y, x));
                double ll;
                if (data_->delta(i) == 1) {
                    ll = safe_log(t_pdf(mp.t, y, x)) + safe_log(1.0 - h_c_given_t(cop_, fc_[i], u));
                } else {
                    ll = log_fc_[i] + safe_log(1.0 - h_t_given_c(cop_, u, fc_[i]));
                }
                contrib[i] = std::isfinite(ll) ? ll : kLoglikPenalty;
            }
        } catch (const std::exception&) {
            return -kLoglikPenalty;
        }
        return -pairwise_sum(contrib);
    }

    const ParamLayout& layout() const { return lay_; }

private:
    ParamLayout lay_;
    std::vector<double> packed_;
    const Dataset* data_;
    CopulaSpec cop_;
    std::vector<double> fc_, log_fc_;
};

// loglik with theta and theta_C frozen at the values carried by frozen_packed;
// t_coords supplies the T block
inline double loglik_t_only(const ParamLayout& lay, const std::vector<double>& frozen_packed,
                            const std::vector<double>& t_coords, const Dataset& data) {
    TOnlyObjective obj(lay, frozen_packed, data);
    return -obj(t_coords);
}

}  // namespace dqreg
