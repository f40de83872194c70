#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace dqreg {

// Degrees above this would need factorial-scale intermediates; fits use k <= 4.
inline constexpr int kMaxLaguerreDegree = 60;

// L_k(x) = sum_{j=0}^{k} C(k,j) (-1)^j x^j / j!, evaluated by the three-term
// recurrence (k+1) L_{k+1}(x) = (2k+1-x) L_k(x) - k L_{k-1}(x).
inline double laguerre_eval(int k, double x) {
    if (k < 0 || k > kMaxLaguerreDegree)
        throw std::domain_error("laguerre_eval: degree outside [0," + std::to_string(kMaxLaguerreDegree) + "]");
    double lm1 = 1.0;  // L_0
    if (k == 0) return lm1;
    double l = 1.0 - x;  // L_1
    for (int i = 1; i < k; ++i) {
        double lp1 = ((2.0 * i + 1.0 - x) * l - i * lm1) / (i + 1.0);
        lm1 = l;
        l = lp1;
    }
    return l;
}

// sum_k coeffs[k] * L_k(x)
inline double laguerre_series(const std::vector<double>& coeffs, double x) {
    if (coeffs.empty()) throw std::domain_error("laguerre_series: empty coefficient vector");
    int k = static_cast<int>(coeffs.size()) - 1;
    if (k > kMaxLaguerreDegree) throw std::domain_error("laguerre_series: degree above guard");
    double lm1 = 1.0, acc = coeffs[0];
    if (k == 0) return acc;
    double l = 1.0 - x;
    acc += coeffs[1] * l;
    for (int i = 1; i < k; ++i) {
        double lp1 = ((2.0 * i + 1.0 - x) * l - i * lm1) / (i + 1.0);
        lm1 = l;
        l = lp1;
        acc += coeffs[i + 1] * lp1;
    }
    return acc;
}

// Monomial coefficients of L_k: a_{k,j} = C(k,j)(-1)^j / j!, built by the
// term-ratio recurrence a_{k,j+1} = -a_{k,j} (k-j) / (j+1)^2 to avoid raw
// factorials.
inline std::vector<double> laguerre_monomial_coeffs(int k) {
    if (k < 0 || k > kMaxLaguerreDegree) throw std::domain_error("laguerre_monomial_coeffs: degree above guard");
    std::vector<double> a(static_cast<std::size_t>(k) + 1);
    a[0] = 1.0;
    for (int j = 0; j < k; ++j) a[j + 1] = -a[j] * (k - j) / ((j + 1.0) * (j + 1.0));
    return a;
}

}  // namespace dqreg
