#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dqreg/eal.hpp"
#include "dqreg/laguerre.hpp"
#include "dqreg/rng.hpp"
#include "support/quadrature.hpp"

using namespace dqreg;

namespace {

// Independent transcription of the two-branch density formula, summing the
// Laguerre terms from explicitly computed binomial/factorial coefficients.
double eal_pdf_oracle(double lambda, const std::vector<double>& phi_neg, const std::vector<double>& phi_pos,
                      double y) {
    auto lag = [](int k, double x) {
        double s = 0.0;
        for (int j = 0; j <= k; ++j) {
            double binom = 1.0, fact = 1.0;
            for (int i = 0; i < j; ++i) binom = binom * (k - i) / (i + 1.0);
            for (int i = 2; i <= j; ++i) fact *= i;
            s += binom * ((j % 2) ? -1.0 : 1.0) / fact * std::pow(x, j);
        }
        return s;
    };
    const std::vector<double>& phi = (y > 0.0) ? phi_pos : phi_neg;
    double z = (y > 0.0) ? lambda * y : (lambda - 1.0) * y;
    double series = 0.0, norm = 0.0;
    for (std::size_t k = 0; k < phi.size(); ++k) {
        series += phi[k] * lag(static_cast<int>(k), z);
        norm += phi[k] * phi[k];
    }
    return lambda * (1.0 - lambda) * std::exp(-z) * series * series / norm;
}

EalParams random_params(Rng& rng, int max_degree = 4) {
    int mn = static_cast<int>(rng.uniform() * (max_degree + 1));
    int mp = static_cast<int>(rng.uniform() * (max_degree + 1));
    std::vector<double> pn(mn + 1, 1.0), pp(mp + 1, 1.0);
    for (int i = 1; i <= mn; ++i) pn[i] = rng.uniform(-3.0, 3.0);
    for (int i = 1; i <= mp; ++i) pp[i] = rng.uniform(-3.0, 3.0);
    return EalParams(rng.uniform(0.1, 0.9), pn, pp);
}

}  // namespace

TEST_CASE("laguerre_eval basic values") {
    CHECK(laguerre_eval(0, 3.7) == 1.0);
    CHECK(laguerre_eval(1, 1.0) == 0.0);
    CHECK(laguerre_eval(2, 2.0) == Catch::Approx(-1.0).margin(1e-14));  // 1 - 4 + 2
    CHECK_THROWS_AS(laguerre_eval(61, 1.0), std::domain_error);
    CHECK_NOTHROW(laguerre_eval(60, 10.0));
}

TEST_CASE("laguerre_series matches term-by-term summation") {
    CHECK(laguerre_series({1.0}, 5.0) == 1.0);
    CHECK(laguerre_series({1.0, -1.0}, 0.0) == Catch::Approx(0.0).margin(1e-15));
    std::vector<double> c{1.0, 0.5, -0.3};
    double direct = c[0] * laguerre_eval(0, 1.2) + c[1] * laguerre_eval(1, 1.2) + c[2] * laguerre_eval(2, 1.2);
    CHECK(laguerre_series(c, 1.2) == Catch::Approx(direct).epsilon(1e-14));
    CHECK_THROWS_AS(laguerre_series({}, 1.0), std::domain_error);
}

TEST_CASE("laguerre orthonormality under e^{-x} weight") {
    for (int j = 0; j <= 5; ++j)
        for (int k = j; k <= 5; ++k) {
            double q = testsupport::integrate(
                [&](double x) { return laguerre_eval(j, x) * laguerre_eval(k, x) * std::exp(-x); }, 0.0, 200.0,
                1e-11);
            CHECK(q == Catch::Approx(j == k ? 1.0 : 0.0).margin(1e-7));
        }
}

TEST_CASE("eal_pdf matches the formula") {
    EalParams al05(0.5, {1.0}, {1.0});
    CHECK(eal_pdf(al05, 0.0) == Catch::Approx(0.25).margin(1e-15));

    EalParams al03(0.3, {1.0}, {1.0});
    CHECK(eal_pdf(al03, 1.0) == Catch::Approx(0.3 * 0.7 * std::exp(-0.3)).epsilon(1e-14));

    EalParams enriched(0.4, {1.0, 0.5}, {1.0});
    CHECK(eal_pdf(enriched, -2.0) ==
          Catch::Approx(eal_pdf_oracle(0.4, {1.0, 0.5}, {1.0}, -2.0)).epsilon(1e-12));

    // y = 0 is the negative branch
    EalParams asym(0.5, {1.0, 2.0}, {1.0});
    double neg_limit = 0.25 * std::pow(laguerre_series({1.0, 2.0}, 0.0), 2) / 5.0;
    CHECK(eal_pdf(asym, 0.0) == Catch::Approx(neg_limit).epsilon(1e-12));
}

TEST_CASE("eal_pdf invalid parameters rejected") {
    CHECK_THROWS_AS(EalParams(0.0, {1.0}, {1.0}), std::domain_error);
    CHECK_THROWS_AS(EalParams(0.5, {0.9}, {1.0}), std::domain_error);
    CHECK_THROWS_AS(EalParams(0.5, {}, {1.0}), std::domain_error);
}

TEST_CASE("eal_cdf closed form") {
    SECTION("F(0) equals lambda exactly") {
        Rng rng(7001);
        for (int rep = 0; rep < 100; ++rep) {
            auto p = random_params(rng);
            CHECK(eal_cdf(p, 0.0) == p.lambda());
        }
    }
    SECTION("AL negative branch value") {
        EalParams p(0.5, {1.0}, {1.0});
        CHECK(eal_cdf(p, -1.0) == Catch::Approx(0.5 * std::exp(-0.5)).epsilon(1e-14));
    }
    SECTION("agrees with quadrature of the density") {
        Rng rng(7002);
        EalParams p(rng.uniform(0.2, 0.8), {1.0, rng.uniform(-2, 2), rng.uniform(-2, 2)}, {1.0});
        double y = -0.7;
        double lo = -200.0 / (1.0 - p.lambda());
        double q = testsupport::integrate([&](double t) { return eal_pdf(p, t); }, lo, y, 1e-12);
        CHECK(eal_cdf(p, y) == Catch::Approx(q).margin(1e-8));
    }
    SECTION("positive branch vs quadrature, small and large y") {
        EalParams p(0.35, {1.0, 0.4}, {1.0, -0.8, 0.25});
        for (double y : {0.05, 0.4, 1.7, 6.0}) {
            double q = eal_cdf(p, 0.0) +
                       testsupport::integrate([&](double t) { return eal_pdf(p, t); }, 0.0, y, 1e-12);
            CHECK(eal_cdf(p, y) == Catch::Approx(q).margin(1e-8));
        }
    }
}

TEST_CASE("eal normalization: mass lambda below 0 and 1-lambda above") {
    Rng rng(7003);
    for (int rep = 0; rep < 100; ++rep) {
        auto p = random_params(rng);
        double lo = -200.0 / (1.0 - p.lambda()), hi = 200.0 / p.lambda();
        double mneg = testsupport::integrate([&](double t) { return eal_pdf(p, t); }, lo, 0.0, 1e-11);
        double mpos = testsupport::integrate([&](double t) { return eal_pdf(p, t); }, 0.0, hi, 1e-11);
        CHECK(mneg == Catch::Approx(p.lambda()).margin(1e-8));
        CHECK(mpos == Catch::Approx(1.0 - p.lambda()).margin(1e-8));
    }
}

TEST_CASE("eal_cdf monotone with limits 0 and 1") {
    Rng rng(7004);
    auto p = random_params(rng);
    double prev = 0.0;
    for (double y = -80.0; y <= 80.0; y += 0.5) {
        double f = eal_cdf(p, y);
        CHECK(f >= prev - 1e-13);
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
        prev = f;
    }
    CHECK(eal_cdf(p, -1e4) == Catch::Approx(0.0).margin(1e-12));
    CHECK(eal_cdf(p, 1e4) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("eal_pdf nonnegative") {
    Rng rng(7005);
    for (int rep = 0; rep < 20; ++rep) {
        auto p = random_params(rng);
        for (double y = -30.0; y <= 30.0; y += 0.37) CHECK(eal_pdf(p, y) >= 0.0);
    }
}

TEST_CASE("eal_quantile") {
    SECTION("prob = lambda gives 0") {
        Rng rng(7006);
        for (int rep = 0; rep < 20; ++rep) {
            auto p = random_params(rng);
            CHECK(eal_quantile(p, p.lambda()) == 0.0);
        }
    }
    SECTION("AL closed form") {
        EalParams p(0.5, {1.0}, {1.0});
        CHECK(eal_quantile(p, 0.25) == Catch::Approx(2.0 * std::log(0.5)).epsilon(1e-12));
    }
    SECTION("roundtrip with eal_cdf") {
        Rng rng(7007);
        for (int rep = 0; rep < 10; ++rep) {
            auto p = random_params(rng);
            for (double y : {-3.0, -0.1, 0.0, 0.1, 3.0}) {
                double f = eal_cdf(p, y);
                if (f <= 0.0 || f >= 1.0) continue;
                double q = eal_quantile(p, f);
                // quantile inverts the CDF; at flat spots (density zeros) compare in probability
                if (std::fabs(q - y) > 1e-8) CHECK(eal_cdf(p, q) == Catch::Approx(f).margin(1e-10));
            }
        }
    }
    SECTION("domain errors") {
        EalParams p(0.5, {1.0}, {1.0});
        CHECK_THROWS_AS(eal_quantile(p, 0.0), std::domain_error);
        CHECK_THROWS_AS(eal_quantile(p, 1.0), std::domain_error);
    }
}

TEST_CASE("eal_sample empirical CDF matches eal_cdf") {
    EalParams p(0.4, {1.0, 0.6}, {1.0, -0.4});
    Rng rng(7008);
    std::vector<double> sample(100000);
    for (auto& s : sample) s = eal_sample(p, rng.uniform());
    double d = testsupport::ks_distance(sample, [&](double y) { return eal_cdf(p, y); });
    CHECK(d < 0.01);

    EalParams al(0.5, {1.0}, {1.0});
    CHECK(eal_sample(al, 0.5) == 0.0);
}

TEST_CASE("continuity_residual") {
    CHECK(continuity_residual({1.0}, {1.0}) == 0.0);
    CHECK(continuity_residual({1.0, 0.3, -0.7}, {1.0, 0.3, -0.7}) == 0.0);  // symmetry is sufficient
    CHECK(continuity_residual({1.0, 1.0}, {1.0}) == Catch::Approx(1.0).margin(1e-15));
    CHECK_THROWS_AS(continuity_residual({2.0}, {1.0}), std::domain_error);
}

TEST_CASE("zero continuity residual implies a continuous density at 0") {
    // a non-symmetric feasible pair: (sum)^2/norm matches across branches
    std::vector<double> pn{1.0, 0.5};
    double target = continuity_residual(pn, {1.0}) + 1.0;  // (1.5)^2/1.25 = 1.8
    // solve (1+t)^2/(1+t^2) = target for phi_pos = (1, t)
    double a = 1.0 - target, b = 2.0, c = 1.0 - target;
    double t = (-b + std::sqrt(b * b - 4 * a * c)) / (2 * a);
    std::vector<double> pp{1.0, t};
    REQUIRE(std::fabs(continuity_residual(pn, pp)) < 1e-12);
    EalParams p(0.37, pn, pp);
    double h = 1e-6;
    double scale = eal_pdf(p, 0.0);
    CHECK(std::fabs(eal_pdf(p, -h) - eal_pdf(p, h)) < 1e-4 * scale);
}
