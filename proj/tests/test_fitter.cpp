#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "dqreg/fitter.hpp"
#include "dqreg/simulate.hpp"

using namespace dqreg;

namespace {

FitConfig quick_config(CopulaFamily fam = CopulaFamily::Frank) {
    FitConfig fc;
    fc.family = fam;
    fc.seed = 42;
    fc.threads = 2;
    return fc;
}

}  // namespace

TEST_CASE("initial_values: quantile-regression start tracks the truth on clean linear data") {
    // fully uncensored linear data exercises the check-loss component directly
    Rng rng(5001);
    std::size_t n = 400, k = 2;
    std::vector<double> X, y;
    std::vector<int> d;
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        double xv = rng.uniform(0.0, 4.0);
        X.push_back(1.0);
        X.push_back(xv);
        y.push_back(1.5 + 0.8 * xv + 0.3 * rng.normal());
        d.push_back(1);
        rows[i] = i;
    }
    Dataset data(y, d, X, 1);
    auto beta = detail::check_loss_regression(data, rows, 0.5);
    auto ols = least_squares(X, y, n, k);
    CHECK(std::fabs(beta[0] - ols[0]) < 0.3);
    CHECK(std::fabs(beta[1] - ols[1]) < 0.3);
    CHECK(std::fabs(beta[0] - 1.5) < 0.3);
    CHECK(std::fabs(beta[1] - 0.8) < 0.3);
}

TEST_CASE("initial_values: list length, determinism, error cases") {
    ScenarioConfig sc = scenario_by_name("basis-het");
    Dataset data = generate_dataset(sc, 77);
    FitConfig fc = quick_config();
    fc.starts = 7;

    auto a = initial_values(data, fc);
    auto b = initial_values(data, fc);
    CHECK(a.size() == 7);
    CHECK(a == b);  // identical seed, identical list

    fc.seed = 43;
    auto c = initial_values(data, fc);
    CHECK(a != c);

    // all-uncensored and all-censored configurations are rejected
    std::vector<double> y{1.0, 2.0, 3.0}, X{1, 0.5, 1, 1.5, 1, 2.5};
    Dataset all_unc(y, {1, 1, 1}, X, 1);
    CHECK_THROWS_AS(initial_values(all_unc, fc), std::invalid_argument);
    Dataset all_cen(y, {0, 0, 0}, X, 1);
    CHECK_THROWS_AS(initial_values(all_cen, fc), std::invalid_argument);
}

TEST_CASE("config validation") {
    FitConfig fc;
    fc.hetero = false;
    fc.lambda_mode = LambdaMode::Variable;
    CHECK_THROWS_AS(fc.validate(), std::invalid_argument);
    fc.lambda_mode = LambdaMode::Fixed;
    fc.lambda_fixed = 0.5;
    CHECK_NOTHROW(fc.validate());
    fc.lambda_fixed = 1.2;
    CHECK_THROWS_AS(fc.validate(), std::invalid_argument);
}

TEST_CASE("basis_step recovers the regression line on AL data") {
    // T | x ~ AL(0.5) location-scale, light independent censoring
    Rng rng(5002);
    std::vector<double> y, X;
    std::vector<int> d;
    EalParams al(0.5, {1.0}, {1.0});
    for (std::size_t i = 0; i < 500; ++i) {
        double xv = rng.uniform(0.0, 4.0);
        double t = 1.0 + 0.5 * xv + 0.3 * eal_quantile(al, rng.uniform());
        double c = 2.2 + 0.5 * xv + 0.8 * rng.normal();
        y.push_back(std::min(t, c));
        d.push_back(t <= c ? 1 : 0);
        X.push_back(1.0);
        X.push_back(xv);
    }
    Dataset data(y, d, X, 1);
    FitConfig fc = quick_config(CopulaFamily::Independence);
    auto starts = initial_values(data, fc);
    BasisResult basis = basis_step(data, fc, starts);
    ParamLayout lay = fc.layout(1, 0, 0);
    CHECK(std::fabs(basis.packed[lay.i_beta()] - 1.0) < 0.15);
    CHECK(std::fabs(basis.packed[lay.i_beta() + 1] - 0.5) < 0.10);
    // returned loglik is the best across starts
    for (double ll : basis.start_logliks) CHECK(basis.loglik >= ll - 1e-9);
    // deterministic under a fixed seed
    BasisResult again = basis_step(data, fc, starts);
    CHECK(again.packed == basis.packed);
}

TEST_CASE("intermediate_step: grid bound 0 degenerates to the basis T-parameters") {
    ScenarioConfig sc = scenario_by_name("basis-het");
    sc.n = 200;
    Dataset data = generate_dataset(sc, 99);
    FitConfig fc = quick_config();
    fc.max_degree = 0;
    fc.starts = 4;
    auto starts = initial_values(data, fc);
    BasisResult basis = basis_step(data, fc, starts);
    IntermediateResult inter = intermediate_step(data, fc, basis);
    CHECK(inter.m_neg == 0);
    CHECK(inter.m_pos == 0);
    ParamLayout lay = fc.layout(1, 0, 0);
    std::vector<double> expect(basis.packed.begin() + lay.t_block_begin(),
                               basis.packed.begin() + lay.t_block_end());
    CHECK(inter.t_coords == expect);
}

TEST_CASE("full fit: smoke, invariants, determinism, timing") {
    ScenarioConfig sc = scenario_by_name("basis-het");
    Dataset data = generate_dataset(sc, 1234);
    FitConfig fc = quick_config();

    auto t0 = std::chrono::steady_clock::now();
    FitResult fr = fit(data, fc);
    auto t1 = std::chrono::steady_clock::now();
    std::printf("[timing] full fit (n=500, grid 5x5, 10 starts): %.2f s, degrees (%d,%d), ll=%.3f aic=%.2f\n",
                std::chrono::duration<double>(t1 - t0).count(), fr.layout.m_neg, fr.layout.m_pos, fr.loglik,
                fr.aic);

    CHECK(std::isfinite(fr.loglik));
    CHECK(std::isfinite(fr.aic));
    CHECK(fr.aic == Catch::Approx(2.0 * fr.q - 2.0 * fr.loglik));
    CHECK(std::fabs(fr.continuity_res) < 1e-6);
    CHECK(fr.q == fr.packed.size());

    // AIC at the selected pair is no worse than at (0,0)
    double aic00 = 0.0, aic_sel = 0.0;
    for (const auto& cell : fr.grid) {
        if (cell.m_neg == 0 && cell.m_pos == 0) aic00 = cell.aic;
        if (cell.m_neg == fr.layout.m_neg && cell.m_pos == fr.layout.m_pos) aic_sel = cell.aic;
    }
    CHECK(aic_sel <= aic00 + 1e-9);

    // pipeline monotone: basis -> intermediate composite -> final
    double inter_ll = aic_sel;  // placeholder; recompute from grid
    for (const auto& cell : fr.grid)
        if (cell.m_neg == fr.layout.m_neg && cell.m_pos == fr.layout.m_pos) inter_ll = cell.loglik;
    CHECK(fr.loglik >= inter_ll - 1e-6);
    CHECK(inter_ll >= fr.basis_loglik - 1e-6);

    // bitwise determinism across runs and thread counts
    FitConfig fc1 = fc;
    fc1.threads = 1;
    FitResult fr1 = fit(data, fc1);
    CHECK(fr1.packed == fr.packed);
    CHECK(fr1.loglik == fr.loglik);
}

TEST_CASE("fit under the homoscedastic Clayton configuration") {
    ScenarioConfig sc = scenario_by_name("basis-hom");
    sc.n = 300;
    Dataset data = generate_dataset(sc, 555);
    FitConfig fc = sc.fit;
    fc.seed = 7;
    fc.threads = 2;
    fc.starts = 6;
    FitResult fr = fit(data, fc);
    CHECK(std::isfinite(fr.aic));
    ModelParams mp = fr.params();
    CHECK(mp.t.eal.lambda() == 0.5);      // fixed
    CHECK(mp.t.gamma[1] == 0.0);          // homoscedastic
    CHECK(mp.copula.theta > 0.0);
    CHECK(std::fabs(fr.continuity_res) < 1e-6);
}
