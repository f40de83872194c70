#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dqreg/eal.hpp"
#include "dqreg/optimizer.hpp"

using namespace dqreg;

TEST_CASE("nelder_mead minimizes a quadratic bowl") {
    auto f = [](const std::vector<double>& x) {
        double s = 0.0;
        for (double v : x) s += (v - 1.0) * (v - 1.0);
        return s;
    };
    auto r = nelder_mead(f, std::vector<double>(4, 0.0), OptBudget{500, 0.0, 1e-12});
    for (double v : r.x) CHECK(v == Catch::Approx(1.0).margin(1e-5));
    CHECK(r.converged);
}

TEST_CASE("nelder_mead solves Rosenbrock from the standard start") {
    auto f = [](const std::vector<double>& x) {
        double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
        return a * a + 100.0 * b * b;
    };
    auto r = nelder_mead(f, {-1.2, 1.0}, OptBudget{500, 0.0, 1e-14});
    CHECK(r.f < 1e-4);
    // grid-refined oracle: the global minimum is exactly (1,1), f = 0
    CHECK(r.x[0] == Catch::Approx(1.0).margin(1e-2));
    CHECK(r.x[1] == Catch::Approx(1.0).margin(1e-2));
}

TEST_CASE("nelder_mead returns the start when already minimal") {
    auto f = [](const std::vector<double>& x) { return x[0] * x[0] + x[1] * x[1]; };
    auto r = nelder_mead(f, {0.0, 0.0}, OptBudget{200, 1e-9, 1e-13});
    CHECK(std::fabs(r.x[0]) < 1e-4);
    CHECK(std::fabs(r.x[1]) < 1e-4);
    CHECK(r.f <= f({0.0, 0.0}) + 1e-15);
}

TEST_CASE("nelder_mead flags an all-penalty simplex") {
    auto f = [](const std::vector<double>&) { return -kLoglikPenalty; };
    auto r = nelder_mead(f, {0.3, 0.7}, OptBudget{100, 0.0, 1e-8});
    CHECK(r.degenerate_start);
    CHECK(r.x == std::vector<double>{0.3, 0.7});
}

TEST_CASE("nelder_mead is monotone in its best-so-far value and deterministic") {
    auto f = [](const std::vector<double>& x) {
        return std::sin(3.0 * x[0]) + x[0] * x[0] + 0.5 * std::cos(5.0 * x[1]) + x[1] * x[1];
    };
    auto r1 = nelder_mead(f, {2.0, -1.5}, OptBudget{300, 0.0, 1e-12});
    auto r2 = nelder_mead(f, {2.0, -1.5}, OptBudget{300, 0.0, 1e-12});
    CHECK(r1.x == r2.x);
    CHECK(r1.f == r2.f);
    CHECK(r1.f <= f({2.0, -1.5}));
}

TEST_CASE("constrained_refine solves the toy equality problem") {
    auto f = [](const std::vector<double>& x) { return (x[0] - 2.0) * (x[0] - 2.0); };
    auto res = [](const std::vector<double>& x) { return x[0] - 1.0; };
    auto r = constrained_refine(f, res, {0.0}, OptBudget{300, 0.0, 1e-14});
    CHECK(r.x[0] == Catch::Approx(1.0).margin(1e-4));
    CHECK(std::fabs(res(r.x)) < 1e-6);
}

TEST_CASE("constrained_refine with a feasible start behaves like plain NM") {
    auto f = [](const std::vector<double>& x) { return (x[0] - 3.0) * (x[0] - 3.0) + x[1] * x[1]; };
    auto res = [](const std::vector<double>&) { return 0.0; };  // vacuous constraint
    auto r = constrained_refine(f, res, {0.0, 1.0}, OptBudget{300, 0.0, 1e-12});
    auto plain = nelder_mead(f, {0.0, 1.0}, OptBudget{300, 0.0, 1e-12});
    CHECK(r.x[0] == Catch::Approx(plain.x[0]).margin(1e-6));
    CHECK(r.x[1] == Catch::Approx(plain.x[1]).margin(1e-6));
}

TEST_CASE("nmcob equals nelder_mead when the constraint is vacuous") {
    auto f = [](const std::vector<double>& x) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - 0.3 * (i + 1)) * (x[i] - 0.3 * (i + 1));
        return s;
    };
    auto res = [](const std::vector<double>&) { return 0.0; };
    auto r = nmcob(f, res, {1.0, -1.0, 0.5}, NmcobBudget{400, 100, 1e-12});
    auto nm = nelder_mead(f, {1.0, -1.0, 0.5}, OptBudget{500, 0.0, 1e-12});
    CHECK(std::fabs(r.f - nm.f) < 1e-8);
}

TEST_CASE("nmcob solves the constrained toy like constrained_refine") {
    auto f = [](const std::vector<double>& x) { return (x[0] - 2.0) * (x[0] - 2.0); };
    auto res = [](const std::vector<double>& x) { return x[0] - 1.0; };
    auto a = nmcob(f, res, {0.0}, NmcobBudget{400, 100, 1e-14});
    auto b = constrained_refine(f, res, {0.0}, OptBudget{300, 0.0, 1e-14});
    CHECK(std::fabs(a.x[0] - b.x[0]) < 1e-3);
    CHECK(std::fabs(res(a.x)) < 1e-6);
}

TEST_CASE("constrained refinement of EAL coefficients keeps the residual small from a symmetric start") {
    // slice objective over (phi~_1, phi_1): mild pull away from symmetry
    auto f = [](const std::vector<double>& x) {
        return (x[0] - 0.4) * (x[0] - 0.4) + (x[1] - 0.1) * (x[1] - 0.1);
    };
    auto res = [](const std::vector<double>& x) {
        return continuity_residual({1.0, x[0]}, {1.0, x[1]});
    };
    std::vector<double> x0{0.3, 0.3};  // symmetric, hence feasible
    REQUIRE(res(x0) == 0.0);
    auto r = constrained_refine(f, res, x0, OptBudget{300, 0.0, 1e-14});
    CHECK(std::fabs(res(r.x)) < 1e-6);
    CHECK(f(r.x) <= f(x0));
}
