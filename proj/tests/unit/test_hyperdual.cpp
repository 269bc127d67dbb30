#include "doctest.h"

#include <functional>
#include <random>

#include "ksnh/hyperdual.hpp"

using ksnh::HyperDual;

namespace {

void check(const HyperDual& a, double r, double d1, double d2, double d12) {
    CHECK(a.real == doctest::Approx(r));
    CHECK(a.d1 == doctest::Approx(d1));
    CHECK(a.d2 == doctest::Approx(d2));
    CHECK(a.d12 == doctest::Approx(d12));
}

}  // namespace

TEST_CASE("products") {
    const HyperDual x{3, 1, 0, 0};
    check(x * x, 9, 6, 0, 0);
    check(HyperDual(2, 1, 0, 0) * HyperDual(5, 0, 1, 0), 10, 5, 2, 1);
    const HyperDual y{1, 1, 1, 0};
    check(y * y, 1, 2, 2, 2);
}

TEST_CASE("elementary functions") {
    check(ksnh::sin(HyperDual(0, 1, 0, 0)), 0, 1, 0, 0);
    check(ksnh::exp(HyperDual(0, 1, 1, 0)), 1, 1, 1, 1);
    check(ksnh::log(HyperDual(1, 1, 1, 0)), 0, 1, 1, -1);
}

TEST_CASE("domain errors carry the offending value") {
    try {
        (void)ksnh::log(HyperDual(-2.0, 1, 0, 0));
        FAIL("expected DomainError");
    } catch (const ksnh::DomainError& e) {
        CHECK(e.value() == -2.0);
    }
    CHECK_THROWS_AS(HyperDual(1.0) / HyperDual(0.0), ksnh::DomainError);
    CHECK_THROWS_AS(ksnh::pow(HyperDual(-1.0, 1, 0, 0), 0.5), ksnh::DomainError);
    CHECK_THROWS_AS(ksnh::pow(HyperDual(0.0, 1, 0, 0), -1.0), ksnh::DomainError);
    CHECK_THROWS_AS(ksnh::sqrt(HyperDual(-1.0)), ksnh::DomainError);
}

TEST_CASE("integer powers of negative bases") {
    check(ksnh::pow(HyperDual(-2, 1, 1, 0), 3.0), -8, 12, 12, -12);
    check(ksnh::pow(HyperDual(0, 1, 1, 0), 2.0), 0, 0, 0, 2);
    check(ksnh::pow(HyperDual(0, 1, 1, 0), 3.0), 0, 0, 0, 0);
}

TEST_CASE("variable exponent") {
    // x^y at x=2, y=3: d/dx = 12, d/dy = 8 ln 2, d2/dxdy = 4 + 12 ln 2
    const HyperDual r = ksnh::pow(HyperDual(2, 1, 0, 0), HyperDual(3, 0, 1, 0));
    check(r, 8, 12, 8 * std::log(2.0), 4 + 12 * std::log(2.0));
}

TEST_CASE("first and second derivatives match central differences") {
    using F = std::function<HyperDual(const HyperDual&)>;
    struct Case {
        const char* name;
        F f;
        double lo, hi;
    };
    const std::vector<Case> cases = {
        {"sin", [](const HyperDual& x) { return ksnh::sin(x); }, -3, 3},
        {"cos", [](const HyperDual& x) { return ksnh::cos(x); }, -3, 3},
        {"tan", [](const HyperDual& x) { return ksnh::tan(x); }, -1.2, 1.2},
        {"exp", [](const HyperDual& x) { return ksnh::exp(x); }, -2, 2},
        {"log", [](const HyperDual& x) { return ksnh::log(x); }, 0.2, 4},
        {"sqrt", [](const HyperDual& x) { return ksnh::sqrt(x); }, 0.2, 4},
        {"recip", [](const HyperDual& x) { return 1.0 / x; }, 0.3, 4},
        {"pow2.5", [](const HyperDual& x) { return ksnh::pow(x, 2.5); }, 0.2, 3},
    };
    std::mt19937_64 rng(7);
    const double h = 1e-5;
    for (const auto& c : cases) {
        std::uniform_real_distribution<double> U(c.lo, c.hi);
        for (int t = 0; t < 20; ++t) {
            const double x = U(rng);
            const HyperDual r = c.f(HyperDual(x, 1, 1, 0));
            const double d1 = (c.f(x + h).real - c.f(x - h).real) / (2 * h);
            const double d12 =
                (c.f(HyperDual(x + h, 1, 0, 0)).d1 - c.f(HyperDual(x - h, 1, 0, 0)).d1) / (2 * h);
            INFO(c.name << " at " << x);
            CHECK(std::abs(r.d1 - d1) <= 1e-6 * std::max(1.0, std::abs(d1)));
            CHECK(std::abs(r.d12 - d12) <= 1e-6 * std::max(1.0, std::abs(d12)));
        }
    }
}
