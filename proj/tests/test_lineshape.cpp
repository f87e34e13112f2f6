#include <cmath>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "otom/lineshape.hpp"

using namespace otom;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Independent reference for the super-Lorentzian angular integral:
//   F(u) = sqrt(2/pi) * Int_0^1 exp(-2 (u / (3x^2-1))^2) / |3x^2-1| dx
// evaluated with a plain midpoint rule. The integrand vanishes at the zero of
// 3x^2 - 1 for u > 0, so the midpoint rule converges once the dip near
// x = 1/sqrt(3) is resolved; n = 2e6 resolves it for u >= 1e-2.
double sl_reference_midpoint(double u, int n) {
    double acc = 0.0;
    const double h = 1.0 / n;
    for (int i = 0; i < n; ++i) {
        const double x = (i + 0.5) * h;
        const double s = 3.0 * x * x - 1.0;
        if (s == 0.0) continue;
        const double q = u / s;
        acc += std::exp(-2.0 * q * q) / std::fabs(s);
    }
    return std::sqrt(2.0 / kPi) * acc * h;
}

}  // namespace

TEST_SUITE_BEGIN("lineshape");

TEST_CASE("lorentzian closed form") {
    const double t2 = 0.04;
    CHECK(lineshape_value(Lineshape::lorentzian, 0.0, t2) ==
          doctest::Approx(t2 / kPi).epsilon(1e-14));
    // Half height at dw * t2 = 1.
    CHECK(lineshape_value(Lineshape::lorentzian, 1.0 / t2, t2) ==
          doctest::Approx(0.5 * t2 / kPi).epsilon(1e-14));
    const double dw = 731.0;
    const double a = dw * t2;
    CHECK(lineshape_value(Lineshape::lorentzian, dw, t2) ==
          doctest::Approx((t2 / kPi) / (1.0 + a * a)).epsilon(1e-14));
}

TEST_CASE("gaussian closed form") {
    const double t2 = 11e-6;
    CHECK(lineshape_value(Lineshape::gaussian, 0.0, t2) ==
          doctest::Approx(t2 / std::sqrt(2.0 * kPi)).epsilon(1e-14));
    const double dw = 40000.0;
    const double a = dw * t2;
    CHECK(lineshape_value(Lineshape::gaussian, dw, t2) ==
          doctest::Approx(t2 / std::sqrt(2.0 * kPi) * std::exp(-0.5 * a * a)).epsilon(1e-14));
}

TEST_CASE("lineshapes are even in the offset") {
    for (const double dw : {100.0, 5000.0, 40000.0}) {
        CHECK(lineshape_value(Lineshape::lorentzian, dw, 0.04) ==
              lineshape_value(Lineshape::lorentzian, -dw, 0.04));
        CHECK(lineshape_value(Lineshape::gaussian, dw, 2e-5) ==
              lineshape_value(Lineshape::gaussian, -dw, 2e-5));
        CHECK(lineshape_value(Lineshape::super_lorentzian, dw, 2e-5) ==
              lineshape_value(Lineshape::super_lorentzian, -dw, 2e-5));
    }
}

TEST_CASE("invalid arguments") {
    CHECK_THROWS_AS(lineshape_value(Lineshape::lorentzian, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(lineshape_value(Lineshape::gaussian, 1.0, -1e-6), std::invalid_argument);
    CHECK_THROWS_AS(lineshape_value(Lineshape::super_lorentzian, 1.0, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(lineshape_value(Lineshape::super_lorentzian, 0.0, 2e-5), std::domain_error);
}

TEST_CASE("super-Lorentzian factor agrees with an independent midpoint reference") {
    // u spans the range reached by the sampling ranges (dw*t2m in [6.4e-3, 4])
    // plus margin above it.
    for (const double u : {0.01, 0.05, 0.2, 1.0, 4.0, 10.0}) {
        const double ref = sl_reference_midpoint(u, 2000000);
        // Production quadrature (256 nodes).
        CHECK(super_lorentzian_factor(u) == doctest::Approx(ref).epsilon(1e-4));
        // The quadrature scheme itself converges to the reference.
        CHECK(super_lorentzian_factor(u, 2048) == doctest::Approx(ref).epsilon(1e-6));
    }
}

TEST_CASE("super-Lorentzian factor is strictly decreasing in u") {
    double prev = super_lorentzian_factor(1e-3);
    for (double u = 2e-3; u < 50.0; u *= 1.7) {
        const double cur = super_lorentzian_factor(u);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("memoized factor matches the direct quadrature") {
    // Inside the table: linear interpolation on 4096 log-spaced knots.
    for (double u = 1.2e-5; u < 1e3; u *= 1.9) {
        const double direct = super_lorentzian_factor(u);
        const double fast = super_lorentzian_factor_fast(u);
        CHECK(fast == doctest::Approx(direct).epsilon(1e-4));
    }
    // Outside the table the memo falls through to the direct evaluation.
    CHECK(super_lorentzian_factor_fast(5e-6) == super_lorentzian_factor(5e-6));
    CHECK(super_lorentzian_factor_fast(2e3) == super_lorentzian_factor(2e3));
}

TEST_CASE("super-Lorentzian lineshape value composes t2 with the factor") {
    const double dw = 6420.3, t2 = 1e-5;
    CHECK(lineshape_value(Lineshape::super_lorentzian, dw, t2) ==
          t2 * super_lorentzian_factor(std::fabs(dw * t2)));
}

TEST_SUITE_END();
