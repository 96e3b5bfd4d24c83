#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "wsaw/bessel.hpp"

using namespace wsaw;

namespace {

// e^{-x} I_n(x) from the power series, summed in long double.
long double series_scaled(int n, long double x) {
    const long double q = 0.25L * x * x;
    long double term = (n == 0) ? 1.0L : 0.5L * x;
    long double sum = term;
    for (int m = 1; m < 5000; ++m) {
        term *= q / (static_cast<long double>(m) * static_cast<long double>(m + n));
        sum += term;
        if (term < 1e-24L * sum) break;
    }
    return sum * std::exp(-x);
}

}  // namespace

TEST(Bessel, ValuesAtZero) {
    EXPECT_EQ(bessel_i0_scaled(0.0), 1.0);
    EXPECT_EQ(bessel_i1_scaled(0.0), 0.0);
}

TEST(Bessel, AtOneMatchesSeries) {
    EXPECT_NEAR(bessel_i0_scaled(1.0) / static_cast<double>(series_scaled(0, 1.0L)), 1.0, 1e-14);
    EXPECT_NEAR(bessel_i1_scaled(1.0) / static_cast<double>(series_scaled(1, 1.0L)), 1.0, 1e-14);
    EXPECT_NEAR(bessel_i0_scaled(1.0) * std::exp(1.0), 1.2660658777520082, 1e-15);
}

TEST(Bessel, LargeArgumentStaysFinite) {
    const double x = 700.0;
    const double expect = 1.0 / std::sqrt(2.0 * std::numbers::pi * x) * (1.0 + 1.0 / (8.0 * x));
    const double v = bessel_i0_scaled(x);
    ASSERT_TRUE(std::isfinite(v));
    EXPECT_NEAR(v / expect, 1.0, 1e-6);
    EXPECT_NEAR(v / static_cast<double>(series_scaled(0, 700.0L)), 1.0, 1e-13);
    EXPECT_TRUE(std::isfinite(bessel_i1_scaled(1e6)));
}

class BesselSweep : public ::testing::TestWithParam<double> {};

TEST_P(BesselSweep, RelativeErrorBelowTolerance) {
    const double x = GetParam();
    const double i0 = bessel_i0_scaled(x), i1 = bessel_i1_scaled(x);
    EXPECT_NEAR(i0 / static_cast<double>(series_scaled(0, x)), 1.0, 1e-13) << x;
    EXPECT_NEAR(i1 / static_cast<double>(series_scaled(1, x)), 1.0, 1e-13) << x;
    EXPECT_LT(i1, i0);
    EXPECT_GT(i0, 0.0);
    EXPECT_LE(i0, 1.0);
}

INSTANTIATE_TEST_SUITE_P(Grid, BesselSweep,
                         ::testing::Values(1e-8, 1e-3, 0.1, 0.5, 2.0, 5.0, 10.0, 15.0, 19.99, 20.0, 20.01, 25.0,
                                           40.0, 80.0, 150.0, 300.0, 600.0, 1000.0));

TEST(Bessel, LogI0) {
    for (double x : {0.0, 0.3, 7.0, 30.0, 900.0}) {
        const long double ref = x + std::log(series_scaled(0, x));
        EXPECT_NEAR(log_bessel_i0(x), static_cast<double>(ref), 1e-13 * std::max(1.0, x));
    }
}

TEST(Bessel, DomainErrors) {
    EXPECT_THROW(bessel_i0_scaled(-1.0), DomainError);
    EXPECT_THROW(bessel_i1_scaled(std::nan("")), DomainError);
}
