#include <cmath>
#include <vector>

#include "gtest/gtest.h"

#include "qcat/decay_fit.hpp"

using namespace qcat;

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int k = 0; k < n; ++k) v[k] = a + (b - a) * k / (n - 1);
    return v;
}

} // namespace

TEST(decay_fit, recovers_clean_generator) {
    const auto t = linspace(0.0, 15.0, 300);
    std::vector<double> f;
    for (double x : t) f.push_back(0.5 * std::exp(-x / 3.0) + 0.4);
    const DecayFit fit = fit_decay(t, f);
    EXPECT_NEAR(fit.f0, 0.5, 1e-6);
    EXPECT_NEAR(fit.tau, 3.0, 1e-6);
    EXPECT_NEAR(fit.f_sat, 0.4, 1e-6);
    EXPECT_LT(fit.residual, 1e-8);
    EXPECT_FALSE(fit.boundary);
}

TEST(decay_fit, envelope_with_ripple) {
    const auto t = linspace(0.0, 40.0, 4000);
    std::vector<double> f;
    for (double x : t) f.push_back((0.3 * std::exp(-x / 8.0) + 0.6) * (1.0 + 0.03 * std::cos(2 * M_PI * x / 0.57)));
    const DecayFit fit = fit_decay(t, f);
    EXPECT_NEAR(fit.tau / 8.0, 1.0, 0.05);
    EXPECT_GT(fit.residual, 1e-3);
}

TEST(decay_fit, constant_series_flags_boundary) {
    const auto t = linspace(0.0, 5.0, 50);
    const std::vector<double> f(50, 0.7);
    const DecayFit fit = fit_decay(t, f);
    EXPECT_TRUE(fit.boundary);
    EXPECT_NEAR(fit.f0 + fit.f_sat, 0.7, 1e-9);
}

TEST(decay_fit, rejects_bad_input) {
    const auto t = linspace(0.0, 1.0, 5);
    const std::vector<double> f(5, 1.0);
    EXPECT_THROW(fit_decay(t, f), DomainError);
    std::vector<double> t2 = linspace(0.0, 1.0, 12);
    t2[3] = t2[2];
    EXPECT_THROW(fit_decay(t2, std::vector<double>(12, 1.0)), DomainError);
    EXPECT_THROW(fit_decay(linspace(0.0, 1.0, 12), std::vector<double>(11, 1.0)), DomainError);
}
