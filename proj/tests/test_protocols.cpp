#include <cmath>

#include "gtest/gtest.h"

#include "qcat/protocols.hpp"

using namespace qcat;

namespace {

const PulseParams kFiveHalves{0.176, 0.7269, 0.0};

} // namespace

TEST(protocols, n2_traces_independent_of_sampling_density) {
    const SpinQuantumNumber s(5);
    N2Options coarse, fine;
    coarse.n_samples = 101;
    fine.n_samples = 201;
    const auto a = run_n2(s, 1.0, CatBound::Polar, kFiveHalves, 0.0, coarse);
    const auto b = run_n2(s, 1.0, CatBound::Polar, kFiveHalves, 0.0, fine);
    for (std::size_t j = 0; j < a.times.size(); ++j) {
        ASSERT_NEAR(a.times[j], b.times[2 * j], 1e-14);
        EXPECT_NEAR(a.fidelity[j], b.fidelity[2 * j], 1e-10);
        EXPECT_NEAR(a.rqfi[j], b.rqfi[2 * j], 1e-10);
    }
}

TEST(protocols, n2_ranges_and_snapshots) {
    const SpinQuantumNumber s(5);
    const auto r = run_n2(s, 1.0, CatBound::Polar, kFiveHalves);
    ASSERT_EQ(r.times.size(), 1001u);
    for (double f : r.fidelity) {
        EXPECT_GE(f, 0.0);
        EXPECT_LE(f, 1.0);
    }
    for (double q : r.rqfi) EXPECT_GE(q, -1e-12);
    ASSERT_EQ(r.snapshots.size(), 4u);
    for (const auto& snap : r.snapshots) EXPECT_NEAR(snap.rho.trace().real(), 1.0, 1e-12);
    // the pulse preserves purity and the pre/post snapshots share the time
    EXPECT_EQ(r.snapshots[1].time, r.snapshots[2].time);
    EXPECT_NEAR((r.snapshots[2].rho * r.snapshots[2].rho).trace().real(), 1.0, 1e-10);
    // before the pulse the +X state has a quarter overlap with the even polar cat
    EXPECT_NEAR(r.fidelity.front(), 0.25, 1e-12);
}

TEST(protocols, lindblad_path_tracks_pure_path_for_tiny_gamma) {
    const SpinQuantumNumber s(5);
    N2Options o;
    o.n_samples = 51;
    const auto pure = run_n2(s, 1.0, CatBound::Polar, kFiveHalves, 0.0, o);
    const auto open = run_n2(s, 1.0, CatBound::Polar, kFiveHalves, 1e-9, o);
    for (std::size_t j = 0; j < pure.fidelity.size(); ++j) EXPECT_NEAR(pure.fidelity[j], open.fidelity[j], 1e-6);
}

TEST(protocols, zero_deviation_row_is_baseline) {
    const SpinQuantumNumber s(5);
    N2Options o;
    o.n_samples = 201;
    const auto base = sensitivity_row(s, 1.0, CatBound::Polar, kFiveHalves, SensitivityParameter::Baseline, 0.0, o);
    for (auto p : {SensitivityParameter::TR, SensitivityParameter::ThetaR, SensitivityParameter::ThetaCss, SensitivityParameter::PhiCss}) {
        const auto row = sensitivity_row(s, 1.0, CatBound::Polar, kFiveHalves, p, 0.0, o);
        EXPECT_EQ(row.stats.mean, base.stats.mean);
        EXPECT_EQ(row.stats.ripple, base.stats.ripple);
    }
    const auto shifted = sensitivity_row(s, 1.0, CatBound::Polar, kFiveHalves, SensitivityParameter::TR, 0.1, o);
    EXPECT_NEAR(shifted.run.pulse_times.front(), 1.1 * kFiveHalves.t_r, 1e-15);
}

TEST(protocols, sensitivity_scan_layout) {
    N2Options o;
    o.n_samples = 101;
    const auto rep = sensitivity_scan(SpinQuantumNumber(3), 1.0, CatBound::Polar, {0.3, 0.7, 0.0}, {0.05, -0.05, 0.10, -0.10}, o);
    ASSERT_EQ(rep.rows.size(), 17u);
    EXPECT_EQ(rep.rows[0].parameter, SensitivityParameter::Baseline);
    EXPECT_EQ(rep.rows[1].parameter, SensitivityParameter::TR);
    EXPECT_EQ(rep.rows[16].parameter, SensitivityParameter::PhiCss);
    EXPECT_EQ(rep.rows[16].deviation, -0.10);
}

TEST(protocols, dft_of_known_signal) {
    const int n = 128;
    std::vector<double> x(n);
    for (int j = 0; j < n; ++j) x[j] = 0.3 + 0.5 * std::cos(kTwoPi * 8 * j / n) + 0.2 * std::sin(kTwoPi * 16 * j / n);
    const auto a = dft_spectrum(x);
    EXPECT_NEAR(a[0], 0.3, 1e-12);
    EXPECT_NEAR(a[8], 0.25, 1e-12);
    EXPECT_NEAR(a[16], 0.1, 1e-12);
    EXPECT_NEAR(a[5], 0.0, 1e-12);
    EXPECT_EQ(dominant_nonzero_bin(a), 8u);
}

TEST(protocols, harmonic_ratio_symmetries) {
    // the eta = 1 Hamiltonian commutes with a pi rotation about z
    const auto pts = harmonic_ratio({{0.7, 0.3}, {0.7, 0.3 + kPi}, {kPi / 2, kPi / 2}, {kPi / 2, 3 * kPi / 2}});
    EXPECT_NEAR(pts[0].a1, pts[1].a1, 1e-10);
    EXPECT_NEAR(pts[0].a2, pts[1].a2, 1e-10);
    EXPECT_NEAR(pts[2].ratio, pts[3].ratio, 1e-10);
    EXPECT_EQ(pts[2].status, RatioStatus::Finite);
    EXPECT_THROW(harmonic_ratio({{0.0, 0.0}}, {4, 64}), DomainError);
}

TEST(protocols, n4_spectrum_peaks_at_second_harmonic) {
    const N4Result r = run_n4();
    EXPECT_EQ(r.expected_bin, 2u * 8u);
    EXPECT_EQ(r.dominant_bin, r.expected_bin);
    EXPECT_GT(r.restored_fidelity, 0.9);
    EXPECT_LT(r.rotating_variation, r.fixed_swing);
    ASSERT_EQ(r.trace.pulse_times.size(), 3u);
    EXPECT_LT(r.trace.pulse_times[0], r.trace.pulse_times[1]);
    EXPECT_LT(r.trace.pulse_times[1], r.trace.pulse_times[2]);
}

TEST(protocols, decoherence_degrades_monotonically) {
    N2Options o;
    o.n_samples = 101;
    o.snapshots = false;
    const SpinQuantumNumber s(5);
    const auto pure = run_n2(s, 1.0, CatBound::Polar, kFiveHalves, 0.0, o);
    const auto series = decoherence_series(s, 1.0, CatBound::Polar, kFiveHalves, {1e-4, 1e-3, 1e-2}, o);
    double prev = 0.0;
    for (const auto& r : series) {
        double dev = 0.0;
        for (std::size_t j = 0; j < r.fidelity.size(); ++j) dev = std::max(dev, std::abs(r.fidelity[j] - pure.fidelity[j]));
        EXPECT_GT(dev, prev);
        prev = dev;
    }
    EXPECT_THROW(decoherence_series(s, 1.0, CatBound::Polar, kFiveHalves, {-1.0}, o), DomainError);
}

TEST(protocols, pole_rate_small_gamma_limit) {
    // only the linear Iz term survives to first order: c_1 ~ I gamma, so k ~ 2 I^3 gamma
    for (int twice : {2, 5, 9}) {
        const SpinQuantumNumber s(twice);
        const double i = s.value();
        EXPECT_NEAR(pole_coherence_rate(s, 1e-7) / 1e-7, 2 * i * i * i, 1e-5 * i * i * i);
        EXPECT_LT(pole_coherence_rate(s, 1e-3), pole_coherence_rate(s, 2e-3));
    }
}

TEST(protocols, decay_measurement_spin_one) {
    const SpinQuantumNumber s(2);
    const PulseParams p = params_of(optimize(s, 1.0, CatBound::Polar));
    DecayWindowOptions o;
    o.samples = 400;
    const DecayMeasurement m = measure_decay(s, 1.0, 1e-2, p, o);
    EXPECT_FALSE(m.fit.boundary);
    EXPECT_GT(m.fit.tau, 0.0);
    EXPECT_GT(m.fit.f0, 0.0);
    EXPECT_NEAR(m.times.back(), m.window, 1e-12);
    EXPECT_LE(m.iterations, o.max_iterations);
    EXPECT_THROW(measure_decay(s, 1.0, 0.0, p), DomainError);
}
