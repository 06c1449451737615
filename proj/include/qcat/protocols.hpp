#ifndef QCAT_PROTOCOLS_HPP
#define QCAT_PROTOCOLS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "qcat/decay_fit.hpp"
#include "qcat/dynamics.hpp"
#include "qcat/lindblad.hpp"
#include "qcat/measures.hpp"
#include "qcat/parallel.hpp"
#include "qcat/pulse_optimizer.hpp"

namespace qcat {

struct PulseParams {
    double t_r = 0.0;
    double theta_r = 0.0;
    double varphi = 0.0;
};

inline PulseParams params_of(const OptimizationResult& r) { return {r.t_r, r.theta_r, r.varphi}; }

struct Snapshot {
    std::string label;
    double time = 0.0;
    DensityMatrix rho;
};

struct ProtocolResult {
    std::vector<double> times;
    std::vector<double> fidelity;
    std::vector<double> rqfi;
    std::vector<double> pulse_times;
    std::vector<Snapshot> snapshots;
};

struct WindowStats {
    double mean = 0.0;
    double max = 0.0;
    double min = 0.0;
    double ripple = 0.0;
};

inline WindowStats window_stats(const std::vector<double>& times, const std::vector<double>& values, double t_from,
                                double t_to = std::numeric_limits<double>::infinity()) {
    WindowStats s;
    s.min = std::numeric_limits<double>::infinity();
    s.max = -s.min;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] < t_from || times[k] > t_to) continue;
        sum += values[k];
        s.min = std::min(s.min, values[k]);
        s.max = std::max(s.max, values[k]);
        ++n;
    }
    if (n == 0) throw DomainError("window_stats: empty window");
    s.mean = sum / static_cast<double>(n);
    s.ripple = 0.5 * (s.max - s.min);
    return s;
}

// ---------------------------------------------------------------------------
// N = 2

struct N2Options {
    int n_samples = 1001;
    double window_factor = 10.0;
    double theta_css = kPi / 2;  // initial coherent state, |+X> by default
    double phi_css = 0.0;
    std::optional<Vec3> rqfi_direction;  // defaults to the bound axis
    bool snapshots = true;
    LindbladOptions lindblad;
};

inline ProtocolResult run_n2(SpinQuantumNumber spin, double eta, CatBound bound, const PulseParams& params, double gamma = 0.0,
                             const N2Options& options = {}) {
    if (!(params.t_r > 0.0)) throw DomainError("run_n2: t_R must be positive");
    if (options.n_samples < 2) throw DomainError("run_n2: need at least 2 samples");
    const SpinOperatorSet ops = build_operators(spin);
    const HamiltonianSpec spec{spin, eta, true};
    validate(spec);
    const StateVector psi0 = coherent_spin_state(ops, options.theta_css, options.phi_css);
    const StateVector target = cat_target(ops, bound, params.varphi);
    const Vec3 dir = options.rqfi_direction.value_or(bound_axis(bound));
    const PulseSchedule schedule({{params.t_r, Vec3::UnitX(), params.theta_r}});
    const double t_end = options.window_factor * params.t_r;

    ProtocolResult out;
    out.times = uniform_grid(0.0, t_end, static_cast<std::size_t>(options.n_samples));
    out.pulse_times = {params.t_r};
    const Matrix r = rotation_operator(ops, Vec3::UnitX(), params.theta_r);
    if (gamma == 0.0) {
        const auto states = evolve_pure(psi0, spec, schedule, out.times);
        for (const auto& psi : states) {
            out.fidelity.push_back(fidelity(target, psi));
            out.rqfi.push_back(normalized_rqfi(ops, psi, dir));
        }
        if (options.snapshots) {
            const StateVector before = PropagatorCache(qi_hamiltonian(ops, spec)).apply(psi0, params.t_r);
            out.snapshots = {{"t0", 0.0, pure_density(psi0)},
                             {"tR_minus", params.t_r, pure_density(before)},
                             {"tR_plus", params.t_r, pure_density(r * before)},
                             {"final", t_end, pure_density(states.back())}};
        }
    } else {
        const DephasingConfig deph{gamma};
        const auto rhos = evolve_lindblad(pure_density(psi0), spec, deph, schedule, out.times, options.lindblad);
        for (const auto& rho : rhos) {
            out.fidelity.push_back(fidelity(target, rho));
            out.rqfi.push_back(normalized_rqfi(ops, rho, dir));
        }
        if (options.snapshots) {
            const std::vector<double> g{0.0, params.t_r};
            const auto pre = evolve_lindblad(pure_density(psi0), spec, deph, PulseSchedule{}, g, options.lindblad);
            out.snapshots = {{"t0", 0.0, pure_density(psi0)},
                             {"tR_minus", params.t_r, pre[1]},
                             {"tR_plus", params.t_r, r * pre[1] * r.adjoint()},
                             {"final", t_end, rhos.back()}};
        }
    }
    return out;
}

inline WindowStats post_pulse_stats(const ProtocolResult& r) { return window_stats(r.times, r.fidelity, r.pulse_times.front()); }

// ---------------------------------------------------------------------------
// Sensitivity

enum class SensitivityParameter { Baseline, TR, ThetaR, ThetaCss, PhiCss };

inline std::string to_string(SensitivityParameter p) {
    switch (p) {
    case SensitivityParameter::Baseline: return "baseline";
    case SensitivityParameter::TR: return "t_R";
    case SensitivityParameter::ThetaR: return "theta_R";
    case SensitivityParameter::ThetaCss: return "theta_css";
    case SensitivityParameter::PhiCss: return "phi_css";
    }
    return "unknown";
}

struct SensitivityRow {
    SensitivityParameter parameter = SensitivityParameter::Baseline;
    double deviation = 0.0;  // fraction, e.g. 0.05
    WindowStats stats;
    ProtocolResult run;
};

struct SensitivityReport {
    PulseParams baseline;
    std::vector<SensitivityRow> rows;  // rows[0] is the baseline
    // t_R and theta_R deviate multiplicatively; the CSS angles, nominally
    // (pi/2, 0), are offset by the fraction times pi/2.
    std::string angular_offset_convention = "additive offset of deviation * pi/2";
};

inline SensitivityRow sensitivity_row(SpinQuantumNumber spin, double eta, CatBound bound, const PulseParams& base,
                                      SensitivityParameter which, double deviation, const N2Options& options = {}) {
    PulseParams p = base;
    N2Options o = options;
    o.snapshots = false;
    switch (which) {
    case SensitivityParameter::Baseline: break;
    case SensitivityParameter::TR: p.t_r = base.t_r * (1.0 + deviation); break;
    case SensitivityParameter::ThetaR: p.theta_r = base.theta_r * (1.0 + deviation); break;
    case SensitivityParameter::ThetaCss: o.theta_css = options.theta_css + deviation * kPi / 2; break;
    case SensitivityParameter::PhiCss: o.phi_css = options.phi_css + deviation * kPi / 2; break;
    }
    SensitivityRow row;
    row.parameter = which;
    row.deviation = deviation;
    row.run = run_n2(spin, eta, bound, p, 0.0, o);
    row.stats = post_pulse_stats(row.run);
    return row;
}

inline SensitivityReport sensitivity_scan(SpinQuantumNumber spin, double eta, CatBound bound, const PulseParams& params,
                                          const std::vector<double>& deviations = {0.05, -0.05, 0.10, -0.10},
                                          const N2Options& options = {}) {
    struct Job {
        SensitivityParameter p;
        double d;
    };
    std::vector<Job> jobs{{SensitivityParameter::Baseline, 0.0}};
    for (auto p : {SensitivityParameter::TR, SensitivityParameter::ThetaR, SensitivityParameter::ThetaCss, SensitivityParameter::PhiCss})
        for (double d : deviations) jobs.push_back({p, d});
    SensitivityReport rep;
    rep.baseline = params;
    rep.rows.resize(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t i) { rep.rows[i] = sensitivity_row(spin, eta, bound, params, jobs[i].p, jobs[i].d, options); });
    return rep;
}

// ---------------------------------------------------------------------------
// Spectra

// |(1/N) sum_j x_j exp(-2 pi i j k / N)|
inline double dft_amplitude(const std::vector<double>& x, std::size_t k) {
    const auto n = static_cast<double>(x.size());
    Complex sum = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j)
        sum += x[j] * std::exp(-kI * (kTwoPi * static_cast<double>((j * k) % x.size()) / n));
    return std::abs(sum) / n;
}

inline std::vector<double> dft_spectrum(const std::vector<double>& x) {
    std::vector<double> a(x.size() / 2 + 1);
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = dft_amplitude(x, k);
    return a;
}

inline std::size_t dominant_nonzero_bin(const std::vector<double>& spectrum) {
    std::size_t best = 1;
    for (std::size_t k = 2; k < spectrum.size(); ++k)
        if (spectrum[k] > spectrum[best]) best = k;
    return best;
}

struct HarmonicOptions {
    int periods = 8;             // M, whole fundamental periods
    int samples_per_period = 64;
};

enum class RatioStatus { Finite, Infinite, Undefined };

inline std::string to_string(RatioStatus s) {
    switch (s) {
    case RatioStatus::Finite: return "finite";
    case RatioStatus::Infinite: return "infinite";
    case RatioStatus::Undefined: return "undefined";
    }
    return "unknown";
}

struct HarmonicPoint {
    double theta = 0.0;
    double phi = 0.0;
    double a1 = 0.0;  // |A(omega1)|
    double a2 = 0.0;  // |A(2 omega1)|
    double ratio = 0.0;  // +inf when A(omega1) vanishes, NaN when both do
    RatioStatus status = RatioStatus::Finite;
};

// Fidelity to the initial coherent state under the I = 5/2, eta = 1
// Hamiltonian, sampled over M whole periods 2 pi / omega1 so the omega1 and
// 2 omega1 components fall on bins M and 2M without leakage.
inline HarmonicPoint harmonic_ratio_at(const SpinOperatorSet& ops, const PropagatorCache& cache, double theta, double phi,
                                       const HarmonicOptions& o) {
    const StateVector psi0 = coherent_spin_state(ops, theta, phi);
    const int n = o.periods * o.samples_per_period;
    std::vector<double> f(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) f[static_cast<std::size_t>(j)] = fidelity(psi0, cache.apply(psi0, kPeriod1 * o.periods * j / n));
    HarmonicPoint p;
    p.theta = theta;
    p.phi = phi;
    p.a1 = dft_amplitude(f, static_cast<std::size_t>(o.periods));
    p.a2 = dft_amplitude(f, static_cast<std::size_t>(2 * o.periods));
    if (p.a1 < 1e-12 && p.a2 < 1e-12) {
        p.status = RatioStatus::Undefined;
        p.ratio = std::numeric_limits<double>::quiet_NaN();
    } else if (p.a1 < 1e-12) {
        p.status = RatioStatus::Infinite;
        p.ratio = std::numeric_limits<double>::infinity();
    } else {
        p.ratio = p.a2 / p.a1;
    }
    return p;
}

inline std::vector<HarmonicPoint> harmonic_ratio(const std::vector<std::pair<double, double>>& css_grid, const HarmonicOptions& o = {}) {
    if (o.periods < 8 || o.samples_per_period < 8) throw DomainError("harmonic_ratio: need at least 8 periods and 8 samples per period");
    const SpinOperatorSet ops = build_operators(SpinQuantumNumber(5));
    const PropagatorCache cache(qi_hamiltonian(ops, {ops.spin, 1.0, true}));
    std::vector<HarmonicPoint> out(css_grid.size());
    parallel_for(css_grid.size(), [&](std::size_t i) { out[i] = harmonic_ratio_at(ops, cache, css_grid[i].first, css_grid[i].second, o); });
    return out;
}

// ---------------------------------------------------------------------------
// N = 4

struct N4Options {
    std::optional<OptimizationResult> pulse1;  // optimized polar N=2 parameters if absent
    std::optional<double> pulse3_delay;        // after pulse 2; optimized with the angle if absent
    std::optional<double> pulse3_angle;
    int pulse3_delay_points = 200;   // over (0, T1]
    int pulse3_angle_points = 181;   // over [0, pi]
    double pulse3_window_periods = 2.0;
    int pulse3_window_samples = 50;
    int pre_samples = 400;           // trace samples on [0, t3)
    HarmonicOptions spectrum;        // trace after t3 covers M whole periods
    OptimizerConfig optimizer;
};

struct N4Result {
    ProtocolResult trace;  // fidelity: fixed template; rqfi: largest Cartesian axis
    std::vector<double> fidelity_rotating;
    double t1 = 0.0, theta1 = 0.0;
    double t2 = 0.0;
    double restored_fidelity = 0.0;  // to the x-axis cat right after pulse 2
    double t3 = 0.0, theta3 = 0.0;
    double rotor_anchor = 0.0;  // t* where the rotating target phase is pi
    double omega2 = 0.0;
    std::vector<double> spectrum;  // fixed-template fidelity after t3
    std::size_t dominant_bin = 0;
    std::size_t expected_bin = 0;  // 2M
    double fixed_swing = 0.0;
    double rotating_variation = 0.0;
};

namespace detail {

// First interior local maximum of f on [a, b] scanned with n steps, refined by
// Brent. Falls back to the global maximum of the scan.
template <class F>
double first_local_max(F&& f, double a, double b, int n, double floor) {
    std::vector<double> t(static_cast<std::size_t>(n) + 1), v(t.size());
    for (int k = 0; k <= n; ++k) {
        t[static_cast<std::size_t>(k)] = a + (b - a) * k / n;
        v[static_cast<std::size_t>(k)] = f(t[static_cast<std::size_t>(k)]);
    }
    std::size_t pick = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    for (std::size_t k = 1; k + 1 < v.size(); ++k) {
        if (v[k] >= v[k - 1] && v[k] >= v[k + 1] && v[k] > floor) {
            pick = k;
            break;
        }
    }
    const double lo = t[pick == 0 ? 0 : pick - 1];
    const double hi = t[std::min(pick + 1, t.size() - 1)];
    const auto [x, fx] = boost::math::tools::brent_find_minima([&](double s) { return -f(s); }, lo, hi, 40);
    return -fx >= v[pick] ? x : t[pick];
}

inline double cat_fidelity_aligned(const CatLegs& legs, const StateVector& psi) {
    return std::min(1.0, (std::abs(legs.plus.dot(psi)) + std::abs(legs.minus.dot(psi))) / std::sqrt(2.0));
}

} // namespace detail

inline N4Result run_n4(SpinQuantumNumber spin = SpinQuantumNumber(5), double eta = 1.0, const N4Options& options = {}) {
    const SpinOperatorSet ops = build_operators(spin);
    const HamiltonianSpec spec{spin, eta, true};
    validate(spec);
    const PropagatorCache cache(qi_hamiltonian(ops, spec));
    const OptimizationResult p1 = options.pulse1 ? *options.pulse1 : optimize(spin, eta, CatBound::Polar, options.optimizer);

    N4Result res;
    res.t1 = p1.t_r;
    res.theta1 = p1.theta_r;
    res.omega2 = 2.0 * kOmega1;
    const double period = kPeriod1;
    const StateVector x0 = axis_state(ops, CartesianAxis::PlusX);
    const Matrix r1 = rotation_operator(ops, Vec3::UnitX(), p1.theta_r);
    const StateVector after1 = r1 * cache.apply(x0, p1.t_r);

    // Pulse 2: first fidelity maximum to the polar cat after pulse 1; a y
    // rotation by pi/2 carries the poles onto the x axis.
    const StateVector polar = cat_target(ops, CatBound::Polar, p1.varphi);
    const double d2 = detail::first_local_max([&](double s) { return fidelity(polar, cache.apply(after1, s)); }, 0.0,
                                              2.0 * period, 800, 0.5 * p1.score.f_max);
    res.t2 = p1.t_r + d2;
    const Matrix r2 = rotation_operator(ops, Vec3::UnitY(), kPi / 2);
    const StateVector after2 = r2 * cache.apply(after1, d2);
    res.restored_fidelity = detail::cat_fidelity_aligned(cat_legs(ops, CatBound::XAxis), after2);

    // Pulse 3: x rotation whose delay and angle maximize the peak fixed-template
    // fidelity over the following pulse3_window_periods * T1.
    const StateVector tmpl = n4_target(ops, kPi);
    const Eigen::RowVectorXcd tv = tmpl.adjoint() * cache.eigenvectors();
    const Eigen::VectorXd& lam = cache.eigenvalues();
    auto peak_after = [&](double delay, double angle, int samples) {
        const StateVector c = cache.eigenvectors().adjoint() * (rotation_operator(ops, Vec3::UnitX(), angle) * cache.apply(after2, delay));
        double best = 0.0;
        for (int j = 0; j < samples; ++j) {
            const double s = options.pulse3_window_periods * period * j / (samples - 1);
            Complex amp = 0.0;
            for (Eigen::Index k = 0; k < lam.size(); ++k) amp += tv(k) * std::exp(-kI * (lam(k) * s)) * c(k);
            best = std::max(best, std::abs(amp));
        }
        return best;
    };
    double delay = 0.0, angle = 0.0;
    if (options.pulse3_delay && options.pulse3_angle) {
        delay = *options.pulse3_delay;
        angle = *options.pulse3_angle;
    } else {
        const int nd = options.pulse3_delay_points, na = options.pulse3_angle_points;
        std::vector<double> best_per_delay(static_cast<std::size_t>(nd)), best_angle(static_cast<std::size_t>(nd));
        parallel_for(static_cast<std::size_t>(nd), [&](std::size_t i) {
            const double dl = period * static_cast<double>(i + 1) / nd;
            double b = -1.0, ba = 0.0;
            for (int j = 0; j < na; ++j) {
                const double an = kPi * j / (na - 1);
                const double v = peak_after(dl, an, options.pulse3_window_samples);
                if (v > b + 1e-12) {
                    b = v;
                    ba = an;
                }
            }
            best_per_delay[i] = b;
            best_angle[i] = ba;
        });
        std::size_t bi = 0;
        for (std::size_t i = 1; i < best_per_delay.size(); ++i)
            if (best_per_delay[i] > best_per_delay[bi] + 1e-12) bi = i;
        delay = period * static_cast<double>(bi + 1) / nd;
        angle = best_angle[bi];
        // compass refinement with a denser window
        const int fine = 8 * options.pulse3_window_samples;
        double cur = peak_after(delay, angle, fine);
        double sd = period / nd, sa = kPi / (na - 1);
        while (sd > 1e-7 || sa > 1e-7) {
            bool moved = false;
            for (const auto& m : {std::pair{sd, 0.0}, std::pair{-sd, 0.0}, std::pair{0.0, sa}, std::pair{0.0, -sa}}) {
                const double nd2 = std::clamp(delay + m.first, 1e-9, period);
                const double na2 = std::clamp(angle + m.second, 0.0, kPi);
                const double v = peak_after(nd2, na2, fine);
                if (v > cur) {
                    cur = v;
                    delay = nd2;
                    angle = na2;
                    moved = true;
                }
            }
            if (!moved) {
                sd *= 0.5;
                sa *= 0.5;
            }
        }
    }
    res.t3 = res.t2 + delay;
    res.theta3 = angle;
    const StateVector after3 = rotation_operator(ops, Vec3::UnitX(), angle) * cache.apply(after2, delay);

    // Trace: [0, t3) then M whole periods after t3.
    const PulseSchedule schedule({{res.t1, Vec3::UnitX(), res.theta1}, {res.t2, Vec3::UnitY(), kPi / 2}, {res.t3, Vec3::UnitX(), angle}});
    std::vector<double> times;
    for (int k = 0; k < options.pre_samples; ++k) times.push_back(res.t3 * k / options.pre_samples);
    const int m = options.spectrum.periods;
    const int n = m * options.spectrum.samples_per_period;
    for (int j = 0; j < n; ++j) times.push_back(res.t3 + period * m * j / n);
    const auto states = evolve_pure(x0, spec, schedule, times);

    // Rotating target: phase pi at the first fixed-template maximum after t3.
    res.rotor_anchor = res.t3 + detail::first_local_max([&](double s) { return fidelity(tmpl, cache.apply(after3, s)); }, 0.0,
                                                         period, 400, 0.0);
    res.trace.times = times;
    res.trace.pulse_times = {res.t1, res.t2, res.t3};
    std::vector<double> window;
    double rot_lo = 1e300, rot_hi = -1e300;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double ff = fidelity(tmpl, states[k]);
        const double fr = fidelity(n4_target(ops, kPi + res.omega2 * (times[k] - res.rotor_anchor)), states[k]);
        res.trace.fidelity.push_back(ff);
        res.trace.rqfi.push_back(normalized_rqfi(ops, states[k]));
        res.fidelity_rotating.push_back(fr);
        if (times[k] >= res.t3) {
            window.push_back(ff);
            rot_lo = std::min(rot_lo, fr);
            rot_hi = std::max(rot_hi, fr);
        }
    }
    res.spectrum = dft_spectrum(window);
    res.dominant_bin = dominant_nonzero_bin(res.spectrum);
    res.expected_bin = static_cast<std::size_t>(2 * m);
    const auto [lo, hi] = std::minmax_element(window.begin(), window.end());
    res.fixed_swing = *hi - *lo;
    res.rotating_variation = rot_hi - rot_lo;
    return res;
}

// ---------------------------------------------------------------------------
// Decoherence

inline std::vector<ProtocolResult> decoherence_series(SpinQuantumNumber spin, double eta, CatBound bound, const PulseParams& params,
                                                      const std::vector<double>& gammas = {1e-4, 1e-3, 1e-2},
                                                      const N2Options& options = {}) {
    for (double g : gammas)
        if (!(g >= 0.0)) throw DomainError("decoherence_series: gamma must be nonnegative");
    std::vector<ProtocolResult> out(gammas.size());
    parallel_for(gammas.size(), [&](std::size_t i) { out[i] = run_n2(spin, eta, bound, params, gammas[i], options); });
    return out;
}

// Dephasing rate of the |I><-I| coherence: (1/2) sum_m c_m (I^m - (-I)^m)^2.
inline double pole_coherence_rate(SpinQuantumNumber spin, double gamma) {
    const auto w = lindblad_weights(spin, {gamma});
    const double j = spin.value();
    double k = 0.0;
    for (std::size_t m = 1; m <= w.size(); ++m) {
        const double diff = std::pow(j, static_cast<double>(m)) - std::pow(-j, static_cast<double>(m));
        k += 0.5 * w[m - 1] * diff * diff;
    }
    return k;
}

struct DecayWindowOptions {
    int samples = 2000;
    int max_iterations = 6;
    double settle = 0.01;  // relative change of the window that ends the iteration
    LindbladOptions lindblad;
};

struct DecayMeasurement {
    SpinQuantumNumber spin{2};
    PulseParams params;
    DecayFit fit;
    double window = 0.0;
    int iterations = 0;
    std::vector<double> times;  // since the pulse
    std::vector<double> fidelity;
};

// Fidelity decay after the pulse of the polar N=2 protocol. The window starts at
// min(3 / k, 10 / gamma) with k the pole-coherence rate and is reset to
// min(tau ln 10, 10 / gamma) from each fit until it settles.
inline DecayMeasurement measure_decay(SpinQuantumNumber spin, double eta, double gamma, const PulseParams& params,
                                      const DecayWindowOptions& o = {}) {
    if (!(gamma > 0.0)) throw DomainError("measure_decay: gamma must be positive");
    const SpinOperatorSet ops = build_operators(spin);
    const HamiltonianSpec spec{spin, eta, true};
    const DephasingConfig deph{gamma};
    const std::vector<double> at_pulse{params.t_r};
    const DensityMatrix rho_post = evolve_lindblad(pure_density(axis_state(ops, CartesianAxis::PlusX)), spec, deph,
                                                   PulseSchedule({{params.t_r, Vec3::UnitX(), params.theta_r}}), at_pulse, o.lindblad)[0];
    const StateVector target = cat_target(ops, CatBound::Polar, params.varphi);

    DecayMeasurement out;
    out.spin = spin;
    out.params = params;
    const double cap = 10.0 / gamma;
    double window = std::min(3.0 / pole_coherence_rate(spin, gamma), cap);
    for (int it = 1; it <= o.max_iterations; ++it) {
        out.times = uniform_grid(0.0, window, static_cast<std::size_t>(o.samples) + 1);
        const auto rhos = evolve_lindblad(rho_post, spec, deph, PulseSchedule{}, out.times, o.lindblad);
        out.fidelity.clear();
        for (const auto& rho : rhos) out.fidelity.push_back(fidelity(target, rho));
        out.fit = fit_decay(out.times, out.fidelity);
        out.window = window;
        out.iterations = it;
        const double next = std::min(out.fit.tau * std::log(10.0), cap);
        if (std::abs(next - window) < o.settle * window) break;
        window = next;
    }
    return out;
}

struct TauScaling {
    std::vector<DecayMeasurement> points;
    std::vector<SpinQuantumNumber> excluded;  // flagged fits
    double exponent = 0.0;   // slope of log(1/tau) against log(2I)
    double intercept = 0.0;
};

inline TauScaling tau_scaling(const std::vector<SpinQuantumNumber>& spins, double eta, double gamma,
                              const DecayWindowOptions& o = {}, const OptimizerConfig& optimizer = {}) {
    if (spins.size() < 4) throw DomainError("tau_scaling: need at least 4 spin values");
    TauScaling out;
    out.points.resize(spins.size());
    for (std::size_t i = 0; i < spins.size(); ++i) {
        const PulseParams p = params_of(optimize(spins[i], eta, CatBound::Polar, optimizer));
        out.points[i] = measure_decay(spins[i], eta, gamma, p, o);
    }
    std::vector<double> x, y;
    for (const auto& m : out.points) {
        if (m.fit.boundary) {
            out.excluded.push_back(m.spin);
            continue;
        }
        x.push_back(std::log(2.0 * m.spin.value()));
        y.push_back(std::log(1.0 / m.fit.tau));
    }
    if (x.size() < 2) throw NumericalError("tau_scaling: fewer than two usable fits");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sx += x[k];
        sy += y[k];
        sxx += x[k] * x[k];
        sxy += x[k] * y[k];
    }
    out.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    out.intercept = (sy - out.exponent * sx) / n;
    return out;
}

} // namespace qcat

#endif // QCAT_PROTOCOLS_HPP
