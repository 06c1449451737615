#ifndef QCAT_DYNAMICS_HPP
#define QCAT_DYNAMICS_HPP

#include <cmath>
#include <span>
#include <vector>

#include "qcat/spin_core.hpp"

namespace qcat {

// Quadrupole interaction parameters. Units: hbar = 1, f_Q = 1, so omega_Q = 2 pi.
struct HamiltonianSpec {
    SpinQuantumNumber spin{5};
    double eta = 1.0;
    bool include_casimir = true;
};

inline void validate(const HamiltonianSpec& spec) {
    if (!(spec.eta >= 0.0 && spec.eta <= 1.0))
        throw DomainError("eta must lie in [0, 1], got " + std::to_string(spec.eta));
}

inline constexpr double kOmegaQ = kTwoPi;

// Fundamental eigenfrequency of the I = 5/2, eta = 1 spectrum.
inline const double kOmega1 = 2.0 * std::sqrt(7.0) * kOmegaQ / 3.0;
inline const double kPeriod1 = kTwoPi / kOmega1;

// H = (2 pi / 6) [3 Iz^2 - I^2 + eta (Ix^2 - Iy^2)]; the I^2 term is dropped
// when include_casimir is false (it is proportional to the identity).
inline Matrix qi_hamiltonian(const SpinOperatorSet& ops, const HamiltonianSpec& spec) {
    validate(spec);
    Matrix h = 3.0 * ops.iz * ops.iz + spec.eta * (ops.ix * ops.ix - ops.iy * ops.iy);
    if (spec.include_casimir) h -= ops.casimir;
    h *= kOmegaQ / 6.0;
    return 0.5 * (h + h.adjoint());
}

inline Matrix qi_hamiltonian(const HamiltonianSpec& spec) {
    return qi_hamiltonian(build_operators(spec.spin), spec);
}

// (omega_Q / 3)(Iz^2 - Iy^2) for I = 5/2.
inline Matrix two_axis_hamiltonian_5half() {
    const SpinOperatorSet ops = build_operators(SpinQuantumNumber(5));
    return (kOmegaQ / 3.0) * (ops.iz * ops.iz - ops.iy * ops.iy);
}

// Closed-form exp(-i H1 t) for I = 5/2, eta = 1, using the spectrum {0, +-omega1}
// (each nonzero eigenvalue doubly degenerate).
inline Matrix closed_form_u_5half(double t) {
    const Matrix h1 = two_axis_hamiltonian_5half();
    const double w = kOmega1;
    const Matrix id = Matrix::Identity(6, 6);
    return ((std::cos(w * t) - 1.0) / (w * w)) * (h1 * h1) - kI * (std::sin(w * t) / w) * h1 + id;
}

// Ordered pulse events with strictly increasing times.
class PulseSchedule {
public:
    PulseSchedule() = default;

    explicit PulseSchedule(std::vector<PulseEvent> events) : events_(std::move(events)) {
        for (std::size_t k = 0; k < events_.size(); ++k) {
            validate(events_[k]);
            if (k > 0 && !(events_[k].time > events_[k - 1].time))
                throw DomainError("pulse times must be strictly increasing");
        }
    }

    const std::vector<PulseEvent>& events() const { return events_; }
    bool empty() const { return events_.empty(); }
    std::size_t size() const { return events_.size(); }

private:
    std::vector<PulseEvent> events_;
};

inline void require_sorted_grid(std::span<const double> t_grid) {
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        if (!std::isfinite(t_grid[k]) || t_grid[k] < 0.0) throw DomainError("time grid must be finite and nonnegative");
        if (k > 0 && t_grid[k] < t_grid[k - 1]) throw DomainError("time grid must be sorted");
    }
}

// Piecewise-exact evolution starting at t = 0. A pulse whose time coincides with
// a grid point is applied before that sample is emitted. Samples are propagated
// from the most recent pulse (or t = 0) in one step, so sample values do not
// depend on grid density.
inline std::vector<StateVector> evolve_pure(const StateVector& psi0, const HamiltonianSpec& spec,
                                            const PulseSchedule& schedule, std::span<const double> t_grid) {
    require_sorted_grid(t_grid);
    const SpinOperatorSet ops = build_operators(spec.spin);
    if (psi0.size() != ops.spin.dim()) throw DomainError("evolve_pure: state dimension mismatch");
    const PropagatorCache cache(qi_hamiltonian(ops, spec));

    std::vector<StateVector> out;
    out.reserve(t_grid.size());
    StateVector anchor = psi0;
    double anchor_time = 0.0;
    std::size_t next_pulse = 0;
    const auto& pulses = schedule.events();
    for (double t : t_grid) {
        while (next_pulse < pulses.size() && pulses[next_pulse].time <= t) {
            const PulseEvent& p = pulses[next_pulse++];
            anchor = rotation_operator(ops, p.axis, p.angle) * cache.apply(anchor, p.time - anchor_time);
            anchor /= anchor.norm();
            anchor_time = p.time;
        }
        StateVector psi = cache.apply(anchor, t - anchor_time);
        psi /= psi.norm();
        out.push_back(std::move(psi));
    }
    return out;
}

inline std::vector<double> uniform_grid(double t0, double t1, std::size_t n) {
    std::vector<double> g(n);
    if (n == 1) {
        g[0] = t0;
        return g;
    }
    for (std::size_t k = 0; k < n; ++k)
        g[k] = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(n - 1);
    return g;
}

} // namespace qcat

#endif // QCAT_DYNAMICS_HPP
