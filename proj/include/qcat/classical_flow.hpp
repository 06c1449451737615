#ifndef QCAT_CLASSICAL_FLOW_HPP
#define QCAT_CLASSICAL_FLOW_HPP

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "qcat/errors.hpp"
#include "qcat/linalg.hpp"
#include "qcat/spin_core.hpp"

// Mean-field flow of the quadrupole Hamiltonian in the canonical chart
// (phi, P = cos theta), with H = (2 pi I / 6)[3 P^2 + eta (1 - P^2) cos 2phi].
namespace qcat::classical {

struct ClassicalState {
    double phi = 0.0;
    double p_phi = 0.0;
};

struct FlowRate {
    double dphi = 0.0;
    double dp = 0.0;
    double speed() const { return std::hypot(dphi, dp); }
};

inline void require_eta(double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("eta must lie in [0, 1]");
}

inline double prefactor(SpinQuantumNumber spin) { return kTwoPi * spin.value() / 3.0; }

inline FlowRate flow_rhs(double eta, SpinQuantumNumber spin, const ClassicalState& s) {
    if (std::abs(s.p_phi) > 1.0 + 1e-12) throw DomainError("p_phi must lie in [-1, 1]");
    const double k = prefactor(spin);
    const double c2 = std::cos(2.0 * s.phi);
    return {k * s.p_phi * (3.0 - eta * c2), k * eta * (1.0 - s.p_phi * s.p_phi) * std::sin(2.0 * s.phi)};
}

inline double classical_energy(double eta, SpinQuantumNumber spin, const ClassicalState& s) {
    const double p2 = s.p_phi * s.p_phi;
    return (kTwoPi * spin.value() / 6.0) * (3.0 * p2 + eta * (1.0 - p2) * std::cos(2.0 * s.phi));
}

inline std::vector<ClassicalState> integrate_flow(const ClassicalState& s0, double eta, SpinQuantumNumber spin,
                                                  double t_end, double dt) {
    require_eta(eta);
    if (!(dt > 0.0)) throw DomainError("integrate_flow: dt must be positive");
    if (!(t_end >= 0.0)) throw DomainError("integrate_flow: t_end must be nonnegative");
    const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
    std::vector<ClassicalState> traj;
    traj.reserve(steps + 1);
    traj.push_back(s0);
    ClassicalState s = s0;
    auto f = [&](const ClassicalState& x) {
        // RK4 stages may overshoot |P| = 1 by rounding near the poles
        ClassicalState y{x.phi, std::clamp(x.p_phi, -1.0, 1.0)};
        return flow_rhs(eta, spin, y);
    };
    for (std::size_t n = 0; n < steps; ++n) {
        const FlowRate k1 = f(s);
        const FlowRate k2 = f({s.phi + 0.5 * dt * k1.dphi, s.p_phi + 0.5 * dt * k1.dp});
        const FlowRate k3 = f({s.phi + 0.5 * dt * k2.dphi, s.p_phi + 0.5 * dt * k2.dp});
        const FlowRate k4 = f({s.phi + dt * k3.dphi, s.p_phi + dt * k3.dp});
        s.phi += dt / 6.0 * (k1.dphi + 2.0 * k2.dphi + 2.0 * k3.dphi + k4.dphi);
        s.p_phi += dt / 6.0 * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
        s.p_phi = std::clamp(s.p_phi, -1.0, 1.0);
        traj.push_back(s);
    }
    return traj;
}

enum class FixedPointKind { StableCenter, UnstableSaddle, DegenerateLine };
enum class FixedPointSite { Chart, NorthPole, SouthPole, EquatorLine };

inline std::string to_string(FixedPointKind k) {
    switch (k) {
    case FixedPointKind::StableCenter: return "stable_center";
    case FixedPointKind::UnstableSaddle: return "unstable_saddle";
    case FixedPointKind::DegenerateLine: return "degenerate_line";
    }
    return "unknown";
}

inline std::string to_string(FixedPointSite s) {
    switch (s) {
    case FixedPointSite::Chart: return "chart";
    case FixedPointSite::NorthPole: return "north_pole";
    case FixedPointSite::SouthPole: return "south_pole";
    case FixedPointSite::EquatorLine: return "equator_line";
    }
    return "unknown";
}

struct FixedPointRecord {
    FixedPointSite site = FixedPointSite::Chart;
    ClassicalState location;  // phi is NaN at the poles and on the equator line
    FixedPointKind kind = FixedPointKind::StableCenter;
    double jacobian_det = 0.0;
    double jacobian_trace = 0.0;
};

// 2x2 linearization, eigenvalues from trace and determinant.
inline FixedPointKind classify(double trace, double det, double scale) {
    const double tol = 1e-12 * std::max(1.0, scale * scale);
    if (std::abs(det) <= tol) return FixedPointKind::DegenerateLine;
    const double disc = trace * trace - 4.0 * det;
    if (disc < 0.0 && std::abs(trace) <= 1e-12 * std::max(1.0, scale)) return FixedPointKind::StableCenter;
    return FixedPointKind::UnstableSaddle;
}

// Jacobian of (dphi, dP) with respect to (phi, P) at an equatorial point.
inline std::pair<double, double> equator_jacobian(double eta, SpinQuantumNumber spin, double phi) {
    const double k = prefactor(spin);
    const double c2 = std::cos(2.0 * phi);
    const double a12 = k * (3.0 - eta * c2);
    const double a21 = 2.0 * k * eta * c2;
    return {0.0, -a12 * a21};
}

// The chart is singular at the poles, so linearize the Cartesian flow
// ds/dt = grad H x s in the tangent plane (x, y) there; z = +-1.
inline std::pair<double, double> pole_jacobian(double eta, SpinQuantumNumber spin, double z) {
    const double c = kTwoPi * spin.value() / 6.0;
    const double a12 = -c * z * (6.0 + 2.0 * eta);
    const double a21 = c * z * (6.0 - 2.0 * eta);
    return {0.0, -a12 * a21};
}

inline std::vector<FixedPointRecord> fixed_points(double eta, SpinQuantumNumber spin = SpinQuantumNumber(2)) {
    require_eta(eta);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double scale = prefactor(spin) * 6.0;
    std::vector<FixedPointRecord> out;
    for (double z : {1.0, -1.0}) {
        const auto [tr, det] = pole_jacobian(eta, spin, z);
        out.push_back({z > 0 ? FixedPointSite::NorthPole : FixedPointSite::SouthPole, {nan, z}, classify(tr, det, scale), det, tr});
    }
    if (eta == 0.0) {
        out.push_back({FixedPointSite::EquatorLine, {nan, 0.0}, FixedPointKind::DegenerateLine, 0.0, 0.0});
        return out;
    }
    for (double phi : {0.0, kPi / 2, kPi, 3 * kPi / 2}) {
        const auto [tr, det] = equator_jacobian(eta, spin, phi);
        out.push_back({FixedPointSite::Chart, {phi, 0.0}, classify(tr, det, scale), det, tr});
    }
    return out;
}

struct PortraitRow {
    std::size_t trajectory_id = 0;
    double t = 0.0;
    double phi = 0.0;  // wrapped into [0, 2 pi)
    double p_phi = 0.0;
    double speed = 0.0;
};

inline double wrap_angle(double a) {
    double w = std::fmod(a, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    return w;
}

inline std::vector<PortraitRow> portrait_dataset(double eta, SpinQuantumNumber spin, const std::vector<ClassicalState>& seeds,
                                                 double t_end, double dt) {
    if (seeds.empty()) throw DomainError("portrait_dataset: no seeds");
    std::vector<PortraitRow> rows;
    for (std::size_t id = 0; id < seeds.size(); ++id) {
        const auto traj = integrate_flow(seeds[id], eta, spin, t_end, dt);
        for (std::size_t n = 0; n < traj.size(); ++n)
            rows.push_back({id, dt * static_cast<double>(n), wrap_angle(traj[n].phi), traj[n].p_phi,
                            flow_rhs(eta, spin, traj[n]).speed()});
    }
    return rows;
}

// Seeds on a regular (phi, P) lattice, avoiding the exact poles.
inline std::vector<ClassicalState> default_seeds(int n_phi, int n_p) {
    std::vector<ClassicalState> seeds;
    for (int i = 0; i < n_phi; ++i)
        for (int j = 0; j < n_p; ++j)
            seeds.push_back({kTwoPi * (i + 0.5) / n_phi, -1.0 + 2.0 * (j + 0.5) / n_p});
    return seeds;
}

} // namespace qcat::classical

#endif // QCAT_CLASSICAL_FLOW_HPP
