#ifndef QCAT_SPIN_CORE_HPP
#define QCAT_SPIN_CORE_HPP

#include <cmath>
#include <string>

#include "qcat/linalg.hpp"

namespace qcat {

// Spin quantum number stored as 2I so half-integers are exact.
// Supported range is I = 1 ... 9/2 (quadrupolar nuclei).
class SpinQuantumNumber {
public:
    static constexpr int kMinTwiceI = 2;
    static constexpr int kMaxTwiceI = 9;

    explicit SpinQuantumNumber(int twice_i) : twice_i_(twice_i) {
        if (twice_i < kMinTwiceI || twice_i > kMaxTwiceI)
            throw DomainError("unsupported spin: twice_I=" + std::to_string(twice_i) +
                              " (accepted range 2..9, i.e. I = 1 ... 9/2)");
    }

    static SpinQuantumNumber from_double(double spin) {
        const double twice = 2.0 * spin;
        const long rounded = std::lround(twice);
        if (std::abs(twice - static_cast<double>(rounded)) > 1e-9)
            throw DomainError("spin must be an integer or half-integer, got " + std::to_string(spin));
        return SpinQuantumNumber(static_cast<int>(rounded));
    }

    int twice() const { return twice_i_; }
    double value() const { return 0.5 * twice_i_; }
    Eigen::Index dim() const { return twice_i_ + 1; }
    bool is_integer() const { return twice_i_ % 2 == 0; }

    // m quantum number (as double) stored at Dicke index k; ordering is m = I ... -I.
    double m_at(Eigen::Index k) const { return value() - static_cast<double>(k); }

    friend bool operator==(SpinQuantumNumber a, SpinQuantumNumber b) { return a.twice_i_ == b.twice_i_; }

private:
    int twice_i_;
};

inline std::string to_string(SpinQuantumNumber spin) {
    return spin.is_integer() ? std::to_string(spin.twice() / 2) : std::to_string(spin.twice()) + "/2";
}

// Angular momentum matrices in the Dicke basis |I,m>, m = I ... -I.
struct SpinOperatorSet {
    SpinQuantumNumber spin;
    Matrix ix;
    Matrix iy;
    Matrix iz;
    Matrix casimir;

    // u . I for a Cartesian direction u (not required to be normalized)
    Matrix along(const Vec3& u) const { return u.x() * ix + u.y() * iy + u.z() * iz; }
};

inline SpinOperatorSet build_operators(SpinQuantumNumber spin) {
    const Eigen::Index d = spin.dim();
    const double j = spin.value();
    Matrix raise = Matrix::Zero(d, d);
    Matrix iz = Matrix::Zero(d, d);
    for (Eigen::Index k = 0; k < d; ++k) {
        const double m = spin.m_at(k);
        iz(k, k) = m;
        // I+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>, and |m+1> sits at index k-1.
        if (k > 0) raise(k - 1, k) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
    }
    const Matrix lower = raise.adjoint();
    SpinOperatorSet ops{spin, 0.5 * (raise + lower), (raise - lower) / (2.0 * kI), iz,
                        Matrix::Identity(d, d) * (j * (j + 1.0))};
    return ops;
}

// |I,m>, with m given as twice_m to keep half-integers exact.
inline StateVector dicke_state(SpinQuantumNumber spin, int twice_m) {
    if (std::abs(twice_m) > spin.twice() || (spin.twice() - twice_m) % 2 != 0)
        throw DomainError("invalid magnetic quantum number: twice_m=" + std::to_string(twice_m) +
                          " for I=" + to_string(spin));
    StateVector v = StateVector::Zero(spin.dim());
    v((spin.twice() - twice_m) / 2) = 1.0;
    return v;
}

inline void require_unit_axis(const Vec3& axis) {
    if (!axis.allFinite() || std::abs(axis.norm() - 1.0) > 1e-9)
        throw DomainError("rotation axis must be a unit vector (|axis| = " + std::to_string(axis.norm()) + ")");
}

// exp(-i angle (axis . I)): active rotation by `angle` about `axis`.
inline Matrix rotation_operator(const SpinOperatorSet& ops, const Vec3& axis, double angle) {
    require_unit_axis(axis);
    if (angle == 0.0) return Matrix::Identity(ops.spin.dim(), ops.spin.dim());
    return PropagatorCache(ops.along(axis)).propagator(angle);
}

inline Matrix rotation_operator(SpinQuantumNumber spin, const Vec3& axis, double angle) {
    return rotation_operator(build_operators(spin), axis, angle);
}

// |theta,phi> = exp[i theta (sin(phi) Ix - cos(phi) Iy)] |I,I>.
//
// In terms of rotation_operator this is a rotation by +theta about
// (-sin(phi), cos(phi), 0), which carries +z to the direction
// (sin(theta)cos(phi), sin(theta)sin(phi), cos(theta)). No rephasing is done.
inline StateVector coherent_spin_state(const SpinOperatorSet& ops, double theta, double phi) {
    const Vec3 axis(-std::sin(phi), std::cos(phi), 0.0);
    return rotation_operator(ops, axis, theta) * dicke_state(ops.spin, ops.spin.twice());
}

inline StateVector coherent_spin_state(SpinQuantumNumber spin, double theta, double phi) {
    return coherent_spin_state(build_operators(spin), theta, phi);
}

enum class CartesianAxis { PlusX, MinusX, PlusY, MinusY, PlusZ, MinusZ };

// Six axial coherent states, all taken literally from coherent_spin_state:
//   +X (pi/2, 0)    -X (pi/2, pi)
//   +Y (pi/2, pi/2) -Y (pi/2, 3pi/2)
//   +Z (0, 0)       -Z (pi, 0)
// +-X are rotations of |I,I> about y; +-Y are rotations of |I,I> about x.
// -Z equals +|I,-I> exactly (the Wigner d element d_{-I,I}(pi) is 1) and is
// returned in that form.
inline StateVector axis_state(const SpinOperatorSet& ops, CartesianAxis which) {
    switch (which) {
    case CartesianAxis::PlusX: return coherent_spin_state(ops, kPi / 2, 0.0);
    case CartesianAxis::MinusX: return coherent_spin_state(ops, kPi / 2, kPi);
    case CartesianAxis::PlusY: return coherent_spin_state(ops, kPi / 2, kPi / 2);
    case CartesianAxis::MinusY: return coherent_spin_state(ops, kPi / 2, 3 * kPi / 2);
    case CartesianAxis::PlusZ: return dicke_state(ops.spin, ops.spin.twice());
    case CartesianAxis::MinusZ: return dicke_state(ops.spin, -ops.spin.twice());
    }
    throw DomainError("unknown axis");
}

enum class CatBound { Polar, Equator, XAxis };

inline std::string to_string(CatBound b) {
    switch (b) {
    case CatBound::Polar: return "polar";
    case CatBound::Equator: return "equator";
    case CatBound::XAxis: return "x_axis";
    }
    return "?";
}

inline CatBound cat_bound_from_string(const std::string& s) {
    if (s == "polar") return CatBound::Polar;
    if (s == "equator") return CatBound::Equator;
    if (s == "x_axis") return CatBound::XAxis;
    throw DomainError("unknown bound '" + s + "' (accepted: polar, equator, x_axis)");
}

// Unit Cartesian direction of the positive leg of a bound.
inline Vec3 bound_axis(CatBound b) {
    switch (b) {
    case CatBound::Polar: return Vec3::UnitZ();
    case CatBound::Equator: return Vec3::UnitY();
    case CatBound::XAxis: return Vec3::UnitX();
    }
    return Vec3::UnitZ();
}

struct CatLegs {
    StateVector plus;
    StateVector minus;
};

inline CatLegs cat_legs(const SpinOperatorSet& ops, CatBound b) {
    switch (b) {
    case CatBound::Polar: return {axis_state(ops, CartesianAxis::PlusZ), axis_state(ops, CartesianAxis::MinusZ)};
    case CatBound::Equator: return {axis_state(ops, CartesianAxis::PlusY), axis_state(ops, CartesianAxis::MinusY)};
    case CatBound::XAxis: return {axis_state(ops, CartesianAxis::PlusX), axis_state(ops, CartesianAxis::MinusX)};
    }
    throw DomainError("unknown bound");
}

// Normalized |A> + e^{i phi} |-A>.
inline StateVector cat_target(const SpinOperatorSet& ops, CatBound bound, double phi) {
    const CatLegs legs = cat_legs(ops, bound);
    if (bound == CatBound::Polar)
        return (legs.plus + std::exp(kI * phi) * legs.minus) / std::sqrt(2.0);
    const StateVector raw = legs.plus + std::exp(kI * phi) * legs.minus;
    return raw / raw.norm();
}

inline StateVector cat_target(SpinQuantumNumber spin, CatBound bound, double phi) {
    return cat_target(build_operators(spin), bound, phi);
}

// Normalized (|Z> + |-Z>) + e^{i rotor_phase} (|Y> + i|-Y>).
// rotor_phase = pi gives the fixed four-component template.
inline StateVector n4_target(const SpinOperatorSet& ops, double rotor_phase) {
    const StateVector polar = axis_state(ops, CartesianAxis::PlusZ) + axis_state(ops, CartesianAxis::MinusZ);
    const StateVector equator = axis_state(ops, CartesianAxis::PlusY) + kI * axis_state(ops, CartesianAxis::MinusY);
    const StateVector raw = polar + std::exp(kI * rotor_phase) * equator;
    return raw / raw.norm();
}

inline StateVector n4_target(SpinQuantumNumber spin, double rotor_phase) {
    return n4_target(build_operators(spin), rotor_phase);
}

// Instantaneous rotation event; time in units of 1/f_Q.
struct PulseEvent {
    double time = 0.0;
    Vec3 axis = Vec3::UnitX();
    double angle = 0.0;
};

inline void validate(const PulseEvent& p) {
    if (!(p.time >= 0.0) || !std::isfinite(p.time)) throw DomainError("pulse time must be finite and >= 0");
    require_unit_axis(p.axis);
    if (!std::isfinite(p.angle)) throw DomainError("pulse angle must be finite");
}

} // namespace qcat

#endif // QCAT_SPIN_CORE_HPP
