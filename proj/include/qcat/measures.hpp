#ifndef QCAT_MEASURES_HPP
#define QCAT_MEASURES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "qcat/spherical_tensor.hpp"
#include "qcat/spin_core.hpp"

namespace qcat {

inline void require_same_dim(Eigen::Index a, Eigen::Index b, const char* where) {
    if (a != b) throw DomainError(std::string(where) + ": dimension mismatch");
}

// F = |<target|psi>|
inline double fidelity(const StateVector& target, const StateVector& psi) {
    require_same_dim(target.size(), psi.size(), "fidelity");
    return std::min(1.0, std::abs(target.dot(psi)));
}

// F = sqrt(<target|rho|target>); equals the pure-state formula for rho = |psi><psi|.
inline double fidelity(const StateVector& target, const DensityMatrix& rho) {
    require_same_dim(target.size(), rho.rows(), "fidelity");
    const double overlap = (target.adjoint() * rho * target)(0, 0).real();
    return std::min(1.0, std::sqrt(std::max(0.0, overlap)));
}

inline double expectation(const Matrix& op, const StateVector& psi) { return psi.dot(op * psi).real(); }
inline double expectation(const Matrix& op, const DensityMatrix& rho) { return (rho * op).trace().real(); }

namespace detail {
template <class State>
double variance_along(const SpinOperatorSet& ops, const State& state, const Vec3& u) {
    const Matrix iu = ops.along(u);
    const double mean = expectation(iu, state);
    return std::max(0.0, expectation(iu * iu, state) - mean * mean);
}
} // namespace detail

inline double spin_variance(const SpinOperatorSet& ops, const StateVector& psi, const Vec3& direction) {
    require_unit_axis(direction);
    require_same_dim(psi.size(), ops.spin.dim(), "spin_variance");
    return detail::variance_along(ops, psi, direction);
}

inline double spin_variance(const SpinOperatorSet& ops, const DensityMatrix& rho, const Vec3& direction) {
    require_unit_axis(direction);
    require_same_dim(rho.rows(), ops.spin.dim(), "spin_variance");
    return detail::variance_along(ops, rho, direction);
}

// Normalized relative QFI: V(I_u) / I^2. With no direction, the largest value
// over the three Cartesian axes is returned.
template <class State>
double normalized_rqfi(const SpinOperatorSet& ops, const State& state, std::optional<Vec3> direction = std::nullopt) {
    const double i2 = ops.spin.value() * ops.spin.value();
    if (direction) return std::min(1.0, spin_variance(ops, state, *direction) / i2);
    double best = 0.0;
    for (const Vec3& u : {Vec3::UnitX().eval(), Vec3::UnitY().eval(), Vec3::UnitZ().eval()})
        best = std::max(best, spin_variance(ops, state, u) / i2);
    return std::min(1.0, best);
}

// Spin Wigner function sampled on a (theta, phi) grid. theta spans [0, pi]
// inclusive; phi spans [0, 2 pi) with the endpoint excluded.
struct WignerMap {
    std::vector<double> theta_grid;
    std::vector<double> phi_grid;
    Eigen::MatrixXd values;  // n_theta x n_phi

    // Trapezoid in theta (with the sin(theta) Jacobian), periodic rectangle rule in phi.
    double integral() const {
        const std::size_t nt = theta_grid.size();
        const std::size_t np = phi_grid.size();
        const double dphi = kTwoPi / static_cast<double>(np);
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < nt; ++i) {
            const double dt = theta_grid[i + 1] - theta_grid[i];
            for (std::size_t j = 0; j < np; ++j) {
                const double a = values(i, j) * std::sin(theta_grid[i]);
                const double b = values(i + 1, j) * std::sin(theta_grid[i + 1]);
                total += 0.5 * (a + b) * dt * dphi;
            }
        }
        return total;
    }

    double min() const { return values.minCoeff(); }
    double max() const { return values.maxCoeff(); }
};

// Expansion of rho in the spherical tensor basis, used to evaluate the Wigner
// function at arbitrary points.
class WignerFunction {
public:
    explicit WignerFunction(const DensityMatrix& rho) : spin_(SpinQuantumNumber(static_cast<int>(rho.rows()) - 1)) {
        const auto basis = spherical_tensor_basis(spin_);
        coefficients_.resize(basis.size());
        for (std::size_t k = 0; k < basis.size(); ++k)
            for (const Matrix& t : basis[k]) coefficients_[k].push_back((rho * t.adjoint()).trace());
        // Fixes the total integral to 1: only k = 0 contributes, with
        // rho_00 = 1/sqrt(2I+1) and the integral of Y_00 equal to sqrt(4 pi).
        scale_ = std::sqrt(static_cast<double>(spin_.dim()) / (4.0 * kPi));
    }

    Complex evaluate_complex(double theta, double phi) const {
        Complex sum = 0.0;
        for (std::size_t k = 0; k < coefficients_.size(); ++k) {
            const int kk = static_cast<int>(k);
            for (int q = -kk; q <= kk; ++q)
                sum += coefficients_[k][static_cast<std::size_t>(q + kk)] * spherical_harmonic(kk, q, theta, phi);
        }
        return scale_ * sum;
    }

    double operator()(double theta, double phi) const { return evaluate_complex(theta, phi).real(); }

private:
    SpinQuantumNumber spin_;
    std::vector<std::vector<Complex>> coefficients_;
    double scale_ = 1.0;
};

inline WignerMap wigner_map(const DensityMatrix& rho, int n_theta, int n_phi) {
    if (n_theta < 2 || n_phi < 2) throw DomainError("wigner_map: grid needs at least 2 points per axis");
    if (rho.rows() != rho.cols()) throw DomainError("wigner_map: density matrix must be square");
    const WignerFunction w(rho);
    WignerMap map;
    for (int i = 0; i < n_theta; ++i) map.theta_grid.push_back(kPi * i / (n_theta - 1));
    for (int j = 0; j < n_phi; ++j) map.phi_grid.push_back(kTwoPi * j / n_phi);
    map.values.resize(n_theta, n_phi);
    for (int i = 0; i < n_theta; ++i)
        for (int j = 0; j < n_phi; ++j) map.values(i, j) = w(map.theta_grid[i], map.phi_grid[j]);
    return map;
}

} // namespace qcat

#endif // QCAT_MEASURES_HPP
