#ifndef QCAT_LINALG_HPP
#define QCAT_LINALG_HPP

#include <algorithm>
#include <complex>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "qcat/errors.hpp"

namespace qcat {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;
using DensityMatrix = Eigen::MatrixXcd;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

// Largest elementwise deviation from Hermiticity.
inline double hermiticity_defect(const Matrix& m) {
    if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Matrix& m, double tol = 1e-10) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return hermiticity_defect(m) <= tol * scale;
}

// Spectral decomposition of a Hermitian matrix, kept around so that
// exp(-i H t) can be evaluated exactly for any t.
class PropagatorCache {
public:
    PropagatorCache() = default;

    explicit PropagatorCache(const Matrix& hermitian) {
        if (!is_hermitian(hermitian, 1e-12))
            throw DomainError("PropagatorCache: matrix is not Hermitian (defect " +
                              std::to_string(hermiticity_defect(hermitian)) + ")");
        // Symmetrize to strip roundoff in the anti-Hermitian part.
        const Matrix h = 0.5 * (hermitian + hermitian.adjoint());
        Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
        if (solver.info() != Eigen::Success)
            throw NumericalError("PropagatorCache: eigendecomposition failed");
        eigenvalues_ = solver.eigenvalues();
        eigenvectors_ = solver.eigenvectors();
    }

    Eigen::Index dim() const { return eigenvalues_.size(); }
    const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
    const Matrix& eigenvectors() const { return eigenvectors_; }

    Eigen::VectorXcd phases(double t) const {
        Eigen::VectorXcd p(dim());
        for (Eigen::Index k = 0; k < dim(); ++k) p(k) = std::exp(-kI * eigenvalues_(k) * t);
        return p;
    }

    // exp(-i H t)
    Matrix propagator(double t) const {
        return eigenvectors_ * phases(t).asDiagonal() * eigenvectors_.adjoint();
    }

    StateVector apply(const StateVector& psi, double t) const {
        const Eigen::VectorXcd coeff = eigenvectors_.adjoint() * psi;
        return eigenvectors_ * phases(t).cwiseProduct(coeff);
    }

    Matrix reconstruct() const {
        return eigenvectors_ * eigenvalues_.cast<Complex>().asDiagonal() * eigenvectors_.adjoint();
    }

private:
    Eigen::VectorXd eigenvalues_;
    Matrix eigenvectors_;
};

// exp(-i H t) for Hermitian H.
inline Matrix propagator(const Matrix& hermitian, double t) {
    return PropagatorCache(hermitian).propagator(t);
}

} // namespace qcat

#endif // QCAT_LINALG_HPP
