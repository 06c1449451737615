#ifndef QCAT_LINDBLAD_HPP
#define QCAT_LINDBLAD_HPP

#include <cmath>
#include <map>
#include <span>
#include <sstream>
#include <vector>

#include "qcat/dynamics.hpp"

namespace qcat {

// Phase-damping rate gamma = 1/T2, in units of f_Q.
struct DephasingConfig {
    double gamma = 0.0;
};

inline void validate(const DephasingConfig& c) {
    if (!(c.gamma >= 0.0) || !std::isfinite(c.gamma))
        throw DomainError("gamma must be finite and >= 0, got " + std::to_string(c.gamma));
}

inline double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

// Squared prefactors c_m of L_m = sqrt(c_m) Iz^m, m = 1 ... 2I:
//   c_m = C(2I, m) ((1 - e^-gamma)/2)^m ((1 + e^-gamma)/2)^(2I - m)
inline std::vector<double> lindblad_weights(SpinQuantumNumber spin, const DephasingConfig& config) {
    validate(config);
    const int n = spin.twice();
    const double flip = -0.5 * std::expm1(-config.gamma);  // (1 - e^-gamma)/2 without cancellation
    const double keep = 1.0 - flip;
    std::vector<double> w;
    w.reserve(n);
    for (int m = 1; m <= n; ++m) w.push_back(binomial(n, m) * std::pow(flip, m) * std::pow(keep, n - m));
    return w;
}

inline std::vector<Matrix> lindblad_operators(const SpinOperatorSet& ops, const DephasingConfig& config) {
    const std::vector<double> w = lindblad_weights(ops.spin, config);
    std::vector<Matrix> out;
    out.reserve(w.size());
    Matrix power = ops.iz;
    for (double c : w) {
        out.push_back(std::sqrt(c) * power);
        power = power * ops.iz;
    }
    return out;
}

inline std::vector<Matrix> lindblad_operators(SpinQuantumNumber spin, const DephasingConfig& config) {
    return lindblad_operators(build_operators(spin), config);
}

namespace detail {

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Eigen::VectorXcd vec(const Matrix& m) { return Eigen::Map<const Eigen::VectorXcd>(m.data(), m.size()); }

inline Matrix unvec(const Eigen::VectorXcd& v, Eigen::Index d) { return Eigen::Map<const Matrix>(v.data(), d, d); }

inline Matrix matrix_power(Matrix base, long long n) {
    Matrix result = Matrix::Identity(base.rows(), base.cols());
    while (n > 0) {
        if (n & 1) result = result * base;
        n >>= 1;
        if (n > 0) base = base * base;
    }
    return result;
}

} // namespace detail

// Superoperator of d rho/dt = -i[H, rho] + sum_m (L rho L^+ - 1/2 {L^+ L, rho})
// acting on column-stacked rho: vec(A rho B) = (B^T kron A) vec(rho).
inline Matrix liouvillian(const Matrix& h, std::span<const Matrix> jumps) {
    const Eigen::Index d = h.rows();
    const Matrix id = Matrix::Identity(d, d);
    Matrix l = -kI * (detail::kron(id, h) - detail::kron(h.transpose(), id));
    for (const Matrix& j : jumps) {
        const Matrix jdj = j.adjoint() * j;
        l += detail::kron(j.conjugate(), j) - 0.5 * detail::kron(id, jdj) - 0.5 * detail::kron(jdj.transpose(), id);
    }
    return l;
}

struct LindbladOptions {
    double tolerance = 1e-8;     // max change of any sample entry between successive step halvings
    double initial_step_scale = 0.2;  // initial h = scale / ||L||_inf
    int max_halvings = 24;
};

struct LindbladDiagnostics {
    double final_step = 0.0;
    int halvings = 0;
    double last_change = 0.0;
};

namespace detail {

// Fixed-step classical RK4 for a linear ODE y' = L y is multiplication by the
// degree-4 Taylor polynomial of exp(hL); each inter-event interval is covered by
// n equal steps, evaluated as a matrix power.
class Rk4Stepper {
public:
    Rk4Stepper(const Matrix& l, double max_step) : l_(l), max_step_(max_step) {}

    const Matrix& interval_map(double delta) {
        const long long key = std::llround(delta * 1e12);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        const long long n = std::max<long long>(1, static_cast<long long>(std::ceil(delta / max_step_ - 1e-9)));
        const double h = delta / static_cast<double>(n);
        const Eigen::Index dim = l_.rows();
        const Matrix a = h * l_;
        const Matrix a2 = a * a;
        const Matrix step = Matrix::Identity(dim, dim) + a + a2 / 2.0 + (a2 * a) / 6.0 + (a2 * a2) / 24.0;
        return cache_.emplace(key, matrix_power(step, n)).first->second;
    }

private:
    Matrix l_;
    double max_step_;
    std::map<long long, Matrix> cache_;
};

inline std::vector<DensityMatrix> lindblad_pass(const DensityMatrix& rho0, const SpinOperatorSet& ops, const Matrix& l,
                                                double max_step, const PulseSchedule& schedule,
                                                std::span<const double> t_grid) {
    const Eigen::Index d = rho0.rows();
    Rk4Stepper stepper(l, max_step);
    std::vector<DensityMatrix> out;
    out.reserve(t_grid.size());
    Eigen::VectorXcd state = vec(rho0);
    double now = 0.0;
    std::size_t next_pulse = 0;
    const auto& pulses = schedule.events();
    auto advance = [&](double target) {
        if (target > now) state = stepper.interval_map(target - now) * state;
        now = target;
    };
    for (double t : t_grid) {
        while (next_pulse < pulses.size() && pulses[next_pulse].time <= t) {
            const PulseEvent& p = pulses[next_pulse++];
            advance(p.time);
            const Matrix r = rotation_operator(ops, p.axis, p.angle);
            state = vec(r * unvec(state, d) * r.adjoint());
        }
        advance(t);
        Matrix rho = unvec(state, d);
        rho = 0.5 * (rho + rho.adjoint());
        state = vec(rho);
        out.push_back(std::move(rho));
    }
    return out;
}

inline double max_sample_change(const std::vector<DensityMatrix>& a, const std::vector<DensityMatrix>& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, (a[k] - b[k]).cwiseAbs().maxCoeff());
    return worst;
}

} // namespace detail

// Integrates the dephasing master equation from t = 0 with instantaneous pulses
// rho -> R rho R^+. The RK4 step is halved until no sample entry moves by more
// than options.tolerance between successive refinements.
inline std::vector<DensityMatrix> evolve_lindblad(const DensityMatrix& rho0, const HamiltonianSpec& spec,
                                                  const DephasingConfig& config, const PulseSchedule& schedule,
                                                  std::span<const double> t_grid, const LindbladOptions& options = {},
                                                  LindbladDiagnostics* diagnostics = nullptr) {
    require_sorted_grid(t_grid);
    validate(config);
    const SpinOperatorSet ops = build_operators(spec.spin);
    if (rho0.rows() != ops.spin.dim() || rho0.cols() != ops.spin.dim())
        throw DomainError("evolve_lindblad: density matrix dimension mismatch");
    if (!is_hermitian(rho0, 1e-10) || std::abs(rho0.trace() - 1.0) > 1e-10)
        throw DomainError("evolve_lindblad: initial density matrix must be Hermitian with unit trace");

    const Matrix h = qi_hamiltonian(ops, spec);
    const std::vector<Matrix> jumps = lindblad_operators(ops, config);
    const Matrix l = liouvillian(h, jumps);
    const double norm = std::max(1e-12, l.cwiseAbs().rowwise().sum().maxCoeff());

    double step = options.initial_step_scale / norm;
    std::vector<DensityMatrix> previous = detail::lindblad_pass(rho0, ops, l, step, schedule, t_grid);
    double change = 0.0;
    for (int k = 1; k <= options.max_halvings; ++k) {
        step *= 0.5;
        std::vector<DensityMatrix> refined = detail::lindblad_pass(rho0, ops, l, step, schedule, t_grid);
        change = detail::max_sample_change(previous, refined);
        previous = std::move(refined);
        if (change < options.tolerance) {
            if (diagnostics) *diagnostics = {step, k, change};
            return previous;
        }
    }
    std::ostringstream msg;
    msg << "evolve_lindblad: step halving did not converge after " << options.max_halvings
        << " refinements (step " << step << ", last change " << change << ", tolerance " << options.tolerance << ")";
    throw NumericalError(msg.str());
}

inline double purity(const DensityMatrix& rho) { return (rho * rho).trace().real(); }

inline DensityMatrix pure_density(const StateVector& psi) { return psi * psi.adjoint(); }

} // namespace qcat

#endif // QCAT_LINDBLAD_HPP
