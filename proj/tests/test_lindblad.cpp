#include <boost/multiprecision/cpp_dec_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "gtest/gtest.h"

#include "qcat/lindblad.hpp"
#include "qcat/measures.hpp"

using namespace qcat;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// 50-digit evaluation of C(n, m) p^m q^(n-m) with an exact integer binomial.
double weight_oracle(int n, int m, double gamma) {
    using Big = boost::multiprecision::cpp_dec_float_50;
    boost::multiprecision::cpp_int binom = 1;
    for (int i = 1; i <= m; ++i) binom = binom * (n - m + i) / i;
    const Big e = boost::multiprecision::exp(-Big(gamma));
    const Big p = (Big(1) - e) / 2, q = (Big(1) + e) / 2;
    const Big w = Big(binom) * boost::multiprecision::pow(p, m) * boost::multiprecision::pow(q, n - m);
    return w.convert_to<double>();
}

} // namespace

TEST(lindblad, zero_rate_gives_zero_operators) {
    for (const Matrix& l : lindblad_operators(SpinQuantumNumber(6), {0.0})) EXPECT_EQ(max_abs(l), 0.0);
    EXPECT_EQ(lindblad_operators(SpinQuantumNumber(6), {0.0}).size(), 6u);
}

TEST(lindblad, weak_damping_single_operator_limit) {
    const double gamma = 1e-6;
    const auto ops = build_operators(SpinQuantumNumber(2));
    const auto l = lindblad_operators(ops, {gamma});
    const Matrix expected = std::sqrt(gamma * 1.0) * ops.iz;
    EXPECT_LT(max_abs(l[0] - expected) / max_abs(expected), 1e-5);
}

TEST(lindblad, weights_match_extended_precision_oracle) {
    const auto w = lindblad_weights(SpinQuantumNumber(3), {0.01});
    ASSERT_EQ(w.size(), 3u);
    for (int m = 1; m <= 3; ++m) EXPECT_NEAR(w[m - 1] / weight_oracle(3, m, 0.01), 1.0, 1e-13) << m;
    for (int tj = 2; tj <= 9; ++tj) {
        const auto ww = lindblad_weights(SpinQuantumNumber(tj), {0.37});
        for (int m = 1; m <= tj; ++m) EXPECT_NEAR(ww[m - 1] / weight_oracle(tj, m, 0.37), 1.0, 1e-13);
    }
}

TEST(lindblad, dissipator_sum_tends_to_gamma_i_iz_squared) {
    const double gamma = 1e-6;
    for (int tj = 2; tj <= 9; ++tj) {
        const auto ops = build_operators(SpinQuantumNumber(tj));
        Matrix sum = Matrix::Zero(tj + 1, tj + 1);
        for (const Matrix& l : lindblad_operators(ops, {gamma})) sum += l.adjoint() * l;
        const Matrix ref = gamma * ops.spin.value() * ops.iz * ops.iz;
        EXPECT_LT((sum - ref).norm() / ref.norm(), 1e-4) << tj;
    }
}

TEST(lindblad, unitary_limit_matches_pure_evolution) {
    const auto ops = build_operators(SpinQuantumNumber(5));
    const HamiltonianSpec spec{ops.spin, 1.0, true};
    const StateVector psi0 = axis_state(ops, CartesianAxis::PlusX);
    const PulseSchedule sched({{0.17, Vec3::UnitX(), kPi / 4}});
    const auto grid = uniform_grid(0.0, 1.7, 41);
    const auto pure = evolve_pure(psi0, spec, sched, grid);
    const auto mixed = evolve_lindblad(pure_density(psi0), spec, {0.0}, sched, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) EXPECT_LT(max_abs(mixed[k] - pure_density(pure[k])), 1e-9) << k;
}

TEST(lindblad, trace_hermiticity_positivity_and_purity) {
    for (int tj : {2, 5, 9}) {
        const auto ops = build_operators(SpinQuantumNumber(tj));
        const HamiltonianSpec spec{ops.spin, 0.5, true};
        const StateVector psi0 = axis_state(ops, CartesianAxis::PlusX);
        const auto grid = uniform_grid(0.0, 6.0, 121);
        LindbladDiagnostics diag;
        const auto rhos = evolve_lindblad(pure_density(psi0), spec, {1e-2}, PulseSchedule{}, grid, {}, &diag);
        EXPECT_GT(diag.halvings, 0);
        double prev = 1.0 + 1e-12;
        for (const auto& rho : rhos) {
            EXPECT_NEAR(rho.trace().real(), 1.0, 1e-9);
            EXPECT_LT(std::abs(rho.trace().imag()), 1e-9);
            EXPECT_LT(hermiticity_defect(rho), 1e-9);
            Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
            EXPECT_GT(es.eigenvalues().minCoeff(), -1e-7);
            const double p = purity(rho);
            EXPECT_LE(p, prev + 1e-9);
            prev = p;
        }
        EXPECT_LT(prev, 0.999);
    }
}

TEST(lindblad, rejects_bad_inputs) {
    const auto ops = build_operators(SpinQuantumNumber(3));
    const HamiltonianSpec spec{ops.spin, 0.5, true};
    const std::vector<double> grid{0.0, 1.0};
    EXPECT_THROW(evolve_lindblad(Matrix::Identity(4, 4), spec, {0.1}, PulseSchedule{}, grid), DomainError);
    EXPECT_THROW(lindblad_operators(ops, {-1.0}), DomainError);
    const std::vector<double> unsorted{1.0, 0.0};
    EXPECT_THROW(evolve_lindblad(Matrix::Identity(4, 4) / 4.0, spec, {0.1}, PulseSchedule{}, unsorted), DomainError);
}

TEST(lindblad, non_convergence_reports_diagnostics) {
    const auto ops = build_operators(SpinQuantumNumber(3));
    LindbladOptions opts;
    opts.max_halvings = 1;
    opts.tolerance = 1e-30;
    const std::vector<double> grid{0.0, 1.0};
    try {
        evolve_lindblad(Matrix::Identity(4, 4) / 4.0 + 0.1 * ops.ix, {ops.spin, 0.5, true}, {0.1}, PulseSchedule{}, grid, opts);
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("last change"), std::string::npos);
    }
}
