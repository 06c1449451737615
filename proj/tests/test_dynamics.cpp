#include <random>

#include "gtest/gtest.h"

#include "qcat/dynamics.hpp"
#include "qcat/measures.hpp"

using namespace qcat;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

Matrix random_hermitian(std::mt19937& rng, Eigen::Index d) {
    std::normal_distribution<double> g;
    Matrix a(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) a(i, j) = Complex(g(rng), g(rng));
    return 0.5 * (a + a.adjoint());
}

} // namespace

TEST(dynamics, eta_one_five_halves_matches_two_axis_form) {
    // 3Iz^2 + Ix^2 - Iy^2 = I^2 + 2(Iz^2 - Iy^2), so the literal form equals (omega_Q/3)(Iz^2 - Iy^2)
    const auto ops = build_operators(SpinQuantumNumber(5));
    const Matrix lhs = 3.0 * ops.iz * ops.iz + ops.ix * ops.ix - ops.iy * ops.iy;
    const Matrix rhs = ops.casimir + 2.0 * (ops.iz * ops.iz - ops.iy * ops.iy);
    EXPECT_LT(max_abs(lhs - rhs), 1e-12);

    const Matrix with = qi_hamiltonian({SpinQuantumNumber(5), 1.0, true});
    const Matrix without = qi_hamiltonian({SpinQuantumNumber(5), 1.0, false});
    EXPECT_LT(max_abs(with - two_axis_hamiltonian_5half()), 1e-12);
    EXPECT_LT(max_abs(without - with - (kOmegaQ / 6.0) * 8.75 * Matrix::Identity(6, 6)), 1e-12);
}

TEST(dynamics, characteristic_polynomial_roots) {
    const Matrix scaled = (3.0 / kOmegaQ) * two_axis_hamiltonian_5half();
    Eigen::SelfAdjointEigenSolver<Matrix> es(scaled);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double r = 2.0 * std::sqrt(7.0);
    const double expected[] = {-r, -r, 0.0, 0.0, r, r};
    for (int k = 0; k < 6; ++k) EXPECT_NEAR(ev(k), expected[k], 1e-9);
    for (int k = 0; k < 6; ++k) {
        const double l = ev(k);
        EXPECT_NEAR(l * l * (l * l - 28) * (l * l - 28), 0.0, 1e-6);
    }
}

TEST(dynamics, axial_case_keeps_poles_stationary) {
    const HamiltonianSpec spec{SpinQuantumNumber(7), 0.0, true};
    const auto ops = build_operators(spec.spin);
    const Matrix h = qi_hamiltonian(ops, spec);
    EXPECT_LT(max_abs(h * ops.iz - ops.iz * h), 1e-12);
    const StateVector top = dicke_state(spec.spin, 7);
    const auto grid = uniform_grid(0.0, 5.0, 51);
    for (const auto& psi : evolve_pure(top, spec, PulseSchedule{}, grid)) EXPECT_NEAR(fidelity(top, psi), 1.0, 1e-12);
}

TEST(dynamics, propagator_unitarity_and_group_property) {
    std::mt19937 rng(3);
    for (int d : {3, 6, 10}) {
        const Matrix h = random_hermitian(rng, d);
        const PropagatorCache cache(h);
        EXPECT_LT(max_abs(cache.reconstruct() - h), 1e-12);
        const Matrix id = Matrix::Identity(d, d);
        EXPECT_LT(max_abs(propagator(h, 0.0) - id), 1e-13);
        const Matrix u = propagator(h, 1.7);
        EXPECT_LT(max_abs(u * u.adjoint() - id), 1e-11);
        EXPECT_LT(max_abs(cache.propagator(0.4) * cache.propagator(1.1) - cache.propagator(1.5)), 1e-11);
    }
    Matrix bad = Matrix::Zero(3, 3);
    bad(0, 1) = 1.0;
    EXPECT_THROW(propagator(bad, 1.0), DomainError);
}

TEST(dynamics, two_axis_propagator_is_periodic) {
    const Matrix u = propagator(two_axis_hamiltonian_5half(), kPeriod1);
    EXPECT_LT(max_abs(u - Matrix::Identity(6, 6)), 1e-11);
}

TEST(dynamics, closed_form_matches_eigendecomposition) {
    const PropagatorCache cache(two_axis_hamiltonian_5half());
    double worst = 0.0;
    for (int k = 0; k <= 400; ++k) {
        const double t = 10.0 * k / 400.0;
        worst = std::max(worst, max_abs(closed_form_u_5half(t) - cache.propagator(t)));
    }
    EXPECT_LT(worst, 1e-10);
    EXPECT_LT(max_abs(closed_form_u_5half(0.0) - Matrix::Identity(6, 6)), 1e-15);
    // half period: U = 1 - 2 H1^2 / omega1^2
    const Matrix h1 = two_axis_hamiltonian_5half();
    const Matrix half = Matrix::Identity(6, 6) - (2.0 / (kOmega1 * kOmega1)) * h1 * h1;
    EXPECT_LT(max_abs(closed_form_u_5half(kPi / kOmega1) - half), 1e-12);
    EXPECT_LT(max_abs(cache.propagator(kPi / kOmega1) - half), 1e-10);
}

TEST(dynamics, casimir_toggle_is_global_phase) {
    const auto ops = build_operators(SpinQuantumNumber(7));
    const StateVector psi0 = axis_state(ops, CartesianAxis::PlusX);
    const auto grid = uniform_grid(0.0, 4.0, 101);
    const PulseSchedule sched({{0.5, Vec3::UnitX(), 0.8}});
    const auto a = evolve_pure(psi0, {ops.spin, 0.4, true}, sched, grid);
    const auto b = evolve_pure(psi0, {ops.spin, 0.4, false}, sched, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) EXPECT_NEAR(std::abs(a[k].dot(b[k])), 1.0, 1e-10);
}

TEST(dynamics, zero_angle_pulse_is_free_evolution) {
    const auto ops = build_operators(SpinQuantumNumber(5));
    const StateVector psi0 = axis_state(ops, CartesianAxis::PlusX);
    const auto grid = uniform_grid(0.0, 3.0, 61);
    const HamiltonianSpec spec{ops.spin, 0.6, true};
    const auto free = evolve_pure(psi0, spec, PulseSchedule{}, grid);
    const auto pulsed = evolve_pure(psi0, spec, PulseSchedule({{1.05, Vec3::UnitX(), 0.0}}), grid);
    for (std::size_t k = 0; k < grid.size(); ++k) EXPECT_LT((free[k] - pulsed[k]).norm(), 1e-12);
}

TEST(dynamics, pulse_applies_before_coincident_sample) {
    const auto ops = build_operators(SpinQuantumNumber(5));
    const StateVector psi0 = dicke_state(ops.spin, 5);
    const HamiltonianSpec spec{ops.spin, 0.0, true};
    const std::vector<double> grid{0.0, 1.0};
    const auto out = evolve_pure(psi0, spec, PulseSchedule({{1.0, Vec3::UnitY(), kPi / 2}}), grid);
    const StateVector expected = rotation_operator(ops, Vec3::UnitY(), kPi / 2) * PropagatorCache(qi_hamiltonian(ops, spec)).apply(psi0, 1.0);
    EXPECT_NEAR(std::abs(out[1].dot(expected)), 1.0, 1e-12);
}

TEST(dynamics, plus_x_fidelity_periodic_at_eta_one) {
    const auto ops = build_operators(SpinQuantumNumber(5));
    const StateVector x = axis_state(ops, CartesianAxis::PlusX);
    std::vector<double> grid;
    for (int k = 0; k <= 40; ++k) grid.push_back(0.05 * k);
    std::vector<double> shifted;
    for (double t : grid) shifted.push_back(t + kPeriod1);
    const HamiltonianSpec spec{ops.spin, 1.0, true};
    const auto a = evolve_pure(x, spec, PulseSchedule{}, grid);
    const auto b = evolve_pure(x, spec, PulseSchedule{}, shifted);
    double swing = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        EXPECT_NEAR(fidelity(x, a[k]), fidelity(x, b[k]), 1e-10);
        swing = std::max(swing, 1.0 - fidelity(x, a[k]));
    }
    EXPECT_GT(swing, 0.1);  // not trivially stationary
}

TEST(dynamics, evolution_errors) {
    const auto ops = build_operators(SpinQuantumNumber(5));
    const StateVector x = axis_state(ops, CartesianAxis::PlusX);
    const std::vector<double> unsorted{0.0, 2.0, 1.0};
    EXPECT_THROW(evolve_pure(x, {ops.spin, 1.0, true}, PulseSchedule{}, unsorted), DomainError);
    EXPECT_THROW(PulseSchedule({{1.0, Vec3::UnitX(), 0.1}, {1.0, Vec3::UnitX(), 0.2}}), DomainError);
    EXPECT_THROW(qi_hamiltonian({ops.spin, 1.5, true}), DomainError);
}
