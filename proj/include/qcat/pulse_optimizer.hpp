#ifndef QCAT_PULSE_OPTIMIZER_HPP
#define QCAT_PULSE_OPTIMIZER_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "qcat/dynamics.hpp"
#include "qcat/measures.hpp"
#include "qcat/parallel.hpp"

namespace qcat {

struct StabilizationScore {
    double f_max = 0.0;
    double f_ripple = 0.0;
    double score = 0.0;
};

struct OptimizerConfig {
    double t_r_max = 2.0;
    int n_t_r = 400;
    int n_theta = 91;
    double window_factor = 10.0;  // window is [t_R, window_factor * t_R]
    int n_window = 500;
    double weight_max = 0.55;
    double weight_ripple = 0.45;
    double min_step = 1e-7;  // compass-search mesh at which refinement stops
    int max_refine_iterations = 5000;
    int refine_starts = 16;         // best grid local maxima refined
    double tie_tolerance = 1e-6;    // refined scores this close count as ties
};

inline void validate(const OptimizerConfig& c) {
    if (!(c.t_r_max > 0.0)) throw DomainError("t_r_max must be positive");
    if (c.n_t_r < 1 || c.n_theta < 2) throw DomainError("optimizer grid needs n_t_r >= 1 and n_theta >= 2");
    if (!(c.window_factor > 1.0)) throw DomainError("window_factor must exceed 1");
    if (c.n_window < 500) throw DomainError("n_window must be at least 500");
    if (!(c.min_step > 0.0)) throw DomainError("min_step must be positive");
}

struct CandidateScore {
    StabilizationScore score;
    double varphi = 0.0;  // in [0, 2 pi)
};

struct OptimizationResult {
    SpinQuantumNumber spin{5};
    double eta = 1.0;
    CatBound bound = CatBound::Polar;
    double t_r = 0.0;
    double theta_r = 0.0;
    double varphi = 0.0;
    StabilizationScore score;
    bool flat_landscape = false;
    int refine_iterations = 0;
    OptimizerConfig config;
};

inline double wrap_phase(double a) {
    double w = std::fmod(a, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    if (w >= kTwoPi) w -= kTwoPi;
    return w;
}

namespace detail {

// Window overlaps oa(s) = <A|psi(t_R + s)>, ob(s) = <-A|psi(t_R + s)> in the
// Hamiltonian eigenbasis, available at any s for refining sampled extrema.
struct WindowOverlaps {
    Eigen::RowVectorXcd a, b;  // leg bras times eigenvectors
    Eigen::VectorXcd c;        // post-pulse state in the eigenbasis
    const Eigen::VectorXd* lam = nullptr;

    std::pair<Complex, Complex> at(double s) const {
        Complex oa = 0.0, ob = 0.0;
        for (Eigen::Index k = 0; k < c.size(); ++k) {
            const Complex e = std::exp(-kI * ((*lam)(k) * s)) * c(k);
            oa += a(k) * e;
            ob += b(k) * e;
        }
        return {oa, ob};
    }
};

inline double aligned_fidelity(Complex oa, Complex ob, Complex rot) { return std::min(1.0, std::abs(oa + rot * ob) / std::sqrt(2.0)); }

// Overlaps sampled at uniform offsets s_j over [0, span]. With auto phase,
// varphi aligns the two legs where |oa| + |ob| peaks (best sample, polished
// like the extrema). The sampled maximum and minimum are then polished to the continuous extrema of
// the window with Brent's method on the neighbouring sample interval.
inline CandidateScore score_overlaps(const std::vector<Complex>& oa, const std::vector<Complex>& ob, double span,
                                     const WindowOverlaps* exact, std::optional<double> varphi, const OptimizerConfig& c) {
    double phase = 0.0;
    if (varphi) {
        phase = *varphi;
    } else {
        std::size_t best = 0;
        double best_weight = -1.0;
        for (std::size_t j = 0; j < oa.size(); ++j) {
            const double w = std::abs(oa[j]) + std::abs(ob[j]);
            if (w > best_weight) {
                best_weight = w;
                best = j;
            }
        }
        phase = std::arg(ob[best]) - std::arg(oa[best]);
        if (exact && oa.size() > 1) {
            const double ds = span / static_cast<double>(oa.size() - 1);
            const double a = ds * static_cast<double>(best == 0 ? 0 : best - 1);
            const double b = ds * static_cast<double>(std::min(best + 1, oa.size() - 1));
            const auto r = boost::math::tools::brent_find_minima(
                [&](double s) {
                    const auto [x, y] = exact->at(s);
                    return -(std::abs(x) + std::abs(y));
                },
                a, b, 40);
            if (-r.second >= best_weight) {
                const auto [x, y] = exact->at(r.first);
                phase = std::arg(y) - std::arg(x);
            }
        }
    }
    const Complex rot = std::exp(-kI * phase);
    const std::size_t n = oa.size();
    std::vector<double> f(n);
    for (std::size_t j = 0; j < n; ++j) f[j] = aligned_fidelity(oa[j], ob[j], rot);
    const auto hi_it = std::max_element(f.begin(), f.end());
    const auto lo_it = std::min_element(f.begin(), f.end());
    double hi = *hi_it, lo = *lo_it;
    if (exact && n > 1) {
        const double ds = span / static_cast<double>(n - 1);
        auto polish = [&](std::size_t j, double sign) {
            const double a = ds * static_cast<double>(j == 0 ? 0 : j - 1);
            const double b = ds * static_cast<double>(std::min(j + 1, n - 1));
            const auto r = boost::math::tools::brent_find_minima(
                [&](double s) {
                    const auto [x, y] = exact->at(s);
                    return sign * aligned_fidelity(x, y, rot);
                },
                a, b, 40);
            return sign * r.second;
        };
        hi = std::max(hi, polish(static_cast<std::size_t>(hi_it - f.begin()), -1.0));
        lo = std::min(lo, polish(static_cast<std::size_t>(lo_it - f.begin()), 1.0));
    }
    StabilizationScore s;
    s.f_max = hi;
    s.f_ripple = 0.5 * (hi - lo);
    s.score = c.weight_max * s.f_max - c.weight_ripple * s.f_ripple;
    return {s, wrap_phase(phase)};
}

inline WindowOverlaps window_overlaps(const PropagatorCache& cache, const CatLegs& legs, const StateVector& post) {
    WindowOverlaps w;
    w.a = legs.plus.adjoint() * cache.eigenvectors();
    w.b = legs.minus.adjoint() * cache.eigenvectors();
    w.c = cache.eigenvectors().adjoint() * post;
    w.lam = &cache.eigenvalues();
    return w;
}

} // namespace detail

// |+X> evolves freely, an x pulse of angle theta_r hits at t_r, and the
// fidelity to the bound's cat is sampled on [t_r, window_factor * t_r].
inline CandidateScore evaluate_candidate(SpinQuantumNumber spin, double eta, CatBound bound, double t_r, double theta_r,
                                         std::optional<double> varphi = std::nullopt, const OptimizerConfig& config = {}) {
    if (!(t_r > 0.0)) throw DomainError("t_R must be positive");
    if (bound == CatBound::XAxis) throw DomainError("optimizer supports polar and equator bounds only");
    validate(config);
    const SpinOperatorSet ops = build_operators(spin);
    const HamiltonianSpec spec{spin, eta, true};
    validate(spec);
    const auto grid = uniform_grid(t_r, config.window_factor * t_r, static_cast<std::size_t>(config.n_window));
    const PulseSchedule schedule({{t_r, Vec3::UnitX(), theta_r}});
    const StateVector psi0 = axis_state(ops, CartesianAxis::PlusX);
    const auto states = evolve_pure(psi0, spec, schedule, grid);
    const CatLegs legs = cat_legs(ops, bound);
    std::vector<Complex> oa, ob;
    for (const auto& psi : states) {
        oa.push_back(legs.plus.dot(psi));
        ob.push_back(legs.minus.dot(psi));
    }
    const PropagatorCache cache(qi_hamiltonian(ops, spec));
    const StateVector post = rotation_operator(ops, Vec3::UnitX(), theta_r) * cache.apply(psi0, t_r);
    const detail::WindowOverlaps exact = detail::window_overlaps(cache, legs, post);
    return detail::score_overlaps(oa, ob, grid.back() - grid.front(), &exact, varphi, config);
}

namespace detail {

struct GridRow {
    std::vector<double> scores;  // one per theta
};

// All theta values for one t_R at once, in the Hamiltonian eigenbasis.
inline GridRow grid_row(const PropagatorCache& cache, const std::vector<Matrix>& rotations, const StateVector& psi0,
                        const Eigen::RowVectorXcd& a, const Eigen::RowVectorXcd& b, double t_r, const OptimizerConfig& c) {
    const Matrix& v = cache.eigenvectors();
    const Eigen::VectorXd& lam = cache.eigenvalues();
    const Eigen::Index d = lam.size();
    const StateVector pre = cache.apply(psi0, t_r);
    const auto n_theta = static_cast<Eigen::Index>(rotations.size());
    Matrix coeffs(d, n_theta);
    for (Eigen::Index j = 0; j < n_theta; ++j) coeffs.col(j) = v.adjoint() * (rotations[static_cast<std::size_t>(j)] * pre);

    const auto n = static_cast<Eigen::Index>(c.n_window);
    Matrix ea(n, d), eb(n, d);
    const double span = (c.window_factor - 1.0) * t_r;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = span * static_cast<double>(i) / static_cast<double>(n - 1);
        for (Eigen::Index k = 0; k < d; ++k) {
            const Complex ph = std::exp(-kI * (lam(k) * s));
            ea(i, k) = a(k) * ph;
            eb(i, k) = b(k) * ph;
        }
    }
    const Matrix oa = ea * coeffs;
    const Matrix ob = eb * coeffs;
    GridRow row;
    row.scores.resize(static_cast<std::size_t>(n_theta));
    std::vector<Complex> ca(static_cast<std::size_t>(n)), cb(static_cast<std::size_t>(n));
    WindowOverlaps exact{a, b, Eigen::VectorXcd(d), &lam};
    for (Eigen::Index j = 0; j < n_theta; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            ca[static_cast<std::size_t>(i)] = oa(i, j);
            cb[static_cast<std::size_t>(i)] = ob(i, j);
        }
        exact.c = coeffs.col(j);
        row.scores[static_cast<std::size_t>(j)] = score_overlaps(ca, cb, span, &exact, std::nullopt, c).score.score;
    }
    return row;
}

struct Refined {
    double t_r = 0.0;
    double theta_r = 0.0;
    CandidateScore cs;
    int iterations = 0;
};

// Bounded pattern search on (t_R, theta_R), halving the mesh after an
// unsuccessful poll until both steps fall below min_step.
inline Refined compass_refine(SpinQuantumNumber spin, double eta, CatBound bound, double t, double th, const OptimizerConfig& config) {
    Refined r{t, th, evaluate_candidate(spin, eta, bound, t, th, std::nullopt, config), 0};
    double step_t = config.t_r_max / config.n_t_r;
    double step_th = (kPi / 2) / (config.n_theta - 1);
    const double t_lo = 1e-6 * config.t_r_max;
    while ((step_t > config.min_step || step_th > config.min_step) && r.iterations < config.max_refine_iterations) {
        ++r.iterations;
        Refined best = r;
        // axes plus diagonals, so ridges in the (kinked) landscape can be followed
        const double moves[8][2] = {{step_t, 0.0},      {-step_t, 0.0},      {0.0, step_th},      {0.0, -step_th},
                                    {step_t, step_th}, {-step_t, -step_th}, {step_t, -step_th}, {-step_t, step_th}};
        for (const auto& m : moves) {
            const double nt = std::clamp(r.t_r + m[0], t_lo, config.t_r_max);
            const double nth = std::clamp(r.theta_r + m[1], 0.0, kPi / 2);
            if (nt == r.t_r && nth == r.theta_r) continue;
            const CandidateScore cs = evaluate_candidate(spin, eta, bound, nt, nth, std::nullopt, config);
            if (cs.score.score > best.cs.score.score) best = {nt, nth, cs, r.iterations};
        }
        if (best.t_r != r.t_r || best.theta_r != r.theta_r) {
            r = best;
        } else {
            step_t *= 0.5;
            step_th *= 0.5;
        }
    }
    return r;
}

} // namespace detail

// Coarse grid over (t_R, theta_R) with analytic varphi, then bounded compass
// searches from the best grid local maxima. Refined scores within
// tie_tolerance of the best count as ties and go to the smallest t_R.
inline OptimizationResult optimize(SpinQuantumNumber spin, double eta, CatBound bound, const OptimizerConfig& config = {}) {
    validate(config);
    if (bound == CatBound::XAxis) throw DomainError("optimizer supports polar and equator bounds only");
    const HamiltonianSpec spec{spin, eta, true};
    validate(spec);
    const SpinOperatorSet ops = build_operators(spin);
    const PropagatorCache cache(qi_hamiltonian(ops, spec));
    const CatLegs legs = cat_legs(ops, bound);
    const Eigen::RowVectorXcd a = legs.plus.adjoint() * cache.eigenvectors();
    const Eigen::RowVectorXcd b = legs.minus.adjoint() * cache.eigenvectors();
    const StateVector psi0 = axis_state(ops, CartesianAxis::PlusX);

    std::vector<double> thetas(static_cast<std::size_t>(config.n_theta));
    std::vector<Matrix> rotations;
    for (int j = 0; j < config.n_theta; ++j) {
        thetas[static_cast<std::size_t>(j)] = (kPi / 2) * j / (config.n_theta - 1);
        rotations.push_back(rotation_operator(ops, Vec3::UnitX(), thetas[static_cast<std::size_t>(j)]));
    }
    std::vector<double> t_values(static_cast<std::size_t>(config.n_t_r));
    for (int i = 0; i < config.n_t_r; ++i) t_values[static_cast<std::size_t>(i)] = config.t_r_max * (i + 1) / config.n_t_r;

    std::vector<detail::GridRow> rows(t_values.size());
    parallel_for(t_values.size(), [&](std::size_t i) { rows[i] = detail::grid_row(cache, rotations, psi0, a, b, t_values[i], config); });

    const auto nt = static_cast<long>(t_values.size()), nth = static_cast<long>(thetas.size());
    auto score_at = [&](long i, long j) { return rows[static_cast<std::size_t>(i)].scores[static_cast<std::size_t>(j)]; };
    double lo = 1e300, hi = -1e300;
    struct Start {
        double score;
        long i, j;
    };
    std::vector<Start> starts;
    for (long i = 0; i < nt; ++i) {
        for (long j = 0; j < nth; ++j) {
            const double s = score_at(i, j);
            lo = std::min(lo, s);
            hi = std::max(hi, s);
            bool peak = true;
            for (long di = -1; di <= 1 && peak; ++di)
                for (long dj = -1; dj <= 1 && peak; ++dj) {
                    const long ii = i + di, jj = j + dj;
                    if ((di == 0 && dj == 0) || ii < 0 || jj < 0 || ii >= nt || jj >= nth) continue;
                    if (score_at(ii, jj) > s) peak = false;
                }
            if (peak) starts.push_back({s, i, j});
        }
    }

    OptimizationResult res;
    res.spin = spin;
    res.eta = eta;
    res.bound = bound;
    res.config = config;
    if (hi - lo <= 1e-9) {
        res.flat_landscape = true;
        res.t_r = t_values.front();
        res.theta_r = thetas.front();
        const CandidateScore cs = evaluate_candidate(spin, eta, bound, res.t_r, res.theta_r, std::nullopt, config);
        res.score = cs.score;
        res.varphi = cs.varphi;
        return res;
    }

    // stable order: score descending, then grid position
    std::stable_sort(starts.begin(), starts.end(), [](const Start& x, const Start& y) { return x.score > y.score; });
    if (starts.size() > static_cast<std::size_t>(std::max(1, config.refine_starts))) starts.resize(static_cast<std::size_t>(std::max(1, config.refine_starts)));
    std::vector<detail::Refined> refined(starts.size());
    parallel_for(starts.size(), [&](std::size_t k) {
        refined[k] = detail::compass_refine(spin, eta, bound, t_values[static_cast<std::size_t>(starts[k].i)],
                                            thetas[static_cast<std::size_t>(starts[k].j)], config);
    });
    double best = -1e300;
    for (const auto& r : refined) best = std::max(best, r.cs.score.score);
    const detail::Refined* pick = nullptr;
    for (const auto& r : refined) {
        if (r.cs.score.score < best - config.tie_tolerance) continue;
        if (!pick || r.t_r < pick->t_r || (r.t_r == pick->t_r && r.cs.score.score > pick->cs.score.score)) pick = &r;
    }
    res.t_r = pick->t_r;
    res.theta_r = pick->theta_r;
    res.score = pick->cs.score;
    res.varphi = pick->cs.varphi;
    for (const auto& r : refined) res.refine_iterations += r.iterations;
    return res;
}

inline std::vector<OptimizationResult> eta_sweep(SpinQuantumNumber spin, const std::vector<double>& eta_grid, CatBound bound,
                                                 const OptimizerConfig& config = {}) {
    for (double eta : eta_grid)
        if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("eta_sweep: eta values must lie in (0, 1]");
    std::vector<OptimizationResult> out;
    for (double eta : eta_grid) out.push_back(optimize(spin, eta, bound, config));
    return out;
}

} // namespace qcat

#endif // QCAT_PULSE_OPTIMIZER_HPP
