#ifndef QCAT_DECAY_FIT_HPP
#define QCAT_DECAY_FIT_HPP

#include <cmath>
#include <span>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "qcat/errors.hpp"

namespace qcat {

// F(t) = f0 exp(-t / tau) + f_sat
struct DecayFit {
    double f0 = 0.0;
    double tau = 0.0;
    double f_sat = 0.0;
    double residual = 0.0;  // root-mean-square
    bool boundary = false;  // best tau on the edge of the scan, or no decaying component
};

struct DecayFitOptions {
    int n_tau = 400;
    double tau_min_factor = 0.5;   // times the smallest sample spacing
    double tau_max_factor = 100.0; // times the sampled span
};

namespace detail {

struct LinearPart {
    double f0 = 0.0;
    double f_sat = 0.0;
    double sse = 0.0;
};

// For fixed tau the model is linear in (f0, f_sat): 2x2 normal equations.
inline LinearPart solve_linear(std::span<const double> t, std::span<const double> f, double tau) {
    double s_ee = 0.0, s_e = 0.0, s_ef = 0.0, s_f = 0.0;
    const auto n = static_cast<double>(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double e = std::exp(-t[k] / tau);
        s_ee += e * e;
        s_e += e;
        s_ef += e * f[k];
        s_f += f[k];
    }
    const double det = s_ee * n - s_e * s_e;
    LinearPart lp;
    if (std::abs(det) < 1e-300 || std::abs(det) < 1e-14 * s_ee * n) {
        lp.f0 = 0.0;
        lp.f_sat = s_f / n;
    } else {
        lp.f0 = (s_ef * n - s_e * s_f) / det;
        lp.f_sat = (s_ee * s_f - s_e * s_ef) / det;
    }
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double r = f[k] - lp.f0 * std::exp(-t[k] / tau) - lp.f_sat;
        lp.sse += r * r;
    }
    return lp;
}

} // namespace detail

inline DecayFit fit_decay(std::span<const double> times, std::span<const double> fidelity, const DecayFitOptions& options = {}) {
    if (times.size() != fidelity.size()) throw DomainError("fit_decay: series lengths differ");
    if (times.size() < 10) throw DomainError("fit_decay: need at least 10 samples");
    double min_dt = INFINITY;
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double dt = times[k] - times[k - 1];
        if (!(dt > 0.0)) throw DomainError("fit_decay: times must be strictly increasing");
        min_dt = std::min(min_dt, dt);
    }
    const double span = times.back() - times.front();
    const double log_lo = std::log(options.tau_min_factor * min_dt);
    const double log_hi = std::log(options.tau_max_factor * span);

    auto sse_at = [&](double log_tau) { return detail::solve_linear(times, fidelity, std::exp(log_tau)).sse; };
    int best = 0;
    double best_sse = INFINITY;
    for (int i = 0; i < options.n_tau; ++i) {
        const double lt = log_lo + (log_hi - log_lo) * i / (options.n_tau - 1);
        const double s = sse_at(lt);
        if (s < best_sse * (1.0 - 1e-12)) {
            best_sse = s;
            best = i;
        }
    }
    const double step = (log_hi - log_lo) / (options.n_tau - 1);
    const double lt0 = log_lo + step * best;
    const double a = std::max(log_lo, lt0 - step), b = std::min(log_hi, lt0 + step);
    const auto [lt, sse] = boost::math::tools::brent_find_minima(sse_at, a, b, 52);

    const detail::LinearPart lp = detail::solve_linear(times, fidelity, std::exp(lt));
    double scale = 0.0;
    for (double f : fidelity) scale = std::max(scale, std::abs(f));
    DecayFit fit;
    fit.f0 = lp.f0;
    fit.f_sat = lp.f_sat;
    fit.tau = std::exp(lt);
    fit.residual = std::sqrt(std::min(sse, lp.sse) / static_cast<double>(times.size()));
    fit.boundary = best == 0 || best == options.n_tau - 1 || std::abs(lp.f0) <= 1e-9 * std::max(scale, 1e-300);
    return fit;
}

} // namespace qcat

#endif // QCAT_DECAY_FIT_HPP
