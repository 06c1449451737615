#ifndef QCAT_SPHERICAL_TENSOR_HPP
#define QCAT_SPHERICAL_TENSOR_HPP

#include <cmath>
#include <cstdlib>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "qcat/spin_core.hpp"

namespace qcat {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// Clebsch-Gordan coefficient <j1 m1; j2 m2 | J M> held exactly as sign * sqrt(square).
struct ExactCG {
    int sign = 0;  // -1, 0, +1
    Rational square{0};

    double value() const { return sign == 0 ? 0.0 : sign * std::sqrt(static_cast<double>(square)); }
};

namespace detail {

inline BigInt factorial(int n) {
    BigInt r = 1;
    for (int k = 2; k <= n; ++k) r *= k;
    return r;
}

inline bool same_parity(int a, int b) { return ((a - b) % 2) == 0; }

} // namespace detail

// All angular momenta are passed doubled (tj1 = 2 j1, ...). Racah's closed form
// evaluated in exact rational arithmetic.
inline ExactCG clebsch_gordan_exact(int tj1, int tm1, int tj2, int tm2, int tJ, int tM) {
    using detail::factorial;
    ExactCG zero;
    if (tj1 < 0 || tj2 < 0 || tJ < 0) return zero;
    if (std::abs(tm1) > tj1 || std::abs(tm2) > tj2 || std::abs(tM) > tJ) return zero;
    if (tm1 + tm2 != tM) return zero;
    if (!detail::same_parity(tj1, tm1) || !detail::same_parity(tj2, tm2) || !detail::same_parity(tJ, tM)) return zero;
    if (tJ < std::abs(tj1 - tj2) || tJ > tj1 + tj2 || !detail::same_parity(tj1 + tj2, tJ)) return zero;

    const int a = (tj1 + tj2 - tJ) / 2;  // j1 + j2 - J
    const int b = (tj1 - tm1) / 2;       // j1 - m1
    const int c = (tj2 + tm2) / 2;       // j2 + m2
    const int e = (tJ - tj2 + tm1) / 2;  // J - j2 + m1
    const int f = (tJ - tj1 - tm2) / 2;  // J - j1 - m2

    Rational sum = 0;
    const int kmin = std::max({0, -e, -f});
    const int kmax = std::min({a, b, c});
    for (int k = kmin; k <= kmax; ++k) {
        BigInt denom = factorial(k) * factorial(a - k) * factorial(b - k) * factorial(c - k) * factorial(e + k) *
                       factorial(f + k);
        Rational term(BigInt(1), denom);
        if (k % 2 != 0) term = -term;
        sum += term;
    }
    if (sum == 0) return zero;

    const Rational pref(BigInt(tJ + 1) * factorial((tJ + tj1 - tj2) / 2) * factorial((tJ - tj1 + tj2) / 2) *
                            factorial(a) * factorial((tJ + tM) / 2) * factorial((tJ - tM) / 2) *
                            factorial((tj1 - tm1) / 2) * factorial((tj1 + tm1) / 2) * factorial((tj2 - tm2) / 2) *
                            factorial((tj2 + tm2) / 2),
                        factorial((tj1 + tj2 + tJ) / 2 + 1));
    ExactCG out;
    out.sign = sum > 0 ? 1 : -1;
    out.square = pref * sum * sum;
    return out;
}

inline double clebsch_gordan(int tj1, int tm1, int tj2, int tm2, int tJ, int tM) {
    return clebsch_gordan_exact(tj1, tm1, tj2, tm2, tJ, tM).value();
}

// Orthonormal spherical tensor operators on the spin-I space:
//   (T_kq)_{m', m} = sqrt((2k+1)/(2I+1)) <I m; k q | I m'>
// so that tr(T_kq^+ T_k'q') = delta_kk' delta_qq'.
inline Matrix spherical_tensor_operator(SpinQuantumNumber spin, int k, int q) {
    if (k < 0 || k > spin.twice() || std::abs(q) > k)
        throw DomainError("spherical tensor rank/order out of range");
    const Eigen::Index d = spin.dim();
    const int tj = spin.twice();
    const double scale = std::sqrt((2.0 * k + 1.0) / (tj + 1.0));
    Matrix t = Matrix::Zero(d, d);
    for (Eigen::Index row = 0; row < d; ++row) {
        const int tmp = tj - 2 * static_cast<int>(row);
        for (Eigen::Index col = 0; col < d; ++col) {
            const int tm = tj - 2 * static_cast<int>(col);
            t(row, col) = scale * clebsch_gordan(tj, tm, 2 * k, 2 * q, tj, tmp);
        }
    }
    return t;
}

// Complete set T_kq, k = 0 ... 2I, q = -k ... k, stored as set[k][q + k].
inline std::vector<std::vector<Matrix>> spherical_tensor_basis(SpinQuantumNumber spin) {
    std::vector<std::vector<Matrix>> basis(spin.twice() + 1);
    for (int k = 0; k <= spin.twice(); ++k)
        for (int q = -k; q <= k; ++q) basis[k].push_back(spherical_tensor_operator(spin, k, q));
    return basis;
}

// Y_kq(theta, phi) with the Condon-Shortley phase.
inline Complex spherical_harmonic(int k, int q, double theta, double phi) {
    const int aq = std::abs(q);
    const double legendre = std::sph_legendre(static_cast<unsigned>(k), static_cast<unsigned>(aq), theta);
    const Complex y = legendre * std::exp(kI * (static_cast<double>(aq) * phi));
    if (q >= 0) return y;
    return ((aq % 2 == 0) ? 1.0 : -1.0) * std::conj(y);
}

} // namespace qcat

#endif // QCAT_SPHERICAL_TENSOR_HPP
