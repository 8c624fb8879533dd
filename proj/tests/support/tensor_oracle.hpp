#pragma once

// Brute-force n-qubit state-vector arithmetic in the full 2^n space. Deliberately shares
// no code with the library: plain std::complex vectors, explicit bit strings.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace oracle {

using cd = std::complex<double>;
using Vec = std::vector<cd>;
using Mat2 = std::array<std::array<cd, 2>, 2>;

inline int popcount(std::size_t x)
{
    int c = 0;
    for (; x; x >>= 1) c += static_cast<int>(x & 1U);
    return c;
}

inline double binomial(int n, int k)
{
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// |N,m> as an equal superposition of all bit strings with m ones.
inline Vec dicke(int n, int m)
{
    Vec v(std::size_t{1} << n, 0.0);
    const double a = 1.0 / std::sqrt(binomial(n, m));
    for (std::size_t b = 0; b < v.size(); ++b) {
        if (popcount(b) == m) v[b] = a;
    }
    return v;
}

inline Vec embed(int n, const std::vector<cd>& dicke_amplitudes)
{
    Vec v(std::size_t{1} << n, 0.0);
    for (int m = 0; m <= n; ++m) {
        const Vec d = dicke(n, m);
        for (std::size_t b = 0; b < v.size(); ++b) v[b] += dicke_amplitudes[static_cast<std::size_t>(m)] * d[b];
    }
    return v;
}

// Applies the same 2x2 matrix to every qubit.
inline Vec apply_each(int n, const Mat2& u, const Vec& in)
{
    Vec v = in;
    for (int q = 0; q < n; ++q) {
        Vec out(v.size(), 0.0);
        const std::size_t bit = std::size_t{1} << q;
        for (std::size_t b = 0; b < v.size(); ++b) {
            const int row = (b & bit) ? 1 : 0;
            const std::size_t b0 = b & ~bit;
            const std::size_t b1 = b | bit;
            out[b] = u[row][0] * v[b0] + u[row][1] * v[b1];
        }
        v = out;
    }
    return v;
}

// diag(1, e^{-i phi}) on every qubit.
inline Vec phase_each(int n, double phi, const Vec& in)
{
    const Mat2 u{{{cd(1.0), cd(0.0)}, {cd(0.0), std::exp(cd(0.0, -phi))}}};
    return apply_each(n, u, in);
}

// Single-qubit y rotation with rows (cos t/2, -sin t/2; sin t/2, cos t/2).
inline Vec rotate_each(int n, double theta, const Vec& in)
{
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    const Mat2 u{{{cd(c), cd(-s)}, {cd(s), cd(c)}}};
    return apply_each(n, u, in);
}

inline cd dot(const Vec& a, const Vec& b)
{
    cd s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

// Rotate every qubit by theta, then count excitations: p_j = |<N,j| R^{(x)n} psi>|^2.
inline std::vector<double> rotated_counting_probabilities(int n, double theta, const Vec& psi)
{
    const Vec r = rotate_each(n, theta, psi);
    std::vector<double> p(static_cast<std::size_t>(n) + 1);
    for (int j = 0; j <= n; ++j) p[static_cast<std::size_t>(j)] = std::norm(dot(dicke(n, j), r));
    return p;
}

// Projective measurement onto embedded kets.
inline std::vector<double> projection_probabilities(const std::vector<Vec>& kets, const Vec& psi)
{
    std::vector<double> p;
    for (const auto& k : kets) p.push_back(std::norm(dot(k, psi)));
    return p;
}

// Product state (a, b)^{(x)n}.
inline Vec product_state(int n, cd a, cd b)
{
    Vec v(std::size_t{1} << n);
    for (std::size_t s = 0; s < v.size(); ++s) {
        cd x = 1.0;
        for (int q = 0; q < n; ++q) x *= (s >> q & 1U) ? b : a;
        v[s] = x;
    }
    return v;
}

}  // namespace oracle
