#pragma once

/// Independent reference values for the tests. Nothing here calls the
/// library; every quantity comes from closed forms or 1-d quadrature.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

using P4 = std::array<double, 4>;

inline double norm2(const P4& x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]; }

/// Composite Simpson on [a, b] with m (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int m) {
    const double h = (b - a) / m;
    double s = f(a) + f(b);
    for (int i = 1; i < m; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

/// Monge–Ampère mass of a radial u = f(|z|²) over the ball |z|² < T in C²
/// (standard structure, (i∂∂̄|z|²)² has density 8). The eigenvalues of the
/// complex Hessian are f' and f' + t f'', and dV = π² t dt, so
///   mass = ∫₀^T 8 f'(f' + t f'') π² t dt.
/// fp and fpp are the first two t-derivatives of f.
inline double radial_ma_mass(const std::function<double(double)>& fp, const std::function<double(double)>& fpp,
                             double t0, double T, int panels) {
    return simpson([&](double t) { return 8.0 * fp(t) * (fp(t) + t * fpp(t)) * kPi * kPi * t; }, t0, T, panels);
}

/// Mass of the classical extremal function max(log|z|/log(1/r), −1) of the
/// ball of radius r in the unit ball, by quadrature of a smoothed maximum.
/// With the kink replaced by a softplus of width δ the mass is a smooth
/// integral; the value is extrapolated as δ → 0 from two widths.
inline double extremal_ball_mass(double r) {
    const double L = std::log(1.0 / r);
    auto mass = [&](double delta) {
        // f(t) = −1 + δ·softplus((log t /(2L) + 1)/δ)
        auto s = [&](double t) { return (std::log(t) / (2.0 * L) + 1.0) / delta; };
        auto sig = [](double y) { return 1.0 / (1.0 + std::exp(-y)); };
        auto fp = [&](double t) { return sig(s(t)) / (2.0 * L * t); };
        auto fpp = [&](double t) {
            const double g = sig(s(t));
            return g * (1.0 - g) / (delta * 4.0 * L * L * t * t) - g / (2.0 * L * t * t);
        };
        return radial_ma_mass(fp, fpp, 1e-6, 1.0, 400000);
    };
    const double a = mass(0.02), b = mass(0.01);
    return 2.0 * b - a;
}

inline double extremal_ball(const P4& x, double r) {
    return std::max(std::log(std::sqrt(norm2(x))) / std::log(1.0 / r), -1.0);
}

/// Psh envelope of the radial obstacle min(0, A(|z| − 0.9)) on the unit ball
/// (standard structure). Radial psh functions are convex non-decreasing in
/// s = log|z|, so the envelope is the convex minorant of g(s) = min(0, A(eˢ − 0.9))
/// on s ≤ 0 with g(0) = 0 fixed: the obstacle up to the tangency point s*
/// where eˢ(1 − s) = 0.9, then the tangent line through (0, 0).
inline double radial_envelope(double r, double A) {
    double lo = -1.0, hi = std::log(0.9);  // bisection on e^s(1 − s) − 0.9, increasing on s < 0
    for (int i = 0; i < 200; ++i) {
        const double m = 0.5 * (lo + hi);
        (std::exp(m) * (1.0 - m) < 0.9 ? lo : hi) = m;
    }
    const double s_star = 0.5 * (lo + hi), s = std::log(std::max(r, 1e-300));
    if (s <= s_star) return A * (r - 0.9);
    return A * std::exp(s_star) * s;  // slope A e^{s*} through (0, 0)
}

/// 8·det of the complex Hessian ∂²u/∂z_j∂z̄_k of u = |z|⁴:
/// u_{jk̄} = 2|z|²δ_jk + 2 z̄_j z_k, det = 8|z|⁴, density 64|z|⁴.
inline double ma_density_abs_z4(const P4& x) {
    const double t = norm2(x);
    const double zr[2] = {x[0], x[2]}, zi[2] = {x[1], x[3]};
    // Hermitian 2×2: a11, a22 real, a12 = 2 z̄₁ z₂.
    const double a11 = 2.0 * t + 2.0 * (zr[0] * zr[0] + zi[0] * zi[0]);
    const double a22 = 2.0 * t + 2.0 * (zr[1] * zr[1] + zi[1] * zi[1]);
    const double re12 = 2.0 * (zr[0] * zr[1] + zi[0] * zi[1]), im12 = 2.0 * (zr[0] * zi[1] - zi[0] * zr[1]);
    return 8.0 * (a11 * a22 - re12 * re12 - im12 * im12);
}

/// W12 norm of |z|² over the lattice nodes x_j = lo + j·h, j = 1..n−2 on
/// every axis, with the node sum times h⁴ as quadrature. Centred differences
/// of x² are exact, so the integrand is |x|⁴ + 4|x|²; with the 1-d power
/// sums m = Σ1, S₂ = Σx², S₄ = Σx⁴ the 4-d sums are
///   Σ|x|⁴ = 4 S₄ m³ + 12 S₂² m²,  Σ|x|² = 4 S₂ m³.
inline double lattice_w12_abs_z2(int n, double lo, double hi) {
    const double h = (hi - lo) / (n - 1);
    double m = 0.0, s2 = 0.0, s4 = 0.0;
    for (int j = 1; j <= n - 2; ++j) {
        const double x = lo + j * h;
        m += 1.0;
        s2 += x * x;
        s4 += x * x * x * x;
    }
    const double sum = 4.0 * s4 * m * m * m + 12.0 * s2 * s2 * m * m + 4.0 * (4.0 * s2 * m * m * m);
    return std::sqrt(sum * h * h * h * h);
}

/// Least-squares slope of log e against log h.
template <class V>
double loglog_slope(const V& h, const V& e) {
    const std::size_t m = h.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mx += std::log(h[i]);
        my += std::log(e[i]);
    }
    mx /= m;
    my /= m;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxy += (std::log(h[i]) - mx) * (std::log(e[i]) - my);
        sxx += (std::log(h[i]) - mx) * (std::log(h[i]) - mx);
    }
    return sxy / sxx;
}

}  // namespace oracle
