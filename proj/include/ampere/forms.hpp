#pragma once

/// @file forms.hpp
/// @brief Pointwise exterior algebra on R^4 in the coordinate coframe.
///
/// A k-covector is stored as C(4,k) complex coefficients of dx^I for
/// increasing multi-indices I, ordered lexicographically:
///   k=1: 0 1 2 3
///   k=2: 01 02 03 12 13 23
///   k=3: 012 013 023 123
///   k=4: 0123

#include <array>
#include <complex>
#include <span>

#include "ampere/grid.hpp"

namespace ampere::forms {

inline constexpr int kDim = 4;

constexpr int binom(int k) {
    constexpr int b[5] = {1, 4, 6, 4, 1};
    return b[k];
}

/// Bitmask of the multi-index for basis element `c` of degree `k`.
unsigned basis_mask(int k, int c);
/// Inverse of basis_mask.
int basis_index(unsigned mask);

/// Sign of dx^I ∧ dx^J relative to dx^{I∪J}; 0 if I ∩ J ≠ ∅.
int wedge_sign(unsigned I, unsigned J);

using Vec4c = std::array<Complex, 4>;

/// out = a ∧ b for a of degree ka and b of degree kb; `out` must hold
/// C(4, ka+kb) entries and is overwritten.
void wedge(std::span<const Complex> a, int ka, std::span<const Complex> b, int kb, std::span<Complex> out);

/// Top-degree coefficient of a ∧ b when ka + kb = 4.
Complex wedge_top(std::span<const Complex> a, int ka, std::span<const Complex> b, int kb);

/// Evaluates a k-covector on k tangent vectors (complexified).
Complex evaluate(std::span<const Complex> form, int k, std::span<const Vec4c> vectors);

/// Coordinates of v1 ∧ ... ∧ vk (covectors) as a k-covector.
void wedge_covectors(std::span<const Vec4c> covs, std::span<Complex> out);

/// Dense matrix (C(4,k) × C(4,k), row-major) of a linear map on k-covectors
/// induced multiplicatively by one-covector maps: basis dx^{i1}∧…∧dx^{ik}
/// goes to Σ over subsets S of size q of the factors: Q on S, P elsewhere.
/// This is Π^{k−q,q} when P, Q are Π^{1,0}, Π^{0,1}.
std::vector<Complex> induced_projector(const std::array<Vec4c, 4>& P, const std::array<Vec4c, 4>& Q, int k,
                                       int q);

// Fixed-size kernels used in the per-node hot loops.

inline constexpr int kPairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
inline constexpr int kTriples[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};

/// out = a ∧ b for 1-covectors (also the bivector X∧Y paired against dx^I).
template <class T>
inline void wedge11(const T* a, const T* b, T* out) {
    for (int c = 0; c < 6; ++c) {
        const int i = kPairs[c][0], j = kPairs[c][1];
        out[c] = a[i] * b[j] - a[j] * b[i];
    }
}

template <class T>
inline T minor3(const T* a, const T* b, const T* c, int i, int j, int k) {
    return a[i] * (b[j] * c[k] - b[k] * c[j]) - a[j] * (b[i] * c[k] - b[k] * c[i]) +
           a[k] * (b[i] * c[j] - b[j] * c[i]);
}

/// out = a ∧ b ∧ c for 1-covectors.
template <class T>
inline void wedge111(const T* a, const T* b, const T* c, T* out) {
    for (int t = 0; t < 4; ++t) out[t] = minor3(a, b, c, kTriples[t][0], kTriples[t][1], kTriples[t][2]);
}

/// β(X, Y) for a 2-covector β.
inline Complex eval2(const Complex* beta, const Complex* X, const Complex* Y) {
    Complex w[6];
    wedge11(X, Y, w);
    Complex s = 0.0;
    for (int c = 0; c < 6; ++c) s += beta[c] * w[c];
    return s;
}

/// γ(X, Y, Z) for a 3-covector γ.
inline Complex eval3(const Complex* gamma, const Complex* X, const Complex* Y, const Complex* Z) {
    Complex w[4];
    wedge111(X, Y, Z, w);
    return gamma[0] * w[0] + gamma[1] * w[1] + gamma[2] * w[2] + gamma[3] * w[3];
}

}  // namespace ampere::forms
