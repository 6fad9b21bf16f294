#include "ampere/forms.hpp"

#include <algorithm>
#include <bit>
#include <vector>

namespace ampere::forms {

namespace {

struct Tables {
    std::array<std::array<unsigned, 6>, 5> mask{};
    std::array<int, 16> index{};

    Tables() {
        std::array<int, 5> count{};
        // Basis order: lexicographic on the increasing index tuples.
        std::vector<unsigned> by_degree[5];
        for (unsigned i = 0; i < 16; ++i) by_degree[std::popcount(i)].push_back(i);
        for (int k = 0; k <= 4; ++k) {
            auto& v = by_degree[k];
            std::sort(v.begin(), v.end(), [](unsigned a, unsigned b) { return lex_less(a, b); });
            for (unsigned m : v) {
                mask[k][count[k]] = m;
                index[m] = count[k]++;
            }
        }
    }

    static bool lex_less(unsigned a, unsigned b) {
        for (int i = 0; i < 4; ++i) {
            const bool ia = a & (1u << i), ib = b & (1u << i);
            if (ia != ib) return ia;
        }
        return false;
    }
};

const Tables& tables() {
    static const Tables t;
    return t;
}

}  // namespace

unsigned basis_mask(int k, int c) { return tables().mask[k][c]; }
int basis_index(unsigned mask) { return tables().index[mask]; }

int wedge_sign(unsigned I, unsigned J) {
    if (I & J) return 0;
    // Number of transpositions: pairs (i in I, j in J) with i > j.
    int inv = 0;
    for (int i = 0; i < 4; ++i)
        if (I & (1u << i)) inv += std::popcount(J & ((1u << i) - 1u));
    return (inv & 1) ? -1 : 1;
}

void wedge(std::span<const Complex> a, int ka, std::span<const Complex> b, int kb, std::span<Complex> out) {
    const int kc = ka + kb;
    for (int c = 0; c < binom(kc); ++c) out[c] = 0.0;
    if (kc > 4) return;
    for (int i = 0; i < binom(ka); ++i) {
        if (a[i] == Complex(0.0)) continue;
        const unsigned I = basis_mask(ka, i);
        for (int j = 0; j < binom(kb); ++j) {
            const unsigned J = basis_mask(kb, j);
            const int s = wedge_sign(I, J);
            if (s == 0) continue;
            out[basis_index(I | J)] += static_cast<double>(s) * a[i] * b[j];
        }
    }
}

Complex wedge_top(std::span<const Complex> a, int ka, std::span<const Complex> b, int) {
    Complex r = 0.0;
    for (int i = 0; i < binom(ka); ++i) {
        const unsigned I = basis_mask(ka, i);
        const unsigned J = 15u & ~I;
        r += static_cast<double>(wedge_sign(I, J)) * a[i] * b[basis_index(J)];
    }
    return r;
}

Complex evaluate(std::span<const Complex> form, int k, std::span<const Vec4c> vectors) {
    // ω(v1..vk) = Σ_I ω_I det[v_j(i)]_{i∈I}.
    Complex r = 0.0;
    for (int c = 0; c < binom(k); ++c) {
        const unsigned I = basis_mask(k, c);
        int idx[4];
        int n = 0;
        for (int i = 0; i < 4; ++i)
            if (I & (1u << i)) idx[n++] = i;
        Complex det;
        switch (k) {
            case 0: det = 1.0; break;
            case 1: det = vectors[0][idx[0]]; break;
            case 2:
                det = vectors[0][idx[0]] * vectors[1][idx[1]] - vectors[0][idx[1]] * vectors[1][idx[0]];
                break;
            default: {
                // Leibniz expansion for k = 3, 4.
                int perm[4] = {0, 1, 2, 3};
                det = 0.0;
                std::sort(perm, perm + k);
                do {
                    int inv = 0;
                    for (int x = 0; x < k; ++x)
                        for (int y = x + 1; y < k; ++y) inv += perm[x] > perm[y];
                    Complex term = (inv & 1) ? -1.0 : 1.0;
                    for (int j = 0; j < k; ++j) term *= vectors[j][idx[perm[j]]];
                    det += term;
                } while (std::next_permutation(perm, perm + k));
            }
        }
        r += form[c] * det;
    }
    return r;
}

void wedge_covectors(std::span<const Vec4c> covs, std::span<Complex> out) {
    std::array<Complex, 6> acc{}, tmp{};
    int k = 1;
    for (int i = 0; i < 4; ++i) acc[i] = covs[0][i];
    for (std::size_t j = 1; j < covs.size(); ++j) {
        wedge(std::span<const Complex>(acc.data(), binom(k)), k, covs[j], 1, std::span<Complex>(tmp.data(), 6));
        ++k;
        acc = tmp;
    }
    for (int c = 0; c < binom(k); ++c) out[c] = acc[c];
}

std::vector<Complex> induced_projector(const std::array<Vec4c, 4>& P, const std::array<Vec4c, 4>& Q, int k,
                                       int q) {
    const int n = binom(k);
    std::vector<Complex> M(static_cast<std::size_t>(n) * n, 0.0);
    if (k == 0) {
        M[0] = (q == 0) ? 1.0 : 0.0;
        return M;
    }
    for (int c = 0; c < n; ++c) {
        const unsigned I = basis_mask(k, c);
        int idx[4];
        int m = 0;
        for (int i = 0; i < 4; ++i)
            if (I & (1u << i)) idx[m++] = i;
        for (unsigned S = 0; S < (1u << k); ++S) {
            if (std::popcount(S) != q) continue;
            std::array<Vec4c, 4> covs{};
            for (int j = 0; j < k; ++j) covs[j] = (S & (1u << j)) ? Q[idx[j]] : P[idx[j]];
            std::array<Complex, 6> img{};
            wedge_covectors(std::span<const Vec4c>(covs.data(), k), img);
            for (int r = 0; r < n; ++r) M[static_cast<std::size_t>(r) * n + c] += img[r];
        }
    }
    return M;
}

}  // namespace ampere::forms
