#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "ampere/structure.hpp"

using namespace ampere;

namespace {

DomainPtr box(int n, double a = 1.0) {
    Box4 b;
    for (auto& i : b) i = {-a, a};
    return GridDomain::build(b, {n, n, n, n});
}

const Complex I(0.0, 1.0);

std::vector<Complex> mat_apply(const std::vector<Complex>& M, const std::vector<Complex>& c) {
    const std::size_t m = c.size();
    std::vector<Complex> out(m, 0.0);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t s = 0; s < m; ++s) out[r] += M[r * m + s] * c[s];
    return out;
}

/// The node closest to x.
std::size_t node_at(const GridDomain& d, const Point4& x) {
    Index4 i;
    for (int a = 0; a < 4; ++a)
        i[a] = static_cast<int>(std::lround((x[a] - d.bbox()[a].lo) / d.spacing()[a]));
    return d.flat(i);
}

}  // namespace

TEST_CASE("standard structure is constant and exact") {
    const auto d = box(5);
    const auto J = make_structure(ModelSpec::standard(), d);
    const Mat4 J0 = J.J(0);
    for (std::size_t k = 0; k < d->size(); ++k) CHECK(J.J(k) == J0);
    const StructureReport r = validate_structure(J);
    CHECK(r.is_valid);
    CHECK(r.max_defect <= 1e-15);

    const auto J1 = make_structure(ModelSpec::twisted(0.0), d);
    for (std::size_t k = 0; k < d->size(); ++k)
        for (int e = 0; e < 16; ++e) CHECK(std::abs(J1.J(k)[e] - (J0[e])) <= 1e-15);
}

TEST_CASE("twist structures square to minus one") {
    const auto d = box(9);
    for (double rho : {0.5, 1.0}) {
        const auto J = make_structure(ModelSpec::twisted(rho), d);
        const StructureReport r = validate_structure(J);
        CHECK(r.is_valid);
        CHECK(r.max_defect <= 1e-12);
    }
}

TEST_CASE("a flipped entry is detected") {
    const auto d = box(5);
    const auto J = make_structure(ModelSpec::standard(), d);
    std::vector<double> t = J.tensor();
    for (int e = 0; e < 16; ++e)
        if (t[e] != 0.0) {
            t[e] = -t[e];
            break;
        }
    const AlmostComplexStructure bad(d, t);
    CHECK_FALSE(validate_structure(bad).is_valid);
    CHECK_THROWS(bidegree_projector(bad, 0, 1));
}

TEST_CASE("bidegree projectors") {
    const auto d = box(9);
    const auto J = make_structure(ModelSpec::standard(), d);
    const std::size_t k = d->size() / 2;

    const ProjectorFamily P1 = bidegree_projector(J, k, 1);
    const std::vector<Complex> dz1{1.0, I, 0.0, 0.0}, dzb1{1.0, -I, 0.0, 0.0};
    const auto a = mat_apply(P1.by_bidegree.at({1, 0}), dz1), b = mat_apply(P1.by_bidegree.at({1, 0}), dzb1);
    for (int c = 0; c < 4; ++c) {
        CHECK(std::abs(a[c] - dz1[c]) <= 1e-14);
        CHECK(std::abs(b[c]) <= 1e-14);
    }

    std::mt19937_64 rng(2);
    std::normal_distribution<double> N;
    for (double rho : {0.0, 0.5}) {
        const auto Jr = make_structure(ModelSpec::twisted(rho), d);
        for (int deg = 1; deg <= 3; ++deg) {
            const ProjectorFamily P = bidegree_projector(Jr, k + 7, deg);
            std::vector<Complex> c(forms::binom(deg));
            for (auto& v : c) v = Complex(N(rng), N(rng));
            std::vector<Complex> sum(c.size(), 0.0);
            for (const auto& kv : P.by_bidegree) {
                const std::vector<Complex>& M = kv.second;
                const auto part = mat_apply(M, c);
                for (std::size_t i = 0; i < c.size(); ++i) sum[i] += part[i];
                // idempotent
                const auto twice = mat_apply(M, part);
                for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(twice[i] - part[i]) <= 1e-12);
            }
            for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(sum[i] - c[i]) <= 1e-12);
        }
    }
}

TEST_CASE("twist mixes dz2 into its conjugate") {
    const auto d = box(11);
    const auto J = make_structure(ModelSpec::twisted(0.5), d);
    const std::size_t k = node_at(*d, {0.4, 0.0, 0.0, 0.0});
    const ProjectorFamily P = bidegree_projector(J, k, 1);
    const auto out = mat_apply(P.by_bidegree.at({1, 0}), {0.0, 0.0, 1.0, I});
    // coefficient of dz̄₂ in c₃dx³ + c₄dx⁴ is (c₃ + i c₄)/2
    CHECK(std::abs((out[2] + I * out[3]) / 2.0) > 1e-3);

    const auto Js = make_structure(ModelSpec::standard(), d);
    const auto outs = mat_apply(bidegree_projector(Js, k, 1).by_bidegree.at({1, 0}), {0.0, 0.0, 1.0, I});
    CHECK(std::abs((outs[2] + I * outs[3]) / 2.0) <= 1e-14);
}

TEST_CASE("Nijenhuis tensor") {
    const auto d = box(9);
    const auto Js = make_structure(ModelSpec::standard(), d);
    const NijenhuisField Ns = nijenhuis(Js);
    CHECK(Ns.max_magnitude(d->interior_mask()) <= 1e-10);

    double prev = 0.0;
    for (double rho : {0.25, 0.5, 1.0}) {
        const NijenhuisField N = nijenhuis(make_structure(ModelSpec::twisted(rho), d));
        const double m = N.max_magnitude(d->interior_mask());
        CHECK(m > prev);
        prev = m;
    }

    const NijenhuisField N = nijenhuis(make_structure(ModelSpec::twisted(0.5), d));
    const std::size_t k = node_at(*d, {0.25, -0.25, 0.5, 0.0});
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b) {
            const auto ab = N.at(k, a, b), ba = N.at(k, b, a);
            for (int c = 0; c < 4; ++c) CHECK(std::abs(ab[c] - (-ba[c])) <= 1e-14);
        }
    for (int a = 0; a < 4; ++a)
        for (double v : N.at(k, a, a)) CHECK(v == 0.0);
}

TEST_CASE("Hermitian form and unitary coframe") {
    const auto d = box(9);
    const auto Js = make_structure(ModelSpec::standard(), d);
    const HermitianForm ws = make_hermitian_form(Js);
    const std::size_t k = d->size() / 2;
    const Complex* w = ws.omega().at(k);
    // pairs 01 02 03 12 13 23: the standard Kähler form dx¹∧dx² + dx³∧dx⁴
    CHECK(std::abs(w[0] - 1.0) <= 1e-14);
    CHECK(std::abs(w[5] - 1.0) <= 1e-14);
    for (int c : {1, 2, 3, 4}) CHECK(std::abs(w[c]) <= 1e-14);
    CHECK(ws.omega_squared_density(k) == doctest::Approx(2.0));

    const HermitianForm w0 = make_hermitian_form(make_structure(ModelSpec::twisted(0.0), d));
    for (int c = 0; c < 6; ++c) CHECK(std::abs(w0.omega().at(k)[c] - w[c]) <= 1e-14);

    const auto Jt = make_structure(ModelSpec::twisted(0.5), d);
    const HermitianForm wt = make_hermitian_form(Jt);
    CHECK(wt.min_positivity() > 0.0);
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<std::size_t> pick(0, d->size() - 1);
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = pick(rng);
        const auto rec = hermitian_reconstruction(wt.unitary(n));
        for (int c = 0; c < 6; ++c) CHECK(std::abs(rec[c] - wt.omega().at(n)[c]) <= 1e-10);
    }

    FormField w4 = wt.omega();
    for (auto& c : w4.coeffs) c *= 4.0;
    const HermitianForm scaled(Jt, w4);
    for (std::size_t n : {std::size_t{0}, k, d->size() - 1}) {
        const auto rec = hermitian_reconstruction(scaled.unitary(n));
        for (int c = 0; c < 6; ++c) CHECK(std::abs(rec[c] - w4.at(n)[c]) <= 1e-10);
        // Σ_a |α^a|² is unitarily invariant and scales with the form.
        double s1 = 0.0, s4 = 0.0;
        for (int a = 0; a < 2; ++a)
            for (int c = 0; c < 4; ++c) {
                s1 += std::norm(wt.unitary(n).coframe[a][c]);
                s4 += std::norm(scaled.unitary(n).coframe[a][c]);
            }
        CHECK(s4 == doctest::Approx(4.0 * s1).epsilon(1e-10));
    }
    CHECK_THROWS(make_hermitian_form(Jt, "bogus"));
}

TEST_CASE("frame duality") {
    const auto d = box(9);
    const auto J = make_structure(ModelSpec::twisted(0.5), d);
    const PointFrame& f = J.frame(d->size() / 3);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            Complex pair = 0.0, conj_pair = 0.0;
            for (int c = 0; c < 4; ++c) {
                pair += f.coframe[a][c] * f.dual[b][c];
                conj_pair += std::conj(f.coframe[a][c]) * f.dual[b][c];
            }
            CHECK(std::abs(pair - (a == b ? 1.0 : 0.0)) <= 1e-12);
            CHECK(std::abs(conj_pair) <= 1e-12);
        }
}
