#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "ampere/field_io.hpp"
#include "ampere/grid.hpp"
#include "oracles.hpp"

using namespace ampere;

namespace {

Box4 cube(double a) {
    Box4 b;
    for (auto& i : b) i = {-a, a};
    return b;
}

double abs_z2(const Point4& x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]; }

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("ampere_test_" + name)).string();
}

}  // namespace

TEST_CASE("spacing and size") {
    const auto d = GridDomain::build(cube(1.0), {17, 17, 17, 17});
    for (int a = 0; a < 4; ++a) CHECK(d->spacing()[a] == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(d->size() == 17u * 17u * 17u * 17u);
    CHECK(d->flat(d->unflat(12345)) == 12345u);
    CHECK(d->strides()[3] == 1u);
}

TEST_CASE("defining function bounds the interior") {
    const auto d = GridDomain::build(cube(1.2), {13, 13, 13, 13}, [](const Point4& x) { return abs_z2(x) - 1.0; });
    std::size_t inside = 0;
    for (std::size_t k = 0; k < d->size(); ++k)
        if (d->interior_mask()[k]) {
            CHECK(abs_z2(d->point(k)) < 1.0);
            ++inside;
        }
    CHECK(inside > 0);
}

TEST_CASE("degenerate resolutions are rejected") {
    CHECK_THROWS_WITH(GridDomain::build(cube(1.0), {3, 9, 9, 9}), doctest::Contains("insufficient stencil margin"));
    Box4 flat = cube(1.0);
    flat[2] = {0.0, 0.0};
    CHECK_THROWS(GridDomain::build(flat, {9, 9, 9, 9}));
}

TEST_CASE("integrate constant and quadratic densities") {
    const auto d = GridDomain::build(cube(1.0), {9, 9, 9, 9});
    MeasureField m(d);
    std::fill(m.density.begin(), m.density.end(), 1.0);
    std::fill(m.valid.begin(), m.valid.end(), 1);
    const Mask all(d->size(), 1);
    // Node sum: 9⁴ nodes of volume h⁴ = (1/4)⁴.
    CHECK(integrate(m, all) == doctest::Approx(std::pow(9 * 0.25, 4)).epsilon(1e-14));

    Box4 half = cube(1.0);
    half[0] = {0.01, 1.0};
    Mask lo = d->box_mask(half), hi = mask_not(lo);
    CHECK(integrate(m, lo) + integrate(m, hi) == doctest::Approx(integrate(m, all)).epsilon(1e-14));

    std::fill(m.density.begin(), m.density.end(), 8.0);
    CHECK(integrate(m, all) == doctest::Approx(8.0 * std::pow(9 * 0.25, 4)).epsilon(1e-14));

    const auto other = GridDomain::build(cube(1.0), {11, 11, 11, 11});
    CHECK_THROWS(integrate(m, Mask(other->size(), 1)));
}

TEST_CASE("pairwise sum is order-deterministic") {
    std::vector<double> xs(1001);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-1, 1);
    for (auto& x : xs) x = U(rng);
    const double a = pairwise_sum(xs), b = pairwise_sum(xs);
    CHECK(a == b);
    double naive = 0.0;
    for (double x : xs) naive += x;
    CHECK(a == doctest::Approx(naive).epsilon(1e-12));
}

TEST_CASE("norms") {
    const auto d = GridDomain::build(cube(1.0), {9, 9, 9, 9});
    const Mask all(d->size(), 1);
    const double vol = d->size() * d->cell_volume();
    ScalarField c(d, -3.0);
    CHECK(norm(c, all, NormKind::Sup) == 3.0);
    CHECK(norm(c, all, NormKind::L2) == doctest::Approx(3.0 * std::sqrt(vol)).epsilon(1e-14));
    CHECK(norm(c, all, NormKind::L1) == doctest::Approx(3.0 * vol).epsilon(1e-14));

    const Mask inner = d->margin_mask(1);
    const double ivol = mask_count(inner) * d->cell_volume();
    const ScalarField x1 = ScalarField::sample(d, [](const Point4& x) { return x[0]; });
    const double l2 = norm(x1, inner, NormKind::L2), w = norm(x1, inner, NormKind::W12);
    CHECK(w * w == doctest::Approx(l2 * l2 + ivol).epsilon(1e-13));

    const ScalarField q = ScalarField::sample(d, abs_z2);
    CHECK(norm(q, inner, NormKind::W12) == doctest::Approx(oracle::lattice_w12_abs_z2(9, -1.0, 1.0)).epsilon(1e-10));
    CHECK_THROWS_WITH(norm(q, all, NormKind::W12), doctest::Contains("grid boundary"));

    CHECK(parse_norm_kind("W12") == NormKind::W12);
    CHECK_THROWS(parse_norm_kind("H3"));
}

TEST_CASE("negative infinity in norms") {
    const auto d = GridDomain::build(cube(1.0), {7, 7, 7, 7});
    ScalarField u(d, 1.0);
    u[d->flat({3, 3, 3, 3})] = NEG_INF;
    const Mask all(d->size(), 1);
    CHECK(std::isinf(norm(u, all, NormKind::L1)));
    CHECK_THROWS(norm(u, all, NormKind::L2));
    CHECK_NOTHROW(validate_scalar(u));
    u[0] = NEG_INF;
    CHECK_THROWS(validate_scalar(u));
}

TEST_CASE("masks") {
    const auto d = GridDomain::build(cube(1.0), {9, 9, 9, 9});
    const Mask b = ball_mask(*d, {0, 0, 0, 0}, 0.5, true);
    const Mask o = ball_mask(*d, {0, 0, 0, 0}, 0.5, false);
    CHECK(mask_count(b) > mask_count(o));  // the lattice has nodes at distance exactly 0.5
    CHECK(mask_count(mask_minus(b, o)) == mask_count(b) - mask_count(o));
    CHECK(mask_count(mask_or(b, mask_not(b))) == d->size());
    CHECK(mask_count(mask_and(b, mask_not(b))) == 0u);
    const Mask e = d->erode(Mask(d->size(), 1), 2);
    CHECK(mask_count(e) == 5u * 5u * 5u * 5u);
}

TEST_CASE("interpolation is exact on multilinear functions") {
    const auto d = GridDomain::build(cube(1.0), {9, 9, 9, 9});
    auto f = [](const Point4& x) { return 1.0 + x[0] - 2.0 * x[1] * x[2] + 0.5 * x[0] * x[1] * x[2] * x[3]; };
    const ScalarField u = ScalarField::sample(d, f);
    for (const Point4& p : {Point4{0.11, -0.37, 0.52, 0.9}, Point4{-0.99, 0.0, 0.3, -0.01}})
        CHECK(interpolate(u, p) == doctest::Approx(f(p)).epsilon(1e-13));
}

TEST_CASE("field files roundtrip bit for bit") {
    const auto d = GridDomain::build(cube(1.0), {7, 7, 7, 7});
    ScalarField u(d);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> N;
    for (auto& v : u.values) v = N(rng);
    u[d->flat({3, 3, 3, 3})] = NEG_INF;
    const std::string p = temp_path("scalar.field");
    save_field(u, p);
    const ScalarField back = load_scalar(p);
    REQUIRE(back.size() == u.size());
    for (std::size_t k = 0; k < u.size(); ++k) CHECK(std::memcmp(&back.values[k], &u.values[k], sizeof(double)) == 0);
    CHECK(back.domain->resolution() == d->resolution());

    MeasureField m(d);
    for (std::size_t k = 0; k < d->size(); ++k) {
        m.density[k] = N(rng);
        m.valid[k] = k % 3 != 0;
    }
    const std::string pm = temp_path("measure.field");
    save_field(m, pm);
    const MeasureField mb = load_measure(pm, d);
    CHECK(mb.density == m.density);
    CHECK(mb.valid == m.valid);

    const auto other = GridDomain::build(cube(1.0), {9, 9, 9, 9});
    CHECK_THROWS_WITH(load_scalar(p, other), doctest::Contains("shape mismatch"));

    {
        std::ofstream bad(p, std::ios::binary | std::ios::trunc);
        bad << "not a header\n";
    }
    CHECK_THROWS_WITH(load_scalar(p), doctest::Contains("bad header"));
    std::filesystem::remove(p);
    std::filesystem::remove(pm);
    std::filesystem::remove(pm + ".mask");
}
