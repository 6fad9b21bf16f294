#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ampere/psh.hpp"

using namespace ampere;

namespace {

DomainPtr box(int n, double a = 1.0) {
    Box4 b;
    for (auto& i : b) i = {-a, a};
    return GridDomain::build(b, {n, n, n, n});
}

double abs_z2(const Point4& x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]; }

double sup_dist(const ScalarField& a, const ScalarField& b, const Mask& region) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        if (region[k]) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

}  // namespace

TEST_CASE("psh test on quadratics") {
    const auto d = box(9);
    const auto J = make_structure(ModelSpec::standard(), d);
    const HermitianForm om = make_hermitian_form(J);
    const PshReport r = is_psh(J, om, ScalarField::sample(d, abs_z2));
    CHECK(r.is_psh);
    CHECK(r.min_eigenvalue == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t k = 0; k < d->size(); ++k)
        if (r.evaluated[k]) CHECK(r.min_eigenvalue_field[k] == doctest::Approx(1.0).epsilon(1e-12));

    const PshReport neg = is_psh(J, om, ScalarField::sample(d, [](const Point4& x) { return -abs_z2(x); }), 1e-8);
    CHECK_FALSE(neg.is_psh);
    CHECK(neg.violating_points.size() == mask_count(neg.evaluated));

    const auto Jt = make_structure(ModelSpec::twisted(0.5), d);
    const PshReport t = is_psh(Jt, make_hermitian_form(Jt), ScalarField::sample(d, abs_z2));
    CHECK(t.is_psh);
    CHECK(t.min_eigenvalue > 0.0);
}

TEST_CASE("mollified log is psh in the integrable model") {
    const auto d = box(17);
    const auto J = make_structure(ModelSpec::standard(), d);
    const HermitianForm om = make_hermitian_form(J);
    const ScalarField u = ScalarField::sample(d, [](const Point4& x) {
        return std::max(0.5 * std::log((x[0] - 0.1) * (x[0] - 0.1) + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]), -3.0);
    });
    const ScalarField m = mollify(u, 0.15);
    const double h = d->max_spacing();
    Box4 inner;
    for (auto& i : inner) i = {-0.6, 0.6};
    const Mask region = mask_and(d->box_mask(inner), d->interior_mask());
    CHECK(is_psh(J, om, m, 3.0 * h, &region).is_psh);
}

TEST_CASE("sub-mean value along J-circles") {
    const auto d = box(17);
    for (double rho : {0.0, 0.5}) {
        const auto J = make_structure(rho == 0.0 ? ModelSpec::standard() : ModelSpec::twisted(rho), d);
        const double h = d->max_spacing();
        CHECK(disc_mean_defect(J, ScalarField::sample(d, abs_z2), 2.0 * h) >= -h * h);
        CHECK(disc_mean_defect(J, ScalarField::sample(d, [](const Point4& x) { return -abs_z2(x); }), 2.0 * h) < 0.0);
    }
}

TEST_CASE("regularisation") {
    const auto d = box(17);
    const auto J = make_structure(ModelSpec::standard(), d);
    const HermitianForm om = make_hermitian_form(J);
    Box4 inner;
    for (auto& i : inner) i = {-0.5, 0.5};
    const Mask region = d->box_mask(inner);

    const ScalarField q = ScalarField::sample(d, abs_z2);
    // Gaussian variance adds 4·eps², the eps·|x|² term at most eps on the region
    for (double eps : {0.2, 0.1}) CHECK(sup_dist(regularize(J, om, q, eps), q, region) <= 4.0 * eps * eps + eps + 1e-12);

    // u = max(Re z₁, 0): the 1-d Gaussian smoothing of max(s, 0) exceeds it by
    // at most σ/√(2π) (at s = 0), plus eps·|x|².
    const ScalarField u = ScalarField::sample(d, [](const Point4& x) { return std::max(x[0], 0.0); });
    ScalarField prev;
    for (double eps : {0.2, 0.1, 0.05}) {
        const ScalarField r = regularize(J, om, u, eps);
        const double bound = eps / std::sqrt(2.0 * 3.14159265358979) + eps * 1.0 + 1e-12;
        for (std::size_t k = 0; k < d->size(); ++k)
            if (region[k]) {
                CHECK(r[k] >= u[k] - 1e-12);
                CHECK(r[k] - u[k] <= bound);
            }
        if (!prev.values.empty())
            for (std::size_t k = 0; k < d->size(); ++k)
                if (region[k]) CHECK(r[k] <= prev[k] + 1e-12);
        prev = r;
        CHECK(is_psh(J, om, r, -1.0, &region).is_psh);
    }

    // small sup, curvature well below the default tolerance of 3h·(1 + 0.1)
    CHECK_THROWS_WITH(regularize(J, om, ScalarField::sample(d, [](const Point4& x) { return 0.1 * std::cos(10.0 * x[0]); }), 0.1),
                      doctest::Contains("input not psh"));
}

TEST_CASE("usc regularisation") {
    const auto d = box(9);
    const ScalarField c = ScalarField::sample(d, [](const Point4& x) { return x[0] * x[1] + 0.3 * x[2]; });
    const ScalarField same = usc_regularize(c);
    for (std::size_t k = 0; k < d->size(); ++k) CHECK(std::abs(same[k] - (c[k])) <= 1e-12);

    ScalarField spike = c;
    spike[d->flat({4, 4, 4, 4})] += 1.0;
    // The clip leaves at most the neighbourhood maximum plus tol.
    const ScalarField fixed = usc_regularize(spike, 1e-3);
    CHECK(fixed[d->flat({4, 4, 4, 4})] <= 0.25 * 0.25 + 0.3 * 0.25 + 1e-3 + 1e-12);

    // max of x¹ and −x¹ with the hyperplane x¹ = 0 pushed down: the dip is filled.
    ScalarField a = ScalarField::sample(d, [](const Point4& x) { return std::abs(x[0]); });
    ScalarField dip = a;
    for (std::size_t k = 0; k < d->size(); ++k)
        if (d->unflat(k)[0] == 4) dip[k] -= 0.5;
    const ScalarField f = usc_regularize(dip);
    for (std::size_t k = 0; k < d->size(); ++k) {
        CHECK(f[k] >= dip[k] - 1e-12);
        if (d->unflat(k)[0] != 4) CHECK(std::abs(f[k] - (dip[k])) <= 1e-12);
    }
    // idempotent
    const ScalarField g = usc_regularize(f);
    for (std::size_t k = 0; k < d->size(); ++k) CHECK(g[k] == f[k]);
}

TEST_CASE("model curves") {
    const auto d = box(9);
    const auto Js = make_structure(ModelSpec::standard(), d);
    const CurveSample s = model_curve(Js, Complex(0.0, 0.0));
    CHECK(s.max_residual() <= 1e-12);
    for (const Point4& p : s.image) {
        CHECK(p[2] == 0.0);
        CHECK(p[3] == 0.0);
    }
    const auto Jt = make_structure(ModelSpec::twisted(0.5), d);
    CHECK(model_curve(Jt, Complex(0.3, 0.0)).max_residual() <= 1e-8);
    CHECK_THROWS(model_curve(Jt, Complex(3.0, 0.0)));

    const std::string p = (std::filesystem::temp_directory_path() / "ampere_test_curve.csv").string();
    s.write_csv(p);
    std::ifstream in(p);
    std::string header;
    std::getline(in, header);
    CHECK(header == "s,t,x1,x2,x3,x4,residual");
    std::filesystem::remove(p);
}

TEST_CASE("J-holomorphic discs") {
    const auto d = box(9);
    const auto Js = make_structure(ModelSpec::standard(), d);
    const Point4 p{0.0, 0.0, 0.1, 0.0}, v{1.0, 0.0, 0.0, 0.0};
    const CurveSample s = jholomorphic_disc(Js, p, v, 0.2);
    CHECK(s.max_residual() <= 1e-12);
    for (const Point4& x : s.image) {
        CHECK(std::abs(x[2] - p[2]) <= 1e-12);
        CHECK(std::abs(x[3] - p[3]) <= 1e-12);
    }

    const auto J25 = make_structure(ModelSpec::twisted(0.25), d);
    const CurveSample t = jholomorphic_disc(J25, p, v, 0.1);
    CHECK(t.max_residual() <= 1e-4);
    CHECK(t.iterations > 0);
    // Transverse to the invariant planes z₂ = c the iteration has work to do.
    const CurveSample u = jholomorphic_disc(J25, {0.2, 0.0, 0.0, 0.0}, {0.0, 0.0, 1.0, 0.0}, 0.1);
    CHECK(u.max_residual() <= 1e-4);

    const auto J4 = make_structure(ModelSpec::twisted(4.0), d);
    CHECK_THROWS_WITH(jholomorphic_disc(J4, p, v, 0.5), doctest::Contains("diverged"));
}
