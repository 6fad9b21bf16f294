#include <algorithm>
#include <cmath>
#include <random>

#include "ampere/potential.hpp"

namespace ampere {

namespace {

/// Clamped quadratic candidates max(A(|x − c|² − R²), −1) with R the largest
/// distance from c to Ω, so that −1 ≤ c ≤ 0 on Ω, plus maxima of pairs.
std::vector<ScalarField> candidate_family(const GridDomain& d, DomainPtr dom, const Mask& E, const Mask& omega,
                                          int count, std::uint64_t seed) {
    std::vector<ScalarField> out;
    if (count <= 0) return out;
    Point4 centroid{};
    std::size_t ne = 0;
    for (std::size_t k = 0; k < d.size(); ++k)
        if (E[k]) {
            const Point4 x = d.point(k);
            for (int a = 0; a < 4; ++a) centroid[a] += x[a];
            ++ne;
        }
    if (ne == 0) return out;
    for (auto& c : centroid) c /= double(ne);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> U(0.2, 0.95);
    const double h = d.max_spacing();
    std::vector<ScalarField> base;
    const int singles = std::max(1, (count + 1) / 2);
    for (int c = 0; c < singles; ++c) {
        Point4 x0 = centroid;
        if (c > 0)
            for (auto& v : x0) v += h * g(rng);
        double R2 = 0.0, inner2 = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < d.size(); ++k) {
            if (!omega[k] && !E[k]) continue;
            const Point4 x = d.point(k);
            double s = 0.0;
            for (int a = 0; a < 4; ++a) s += (x[a] - x0[a]) * (x[a] - x0[a]);
            if (omega[k]) R2 = std::max(R2, s);
            if (!E[k]) inner2 = std::min(inner2, s);
        }
        // The clamp level sits between the centre and the nearest non-E node.
        const double rho2 = std::min(inner2, R2) * U(rng);
        const double A = 1.0 / std::max(R2 - rho2, 1e-12);
        base.push_back(ScalarField::sample(dom, [=](const Point4& x) {
            double s = 0.0;
            for (int a = 0; a < 4; ++a) s += (x[a] - x0[a]) * (x[a] - x0[a]);
            return std::max(A * (s - R2), -1.0);
        }));
    }
    out = base;
    for (std::size_t i = 0; i + 1 < base.size() && int(out.size()) < count; ++i)
        out.push_back(pointwise_max(base[i], base[i + 1]));
    if (int(out.size()) > count) out.resize(count);
    return out;
}


using Integrand = std::function<MeasureField(const ScalarField&)>;

CapacityEstimate capacity_impl(const AlmostComplexStructure& J, const Mask& E, const Mask& omega,
                               const CapacityParams& params, const Integrand& integrand) {
    const DomainPtr& dom = J.domain();
    const GridDomain& d = *dom;
    if (E.size() != d.size() || omega.size() != d.size()) throw Error("shape mismatch");
    CapacityEstimate est;
    est.resolution = d.resolution()[0];
    est.mask_E = mask_and(E, omega);
    est.mask_omega = omega;
    est.mask_region = inner_region(d, omega, params.erosion);
    {
        const Mask reach = fatten(d, est.mask_E, 3.0 * d.max_spacing() * (1.0 + 1e-9));
        for (std::size_t k = 0; k < d.size() && est.resolved; ++k)
            if (reach[k] && !est.mask_region[k]) est.resolved = false;
    }
    if (mask_count(est.mask_E) == 0) {
        est.extremal.u = ScalarField(dom, 0.0);
        est.extremal.converged = true;
        est.mass = MeasureField(dom);
        est.mass.valid.assign(d.size(), 1);
        return est;
    }
    est.extremal = extremal_function(J, est.mask_E, omega, params.envelope);
    est.mass = integrand(est.extremal.u);
    est.envelope_value = integrate(est.mass, est.mask_region);

    for (const ScalarField& c : candidate_family(d, dom, est.mask_E, omega, params.candidates, params.seed)) {
        const double v = integrate(integrand(c), est.mask_E);
        est.direct_lower_bound = std::max(est.direct_lower_bound, v);
    }
    if (est.envelope_value > 0.0)
        est.slack = std::max(0.0, est.direct_lower_bound / est.envelope_value - 1.0);
    return est;
}

}  // namespace

CapacityEstimate capacity(const AlmostComplexStructure& J, const Mask& E, const Mask& omega,
                          const CapacityParams& params) {
    return capacity_impl(J, E, omega, params, [&](const ScalarField& u) { return monge_ampere(J, u); });
}

CapacityEstimate cap_omega(const AlmostComplexStructure& J, const HermitianForm& omega_form, const Mask& E,
                           const Mask& omega, const CapacityParams& params) {
    return capacity_impl(J, E, omega, params, [&](const ScalarField& u) {
        return top_density(wedge(i_ddbar(J, u), omega_form.omega()));
    });
}

double boundary_shell_fraction(const CapacityEstimate& cap, double shell, bool absolute) {
    const GridDomain& d = *cap.mass.domain;
    // Nodes within `shell` of ∂E on either side.
    const Mask outside = mask_not(cap.mask_E);
    const Mask shell_mask = mask_or(mask_and(fatten(d, cap.mask_E, shell), outside),
                                    mask_and(fatten(d, outside, shell), cap.mask_E));
    MeasureField abs_mass = cap.mass;
    if (absolute)
        for (double& x : abs_mass.density) x = std::abs(x);
    const double total = integrate(abs_mass, cap.mask_region);
    return total > 0.0 ? integrate(abs_mass, mask_and(shell_mask, cap.mask_region)) / total : 0.0;
}

Mask fatten(const GridDomain& d, const Mask& E, double r) {
    if (E.size() != d.size()) throw Error("shape mismatch");
    Mask out = E;
    if (r <= 0.0) return out;
    // Offsets strictly inside the physical ball of radius r.
    Index4 reach;
    for (int a = 0; a < 4; ++a) reach[a] = static_cast<int>(std::ceil(r / d.spacing()[a]));
    std::vector<Index4> offsets;
    for (int a = -reach[0]; a <= reach[0]; ++a)
        for (int b = -reach[1]; b <= reach[1]; ++b)
            for (int c = -reach[2]; c <= reach[2]; ++c)
                for (int e = -reach[3]; e <= reach[3]; ++e) {
                    const double dx = a * d.spacing()[0], dy = b * d.spacing()[1], dz = c * d.spacing()[2],
                                 dw = e * d.spacing()[3];
                    if (dx * dx + dy * dy + dz * dz + dw * dw < r * r) offsets.push_back({a, b, c, e});
                }
    for (std::size_t k = 0; k < d.size(); ++k) {
        if (!E[k]) continue;
        const Index4 i = d.unflat(k);
        // Only nodes on the boundary of E can reach new nodes.
        bool edge = false;
        for (int a = 0; a < 4 && !edge; ++a)
            for (int s = -1; s <= 1; s += 2) {
                Index4 j = i;
                j[a] += s;
                if (d.contains(j) && !E[d.flat(j)]) edge = true;
            }
        if (!edge) continue;
        for (const Index4& o : offsets) {
            const Index4 j{i[0] + o[0], i[1] + o[1], i[2] + o[2], i[3] + o[3]};
            if (d.contains(j)) out[d.flat(j)] = 1;
        }
    }
    return out;
}

Mask inner_region(const GridDomain& d, const Mask& omega, int nodes) {
    const double r = nodes * d.max_spacing() * (1.0 + 1e-9);
    return mask_minus(omega, fatten(d, mask_not(omega), r));
}

namespace {

OuterCapacity outer_from_masks(const AlmostComplexStructure& J, const std::vector<Mask>& sets, const Mask& omega,
                               const std::vector<double>& radii, const CapacityParams& params) {
    OuterCapacity out;
    out.radii = radii;
    for (const Mask& s : sets) out.capacities.push_back(capacity(J, s, omega, params).envelope_value);
    // Least-squares line through (log r, log cap).
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(out.capacities[i] > 0.0)) continue;
        const double x = std::log(radii[i]), y = std::log(out.capacities[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n >= 2 && n * sxx - sx * sx > 0.0) {
        out.fit_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        const double icpt = (sy - out.fit_slope * sx) / n;
        out.extrapolated = std::exp(icpt + out.fit_slope * std::log(J.domain()->max_spacing()));
    } else if (!out.capacities.empty()) {
        out.extrapolated = out.capacities.back();
    }
    return out;
}

void check_radii(const GridDomain& d, const std::vector<double>& radii) {
    if (radii.empty()) throw Error("no radii");
    for (double r : radii)
        if (!(r >= d.min_spacing() * (1.0 - 1e-12))) throw Error("fattening under-resolved");
}

}  // namespace

OuterCapacity outer_capacity(const AlmostComplexStructure& J, const std::function<double(const Point4&)>& distance,
                             const Mask& omega, const std::vector<double>& radii, const CapacityParams& params) {
    const GridDomain& d = *J.domain();
    check_radii(d, radii);
    std::vector<double> dist(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) dist[k] = distance(d.point(k));
    std::vector<Mask> sets;
    for (double r : radii) {
        Mask s(d.size(), 0);
        for (std::size_t k = 0; k < d.size(); ++k) s[k] = omega[k] && dist[k] < r;
        sets.push_back(std::move(s));
    }
    return outer_from_masks(J, sets, omega, radii, params);
}

OuterCapacity outer_capacity(const AlmostComplexStructure& J, const Mask& E, const Mask& omega,
                             const std::vector<double>& radii, const CapacityParams& params) {
    const GridDomain& d = *J.domain();
    check_radii(d, radii);
    std::vector<Mask> sets;
    for (double r : radii) sets.push_back(mask_and(fatten(d, E, r), omega));
    return outer_from_masks(J, sets, omega, radii, params);
}

ComparisonSides comparison_check(const AlmostComplexStructure& J, const ScalarField& u, const ScalarField& v,
                                 const Mask& omega) {
    const GridDomain& d = *u.domain;
    if (!d.same_shape(*v.domain) || omega.size() != d.size()) throw Error("shape mismatch");
    const Mask inner = inner_region(d, omega, 3);
    const Mask band = mask_minus(omega, inner);
    for (std::size_t k = 0; k < d.size(); ++k)
        if (band[k] && u[k] < v[k] - 1e-12) throw Error("hypothesis fails");
    Mask set(d.size(), 0);
    for (std::size_t k = 0; k < d.size(); ++k) set[k] = inner[k] && u[k] < v[k] - 1e-12;

    const MeasureField mu = ddc_squared(J, u);
    const MeasureField mv = ddc_squared(J, v);
    ComparisonSides s;
    s.set_size = mask_count(set);
    s.lhs = integrate(mv, set);
    s.rhs = integrate(mu, set);
    MeasureField abs_sum(u.domain);
    for (std::size_t k = 0; k < d.size(); ++k) {
        abs_sum.density[k] = std::abs(mu.density[k]) + std::abs(mv.density[k]);
        abs_sum.valid[k] = mu.valid[k] && mv.valid[k];
    }
    s.total_mass = integrate(abs_sum, inner);
    return s;
}

std::vector<double> convergence_in_capacity(const AlmostComplexStructure& J, const std::vector<ScalarField>& family,
                                            const ScalarField& u, double t, const Mask& K, const Mask& omega,
                                            const CapacityParams& params) {
    const GridDomain& d = *u.domain;
    for (std::size_t i = 0; i < family.size(); ++i) {
        const ScalarField& next = (i + 1 < family.size()) ? family[i + 1] : u;
        for (std::size_t k = 0; k < d.size(); ++k)
            if (K[k] && family[i][k] < next[k] - 1e-12) throw Error("family not monotone");
    }
    std::vector<double> caps;
    for (const ScalarField& uk : family) {
        Mask set(d.size(), 0);
        for (std::size_t k = 0; k < d.size(); ++k) set[k] = K[k] && std::abs(u[k] - uk[k]) > t;
        caps.push_back(capacity(J, set, omega, params).envelope_value);
    }
    return caps;
}

}  // namespace ampere
