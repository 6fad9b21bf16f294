#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ampere/potential.hpp"

namespace ampere {

namespace {

/// Multilinear interpolation specialised for the sweep: clamps to the box.
class Interpolator {
public:
    explicit Interpolator(const GridDomain& d) {
        for (int a = 0; a < 4; ++a) {
            lo_[a] = d.bbox()[a].lo;
            inv_h_[a] = 1.0 / d.spacing()[a];
            top_[a] = d.resolution()[a] - 1;
            stride_[a] = d.strides()[a];
        }
    }

    double operator()(const double* u, const double* x) const {
        std::size_t base = 0;
        double f[4];
        for (int a = 0; a < 4; ++a) {
            double t = (x[a] - lo_[a]) * inv_h_[a];
            t = std::clamp(t, 0.0, double(top_[a]));
            int i = static_cast<int>(t);
            if (i == top_[a]) --i;
            f[a] = t - i;
            base += static_cast<std::size_t>(i) * stride_[a];
        }
        const std::size_t s0 = stride_[0], s1 = stride_[1], s2 = stride_[2];
        double c3[8];
        for (int q = 0; q < 8; ++q) {
            const std::size_t k = base + ((q & 1) ? s0 : 0) + ((q & 2) ? s1 : 0) + ((q & 4) ? s2 : 0);
            c3[q] = u[k] + f[3] * (u[k + 1] - u[k]);
        }
        double c2[4];
        for (int q = 0; q < 4; ++q) c2[q] = c3[q] + f[2] * (c3[q + 4] - c3[q]);
        const double c10 = c2[0] + f[1] * (c2[2] - c2[0]);
        const double c11 = c2[1] + f[1] * (c2[3] - c2[1]);
        return c10 + f[0] * (c11 - c10);
    }

private:
    double lo_[4]{}, inv_h_[4]{};
    int top_[4]{};
    std::size_t stride_[4]{};
};

}  // namespace

std::vector<Point4> envelope_directions(int m, std::uint64_t seed) {
    if (m < 1) throw Error("need at least one direction");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 2.0 * std::numbers::pi);
    const double rot = U(rng);
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    std::vector<Point4> dirs(m);
    for (int i = 0; i < m; ++i) {
        // Fibonacci point on S² = CP¹, lifted by the Hopf section.
        const double c = 1.0 - (2.0 * i + 1.0) / m;
        const double theta = std::acos(c);
        const double phi = rot + golden * i;
        dirs[i] = {std::cos(0.5 * theta), 0.0, std::sin(0.5 * theta) * std::cos(phi),
                   std::sin(0.5 * theta) * std::sin(phi)};
    }
    return dirs;
}

EnvelopeResult psh_envelope(const AlmostComplexStructure& J, const ScalarField& obstacle, const Mask& omega,
                            const EnvelopeParams& params) {
    const GridDomain& d = *obstacle.domain;
    if (!d.same_shape(*J.domain()) || omega.size() != d.size()) throw Error("shape mismatch");
    for (double x : obstacle.values)
        if (!std::isfinite(x)) throw Error("obstacle must be finite");

    const double r = params.stencil_radius * d.max_spacing();
    const auto dirs = envelope_directions(params.directions, params.seed);
    const std::size_t m = dirs.size();
    const Interpolator interp(d);

    ScalarField level = params.level;
    if (!level.domain) {
        level = ScalarField(obstacle.domain, 0.5);
        for (std::size_t k = 0; k < d.size(); ++k)
            if (omega[k]) level[k] = -0.5;
    } else if (!level.domain->same_shape(d)) {
        throw Error("shape mismatch");
    }

    // Red nodes first, then black; lexicographic inside each colour.
    std::vector<std::size_t> order;
    for (int colour = 0; colour < 2; ++colour)
        for (std::size_t k = 0; k < d.size(); ++k) {
            if (!omega[k]) continue;
            const Index4 i = d.unflat(k);
            if (((i[0] + i[1] + i[2] + i[3]) & 1) == colour) order.push_back(k);
        }

    // Arm directions rξ, rJξ per node and direction.
    std::vector<Point4> pts(order.size());
    for (std::size_t n = 0; n < order.size(); ++n) pts[n] = d.point(order[n]);
    auto arms = [&](std::size_t n, std::size_t q, Point4& a, Point4& b) {
        const double* Jk = J.J_data(order[n]);
        for (int i = 0; i < 4; ++i) {
            double jx = 0.0;
            for (int j = 0; j < 4; ++j) jx += Jk[4 * i + j] * dirs[q][j];
            a[i] = r * dirs[q][i];
            b[i] = r * jx;
        }
    };

    // Boundary value at a cut: obstacle at the nearest node outside Ω among
    // the corners of the cell holding the crossing.
    auto fixed_value = [&](const Point4& y) {
        Index4 base;
        for (int a = 0; a < 4; ++a) {
            const double t = std::clamp((y[a] - d.bbox()[a].lo) / d.spacing()[a], 0.0,
                                        double(d.resolution()[a] - 1));
            base[a] = std::min(static_cast<int>(t), d.resolution()[a] - 2);
        }
        double best = std::numeric_limits<double>::infinity(), g = interpolate(obstacle, y);
        for (unsigned c = 0; c < 16; ++c) {
            Index4 i = base;
            for (int a = 0; a < 4; ++a) i[a] += (c >> a) & 1u;
            const std::size_t k = d.flat(i);
            if (omega[k]) continue;
            const Point4 p = d.point(i);
            double dist = 0.0;
            for (int a = 0; a < 4; ++a) dist += (p[a] - y[a]) * (p[a] - y[a]);
            if (dist < best) {
                best = dist;
                g = obstacle[k];
            }
        }
        return g;
    };

    // Arms leaving Ω: length fraction and boundary value, per (node, dir, arm).
    struct Cut {
        std::array<double, 4> t;  ///< fraction of the full arm, order +a, −a, +b, −b
        std::array<double, 4> g;  ///< obstacle at the cut (NaN for an uncut arm)
    };
    std::vector<std::int32_t> cut_index(order.size(), -1);
    std::vector<Cut> cuts;
    for (std::size_t n = 0; n < order.size(); ++n) {
        std::vector<Cut> local(m);
        bool any = false;
        for (std::size_t q = 0; q < m; ++q) {
            Point4 a, b;
            arms(n, q, a, b);
            for (int w = 0; w < 4; ++w) {
                const Point4& dir = (w < 2) ? a : b;
                const double sgn = (w % 2 == 0) ? 1.0 : -1.0;
                auto at = [&](double t) {
                    Point4 y;
                    for (int i = 0; i < 4; ++i) y[i] = pts[n][i] + sgn * t * dir[i];
                    return y;
                };
                local[q].t[w] = 1.0;
                local[q].g[w] = std::numeric_limits<double>::quiet_NaN();
                constexpr int kSteps = 12;
                double prev = 0.0;
                for (int s = 1; s <= kSteps; ++s) {
                    const double t = double(s) / kSteps;
                    const Point4 y = at(t);
                    if (interp(level.values.data(), y.data()) >= 0.0) {
                        double lo = prev, hi = t;
                        for (int it = 0; it < 40; ++it) {
                            const double mid = 0.5 * (lo + hi);
                            const Point4 ym = at(mid);
                            (interp(level.values.data(), ym.data()) >= 0.0 ? hi : lo) = mid;
                        }
                        const double tc = std::max(0.5 * (lo + hi), 1e-6);
                        const Point4 yc = at(tc);
                        local[q].t[w] = tc;
                        local[q].g[w] = fixed_value(yc);
                        any = true;
                        break;
                    }
                    prev = t;
                }
            }
        }
        if (any) {
            cut_index[n] = static_cast<std::int32_t>(cuts.size() / m);
            cuts.insert(cuts.end(), local.begin(), local.end());
        }
    }

    EnvelopeResult res;
    res.u = obstacle;
    double* u = res.u.values.data();

    auto sub_mean = [&](std::size_t n) {
        const Point4& x = pts[n];
        const Cut* cut = cut_index[n] >= 0 ? &cuts[static_cast<std::size_t>(cut_index[n]) * m] : nullptr;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < m; ++q) {
            Point4 a, b;
            arms(n, q, a, b);
            double val[4];
            double len[4] = {1.0, 1.0, 1.0, 1.0};
            for (int w = 0; w < 4; ++w) {
                if (cut && !std::isnan(cut[q].g[w])) {
                    val[w] = cut[q].g[w];
                    len[w] = cut[q].t[w];
                    continue;
                }
                const Point4& dir = (w < 2) ? a : b;
                const double sgn = (w % 2 == 0) ? 1.0 : -1.0;
                double y[4];
                for (int i = 0; i < 4; ++i) y[i] = x[i] + sgn * dir[i];
                val[w] = interp(u, y);
            }
            double mean;
            if (!cut) {
                mean = 0.25 * (val[0] + val[1] + val[2] + val[3]);
            } else {
                // Linear interpolant of each pair at x, pairs weighted by 1/(t₊t₋).
                const double la = (len[1] * val[0] + len[0] * val[1]) / (len[0] + len[1]);
                const double lb = (len[3] * val[2] + len[2] * val[3]) / (len[2] + len[3]);
                const double wa = 1.0 / (len[0] * len[1]), wb = 1.0 / (len[2] * len[3]);
                mean = (wa * la + wb * lb) / (wa + wb);
            }
            best = std::min(best, mean);
        }
        return best;
    };

    for (int sweep = 0; sweep < params.max_sweeps; ++sweep) {
        double change = 0.0;
        for (std::size_t n = 0; n < order.size(); ++n) {
            const std::size_t k = order[n];
            const double nv = std::min(obstacle[k], sub_mean(n));
            change = std::max(change, std::abs(nv - u[k]));
            u[k] = nv;
        }
        res.sweep_updates.push_back(change);
        res.iterations = sweep + 1;
        res.final_update = change;
        if (change <= params.stop_tol) {
            res.converged = true;
            break;
        }
    }

    double defect = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < order.size(); ++n) defect = std::min(defect, sub_mean(n) - u[order[n]]);
    res.psh_defect = order.empty() ? 0.0 : defect;
    return res;
}

EnvelopeResult extremal_function(const AlmostComplexStructure& J, const Mask& E, const Mask& omega,
                                 const EnvelopeParams& params) {
    const DomainPtr& dom = J.domain();
    if (E.size() != dom->size() || omega.size() != dom->size()) throw Error("shape mismatch");
    ScalarField obstacle(dom, 0.0);
    for (std::size_t k = 0; k < dom->size(); ++k)
        if (E[k] && omega[k]) obstacle[k] = -1.0;
    // E is a second boundary: its nodes stay at −1 and arms stop at ∂E.
    const Mask update = mask_minus(omega, E);
    EnvelopeParams p = params;
    p.level = ScalarField(dom, 0.0);
    for (std::size_t k = 0; k < dom->size(); ++k) {
        const double outer = params.level.domain ? params.level[k] : (omega[k] ? -0.5 : 0.5);
        p.level[k] = (E[k] && omega[k]) ? 0.5 : outer;
    }
    EnvelopeResult res = psh_envelope(J, obstacle, update, p);
    res.u = usc_regularize(res.u, -1.0, &omega);
    return res;
}

}  // namespace ampere
