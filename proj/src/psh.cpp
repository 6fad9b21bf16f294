#include "ampere/psh.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>

namespace ampere {

namespace {

constexpr Complex kI(0.0, 1.0);

double sup_finite(const ScalarField& u) {
    double m = 0.0;
    for (double x : u.values)
        if (std::isfinite(x)) m = std::max(m, std::abs(x));
    return m;
}

/// J at an arbitrary point: closed form when available, else multilinear
/// interpolation of the tabulated tensor.
Mat4 structure_at(const AlmostComplexStructure& J, const Point4& x) {
    if (J.model()) return model_J(*J.model(), x);
    const GridDomain& d = *J.domain();
    Mat4 r{};
    std::size_t base = 0;
    double frac[4];
    for (int a = 0; a < 4; ++a) {
        const double t = std::clamp((x[a] - d.bbox()[a].lo) / d.spacing()[a], 0.0, double(d.resolution()[a] - 1));
        const int i = std::min(static_cast<int>(t), d.resolution()[a] - 2);
        frac[a] = t - i;
        base += static_cast<std::size_t>(i) * d.strides()[a];
    }
    for (unsigned corner = 0; corner < 16; ++corner) {
        double w = 1.0;
        std::size_t k = base;
        for (int a = 0; a < 4; ++a) {
            if (corner & (1u << a)) {
                w *= frac[a];
                k += d.strides()[a];
            } else {
                w *= 1.0 - frac[a];
            }
        }
        if (w == 0.0) continue;
        const double* Jk = J.J_data(k);
        for (int e = 0; e < 16; ++e) r[e] += w * Jk[e];
    }
    return r;
}

Point4 mat_vec(const Mat4& J, const Point4& v) {
    Point4 r{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r[i] += J[4 * i + j] * v[j];
    return r;
}

bool inside(const GridDomain& d, const Point4& x) {
    for (int a = 0; a < 4; ++a)
        if (!(x[a] >= d.bbox()[a].lo - 1e-12 && x[a] <= d.bbox()[a].hi + 1e-12)) return false;
    return true;
}

}  // namespace

double default_psh_tol(const ScalarField& u) { return 3.0 * u.domain->max_spacing() * (1.0 + sup_finite(u)); }

PshReport is_psh(const AlmostComplexStructure& J, const HermitianForm& omega, const ScalarField& u, double tol,
                 const Mask* region) {
    const GridDomain& d = *u.domain;
    PshReport rep;
    rep.tol = tol < 0.0 ? default_psh_tol(u) : tol;
    rep.min_eigenvalue_field = ScalarField(u.domain, 0.0);
    rep.evaluated.assign(d.size(), 0);
    const Mask& reg = region ? *region : d.interior_mask();
    const FormField h = i_ddbar(J, u);
    rep.min_eigenvalue = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < d.size(); ++k) {
        if (!reg[k] || !h.valid[k]) continue;
        const auto H = hermitian_matrix(omega.unitary(k), h.at(k));
        const double a = H[0].real(), c = H[3].real();
        const Complex b = 0.5 * (H[1] + std::conj(H[2]));
        const double lam = 0.5 * (0.5 * (a + c) - std::sqrt(0.25 * (a - c) * (a - c) + std::norm(b)));
        rep.min_eigenvalue_field[k] = lam;
        rep.evaluated[k] = 1;
        rep.min_eigenvalue = std::min(rep.min_eigenvalue, lam);
        if (lam < -rep.tol) rep.violating_points.push_back(d.unflat(k));
    }
    rep.is_psh = rep.violating_points.empty();
    return rep;
}

double disc_mean_defect(const AlmostComplexStructure& J, const ScalarField& u, double radius, int count,
                        std::uint64_t seed) {
    const GridDomain& d = *u.domain;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    double worst = std::numeric_limits<double>::infinity();
    int done = 0;
    for (int attempt = 0; done < count && attempt < 100 * count; ++attempt) {
        Point4 x;
        for (int a = 0; a < 4; ++a) {
            std::uniform_real_distribution<double> U(d.bbox()[a].lo, d.bbox()[a].hi);
            x[a] = U(rng);
        }
        Point4 xi;
        double n2 = 0.0;
        for (auto& c : xi) {
            c = g(rng);
            n2 += c * c;
        }
        for (auto& c : xi) c /= std::sqrt(n2);
        const Point4 jxi = mat_vec(structure_at(J, x), xi);
        constexpr int kPts = 16;
        double mean = 0.0;
        bool ok = true;
        for (int m = 0; m < kPts && ok; ++m) {
            const double phi = 2.0 * std::numbers::pi * m / kPts;
            Point4 y;
            for (int a = 0; a < 4; ++a) y[a] = x[a] + radius * (std::cos(phi) * xi[a] + std::sin(phi) * jxi[a]);
            ok = inside(d, y);
            if (ok) mean += interpolate(u, y) / kPts;
        }
        if (!ok) continue;
        ++done;
        worst = std::min(worst, mean - interpolate(u, x));
    }
    if (done == 0) throw Error("no disc fits in the box");
    return worst;
}

ScalarField mollify(const ScalarField& u, double eps) {
    if (!(eps > 0.0)) throw Error("mollifier width must be positive");
    const GridDomain& d = *u.domain;
    std::vector<double> cur = u.values, next(u.size());
    for (int a = 0; a < 4; ++a) {
        const double h = d.spacing()[a];
        const int R = static_cast<int>(std::ceil(4.0 * eps / h));
        std::vector<double> w(2 * R + 1);
        double tot = 0.0;
        for (int j = -R; j <= R; ++j) {
            const double x = j * h;
            w[j + R] = std::abs(x) <= 4.0 * eps ? std::exp(-0.5 * x * x / (eps * eps)) : 0.0;
            tot += w[j + R];
        }
        for (auto& x : w) x /= tot;
        const int n = d.resolution()[a];
        const std::size_t st = d.strides()[a];
        const auto N = static_cast<std::ptrdiff_t>(d.size());
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t kk = 0; kk < N; ++kk) {
            const auto k = static_cast<std::size_t>(kk);
            const int i = d.unflat(k)[a];
            const std::size_t row = k - static_cast<std::size_t>(i) * st;
            double s = 0.0;
            for (int j = -R; j <= R; ++j) {
                if (w[j + R] == 0.0) continue;
                const int m = std::clamp(i + j, 0, n - 1);
                s += w[j + R] * cur[row + static_cast<std::size_t>(m) * st];
            }
            next[k] = s;
        }
        cur.swap(next);
    }
    ScalarField r(u.domain, std::move(cur));
    for (std::size_t k = 0; k < r.size(); ++k) {
        const Point4 x = d.point(k);
        r[k] += eps * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]);
    }
    return r;
}

ScalarField regularize(const AlmostComplexStructure& J, const HermitianForm& omega, const ScalarField& u, double eps) {
    if (!is_psh(J, omega, u).is_psh) throw Error("input not psh");
    return mollify(u, eps);
}

ScalarField usc_regularize(const ScalarField& u, double tol, const Mask* region) {
    const GridDomain& d = *u.domain;
    if (tol < 0.0) tol = 0.5 * d.max_spacing() * (1.0 + sup_finite(u));
    std::vector<double> cur = u.values, next(u.size());
    const auto N = static_cast<std::ptrdiff_t>(d.size());
    if (region && region->size() != d.size()) throw Error("shape mismatch");
    auto in = [&](std::size_t k) { return !region || (*region)[k]; };

    // Max over the 3⁴ neighbourhood excluding the node itself.
    auto neighbour_max = [&](std::size_t k, const Index4& i) {
        double m = NEG_INF;
        for (int o = 0; o < 81; ++o) {
            if (o == 40) continue;
            int rem = o;
            std::ptrdiff_t off = 0;
            bool ok = true;
            for (int a = 3; a >= 0; --a) {
                const int s = rem % 3 - 1;
                rem /= 3;
                const int j = i[a] + s;
                if (j < 0 || j >= d.resolution()[a]) ok = false;
                off += s * static_cast<std::ptrdiff_t>(d.strides()[a]);
            }
            const auto q = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(k) + off);
            if (ok && in(q)) m = std::max(m, cur[q]);
        }
        return m;
    };

    for (int iter = 0; iter < 10000; ++iter) {
        bool changed = false;
        // Spike clip.
#pragma omp parallel for schedule(static) reduction(|| : changed)
        for (std::ptrdiff_t kk = 0; kk < N; ++kk) {
            const auto k = static_cast<std::size_t>(kk);
            const Index4 i = d.unflat(k);
            next[k] = cur[k];
            if (!in(k)) continue;
            // Cheap rejection: some axis neighbour already within tol.
            bool candidate = true;
            for (int a = 0; a < 4 && candidate; ++a) {
                if (i[a] > 0 && in(k - d.strides()[a]) && cur[k - d.strides()[a]] + tol >= cur[k]) candidate = false;
                if (i[a] < d.resolution()[a] - 1 && in(k + d.strides()[a]) && cur[k + d.strides()[a]] + tol >= cur[k])
                    candidate = false;
            }
            if (!candidate) continue;
            const double cap = neighbour_max(k, i) + tol;
            if (cur[k] > cap) {
                next[k] = cap;
                changed = true;
            }
        }
        cur.swap(next);
        // Dip fill.
#pragma omp parallel for schedule(static) reduction(|| : changed)
        for (std::ptrdiff_t kk = 0; kk < N; ++kk) {
            const auto k = static_cast<std::size_t>(kk);
            const Index4 i = d.unflat(k);
            double floor = NEG_INF;
            for (int a = 0; a < 4; ++a) {
                if (i[a] == 0 || i[a] == d.resolution()[a] - 1) continue;
                if (!in(k - d.strides()[a]) || !in(k + d.strides()[a])) continue;
                floor = std::max(floor, std::min(cur[k - d.strides()[a]], cur[k + d.strides()[a]]) - tol);
            }
            next[k] = cur[k];
            if (in(k) && floor > cur[k]) {
                next[k] = floor;
                changed = true;
            }
        }
        cur.swap(next);
        if (!changed) return ScalarField(u.domain, std::move(cur));
    }
    throw Error("usc regularisation did not settle");
}

// ---------------------------------------------------------------------------

double CurveSample::max_residual() const {
    double m = 0.0;
    for (double r : residual) m = std::max(m, r);
    return m;
}

void CurveSample::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path);
    out << "s,t,x1,x2,x3,x4,residual\n" << std::setprecision(17);
    for (std::size_t i = 0; i < s.size(); ++i)
        out << s[i] << ',' << t[i] << ',' << image[i][0] << ',' << image[i][1] << ',' << image[i][2] << ','
            << image[i][3] << ',' << residual[i] << '\n';
}

namespace {

void polar_nodes(double radius, int rings, int spokes, std::vector<double>& s, std::vector<double>& t) {
    s = {0.0};
    t = {0.0};
    for (int i = 1; i <= rings; ++i)
        for (int j = 0; j < spokes; ++j) {
            const double r = radius * i / rings, phi = 2.0 * std::numbers::pi * j / spokes;
            s.push_back(r * std::cos(phi));
            t.push_back(r * std::sin(phi));
        }
}

double residual_at(const Mat4& J, const Point4& ls, const Point4& lt) {
    const Point4 jls = mat_vec(J, ls);
    double r = 0.0;
    for (int a = 0; a < 4; ++a) r += (lt[a] - jls[a]) * (lt[a] - jls[a]);
    return std::sqrt(r);
}

using C2 = std::array<Complex, 2>;

C2 to_c2(const Point4& x) { return {Complex(x[0], x[1]), Complex(x[2], x[3])}; }
Point4 to_r4(const C2& z) { return {z[0].real(), z[0].imag(), z[1].real(), z[1].imag()}; }

/// C²-valued polynomial Σ c_ab w^a w̄^b, a + b ≤ deg, in the scaled variable w.
struct DiscPoly {
    int deg = 0;
    std::vector<std::pair<int, int>> exps;
    std::vector<C2> coef;

    explicit DiscPoly(int n) : deg(n) {
        for (int total = 0; total <= n; ++total)
            for (int b = 0; b <= total; ++b) exps.push_back({total - b, b});
        coef.assign(exps.size(), C2{});
    }

    /// Value, ∂_w and ∂_w̄ at w.
    void eval(Complex w, C2& v, C2& dw, C2& dwb) const {
        v = dw = dwb = C2{};
        const Complex wb = std::conj(w);
        for (std::size_t m = 0; m < exps.size(); ++m) {
            const auto [a, b] = exps[m];
            const Complex pa = std::pow(w, a), pb = std::pow(wb, b);
            const Complex mono = pa * pb;
            const Complex da = a > 0 ? double(a) * std::pow(w, a - 1) * pb : 0.0;
            const Complex db = b > 0 ? double(b) * pa * std::pow(wb, b - 1) : 0.0;
            for (int c = 0; c < 2; ++c) {
                v[c] += coef[m][c] * mono;
                dw[c] += coef[m][c] * da;
                dwb[c] += coef[m][c] * db;
            }
        }
    }
};

}  // namespace

CurveSample model_curve(const AlmostComplexStructure& J, Complex c, double radius, int rings, int spokes) {
    if (!J.model()) throw Error("model_curve needs a model structure");
    const GridDomain& d = *J.domain();
    CurveSample cs;
    polar_nodes(radius, rings, spokes, cs.s, cs.t);
    for (std::size_t i = 0; i < cs.s.size(); ++i) {
        const Point4 x = {cs.s[i], cs.t[i], c.real(), c.imag()};
        if (!inside(d, x)) throw Error("curve outside domain");
        cs.image.push_back(x);
        cs.residual.push_back(residual_at(model_J(*J.model(), x), {1, 0, 0, 0}, {0, 1, 0, 0}));
    }
    return cs;
}

CurveSample jholomorphic_disc(const AlmostComplexStructure& J, const Point4& p, const Point4& v, double r,
                              int max_iter) {
    const GridDomain& d = *J.domain();
    constexpr int kDeg = 10;
    CurveSample cs;
    polar_nodes(r, 12, 48, cs.s, cs.t);
    const std::size_t npts = cs.s.size();

    // Seed: the (1,0)-part in ζ of s·v + t·J(p)v, i.e. ζ·(v − iJ(p)v)/2.
    const C2 w1 = to_c2(v), w2 = to_c2(mat_vec(structure_at(J, p), v));
    const C2 pc = to_c2(p);
    DiscPoly seed(kDeg);
    seed.coef[0] = pc;
    for (int c = 0; c < 2; ++c) seed.coef[1][c] = 0.5 * r * (w1[c] - kI * w2[c]);  // exps[1] = (1,0)

    // Least-squares fit of the right-hand side on polynomials of degree kDeg−1.
    DiscPoly rhs_shape(kDeg - 1);
    Eigen::MatrixXcd A(npts, rhs_shape.exps.size());
    for (std::size_t i = 0; i < npts; ++i) {
        const Complex w = Complex(cs.s[i], cs.t[i]) / r;
        for (std::size_t m = 0; m < rhs_shape.exps.size(); ++m)
            A(i, m) = std::pow(w, rhs_shape.exps[m].first) * std::pow(std::conj(w), rhs_shape.exps[m].second);
    }
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> fit(A);

    DiscPoly lam = seed;
    std::vector<Point4> ls(npts), lt(npts);
    auto evaluate_all = [&](const DiscPoly& P, bool& in_box) {
        in_box = true;
        for (std::size_t i = 0; i < npts; ++i) {
            C2 val, dw, dwb;
            P.eval(Complex(cs.s[i], cs.t[i]) / r, val, dw, dwb);
            C2 s_der, t_der;
            for (int c = 0; c < 2; ++c) {
                s_der[c] = (dw[c] + dwb[c]) / r;
                t_der[c] = kI * (dw[c] - dwb[c]) / r;
            }
            cs.image.resize(npts);
            cs.image[i] = to_r4(val);
            ls[i] = to_r4(s_der);
            lt[i] = to_r4(t_der);
            for (double x : cs.image[i]) in_box = in_box && std::isfinite(x);
            in_box = in_box && inside(d, cs.image[i]);
        }
    };

    bool in_box = true;
    for (int it = 1; it <= max_iter; ++it) {
        evaluate_all(lam, in_box);
        if (!in_box) throw Error("disc iteration diverged");
        // ∂̄_w λ = r · ½ J₀ (J(λ) − J₀) λ_s.
        Eigen::MatrixXcd b(npts, 2);
        for (std::size_t i = 0; i < npts; ++i) {
            const Mat4 Jx = structure_at(J, cs.image[i]);
            const Point4 jl = mat_vec(Jx, ls[i]);
            const C2 jlc = to_c2(jl), lsc = to_c2(ls[i]);
            for (int c = 0; c < 2; ++c) b(i, c) = 0.5 * r * kI * (jlc[c] - kI * lsc[c]);
        }
        const Eigen::MatrixXcd coef = fit.solve(b);
        DiscPoly next = seed;
        for (std::size_t m = 0; m < rhs_shape.exps.size(); ++m) {
            const auto [a, bb] = rhs_shape.exps[m];
            const auto pos = std::find(next.exps.begin(), next.exps.end(), std::make_pair(a, bb + 1)) - next.exps.begin();
            for (int c = 0; c < 2; ++c) next.coef[pos][c] += coef(m, c) / double(bb + 1);
        }
        double change = 0.0, size = 0.0;
        for (std::size_t m = 0; m < next.coef.size(); ++m)
            for (int c = 0; c < 2; ++c) {
                change = std::max(change, std::abs(next.coef[m][c] - lam.coef[m][c]));
                size = std::max(size, std::abs(next.coef[m][c]));
            }
        lam = std::move(next);
        cs.iterations = it;
        if (!std::isfinite(change) || size > 1e6) throw Error("disc iteration diverged");
        if (change <= 1e-13 * (1.0 + size)) break;
    }
    evaluate_all(lam, in_box);
    if (!in_box) throw Error("disc iteration diverged");
    cs.residual.resize(npts);
    for (std::size_t i = 0; i < npts; ++i) cs.residual[i] = residual_at(structure_at(J, cs.image[i]), ls[i], lt[i]);
    if (cs.max_residual() > 1e-4) throw Error("disc iteration diverged");
    return cs;
}

}  // namespace ampere
