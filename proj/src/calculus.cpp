#include "ampere/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ampere/forms.hpp"

namespace ampere {

namespace {

constexpr Complex kI(0.0, 1.0);

/// For each component of a (k+1)-form: the terms sign · D_j f_I.
struct DTerm {
    int axis;
    int source;
    double sign;
};

const std::vector<std::vector<DTerm>>& d_table(int k) {
    static const auto tables = [] {
        std::array<std::vector<std::vector<DTerm>>, 4> t;
        for (int deg = 0; deg < 4; ++deg) {
            t[deg].resize(forms::binom(deg + 1));
            for (int c = 0; c < forms::binom(deg + 1); ++c) {
                const unsigned M = forms::basis_mask(deg + 1, c);
                for (int j = 0; j < 4; ++j) {
                    if (!(M & (1u << j))) continue;
                    const unsigned I = M & ~(1u << j);
                    t[deg][c].push_back({j, forms::basis_index(I), double(forms::wedge_sign(1u << j, I))});
                }
            }
        }
        return t;
    }();
    return tables[k];
}

void require_same_domain(const FormField& a, const FormField& b) {
    if (a.domain.get() != b.domain.get() && !a.domain->same_shape(*b.domain)) throw Error("mask shape mismatch");
}

void require_domain(const AlmostComplexStructure& J, const FormField& f) {
    if (J.domain().get() != f.domain.get() && !J.domain()->same_shape(*f.domain))
        throw Error("structure and field live on different grids");
}

void project_node(const AlmostComplexStructure& J, std::size_t node, int k, const Complex* in, int p, Complex* out) {
    switch (k) {
        case 0:
        case 4:
            out[0] = (p == k / 2) ? in[0] : Complex(0.0);
            return;
        case 1: {
            const Vec4c c = {in[0], in[1], in[2], in[3]};
            const Vec4c r = (p == 1) ? J.project10(node, c) : J.project01(node, c);
            std::copy(r.begin(), r.end(), out);
            return;
        }
        case 2: J.project2(node, in, p, out); return;
        default: J.project3(node, in, p, out); return;
    }
}

bool bidegree_exists(int p, int q) { return p >= 0 && q >= 0 && p <= 2 && q <= 2; }

FormField zero_form(const DomainPtr& d, int k, int p, int q, const Mask& valid) {
    FormField z(d, k, std::make_pair(p, q));
    z.valid = valid;
    return z;
}

/// Projection of d f onto the bidegree shifted by (dp, dq), times `scale`.
FormField d_part(const AlmostComplexStructure& J, const FormField& f, int dp, int dq, double scale) {
    if (!f.bidegree) throw Error("mixed-bidegree input");
    const auto [p, q] = *f.bidegree;
    const FormField df = exterior_d(f);
    if (!bidegree_exists(p + dp, q + dq)) return zero_form(f.domain, f.degree + 1, p + dp, q + dq, df.valid);
    FormField r = project(J, df, p + dp, q + dq);
    if (scale != 1.0)
        for (auto& c : r.coeffs) c *= scale;
    return r;
}

FormField first_derivative(const ScalarField& u, bool holomorphic, const AlmostComplexStructure& J) {
    FormField f = scalar_form(u);
    f.bidegree = std::make_pair(0, 0);
    return holomorphic ? del(J, f) : del_bar(J, f);
}

MeasureField density_of_sum(std::initializer_list<const FormField*> terms) {
    const FormField& first = **terms.begin();
    MeasureField m(first.domain);
    for (std::size_t k = 0; k < m.density.size(); ++k) {
        bool ok = true;
        double s = 0.0;
        for (const FormField* t : terms) {
            ok = ok && t->valid[k];
            s += t->at(k)[0].real();
        }
        m.valid[k] = ok;
        m.density[k] = ok ? s : 0.0;
    }
    return m;
}

}  // namespace

FormField scalar_form(const ScalarField& u) {
    FormField f(u.domain, 0, std::make_pair(0, 0));
    for (std::size_t k = 0; k < u.size(); ++k) {
        const bool ok = std::isfinite(u[k]);
        f.coeffs[k] = ok ? u[k] : 0.0;
        f.valid[k] = ok;
    }
    return f;
}

FormField exterior_d(const FormField& f) {
    if (f.degree >= 4) throw Error("exterior_d of a 4-form");
    const GridDomain& d = *f.domain;
    const auto& table = d_table(f.degree);
    const int kin = f.components;
    const int kout = forms::binom(f.degree + 1);
    FormField out(f.domain, f.degree + 1);
    double inv2h[4];
    for (int j = 0; j < 4; ++j) inv2h[j] = 0.5 / d.spacing()[j];
    const auto n = static_cast<std::ptrdiff_t>(d.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t kk = 0; kk < n; ++kk) {
        const auto k = static_cast<std::size_t>(kk);
        if (!f.valid[k]) continue;
        const Index4 idx = d.unflat(k);
        bool ok = true;
        for (int j = 0; j < 4 && ok; ++j) {
            if (idx[j] < 1 || idx[j] > d.resolution()[j] - 2) ok = false;
            else ok = f.valid[k + d.strides()[j]] && f.valid[k - d.strides()[j]];
        }
        if (!ok) continue;
        out.valid[k] = 1;
        Complex* o = out.at(k);
        for (int c = 0; c < kout; ++c) {
            Complex s = 0.0;
            for (const DTerm& t : table[c]) {
                const std::size_t st = d.strides()[t.axis];
                const Complex diff = f.coeffs[(k + st) * kin + t.source] - f.coeffs[(k - st) * kin + t.source];
                s += (t.sign * inv2h[t.axis]) * diff;
            }
            o[c] = s;
        }
    }
    return out;
}

FormField exterior_d(const ScalarField& u) { return exterior_d(scalar_form(u)); }

FormField project(const AlmostComplexStructure& J, const FormField& f, int p, int q) {
    require_domain(J, f);
    if (p + q != f.degree) throw Error("bidegree does not match form degree");
    FormField out(f.domain, f.degree, std::make_pair(p, q));
    out.valid = f.valid;
    if (!bidegree_exists(p, q)) return out;
    const auto n = static_cast<std::ptrdiff_t>(f.domain->size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t kk = 0; kk < n; ++kk) {
        const auto k = static_cast<std::size_t>(kk);
        if (f.valid[k]) project_node(J, k, f.degree, f.at(k), p, out.at(k));
    }
    return out;
}

FormField wedge(const FormField& a, const FormField& b) {
    require_same_domain(a, b);
    const int k = a.degree + b.degree;
    if (k > 4) throw Error("wedge degree above 4");
    Bidegree bd;
    if (a.bidegree && b.bidegree) bd = std::make_pair(a.bidegree->first + b.bidegree->first, a.bidegree->second + b.bidegree->second);
    FormField out(a.domain, k, bd);
    const auto n = static_cast<std::ptrdiff_t>(a.domain->size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t kk = 0; kk < n; ++kk) {
        const auto i = static_cast<std::size_t>(kk);
        if (!a.valid[i] || !b.valid[i]) continue;
        out.valid[i] = 1;
        if (a.degree == 1 && b.degree == 1) {
            forms::wedge11(a.at(i), b.at(i), out.at(i));
        } else {
            forms::wedge(std::span<const Complex>(a.at(i), a.components), a.degree,
                         std::span<const Complex>(b.at(i), b.components), b.degree,
                         std::span<Complex>(out.at(i), out.components));
        }
    }
    return out;
}

FormField operator+(FormField a, const FormField& b) {
    require_same_domain(a, b);
    if (a.degree != b.degree) throw Error("degree mismatch");
    if (a.bidegree != b.bidegree) a.bidegree.reset();
    for (std::size_t i = 0; i < a.coeffs.size(); ++i) a.coeffs[i] += b.coeffs[i];
    for (std::size_t k = 0; k < a.valid.size(); ++k) a.valid[k] = a.valid[k] && b.valid[k];
    return a;
}

FormField operator-(FormField a, const FormField& b) {
    require_same_domain(a, b);
    if (a.degree != b.degree) throw Error("degree mismatch");
    if (a.bidegree != b.bidegree) a.bidegree.reset();
    for (std::size_t i = 0; i < a.coeffs.size(); ++i) a.coeffs[i] -= b.coeffs[i];
    for (std::size_t k = 0; k < a.valid.size(); ++k) a.valid[k] = a.valid[k] && b.valid[k];
    return a;
}

FormField operator*(Complex s, FormField a) {
    for (auto& c : a.coeffs) c *= s;
    return a;
}

MeasureField top_density(const FormField& f) {
    if (f.degree != 4) throw Error("density of a non-top form");
    MeasureField m(f.domain);
    for (std::size_t k = 0; k < m.density.size(); ++k) {
        m.valid[k] = f.valid[k];
        m.density[k] = f.valid[k] ? f.coeffs[k].real() : 0.0;
    }
    return m;
}

// ---------------------------------------------------------------------------

const FormField* SplitDerivative::shifted(int dp, int dq) const {
    const auto it = parts.find({source.first + dp, source.second + dq});
    return it == parts.end() ? nullptr : &it->second;
}

FormField SplitDerivative::sum() const {
    if (parts.empty()) throw Error("empty split");
    FormField s = parts.begin()->second;
    for (auto it = std::next(parts.begin()); it != parts.end(); ++it) s = s + it->second;
    s.bidegree.reset();
    return s;
}

SplitDerivative split_d(const AlmostComplexStructure& J, const FormField& f) {
    if (!f.bidegree) throw Error("mixed-bidegree input");
    const auto [p, q] = *f.bidegree;
    const FormField df = exterior_d(f);
    SplitDerivative s;
    s.source = {p, q};
    for (const auto& [dp, dq] : {std::pair{1, 0}, {0, 1}, {2, -1}, {-1, 2}}) {
        if (!bidegree_exists(p + dp, q + dq)) continue;
        s.parts.emplace(std::make_pair(p + dp, q + dq), project(J, df, p + dp, q + dq));
    }
    return s;
}

FormField del(const AlmostComplexStructure& J, const FormField& f) { return d_part(J, f, 1, 0, 1.0); }
FormField del_bar(const AlmostComplexStructure& J, const FormField& f) { return d_part(J, f, 0, 1, 1.0); }
FormField theta(const AlmostComplexStructure& J, const FormField& f) { return d_part(J, f, 2, -1, -1.0); }
FormField theta_bar(const AlmostComplexStructure& J, const FormField& f) { return d_part(J, f, -1, 2, -1.0); }

FormField i_ddbar(const AlmostComplexStructure& J, const ScalarField& u) {
    const FormField dbu = first_derivative(u, false, J);
    FormField r = d_part(J, dbu, 1, 0, 1.0);
    for (auto& c : r.coeffs) c *= kI;
    return r;
}

namespace {

/// Shared first terms of both displays:
///   −i∂∂̄(i∂u∧∂̄v) + ∂(∂u∧θ̄∂v) + ∂̄(θ∂̄u∧∂̄v) and the remaining pieces.
struct WedgePieces {
    FormField t1, t2, t3;  // 4-forms
    FormField du, dbv;     // ∂u, ∂̄v
    FormField theta_dbu;   // θ∂̄u
    FormField thetab_dv;   // θ̄∂v
};

WedgePieces wedge_pieces(const AlmostComplexStructure& J, const ScalarField& u, const ScalarField& v) {
    WedgePieces w;
    w.du = first_derivative(u, true, J);
    w.dbv = first_derivative(v, false, J);
    const FormField dbu = first_derivative(u, false, J);
    const FormField dv = first_derivative(v, true, J);
    w.theta_dbu = theta(J, dbu);
    w.thetab_dv = theta_bar(J, dv);

    // −i∂∂̄(i∂u∧∂̄v) = ∂∂̄(∂u∧∂̄v); ∂ of a (1,2)-form is all of d.
    w.t1 = exterior_d(del_bar(J, wedge(w.du, w.dbv)));
    // ∂ of the (1,2)-form ∂u∧θ̄∂v and ∂̄ of the (2,1)-form θ∂̄u∧∂̄v are d.
    w.t2 = exterior_d(wedge(w.du, w.thetab_dv));
    w.t3 = exterior_d(wedge(w.theta_dbu, w.dbv));
    return w;
}

}  // namespace

MeasureField ma_wedge(const AlmostComplexStructure& J, const ScalarField& u, const ScalarField& v) {
    WedgePieces w = wedge_pieces(J, u, v);
    // θθ̄∂u ∧ ∂̄v
    const FormField t4 = wedge(theta(J, theta_bar(J, w.du)), w.dbv);
    // −θ∂̄u ∧ θ̄∂v
    const FormField t5 = Complex(-1.0) * wedge(w.theta_dbu, w.thetab_dv);
    return density_of_sum({&w.t1, &w.t2, &w.t3, &t4, &t5});
}

MeasureField ma_wedge_alt(const AlmostComplexStructure& J, const ScalarField& u, const ScalarField& v) {
    WedgePieces w = wedge_pieces(J, u, v);
    const FormField theta_dbv = theta(J, w.dbv);
    const FormField thetab_du = theta_bar(J, w.du);
    const FormField t4 = Complex(-1.0) * wedge(thetab_du, theta_dbv);
    const FormField t5 = Complex(-1.0) * wedge(w.theta_dbu, w.thetab_dv);
    return density_of_sum({&w.t1, &w.t2, &w.t3, &t4, &t5});
}

MeasureField naive_wedge(const AlmostComplexStructure& J, const ScalarField& u, const ScalarField& v) {
    const FormField hu = i_ddbar(J, u);
    const FormField hv = (&u == &v) ? hu : i_ddbar(J, v);
    return top_density(wedge(hu, hv));
}

MeasureField monge_ampere(const AlmostComplexStructure& J, const ScalarField& u) { return ma_wedge(J, u, u); }

MeasureField torsion_square(const AlmostComplexStructure& J, const ScalarField& u) {
    const FormField tb = theta_bar(J, first_derivative(u, true, J));
    const FormField t = theta(J, first_derivative(u, false, J));
    return top_density(wedge(tb, t));
}

MeasureField ddc_squared(const AlmostComplexStructure& J, const ScalarField& u) {
    return monge_ampere(J, u) + 2.0 * torsion_square(J, u);
}

MeasureField grad_square_wedge(const AlmostComplexStructure& J, const ScalarField& u, const ScalarField& v) {
    double lo = std::numeric_limits<double>::infinity();
    for (double x : u.values) {
        if (!std::isfinite(x)) throw Error("u unbounded below");
        lo = std::min(lo, x);
    }
    ScalarField s = u;
    s += -lo;
    const ScalarField s2 = pointwise_product(s, s);
    const MeasureField a = ma_wedge(J, s2, v);
    const MeasureField b = ma_wedge(J, s, v);
    MeasureField r(u.domain);
    for (std::size_t k = 0; k < r.density.size(); ++k) {
        r.valid[k] = a.valid[k] && b.valid[k];
        r.density[k] = r.valid[k] ? 0.5 * a.density[k] - s[k] * b.density[k] : 0.0;
    }
    return r;
}

MeasureField pairing_w(const AlmostComplexStructure& J, const ScalarField& u, const ScalarField& v,
                       const ScalarField& w) {
    const FormField du = first_derivative(u, true, J);
    const FormField dbv = first_derivative(v, false, J);
    const FormField g = kI * wedge(du, dbv);
    return top_density(wedge(g, i_ddbar(J, w)));
}

// ---------------------------------------------------------------------------

TorsionQuadratics torsion_quadratics(const AlmostComplexStructure& J, const HermitianForm& omega, std::size_t node) {
    const GridDomain& d = *J.domain();
    if (d.face_distance(d.unflat(node)) < 1) throw Error("torsion needs one node of margin");
    double dJ[4][16];
    for (int m = 0; m < 4; ++m) {
        const double* Jp = J.J_data(node + d.strides()[m]);
        const double* Jm = J.J_data(node - d.strides()[m]);
        for (int e = 0; e < 16; ++e) dJ[m][e] = (Jp[e] - Jm[e]) / (2.0 * d.spacing()[m]);
    }
    // T_m = θ applied to the (0,1)-part of e_m; ξ_m = Π^{1,0} e_m.
    Complex T[4][6];
    Vec4c xi[4];
    for (int m = 0; m < 4; ++m) {
        // γ_j = (D_j Π^{0,1}) e_m = (i/2) (D_j J)ᵀ e_m, i.e. γ_j[l] = (i/2) D_j J_ml.
        Complex S[6];
        for (int c = 0; c < 6; ++c) {
            const int a = forms::kPairs[c][0], b = forms::kPairs[c][1];
            S[c] = 0.5 * kI * (dJ[a][4 * m + b] - dJ[b][4 * m + a]);
        }
        J.project2(node, S, 2, T[m]);
        for (auto& c : T[m]) c = -c;
        Vec4c e{};
        e[m] = 1.0;
        xi[m] = J.project10(node, e);
    }
    const Complex* w = omega.omega().at(node);
    TorsionQuadratics q;
    for (int m = 0; m < 4; ++m)
        for (int n = m; n < 4; ++n) {
            Complex Tn_bar[6];
            for (int c = 0; c < 6; ++c) Tn_bar[c] = std::conj(T[n][c]);
            const double num = forms::wedge_top(std::span<const Complex>(T[m], 6), 2, Tn_bar, 2).real();
            Vec4c xin_bar;
            for (int i = 0; i < 4; ++i) xin_bar[i] = std::conj(xi[n][i]);
            Complex g[6];
            forms::wedge11(xi[m].data(), xin_bar.data(), g);
            for (auto& c : g) c *= kI;
            const double den = forms::wedge_top(g, 2, std::span<const Complex>(w, 6), 2).real();
            q.num[4 * m + n] = q.num[4 * n + m] = num;
            q.den[4 * m + n] = q.den[4 * n + m] = den;
        }
    return q;
}

namespace {

double quad(const std::array<double, 16>& A, const double* a) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) {
        double r = 0.0;
        for (int j = 0; j < 4; ++j) r += A[4 * i + j] * a[j];
        s += a[i] * r;
    }
    return s;
}

double ratio(const TorsionQuadratics& q, const double* a) {
    const double den = quad(q.den, a);
    return den > 0.0 ? quad(q.num, a) / den : 0.0;
}

/// Nelder–Mead ascent of the (scale-invariant) ratio from a starting direction.
double nelder_mead_max(const TorsionQuadratics& q, const std::array<double, 4>& start) {
    constexpr int n = 4;
    std::array<std::array<double, 4>, n + 1> x;
    std::array<double, n + 1> f;
    for (int i = 0; i <= n; ++i) {
        x[i] = start;
        if (i > 0) x[i][i - 1] += 0.05;
        f[i] = -ratio(q, x[i].data());
    }
    for (int it = 0; it < 400; ++it) {
        std::array<int, n + 1> order;
        for (int i = 0; i <= n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });
        const int best = order[0], worst = order[n], second = order[n - 1];
        if (std::abs(f[worst] - f[best]) <= 1e-15 * (1.0 + std::abs(f[best]))) break;
        std::array<double, 4> c{};
        for (int i = 0; i <= n; ++i)
            if (i != worst)
                for (int j = 0; j < n; ++j) c[j] += x[i][j] / n;
        auto along = [&](double t) {
            std::array<double, 4> y;
            for (int j = 0; j < n; ++j) y[j] = c[j] + t * (x[worst][j] - c[j]);
            return y;
        };
        const auto xr = along(-1.0);
        const double fr = -ratio(q, xr.data());
        if (fr < f[best]) {
            const auto xe = along(-2.0);
            const double fe = -ratio(q, xe.data());
            if (fe < fr) x[worst] = xe, f[worst] = fe;
            else x[worst] = xr, f[worst] = fr;
        } else if (fr < f[second]) {
            x[worst] = xr, f[worst] = fr;
        } else {
            const auto xc = along(fr < f[worst] ? -0.5 : 0.5);
            const double fc = -ratio(q, xc.data());
            if (fc < std::min(fr, f[worst])) {
                x[worst] = xc, f[worst] = fc;
            } else {
                for (int i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (int j = 0; j < n; ++j) x[i][j] = x[best][j] + 0.5 * (x[i][j] - x[best][j]);
                    f[i] = -ratio(q, x[i].data());
                }
            }
        }
    }
    return -*std::min_element(f.begin(), f.end());
}

}  // namespace

C0Estimate c0_estimate(const AlmostComplexStructure& J, const HermitianForm& omega, const Mask& region, int samples,
                       std::uint64_t seed) {
    const GridDomain& d = *J.domain();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<std::array<double, 4>> dirs(static_cast<std::size_t>(samples));
    for (auto& v : dirs) {
        double s = 0.0;
        for (auto& c : v) {
            c = g(rng);
            s += c * c;
        }
        for (auto& c : v) c /= std::sqrt(s);
    }
    constexpr int kRefine = 5;
    C0Estimate est;
    est.samples_per_point = samples;
    est.value = 0.0;
    std::vector<double> per_node(d.size(), -1.0);
    const auto n = static_cast<std::ptrdiff_t>(d.size());
#pragma omp parallel for schedule(dynamic, 256)
    for (std::ptrdiff_t kk = 0; kk < n; ++kk) {
        const auto k = static_cast<std::size_t>(kk);
        if (!region[k] || d.face_distance(d.unflat(k)) < 1) continue;
        const TorsionQuadratics q = torsion_quadratics(J, omega, k);
        double nmax = 0.0;
        for (double x : q.num) nmax = std::max(nmax, std::abs(x));
        if (nmax == 0.0) {
            per_node[k] = 0.0;
            continue;
        }
        std::array<std::pair<double, int>, kRefine> top;
        top.fill({-1.0, 0});
        for (int s = 0; s < samples; ++s) {
            const double r = ratio(q, dirs[s].data());
            if (r > top[kRefine - 1].first) {
                top[kRefine - 1] = {r, s};
                std::sort(top.begin(), top.end(), [](auto a, auto b) { return a.first > b.first; });
            }
        }
        double best = top[0].first;
        for (const auto& [r, s] : top)
            if (r >= 0.0) best = std::max(best, nelder_mead_max(q, dirs[s]));
        per_node[k] = best;
    }
    for (std::size_t k = 0; k < d.size(); ++k) {
        if (per_node[k] < 0.0) continue;
        ++est.points;
        if (per_node[k] > est.value) {
            est.value = per_node[k];
            est.argmax = k;
        }
    }
    return est;
}

TorsionSides torsion_sides(const AlmostComplexStructure& J, const HermitianForm& omega, const ScalarField& phi) {
    const FormField dphi = exterior_d(phi);
    const GridDomain& d = *J.domain();
    TorsionSides s{MeasureField(J.domain()), MeasureField(J.domain())};
    const auto n = static_cast<std::ptrdiff_t>(d.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t kk = 0; kk < n; ++kk) {
        const auto k = static_cast<std::size_t>(kk);
        if (!dphi.valid[k]) continue;
        const TorsionQuadratics q = torsion_quadratics(J, omega, k);
        const Complex* c = dphi.at(k);
        const double a[4] = {c[0].real(), c[1].real(), c[2].real(), c[3].real()};
        s.lhs.valid[k] = s.rhs.valid[k] = 1;
        s.lhs.density[k] = quad(q.num, a);
        s.rhs.density[k] = quad(q.den, a);
    }
    return s;
}

}  // namespace ampere
