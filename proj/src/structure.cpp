#include "ampere/structure.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "ampere/field_io.hpp"

namespace ampere {

using forms::binom;

std::string ModelSpec::name() const {
    if (kind == Kind::Standard) return "standard";
    return "twist(" + std::to_string(twist) + ")";
}

namespace {

using Mat4c = Eigen::Matrix<Complex, 4, 4>;

constexpr Complex kI(0.0, 1.0);

Mat4 J_from_coframe(const std::array<Vec4c, 2>& a) {
    Mat4c A;
    for (int j = 0; j < 4; ++j) {
        A(0, j) = a[0][j];
        A(1, j) = a[1][j];
        A(2, j) = std::conj(a[0][j]);
        A(3, j) = std::conj(a[1][j]);
    }
    Eigen::Matrix<Complex, 4, 1> d;
    d << kI, kI, -kI, -kI;
    const Mat4c Jc = A.inverse() * d.asDiagonal() * A;
    Mat4 J{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) J[4 * i + j] = Jc(i, j).real();
    return J;
}

double herm_norm2(const Vec4c& v) {
    double s = 0.0;
    for (const auto& c : v) s += std::norm(c);
    return s;
}

Complex herm_dot(const Vec4c& a, const Vec4c& b) {
    // ⟨a, b⟩ = Σ a_i conj(b_i)
    Complex s = 0.0;
    for (int i = 0; i < 4; ++i) s += a[i] * std::conj(b[i]);
    return s;
}

Vec4c conj4(const Vec4c& v) {
    Vec4c r;
    for (int i = 0; i < 4; ++i) r[i] = std::conj(v[i]);
    return r;
}

/// Dual vectors of the coframe [c0; c1; c̄0; c̄1].
std::array<Vec4c, 2> dual_of(const std::array<Vec4c, 2>& c) {
    Mat4c A;
    for (int j = 0; j < 4; ++j) {
        A(0, j) = c[0][j];
        A(1, j) = c[1][j];
        A(2, j) = std::conj(c[0][j]);
        A(3, j) = std::conj(c[1][j]);
    }
    const Mat4c inv = A.inverse();
    std::array<Vec4c, 2> d;
    for (int a = 0; a < 2; ++a)
        for (int i = 0; i < 4; ++i) d[a][i] = inv(i, a);
    return d;
}

void frame_vectors(const PointFrame& f, std::array<Vec4c, 4>& eps, std::array<Vec4c, 4>& E) {
    eps = {f.coframe[0], f.coframe[1], conj4(f.coframe[0]), conj4(f.coframe[1])};
    E = {f.dual[0], f.dual[1], conj4(f.dual[0]), conj4(f.dual[1])};
}

}  // namespace

Mat4 model_J(const ModelSpec& model, const Point4& x) { return J_from_coframe(model_coframe(model, x)); }

std::array<Vec4c, 2> model_coframe(const ModelSpec& model, const Point4& x) {
    std::array<Vec4c, 2> a{};
    a[0] = {1.0, kI, 0.0, 0.0};
    a[1] = {0.0, 0.0, 1.0, kI};
    if (model.kind == ModelSpec::Kind::Twist && model.twist != 0.0) {
        const Complex zbar1(x[0], -x[1]);
        const Complex c = model.twist * zbar1;
        // dz₂ + c dz̄₂ = (1 + c) dx³ + i(1 − c) dx⁴
        a[1] = {0.0, 0.0, 1.0 + c, kI * (1.0 - c)};
    }
    return a;
}

PointFrame frame_from_J(const Mat4& J) {
    std::array<Vec4c, 4> P;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) P[i][j] = 0.5 * ((i == j ? 1.0 : 0.0) - kI * J[4 * i + j]);
    int first = 0;
    for (int i = 1; i < 4; ++i)
        if (herm_norm2(P[i]) > herm_norm2(P[first]) * (1.0 + 1e-12)) first = i;
    Vec4c b1 = P[first];
    const double n1 = std::sqrt(herm_norm2(b1));
    for (auto& c : b1) c /= n1;
    Vec4c b2{};
    double best = -1.0;
    for (int i = 0; i < 4; ++i) {
        if (i == first) continue;
        Vec4c r = P[i];
        const Complex proj = herm_dot(r, b1);
        for (int j = 0; j < 4; ++j) r[j] -= proj * b1[j];
        const double nr = herm_norm2(r);
        if (nr > best * (1.0 + 1e-12)) {
            best = nr;
            b2 = r;
        }
    }
    const double n2 = std::sqrt(best);
    for (auto& c : b2) c /= n2;
    PointFrame f;
    f.coframe = {b1, b2};
    f.dual = dual_of(f.coframe);
    return f;
}

AlmostComplexStructure::AlmostComplexStructure(DomainPtr domain, std::vector<double> tensor,
                                               std::optional<ModelSpec> model)
    : domain_(std::move(domain)), tensor_(std::move(tensor)), model_(model) {
    if (tensor_.size() != 16 * domain_->size()) throw Error("shape mismatch");
    frames_.resize(domain_->size());
    for (std::size_t k = 0; k < domain_->size(); ++k) frames_[k] = frame_from_J(J(k));
}

Mat4 AlmostComplexStructure::J(std::size_t k) const {
    Mat4 m;
    std::copy_n(tensor_.data() + 16 * k, 16, m.begin());
    return m;
}

Vec4c AlmostComplexStructure::project10(std::size_t k, const Vec4c& c) const {
    // (Jᵀc)_j = Σ_i J_ij c_i
    const double* J = J_data(k);
    Vec4c r;
    for (int j = 0; j < 4; ++j) {
        Complex t = 0.0;
        for (int i = 0; i < 4; ++i) t += J[4 * i + j] * c[i];
        r[j] = 0.5 * (c[j] - kI * t);
    }
    return r;
}

Vec4c AlmostComplexStructure::project01(std::size_t k, const Vec4c& c) const {
    const double* J = J_data(k);
    Vec4c r;
    for (int j = 0; j < 4; ++j) {
        Complex t = 0.0;
        for (int i = 0; i < 4; ++i) t += J[4 * i + j] * c[i];
        r[j] = 0.5 * (c[j] + kI * t);
    }
    return r;
}

namespace {

void add_pair_part(const std::array<Vec4c, 4>& eps, const std::array<Vec4c, 4>& E, int a, int b, const Complex* in,
                   double sign, Complex* out) {
    const Complex coef = sign * forms::eval2(in, E[a].data(), E[b].data());
    Complex f[6];
    forms::wedge11(eps[a].data(), eps[b].data(), f);
    for (int c = 0; c < 6; ++c) out[c] += coef * f[c];
}

void add_triple_part(const std::array<Vec4c, 4>& eps, const std::array<Vec4c, 4>& E, int a, int b, int c3,
                     const Complex* in, Complex* out) {
    const Complex coef = forms::eval3(in, E[a].data(), E[b].data(), E[c3].data());
    Complex f[4];
    forms::wedge111(eps[a].data(), eps[b].data(), eps[c3].data(), f);
    for (int c = 0; c < 4; ++c) out[c] += coef * f[c];
}

}  // namespace

void AlmostComplexStructure::project2(std::size_t k, const Complex* in, int p, Complex* out) const {
    std::array<Vec4c, 4> eps, E;
    frame_vectors(frames_[k], eps, E);
    for (int c = 0; c < 6; ++c) out[c] = 0.0;
    if (p == 2) {
        add_pair_part(eps, E, 0, 1, in, 1.0, out);
    } else if (p == 0) {
        add_pair_part(eps, E, 2, 3, in, 1.0, out);
    } else {
        for (int c = 0; c < 6; ++c) out[c] = in[c];
        add_pair_part(eps, E, 0, 1, in, -1.0, out);
        add_pair_part(eps, E, 2, 3, in, -1.0, out);
    }
}

void AlmostComplexStructure::project3(std::size_t k, const Complex* in, int p, Complex* out) const {
    std::array<Vec4c, 4> eps, E;
    frame_vectors(frames_[k], eps, E);
    for (int c = 0; c < 4; ++c) out[c] = 0.0;
    if (p != 1 && p != 2) return;
    Complex part21[4] = {0.0, 0.0, 0.0, 0.0};
    add_triple_part(eps, E, 0, 1, 2, in, part21);
    add_triple_part(eps, E, 0, 1, 3, in, part21);
    for (int c = 0; c < 4; ++c) out[c] = (p == 2) ? part21[c] : in[c] - part21[c];
}

AlmostComplexStructure make_structure(const ModelSpec& model, DomainPtr domain) {
    std::vector<double> t(16 * domain->size());
    for (std::size_t k = 0; k < domain->size(); ++k) {
        const Mat4 J = model_J(model, domain->point(k));
        std::copy(J.begin(), J.end(), t.begin() + 16 * k);
    }
    return AlmostComplexStructure(std::move(domain), std::move(t), model);
}

namespace {
double square_defect(const double* J) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double v = (i == j) ? 1.0 : 0.0;
            for (int l = 0; l < 4; ++l) v += J[4 * i + l] * J[4 * l + j];
            s += v * v;
        }
    return std::sqrt(s);
}
}  // namespace

StructureReport validate_structure(const AlmostComplexStructure& J) {
    StructureReport r;
    for (std::size_t k = 0; k < J.domain()->size(); ++k) r.max_defect = std::max(r.max_defect, square_defect(J.J_data(k)));
    r.is_valid = r.max_defect <= kAlgebraicTol;
    return r;
}

ProjectorFamily bidegree_projector(const AlmostComplexStructure& J, std::size_t node, int k) {
    if (square_defect(J.J_data(node)) > kAlgebraicTol) throw Error("J defect above tolerance");
    std::array<Vec4c, 4> P, Q;
    for (int i = 0; i < 4; ++i) {
        Vec4c e{};
        e[i] = 1.0;
        P[i] = J.project10(node, e);
        Q[i] = J.project01(node, e);
    }
    ProjectorFamily fam;
    fam.degree = k;
    for (int q = 0; q <= k; ++q) {
        const int p = k - q;
        if (p > 2 || q > 2) continue;
        fam.by_bidegree[{p, q}] = forms::induced_projector(P, Q, k, q);
    }
    return fam;
}

// ---------------------------------------------------------------------------

std::array<double, 4> NijenhuisField::at(std::size_t node, int a, int b) const {
    std::array<double, 4> r{};
    if (a == b) return r;
    const int lo = std::min(a, b), hi = std::max(a, b);
    const int c = forms::basis_index((1u << lo) | (1u << hi));
    const double s = (a < b) ? 1.0 : -1.0;
    for (int i = 0; i < 4; ++i) r[i] = s * tensor[24 * node + 4 * c + i];
    return r;
}

double NijenhuisField::max_magnitude(const Mask& region) const {
    double m = 0.0;
    for (std::size_t k = 0; k < magnitude.size(); ++k)
        if (valid[k] && region[k]) m = std::max(m, magnitude[k]);
    return m;
}

NijenhuisField nijenhuis(const AlmostComplexStructure& Jf) {
    const GridDomain& d = *Jf.domain();
    NijenhuisField N;
    N.domain = Jf.domain();
    N.tensor.assign(24 * d.size(), 0.0);
    N.magnitude.assign(d.size(), 0.0);
    N.valid.assign(d.size(), 0);
    for (std::size_t k = 0; k < d.size(); ++k) {
        if (d.face_distance(d.unflat(k)) < 1) continue;
        N.valid[k] = 1;
        const double* J = Jf.J_data(k);
        // dJ[m][i][j] = ∂_m J_ij
        double dJ[4][16];
        for (int m = 0; m < 4; ++m) {
            const double* Jp = Jf.J_data(k + d.strides()[m]);
            const double* Jm = Jf.J_data(k - d.strides()[m]);
            for (int e = 0; e < 16; ++e) dJ[m][e] = (Jp[e] - Jm[e]) / (2.0 * d.spacing()[m]);
        }
        double mag = 0.0;
        for (int c = 0; c < 6; ++c) {
            const unsigned I = forms::basis_mask(2, c);
            int a = -1, b = -1;
            for (int t = 0; t < 4; ++t)
                if (I & (1u << t)) (a < 0 ? a : b) = t;
            for (int kk = 0; kk < 4; ++kk) {
                double v = 0.0;
                for (int i = 0; i < 4; ++i)
                    v += J[4 * i + a] * dJ[i][4 * kk + b] - J[4 * i + b] * dJ[i][4 * kk + a];
                for (int l = 0; l < 4; ++l)
                    v += J[4 * kk + l] * (dJ[b][4 * l + a] - dJ[a][4 * l + b]);
                N.tensor[24 * k + 4 * c + kk] = v;
                mag += v * v;
            }
        }
        N.magnitude[k] = std::sqrt(mag);
    }
    return N;
}

// ---------------------------------------------------------------------------

std::array<Complex, 4> hermitian_matrix(const PointFrame& f, const Complex* beta) {
    std::array<Complex, 4> h{};
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            const Vec4c Ub = conj4(f.dual[b]);
            h[2 * a + b] = -kI * forms::eval2(beta, f.dual[a].data(), Ub.data());
        }
    return h;
}

std::array<Complex, 6> hermitian_reconstruction(const PointFrame& f) {
    std::array<Complex, 6> r{};
    for (int a = 0; a < 2; ++a) {
        Complex w[6];
        const Vec4c ca = conj4(f.coframe[a]);
        forms::wedge11(f.coframe[a].data(), ca.data(), w);
        for (int c = 0; c < 6; ++c) r[c] += kI * w[c];
    }
    return r;
}

PointFrame unitary_coframe(const AlmostComplexStructure& J, const FormField& omega, std::size_t node) {
    const PointFrame& base = J.frame(node);
    const auto H = hermitian_matrix(base, omega.at(node));
    // Cholesky H = L L†, L lower triangular.
    const double h00 = H[0].real();
    if (!(h00 > 0.0)) throw Error("ω not positive");
    const double l00 = std::sqrt(h00);
    const Complex l10 = H[2] / l00;
    const double s = H[3].real() - std::norm(l10);
    if (!(s > 0.0)) throw Error("ω not positive");
    const double l11 = std::sqrt(s);
    // α = Lᵀβ: α¹ = l00 β¹ + l10 β², α² = l11 β².
    PointFrame u;
    for (int i = 0; i < 4; ++i) {
        u.coframe[0][i] = l00 * base.coframe[0][i] + l10 * base.coframe[1][i];
        u.coframe[1][i] = l11 * base.coframe[1][i];
    }
    // Dual: U = V T⁻¹ with T = [[l00, l10], [0, l11]].
    const Complex t01 = -l10 / (l00 * l11);
    for (int i = 0; i < 4; ++i) {
        u.dual[0][i] = base.dual[0][i] / l00;
        u.dual[1][i] = base.dual[0][i] * t01 + base.dual[1][i] / l11;
    }
    return u;
}

HermitianForm::HermitianForm(const AlmostComplexStructure& J, FormField omega) : omega_(std::move(omega)) {
    const std::size_t n = J.domain()->size();
    unitary_.resize(n);
    for (std::size_t k = 0; k < n; ++k) unitary_[k] = unitary_coframe(J, omega_, k);

    // Positivity ω(ξ, Jξ)/|ξ|² over a fixed 60-direction sample.
    std::mt19937_64 rng(60);
    std::normal_distribution<double> g;
    std::vector<std::array<double, 4>> dirs(60);
    for (auto& v : dirs) {
        double s = 0.0;
        for (auto& c : v) {
            c = g(rng);
            s += c * c;
        }
        for (auto& c : v) c /= std::sqrt(s);
    }
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        const double* Jm = J.J_data(k);
        const Complex* w = omega_.at(k);
        for (const auto& xi : dirs) {
            Vec4c X, Y;
            for (int i = 0; i < 4; ++i) {
                double jx = 0.0;
                for (int j = 0; j < 4; ++j) jx += Jm[4 * i + j] * xi[j];
                X[i] = xi[i];
                Y[i] = jx;
            }
            worst = std::min(worst, forms::eval2(w, X.data(), Y.data()).real());
        }
    }
    min_positivity_ = worst;
}

double HermitianForm::omega_squared_density(std::size_t k) const {
    const Complex* w = omega_.at(k);
    return forms::wedge_top(std::span<const Complex>(w, 6), 2, std::span<const Complex>(w, 6), 2).real();
}

HermitianForm make_hermitian_form(const AlmostComplexStructure& J, const std::string& spec) {
    if (spec != "euclidean-compatible") throw Error("unknown hermitian form spec: " + spec);
    FormField omega(J.domain(), 2, std::make_pair(1, 1));
    for (std::size_t k = 0; k < J.domain()->size(); ++k) {
        const double* Jm = J.J_data(k);
        Complex* w = omega.at(k);
        for (int c = 0; c < 6; ++c) {
            const unsigned I = forms::basis_mask(2, c);
            int i = -1, j = -1;
            for (int t = 0; t < 4; ++t)
                if (I & (1u << t)) (i < 0 ? i : j) = t;
            // ω(e_i, e_j) = ½(⟨Je_i, e_j⟩ − ⟨e_i, Je_j⟩) = ½(J_ji − J_ij)
            w[c] = 0.5 * (Jm[4 * j + i] - Jm[4 * i + j]);
        }
        omega.valid[k] = 1;
    }
    HermitianForm h(J, std::move(omega));
    if (!(h.min_positivity() > 0.0)) throw Error("hermitian form not positive");
    return h;
}

void save_structure(const AlmostComplexStructure& J, const std::string& path) {
    save_components(J.domain(), J.tensor(), 16, path);
}

}  // namespace ampere
