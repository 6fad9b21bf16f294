#include "ampere/grid.hpp"

#include <algorithm>
#include <cmath>

namespace ampere {

std::shared_ptr<const GridDomain> GridDomain::build(const Box4& bbox, const Index4& resolution,
                                                    const ScalarFn& rho) {
    for (int a = 0; a < 4; ++a) {
        if (resolution[a] < 2 * kStencilMargin + 1) throw Error("insufficient stencil margin");
        if (!(bbox[a].hi > bbox[a].lo)) throw Error("degenerate domain");
    }
    auto d = std::shared_ptr<GridDomain>(new GridDomain());
    d->bbox_ = bbox;
    d->n_ = resolution;
    for (int a = 0; a < 4; ++a) d->h_[a] = (bbox[a].hi - bbox[a].lo) / (resolution[a] - 1);
    d->stride_[3] = 1;
    for (int a = 2; a >= 0; --a) d->stride_[a] = d->stride_[a + 1] * static_cast<std::size_t>(resolution[a + 1]);
    d->size_ = d->stride_[0] * static_cast<std::size_t>(resolution[0]);

    d->interior_.assign(d->size_, 0);
    d->band_.assign(d->size_, 0);
    if (rho) d->rho_.resize(d->size_);
    std::size_t interior_count = 0;
    for (std::size_t k = 0; k < d->size_; ++k) {
        const Index4 i = d->unflat(k);
        const bool band = d->face_distance(i) < kStencilMargin;
        d->band_[k] = band ? 1 : 0;
        bool inside = !band;
        if (rho) {
            d->rho_[k] = rho(d->point(i));
            inside = inside && d->rho_[k] < 0.0;
        }
        d->interior_[k] = inside ? 1 : 0;
        interior_count += inside ? 1 : 0;
    }
    if (interior_count == 0) throw Error("degenerate domain");
    return d;
}

double GridDomain::min_spacing() const { return *std::min_element(h_.begin(), h_.end()); }
double GridDomain::max_spacing() const { return *std::max_element(h_.begin(), h_.end()); }

Index4 GridDomain::unflat(std::size_t k) const {
    Index4 i{};
    for (int a = 0; a < 4; ++a) {
        i[a] = static_cast<int>(k / stride_[a]);
        k -= static_cast<std::size_t>(i[a]) * stride_[a];
    }
    return i;
}

Point4 GridDomain::point(const Index4& i) const {
    Point4 x{};
    for (int a = 0; a < 4; ++a) x[a] = bbox_[a].lo + h_[a] * i[a];
    return x;
}

bool GridDomain::contains(const Index4& i) const {
    for (int a = 0; a < 4; ++a)
        if (i[a] < 0 || i[a] >= n_[a]) return false;
    return true;
}

int GridDomain::face_distance(const Index4& i) const {
    int m = n_[0];
    for (int a = 0; a < 4; ++a) m = std::min({m, i[a], n_[a] - 1 - i[a]});
    return m;
}

Mask GridDomain::margin_mask(int margin) const {
    Mask m(size_, 0);
    for (std::size_t k = 0; k < size_; ++k) m[k] = face_distance(unflat(k)) >= margin ? 1 : 0;
    return m;
}

Mask GridDomain::box_mask(const Box4& box) const {
    Mask m(size_, 0);
    for (std::size_t k = 0; k < size_; ++k) {
        const Point4 x = point(k);
        bool in = true;
        for (int a = 0; a < 4; ++a) in = in && x[a] >= box[a].lo - 1e-12 && x[a] <= box[a].hi + 1e-12;
        m[k] = in ? 1 : 0;
    }
    return m;
}

Mask GridDomain::erode(const Mask& m, int r) const {
    if (m.size() != size_) throw Error("mask shape mismatch");
    Mask cur = m;
    // A cube erosion of radius r is r successive erosions along each axis.
    for (int a = 0; a < 4; ++a) {
        for (int step = 0; step < r; ++step) {
            Mask next(size_, 0);
            for (std::size_t k = 0; k < size_; ++k) {
                if (!cur[k]) continue;
                const Index4 i = unflat(k);
                if (i[a] == 0 || i[a] == n_[a] - 1) continue;
                next[k] = cur[k - stride_[a]] && cur[k + stride_[a]] ? 1 : 0;
            }
            cur.swap(next);
        }
    }
    return cur;
}

bool GridDomain::same_shape(const GridDomain& other) const {
    if (n_ != other.n_) return false;
    for (int a = 0; a < 4; ++a)
        if (bbox_[a].lo != other.bbox_[a].lo || bbox_[a].hi != other.bbox_[a].hi) return false;
    return true;
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(DomainPtr d, double fill) : domain(std::move(d)), values(domain->size(), fill) {}

ScalarField::ScalarField(DomainPtr d, std::vector<double> v) : domain(std::move(d)), values(std::move(v)) {
    if (values.size() != domain->size()) throw Error("shape mismatch");
}

ScalarField ScalarField::sample(DomainPtr d, const ScalarFn& fn) {
    ScalarField f(d);
    for (std::size_t k = 0; k < d->size(); ++k) f.values[k] = fn(d->point(k));
    return f;
}

namespace {
void check_same(const ScalarField& a, const ScalarField& b) {
    if (a.values.size() != b.values.size()) throw Error("shape mismatch");
}
}  // namespace

ScalarField& ScalarField::operator+=(const ScalarField& o) {
    check_same(*this, o);
    for (std::size_t k = 0; k < values.size(); ++k) values[k] += o.values[k];
    return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
    check_same(*this, o);
    for (std::size_t k = 0; k < values.size(); ++k) values[k] -= o.values[k];
    return *this;
}

ScalarField& ScalarField::operator*=(double s) {
    for (double& v : values) v *= s;
    return *this;
}

ScalarField& ScalarField::operator+=(double c) {
    for (double& v : values) v += c;
    return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

ScalarField pointwise_max(const ScalarField& a, const ScalarField& b) {
    check_same(a, b);
    ScalarField r = a;
    for (std::size_t k = 0; k < r.values.size(); ++k) r.values[k] = std::max(a.values[k], b.values[k]);
    return r;
}

ScalarField pointwise_min(const ScalarField& a, const ScalarField& b) {
    check_same(a, b);
    ScalarField r = a;
    for (std::size_t k = 0; k < r.values.size(); ++k) r.values[k] = std::min(a.values[k], b.values[k]);
    return r;
}

ScalarField pointwise_product(const ScalarField& a, const ScalarField& b) {
    check_same(a, b);
    ScalarField r = a;
    for (std::size_t k = 0; k < r.values.size(); ++k) r.values[k] = a.values[k] * b.values[k];
    return r;
}

double interpolate(const ScalarField& u, const Point4& x) {
    const GridDomain& d = *u.domain;
    std::size_t base = 0;
    double frac[4];
    for (int a = 0; a < 4; ++a) {
        const double t = std::clamp((x[a] - d.bbox()[a].lo) / d.spacing()[a], 0.0, double(d.resolution()[a] - 1));
        const int i = std::min(static_cast<int>(t), d.resolution()[a] - 2);
        frac[a] = t - i;
        base += static_cast<std::size_t>(i) * d.strides()[a];
    }
    double r = 0.0;
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
        if (w != 0.0) r += w * u.values[k];
    }
    return r;
}

void validate_scalar(const ScalarField& u) {
    const auto& band = u.domain->boundary_band();
    const auto& interior = u.domain->interior_mask();
    for (std::size_t k = 0; k < u.values.size(); ++k) {
        const double v = u.values[k];
        if (band[k] && !std::isfinite(v)) throw Error("boundary data must be finite");
        if (v == NEG_INF && !interior[k]) throw Error("NEG_INF outside the interior");
        if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) throw Error("non-finite value");
    }
}

// ---------------------------------------------------------------------------

namespace {
int binom4(int k) {
    static constexpr int b[5] = {1, 4, 6, 4, 1};
    return b[k];
}
}  // namespace

FormField::FormField(DomainPtr d, int k, Bidegree bideg)
    : domain(std::move(d)), degree(k), bidegree(bideg), components(binom4(k)) {
    if (k < 0 || k > 4) throw Error("form degree out of range");
    coeffs.assign(domain->size() * static_cast<std::size_t>(components), Complex(0.0, 0.0));
    valid.assign(domain->size(), 0);
}

MeasureField::MeasureField(DomainPtr d) : domain(std::move(d)) {
    density.assign(domain->size(), 0.0);
    valid.assign(domain->size(), 0);
}

double MeasureField::min_over(const Mask& region) const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < density.size(); ++k)
        if (region[k] && valid[k]) m = std::min(m, density[k]);
    return m;
}

double MeasureField::max_abs_over(const Mask& region) const {
    double m = 0.0;
    for (std::size_t k = 0; k < density.size(); ++k)
        if (region[k] && valid[k]) m = std::max(m, std::abs(density[k]));
    return m;
}

namespace {
MeasureField combine(MeasureField a, const MeasureField& b, double sb) {
    if (a.density.size() != b.density.size()) throw Error("shape mismatch");
    for (std::size_t k = 0; k < a.density.size(); ++k) {
        a.density[k] += sb * b.density[k];
        a.valid[k] = a.valid[k] && b.valid[k];
    }
    return a;
}
}  // namespace

MeasureField operator+(MeasureField a, const MeasureField& b) { return combine(std::move(a), b, 1.0); }
MeasureField operator-(MeasureField a, const MeasureField& b) { return combine(std::move(a), b, -1.0); }
MeasureField operator*(double s, MeasureField a) {
    for (double& v : a.density) v *= s;
    return a;
}

double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 8) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

double integrate(const MeasureField& m, const Mask& region) {
    if (region.size() != m.density.size()) throw Error("mask shape mismatch");
    std::vector<double> terms;
    terms.reserve(1024);
    for (std::size_t k = 0; k < region.size(); ++k)
        if (region[k] && m.valid[k]) terms.push_back(m.density[k]);
    return pairwise_sum(terms) * m.domain->cell_volume();
}

NormKind parse_norm_kind(const std::string& s) {
    if (s == "sup") return NormKind::Sup;
    if (s == "L1") return NormKind::L1;
    if (s == "L2") return NormKind::L2;
    if (s == "W12") return NormKind::W12;
    throw Error("unknown norm kind: " + s);
}

double norm(const ScalarField& u, const Mask& region, NormKind kind) {
    const GridDomain& d = *u.domain;
    if (region.size() != d.size()) throw Error("mask shape mismatch");
    std::vector<double> terms;
    double sup = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) {
        if (!region[k]) continue;
        const double v = u.values[k];
        if (v == NEG_INF) {
            if (kind == NormKind::L1) return std::numeric_limits<double>::infinity();
            throw Error("norm undefined on −∞");
        }
        switch (kind) {
            case NormKind::Sup: sup = std::max(sup, std::abs(v)); break;
            case NormKind::L1: terms.push_back(std::abs(v)); break;
            case NormKind::L2: terms.push_back(v * v); break;
            case NormKind::W12: {
                const Index4 i = d.unflat(k);
                double g2 = v * v;
                for (int a = 0; a < 4; ++a) {
                    if (i[a] == 0 || i[a] == d.resolution()[a] - 1)
                        throw Error("W12 region touches the grid boundary");
                    const double up = u.values[k + d.strides()[a]];
                    const double dn = u.values[k - d.strides()[a]];
                    if (!std::isfinite(up) || !std::isfinite(dn)) throw Error("norm undefined on −∞");
                    const double g = (up - dn) / (2.0 * d.spacing()[a]);
                    g2 += g * g;
                }
                terms.push_back(g2);
                break;
            }
        }
    }
    if (kind == NormKind::Sup) return sup;
    const double s = pairwise_sum(terms) * d.cell_volume();
    return kind == NormKind::L1 ? s : std::sqrt(s);
}

Mask mask_and(const Mask& a, const Mask& b) {
    if (a.size() != b.size()) throw Error("mask shape mismatch");
    Mask r(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k] && b[k];
    return r;
}

Mask mask_or(const Mask& a, const Mask& b) {
    if (a.size() != b.size()) throw Error("mask shape mismatch");
    Mask r(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k] || b[k];
    return r;
}

Mask mask_not(const Mask& a) {
    Mask r(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) r[k] = !a[k];
    return r;
}

Mask mask_minus(const Mask& a, const Mask& b) { return mask_and(a, mask_not(b)); }

std::size_t mask_count(const Mask& a) {
    std::size_t c = 0;
    for (auto v : a) c += v ? 1 : 0;
    return c;
}

Mask ball_mask(const GridDomain& d, const Point4& center, double radius, bool closed) {
    Mask m(d.size(), 0);
    const double r2 = radius * radius;
    for (std::size_t k = 0; k < d.size(); ++k) {
        const Point4 x = d.point(k);
        double s = 0.0;
        for (int a = 0; a < 4; ++a) s += (x[a] - center[a]) * (x[a] - center[a]);
        m[k] = (closed ? s <= r2 + 1e-12 : s < r2 - 1e-12) ? 1 : 0;
    }
    return m;
}

}  // namespace ampere
