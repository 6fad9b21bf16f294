#pragma once

/// @file grid.hpp
/// @brief 4D collocated grids, nodal fields, integration and norms.

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ampere {

using Complex = std::complex<double>;
using Point4 = std::array<double, 4>;
using Index4 = std::array<int, 4>;
using Mask = std::vector<std::uint8_t>;
using ScalarFn = std::function<double(const Point4&)>;

/// Sentinel for u = −∞ (allowed only at interior nodes).
inline constexpr double NEG_INF = -std::numeric_limits<double>::infinity();

/// All recoverable failures in the library are reported with this type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

using Box4 = std::array<Interval, 4>;

/// Rectangular lattice in R^4, x⁴ index fastest.
///
/// The boundary band holds the nodes whose centred second-difference stencil
/// (two nodes per side) leaves the box. With a defining function ρ the
/// interior is {ρ < 0} minus the band, otherwise every non-band node.
class GridDomain {
public:
    static constexpr int kStencilMargin = 2;

    /// Throws "insufficient stencil margin" for resolution < 5 and
    /// "degenerate domain" for an empty interior or a flat box.
    static std::shared_ptr<const GridDomain> build(const Box4& bbox, const Index4& resolution,
                                                   const ScalarFn& rho = {});

    const Box4& bbox() const { return bbox_; }
    const Index4& resolution() const { return n_; }
    const Point4& spacing() const { return h_; }
    std::size_t size() const { return size_; }
    const std::array<std::size_t, 4>& strides() const { return stride_; }

    double cell_volume() const { return h_[0] * h_[1] * h_[2] * h_[3]; }
    double min_spacing() const;
    double max_spacing() const;

    std::size_t flat(const Index4& i) const {
        return static_cast<std::size_t>(i[0]) * stride_[0] + static_cast<std::size_t>(i[1]) * stride_[1] +
               static_cast<std::size_t>(i[2]) * stride_[2] + static_cast<std::size_t>(i[3]);
    }
    Index4 unflat(std::size_t k) const;
    Point4 point(const Index4& i) const;
    Point4 point(std::size_t k) const { return point(unflat(k)); }
    bool contains(const Index4& i) const;

    /// Nodes from the nearest box face, min over axes (0 on the faces).
    int face_distance(const Index4& i) const;

    const Mask& interior_mask() const { return interior_; }
    const Mask& boundary_band() const { return band_; }
    bool has_defining_function() const { return !rho_.empty(); }
    /// Sampled ρ, empty when no defining function was given.
    const std::vector<double>& defining_values() const { return rho_; }

    /// Mask of nodes with face_distance ≥ margin.
    Mask margin_mask(int margin) const;
    /// Box mask in physical coordinates (closed).
    Mask box_mask(const Box4& box) const;
    /// Nodes of `m` whose whole radius-`r` cube of neighbours also lies in `m`
    /// (and inside the grid).
    Mask erode(const Mask& m, int r) const;

    bool same_shape(const GridDomain& other) const;

private:
    GridDomain() = default;

    Box4 bbox_{};
    Index4 n_{};
    Point4 h_{};
    std::array<std::size_t, 4> stride_{};
    std::size_t size_ = 0;
    Mask interior_;
    Mask band_;
    std::vector<double> rho_;
};

using DomainPtr = std::shared_ptr<const GridDomain>;

/// Real nodal values; NEG_INF marks u = −∞.
struct ScalarField {
    DomainPtr domain;
    std::vector<double> values;

    ScalarField() = default;
    ScalarField(DomainPtr d, double fill = 0.0);
    ScalarField(DomainPtr d, std::vector<double> v);

    static ScalarField sample(DomainPtr d, const ScalarFn& fn);

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t k) const { return values[k]; }
    double& operator[](std::size_t k) { return values[k]; }

    ScalarField& operator+=(const ScalarField& o);
    ScalarField& operator-=(const ScalarField& o);
    ScalarField& operator*=(double s);
    ScalarField& operator+=(double c);
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);
ScalarField pointwise_max(const ScalarField& a, const ScalarField& b);
ScalarField pointwise_min(const ScalarField& a, const ScalarField& b);
ScalarField pointwise_product(const ScalarField& a, const ScalarField& b);

/// Multilinear interpolation; points outside the box are clamped to it.
double interpolate(const ScalarField& u, const Point4& x);

/// Checks the boundary-data invariant: finite values on the boundary band
/// and NEG_INF only at interior nodes.
void validate_scalar(const ScalarField& u);

/// Bidegree label of a form; std::nullopt means "mixed".
using Bidegree = std::optional<std::pair<int, int>>;

/// Complexified k-form in the coordinate coframe dx^I, I increasing.
/// Coefficients are stored point-major: coeffs[k * components + c].
struct FormField {
    DomainPtr domain;
    int degree = 0;
    Bidegree bidegree;
    int components = 1;
    std::vector<Complex> coeffs;
    Mask valid;

    FormField() = default;
    FormField(DomainPtr d, int k, Bidegree bideg = std::nullopt);

    Complex* at(std::size_t k) { return coeffs.data() + k * static_cast<std::size_t>(components); }
    const Complex* at(std::size_t k) const { return coeffs.data() + k * static_cast<std::size_t>(components); }
};

/// Density of a (2,2)-current against dx¹∧dx²∧dx³∧dx⁴, with its validity mask.
struct MeasureField {
    DomainPtr domain;
    std::vector<double> density;
    Mask valid;

    MeasureField() = default;
    explicit MeasureField(DomainPtr d);

    /// Minimum density over valid nodes of `region`.
    double min_over(const Mask& region) const;
    double max_abs_over(const Mask& region) const;
};

MeasureField operator+(MeasureField a, const MeasureField& b);
MeasureField operator-(MeasureField a, const MeasureField& b);
MeasureField operator*(double s, MeasureField a);

/// Deterministic pairwise (tree) sum in the given order.
double pairwise_sum(std::span<const double> xs);

/// Σ density · cell-volume over region ∧ valid, summed in lexicographic
/// node order by pairwise reduction. Throws on shape mismatch.
double integrate(const MeasureField& m, const Mask& region);

enum class NormKind { Sup, L1, L2, W12 };

NormKind parse_norm_kind(const std::string& s);

/// Discrete norms over `region`; W12² = L2² + Σ_i ‖D_i u‖²_L2 with centred
/// differences. NEG_INF inside the region is an error unless kind is L1
/// (then the norm is +∞).
double norm(const ScalarField& u, const Mask& region, NormKind kind);

/// Utility masks.
Mask mask_and(const Mask& a, const Mask& b);
Mask mask_or(const Mask& a, const Mask& b);
Mask mask_not(const Mask& a);
Mask mask_minus(const Mask& a, const Mask& b);
std::size_t mask_count(const Mask& a);
Mask ball_mask(const GridDomain& d, const Point4& center, double radius, bool closed = true);

}  // namespace ampere
