#pragma once

/// @file structure.hpp
/// @brief Almost complex structures on the grid, bidegree projectors,
/// Nijenhuis tensor and the almost Hermitian form ω.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ampere/forms.hpp"
#include "ampere/grid.hpp"

namespace ampere {

using Mat4 = std::array<double, 16>;  ///< row-major, (JX)_i = Σ_j J[4i+j] X_j
using forms::Vec4c;

struct ModelSpec {
    enum class Kind { Standard, Twist };
    Kind kind = Kind::Standard;
    double twist = 0.0;

    static ModelSpec standard() { return {}; }
    static ModelSpec twisted(double rho) { return {Kind::Twist, rho}; }
    std::string name() const;
};

/// Closed-form J of a model at a point.
///
/// The twist family declares the (1,0)-coframe α¹ = dz₁, α² = dz₂ + ρ z̄₁ dz̄₂
/// (z₁ = x¹+ix², z₂ = x³+ix⁴); J is the endomorphism with α·J = iα on that
/// span and ᾱ·J = −iᾱ on its conjugate. Invertible while |ρ z₁| < 1.
Mat4 model_J(const ModelSpec& model, const Point4& x);

/// The model's declared (1,0)-coframe at x (rows α¹, α²).
std::array<Vec4c, 2> model_coframe(const ModelSpec& model, const Point4& x);

/// A (1,0)-coframe (β¹, β²) at a node with the dual (1,0)-vectors (V₁, V₂):
/// β^a(V_b) = δ_ab and β̄^a(V_b) = 0.
struct PointFrame {
    std::array<Vec4c, 2> coframe;
    std::array<Vec4c, 2> dual;
};

/// Frame from J at a point: pivoted Gram–Schmidt over Π^{1,0}dx^i in the
/// Euclidean Hermitian product (largest norm first), then inversion of the
/// 4×4 matrix [β¹; β²; β̄¹; β̄²].
PointFrame frame_from_J(const Mat4& J);

class AlmostComplexStructure {
public:
    AlmostComplexStructure() = default;
    /// Takes a tabulated tensor field (16 entries per node).
    AlmostComplexStructure(DomainPtr domain, std::vector<double> tensor, std::optional<ModelSpec> model = {});

    const DomainPtr& domain() const { return domain_; }
    const std::optional<ModelSpec>& model() const { return model_; }
    Mat4 J(std::size_t k) const;
    const double* J_data(std::size_t k) const { return tensor_.data() + 16 * k; }
    const std::vector<double>& tensor() const { return tensor_; }
    const PointFrame& frame(std::size_t k) const { return frames_[k]; }

    /// Π^{1,0}c = (c − iJᵀc)/2 on coefficient vectors of covectors.
    Vec4c project10(std::size_t k, const Vec4c& c) const;
    Vec4c project01(std::size_t k, const Vec4c& c) const;

    /// (p,q)-part of a 2-covector (p+q = 2) at node k.
    void project2(std::size_t k, const Complex* in, int p, Complex* out) const;
    /// (p,q)-part of a 3-covector (p+q = 3; only (2,1) and (1,2) exist).
    void project3(std::size_t k, const Complex* in, int p, Complex* out) const;

private:
    DomainPtr domain_;
    std::vector<double> tensor_;
    std::optional<ModelSpec> model_;
    std::vector<PointFrame> frames_;
};

AlmostComplexStructure make_structure(const ModelSpec& model, DomainPtr domain);

struct StructureReport {
    double max_defect = 0.0;  ///< max ‖J² + I‖_F
    bool is_valid = false;    ///< max_defect ≤ 1e−10
};

StructureReport validate_structure(const AlmostComplexStructure& J);

inline constexpr double kAlgebraicTol = 1e-10;

/// Explicit projectors Π^{p,q} on complexified k-covectors at a node, as
/// C(4,k)×C(4,k) row-major matrices keyed by (p,q).
struct ProjectorFamily {
    int degree = 0;
    std::map<std::pair<int, int>, std::vector<Complex>> by_bidegree;
};

/// Throws when J at the node fails the J² = −I check.
ProjectorFamily bidegree_projector(const AlmostComplexStructure& J, std::size_t node, int k);

struct NijenhuisField {
    DomainPtr domain;
    /// 6 pairs (a<b, lexicographic) × 4 components per node.
    std::vector<double> tensor;
    std::vector<double> magnitude;
    Mask valid;

    std::array<double, 4> at(std::size_t node, int a, int b) const;
    double max_magnitude(const Mask& region) const;
};

/// N(X,Y) = [JX,JY] − [X,Y] − J[JX,Y] − J[X,JY] on coordinate fields, with
/// brackets from centred differences of the sampled J.
NijenhuisField nijenhuis(const AlmostComplexStructure& J);

/// Compatible positive (1,1)-form ω(X,Y) = ½(⟨JX,Y⟩ − ⟨X,JY⟩) and a cached
/// unitary coframe per node (ω = i Σ α^a∧ᾱ^a).
class HermitianForm {
public:
    HermitianForm() = default;
    HermitianForm(const AlmostComplexStructure& J, FormField omega);

    const FormField& omega() const { return omega_; }
    const PointFrame& unitary(std::size_t k) const { return unitary_[k]; }
    /// min over sampled directions ξ of ω(ξ,Jξ)/|ξ|² per node, and overall.
    double min_positivity() const { return min_positivity_; }
    /// Density of ω∧ω against the coordinate volume.
    double omega_squared_density(std::size_t k) const;

private:
    FormField omega_;
    std::vector<PointFrame> unitary_;
    double min_positivity_ = 0.0;
};

/// Only the euclidean-compatible construction exists; throws on a
/// positivity failure over a 60-direction sample.
HermitianForm make_hermitian_form(const AlmostComplexStructure& J, const std::string& spec = "euclidean-compatible");

/// Unitary coframe at a node: α = Lᵀβ where H = LL† is the Cholesky factor of
/// H_cd = −i ω(V_c, V̄_d) in the structure frame. Throws "ω not positive".
PointFrame unitary_coframe(const AlmostComplexStructure& J, const FormField& omega, std::size_t node);

/// Real 2-form i Σ α^a∧ᾱ^a from a coframe (reconstruction check).
std::array<Complex, 6> hermitian_reconstruction(const PointFrame& f);

/// Hermitian 2×2 matrix h_ab = −i β(U_a, Ū_b) of a 2-form in a frame.
std::array<Complex, 4> hermitian_matrix(const PointFrame& f, const Complex* beta);

/// Export J as a 16-component scalar field file.
void save_structure(const AlmostComplexStructure& J, const std::string& path);

}  // namespace ampere
