#pragma once

/// @file calculus.hpp
/// @brief Discrete exterior derivative, its bidegree split d = ∂ + ∂̄ − θ − θ̄,
/// and the Monge–Ampère type wedge products built from it.
///
/// Every operator works on nodal fields with centred first differences and
/// records in its output which nodes had a complete stencil. Densities are
/// always against dx¹∧dx²∧dx³∧dx⁴.

#include <map>
#include <utility>

#include "ampere/grid.hpp"
#include "ampere/structure.hpp"

namespace ampere {

/// u as a 0-form; nodes holding NEG_INF are marked invalid.
FormField scalar_form(const ScalarField& u);

/// Centred-difference d, antisymmetrised. Throws for degree-4 input.
FormField exterior_d(const FormField& f);
FormField exterior_d(const ScalarField& u);

/// (p,q)-part of f at every node (labelled (p,q) in the result).
FormField project(const AlmostComplexStructure& J, const FormField& f, int p, int q);

/// Pointwise a ∧ b; validity is the conjunction, bidegrees add.
FormField wedge(const FormField& a, const FormField& b);

FormField operator+(FormField a, const FormField& b);
FormField operator-(FormField a, const FormField& b);
FormField operator*(Complex s, FormField a);

/// Real part of the dx¹∧dx²∧dx³∧dx⁴ coefficient of a 4-form.
MeasureField top_density(const FormField& f);

/// Parts of d f keyed by target bidegree; absent keys are zero.
struct SplitDerivative {
    std::pair<int, int> source;
    std::map<std::pair<int, int>, FormField> parts;

    /// Part of d f of bidegree (p + dp, q + dq), or nullptr when it cannot exist.
    const FormField* shifted(int dp, int dq) const;
    /// Σ parts, to compare against exterior_d.
    FormField sum() const;
};

/// Throws for a field without a pure bidegree label.
SplitDerivative split_d(const AlmostComplexStructure& J, const FormField& f);

/// Single parts of d, without computing the others.
FormField del(const AlmostComplexStructure& J, const FormField& f);
FormField del_bar(const AlmostComplexStructure& J, const FormField& f);
/// θf = −Π^{p+2,q−1} d f.
FormField theta(const AlmostComplexStructure& J, const FormField& f);
/// θ̄f = −Π^{p−1,q+2} d f.
FormField theta_bar(const AlmostComplexStructure& J, const FormField& f);

/// i Π^{1,1} d(Π^{0,1} du).
FormField i_ddbar(const AlmostComplexStructure& J, const ScalarField& u);

/// The five-term product
///   −i∂∂̄(i∂u∧∂̄v) + ∂(∂u∧θ̄∂v) + ∂̄(θ∂̄u∧∂̄v) + θθ̄∂u∧∂̄v − θ∂̄u∧θ̄∂v.
/// Stencil radius 3.
MeasureField ma_wedge(const AlmostComplexStructure& J, const ScalarField& u, const ScalarField& v);

/// Same product with the last two terms written as −θ̄∂u∧θ∂̄v − θ∂̄u∧θ̄∂v.
MeasureField ma_wedge_alt(const AlmostComplexStructure& J, const ScalarField& u, const ScalarField& v);

/// Pointwise i∂∂̄u ∧ i∂∂̄v.
MeasureField naive_wedge(const AlmostComplexStructure& J, const ScalarField& u, const ScalarField& v);

MeasureField monge_ampere(const AlmostComplexStructure& J, const ScalarField& u);

/// density(θ̄∂u ∧ θ∂̄u), pointwise ≥ 0.
MeasureField torsion_square(const AlmostComplexStructure& J, const ScalarField& u);

/// (dd^c u)² = (i∂∂̄u)² + 2θ̄∂u∧θ∂̄u.
MeasureField ddc_squared(const AlmostComplexStructure& J, const ScalarField& u);

/// i∂u∧∂̄u∧i∂∂̄v through ½ i∂∂̄u²∧i∂∂̄v − u·i∂∂̄u∧i∂∂̄v, with u shifted by its
/// minimum. Throws when u takes NEG_INF.
MeasureField grad_square_wedge(const AlmostComplexStructure& J, const ScalarField& u, const ScalarField& v);

/// Pointwise Re(i∂u∧∂̄v∧i∂∂̄w).
MeasureField pairing_w(const AlmostComplexStructure& J, const ScalarField& u, const ScalarField& v,
                       const ScalarField& w);

// ---------------------------------------------------------------------------
// Torsion constant

/// Quadratic forms on real covectors a at one node:
///   num(a) = density(θ(ξ̄) ∧ θ̄(ξ)),  den(a) = density(iξ∧ξ̄∧ω),  ξ = Π^{1,0}a,
/// with the pointwise torsion θ(ξ̄) = −Π^{2,0} Σ_j dx^j ∧ (D_jΠ^{0,1}) a and
/// D_j the centred difference of J. Row-major 4×4, symmetric.
struct TorsionQuadratics {
    std::array<double, 16> num{};
    std::array<double, 16> den{};
};

/// Requires face_distance ≥ 1 at the node.
TorsionQuadratics torsion_quadratics(const AlmostComplexStructure& J, const HermitianForm& omega, std::size_t node);

struct C0Estimate {
    double value = 0.0;
    bool lower_bound = true;  ///< sampled + locally refined, never an upper bound
    std::size_t argmax = 0;   ///< node attaining the value
    std::size_t points = 0;
    int samples_per_point = 0;
};

/// sup over `region` of the max over directions of num/den: 10³ sphere
/// samples per node, then Nelder–Mead from the 5 best samples.
C0Estimate c0_estimate(const AlmostComplexStructure& J, const HermitianForm& omega, const Mask& region,
                       int samples = 1000, std::uint64_t seed = 7);

/// Both sides of the pointwise torsion inequality for a function φ:
/// lhs = density(θ∂̄φ ∧ θ̄∂φ), rhs = density(i∂φ∧∂̄φ∧ω), with the
/// pointwise θ above and dφ by centred differences.
struct TorsionSides {
    MeasureField lhs;
    MeasureField rhs;
};

TorsionSides torsion_sides(const AlmostComplexStructure& J, const HermitianForm& omega, const ScalarField& phi);

}  // namespace ampere
