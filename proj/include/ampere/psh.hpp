#pragma once

/// @file psh.hpp
/// @brief Plurisubharmonicity tests, regularisation, grid usc regularisation
/// and J-holomorphic discs.

#include <string>
#include <vector>

#include "ampere/calculus.hpp"
#include "ampere/structure.hpp"

namespace ampere {

struct PshReport {
    bool is_psh = false;
    double tol = 0.0;
    double min_eigenvalue = 0.0;  ///< over the checked region
    /// Smallest eigenvalue of the Hermitian matrix of i∂∂̄u (normalised so
    /// that |z|² gives 1), per node; 0 where not evaluated.
    ScalarField min_eigenvalue_field;
    Mask evaluated;
    std::vector<Index4> violating_points;
};

/// 3h·(1 + ‖u‖_sup) with h the largest spacing (finite values only).
double default_psh_tol(const ScalarField& u);

/// Eigen-test of i∂∂̄u in the unitary coframe of ω over `region` (interior
/// mask by default) where the stencil is complete. tol < 0 selects the default.
PshReport is_psh(const AlmostComplexStructure& J, const HermitianForm& omega, const ScalarField& u, double tol = -1.0,
                 const Mask* region = nullptr);

/// Sub-mean-value cross-check along `count` random discrete J-circles
/// {x ± rξ, x ± rJξ} of radius `radius`: returns min over circles of
/// (circle mean − centre value); ≥ −O(h²) for psh u.
double disc_mean_defect(const AlmostComplexStructure& J, const ScalarField& u, double radius, int count = 20,
                        std::uint64_t seed = 11);

/// Separable Gaussian (σ = eps, truncated at 4σ, renormalised on the grid,
/// constant extension past the box) plus eps·|x|².
ScalarField mollify(const ScalarField& u, double eps);

/// mollify after checking that u is psh within the default tolerance;
/// throws "input not psh" otherwise.
ScalarField regularize(const AlmostComplexStructure& J, const HermitianForm& omega, const ScalarField& u, double eps);

/// Grid essential-limsup surrogate: fixed point of the spike clip
/// u ← min(u, max over the 3⁴ neighbourhood + tol) followed by the dip fill
/// u ← max(u, max over axes of min(u(x ± e_i)) − tol). Monotone and
/// idempotent. tol < 0 selects 0.5·h·(1 + ‖u‖_sup). With a region, nodes
/// outside it are left alone and are not read as neighbours.
ScalarField usc_regularize(const ScalarField& u, double tol = -1.0, const Mask* region = nullptr);

/// Samples of a map λ from a parameter disc into the grid box.
struct CurveSample {
    std::vector<double> s, t;          ///< parameter nodes
    std::vector<Point4> image;         ///< λ(s, t)
    std::vector<double> residual;      ///< ‖λ_t − J(λ)λ_s‖ per node
    int iterations = 0;

    double max_residual() const;
    /// CSV with columns s,t,x1,x2,x3,x4,residual.
    void write_csv(const std::string& path) const;
};

/// The J-invariant plane {z₂ = c} over the parameter disc |ζ| ≤ radius
/// centred at z₁ = 0, residual evaluated from the closed-form structure.
/// Throws when J has no model or the image leaves the box.
CurveSample model_curve(const AlmostComplexStructure& J, Complex c, double radius = 0.5, int rings = 8,
                        int spokes = 32);

/// Picard iteration for a J-holomorphic disc through p tangent to v:
///   λ^{k+1} = p + ζ·a + P[½ J₀(J(λ^k) − J₀) λ^k_s],
/// where the seed ζ·a is the (1,0)-part of s·v + t·J(p)v and P is the exact
/// right inverse ζ^aζ̄^b ↦ ζ^aζ̄^{b+1}/(b+1) of ∂̄ on polynomials. Each
/// iterate is a polynomial of bounded degree fitted on a polar grid, so the
/// residual is evaluated without differencing error. Throws "disc iteration
/// diverged" when max_iter is reached with residual > 1e−4 or the disc
/// leaves the box.
CurveSample jholomorphic_disc(const AlmostComplexStructure& J, const Point4& p, const Point4& v, double r,
                              int max_iter = 60);

}  // namespace ampere
