#pragma once

/// @file potential.hpp
/// @brief Plurisubharmonic envelopes, relative extremal functions,
/// capacities, the Monge–Ampère Dirichlet solver and comparison diagnostics.

#include <functional>
#include <string>
#include <vector>

#include "ampere/calculus.hpp"
#include "ampere/psh.hpp"
#include "ampere/structure.hpp"

namespace ampere {

struct EnvelopeParams {
    int directions = 16;          ///< complex tangent directions per node
    double stencil_radius = 3.0;  ///< circle radius in units of the largest spacing
    double stop_tol = 1e-7;       ///< sup change per sweep
    int max_sweeps = 5000;
    std::uint64_t seed = 1;
    /// Level-set function of Ω sampled on the grid (negative inside). Arms
    /// of a circle that leave Ω are cut at the zero crossing. When empty the
    /// crossing is taken halfway between an Ω node and a non-Ω node.
    ScalarField level;
};

struct EnvelopeResult {
    ScalarField u;
    int iterations = 0;
    double final_update = 0.0;
    bool converged = false;
    /// min over Ω of (min_ξ circle mean − u): the discrete sub-mean defect,
    /// ≥ −final_update at a fixed point.
    double psh_defect = 0.0;
    std::vector<double> sweep_updates;  ///< sup change of every sweep
};

/// The 16 (or m) unit directions ξ used by the envelope scheme, rotated by a
/// seed-derived angle. Each one spans a complex line together with J(x)ξ.
std::vector<Point4> envelope_directions(int m, std::uint64_t seed);

/// Largest discrete-psh function below the obstacle on Ω. Nodes outside Ω
/// keep the obstacle value. Red/black Gauss–Seidel on
///   u(x) ← min(obstacle(x), min_ξ ¼[u(x±rξ) + u(x±rJξ)]).
/// An arm cut at ∂Ω reads the obstacle there; each pair then contributes its
/// linear interpolant at x, and the two pairs are weighted by the inverse
/// products of their arm lengths so that the second-order term stays the
/// Laplacian of u on the complex line.
EnvelopeResult psh_envelope(const AlmostComplexStructure& J, const ScalarField& obstacle, const Mask& omega,
                            const EnvelopeParams& params = {});

/// Envelope of the obstacle 0 on Ω∖E, −1 on E (0 outside Ω), followed by
/// usc_regularize. Empty E gives u ≡ 0.
EnvelopeResult extremal_function(const AlmostComplexStructure& J, const Mask& E, const Mask& omega,
                                 const EnvelopeParams& params = {});

struct CapacityParams {
    EnvelopeParams envelope;
    int erosion = 3;         ///< Ω minus its (erosion·h)-neighbourhood of ∂Ω is integrated
    int candidates = 0;      ///< size of the direct lower-bound family (0 disables)
    std::uint64_t seed = 3;  ///< candidate family
};

struct CapacityEstimate {
    double envelope_value = 0.0;
    double direct_lower_bound = 0.0;
    double slack = 0.0;  ///< max(0, direct/envelope − 1)
    int resolution = 0;
    Mask mask_E;
    Mask mask_omega;
    Mask mask_region;  ///< where the envelope mass is integrated
    /// E fattened by the 3-node stencil reach lies inside mask_region, so the
    /// mass near ∂E is not cut off. Needs roughly dist(E, ∂Ω) > 6h.
    bool resolved = true;
    EnvelopeResult extremal;
    MeasureField mass;  ///< the integrand on its validity mask
};

/// cap(E, Ω) from the envelope: ∫ (i∂∂̄u*_E)² over Ω eroded by `erosion`
/// nodes, plus the best ∫_E (i∂∂̄c)² over a family of clamped quadratic
/// candidates −1 ≤ c ≤ 0.
CapacityEstimate capacity(const AlmostComplexStructure& J, const Mask& E, const Mask& omega,
                          const CapacityParams& params = {});

/// cap_ω(E, Ω) with integrand i∂∂̄u ∧ ω, same envelope and family.
CapacityEstimate cap_omega(const AlmostComplexStructure& J, const HermitianForm& omega_form, const Mask& E,
                           const Mask& omega, const CapacityParams& params = {});

/// Fraction of the MA(u*_E) mass over the integration region that lies
/// within `shell` (physical distance) of ∂E. With `absolute` the fraction of
/// the total variation ∫|MA| is returned instead.
double boundary_shell_fraction(const CapacityEstimate& cap, double shell, bool absolute = false);

/// Open r-neighbourhood of a node set (Euclidean distance between nodes).
Mask fatten(const GridDomain& d, const Mask& E, double r);

/// Ω minus every node within nodes·h (Euclidean, h the largest spacing) of
/// a node outside Ω. The capacity integral and the comparison diagnostics
/// work on this region; its complement in Ω is the boundary band.
Mask inner_region(const GridDomain& d, const Mask& omega, int nodes = 3);

struct OuterCapacity {
    std::vector<double> radii;
    std::vector<double> capacities;
    double fit_slope = 0.0;      ///< d log cap / d log r
    double extrapolated = 0.0;   ///< fitted cap at r = h
};

/// Capacities of {x ∈ Ω : dist(x, E) < r} for decreasing radii; the distance
/// is given in closed form (e.g. to a curve that is not a node set).
/// Throws "fattening under-resolved" for r below the grid spacing.
OuterCapacity outer_capacity(const AlmostComplexStructure& J, const std::function<double(const Point4&)>& distance,
                             const Mask& omega, const std::vector<double>& radii, const CapacityParams& params = {});
OuterCapacity outer_capacity(const AlmostComplexStructure& J, const Mask& E, const Mask& omega,
                             const std::vector<double>& radii, const CapacityParams& params = {});

// ---------------------------------------------------------------------------

struct DirichletParams {
    double eps = 1e-6;          ///< h(u) ⪰ εI along the iteration
    double tol = 1e-9;          ///< residual target, relative to 1 + max g
    int max_newton = 60;
    double linear_tol = 1e-10;
    int max_linear = 2000;
};

struct DirichletResult {
    ScalarField u;
    double residual = 0.0;        ///< sup |det h(u) − g| on the unknowns
    double boundary_error = 0.0;  ///< sup |u − φ| on the fixed nodes
    int newton_steps = 0;
    double min_eigenvalue = 0.0;  ///< of h(u)/2 over the unknowns
    /// Unknowns where g is below ε(tr h − ε), the least determinant allowed
    /// by h ⪰ εI. The convergence test uses max(g, ε(tr h − ε)) as target;
    /// `residual` above is always against g itself.
    std::size_t floor_nodes = 0;
};

/// Solves det h(u) = f / density(ω²) on the interior mask, u = φ on every
/// other node. h(u) is the Hermitian matrix of i∂∂̄u in the unitary coframe.
/// Newton with the exact Jacobian tr(adj h · h(δu)), BiCGSTAB inner solves,
/// and a line search that keeps h ⪰ εI; the boundary values move to φ as
/// part of the Newton step. Throws "solver stalled", "f negative".
DirichletResult dirichlet_solve(const AlmostComplexStructure& J, const HermitianForm& omega, const ScalarField& phi,
                                const MeasureField& f, const DirichletParams& params = {});

/// The Hermitian matrix of i∂∂̄u at a node for a closed-form u, with both
/// derivatives taken by centred differences of step `delta` and J from the
/// closed-form model (continuous reference for manufactured solutions).
std::array<Complex, 4> continuous_hermitian(const AlmostComplexStructure& J, const HermitianForm& omega,
                                            const ScalarFn& u, std::size_t node, double delta = 1e-3);

/// MA density det h · density(ω²) of a closed-form u at every node.
MeasureField continuous_monge_ampere(const AlmostComplexStructure& J, const HermitianForm& omega, const ScalarFn& u,
                                     double delta = 1e-3);

// ---------------------------------------------------------------------------

struct ComparisonSides {
    double lhs = 0.0;  ///< ∫_{u<v} (i∂∂̄v)² + 2θ̄∂v∧θ∂̄v
    double rhs = 0.0;  ///< ∫_{u<v} (i∂∂̄u)² + 2θ̄∂u∧θ∂̄u
    double total_mass = 0.0;  ///< ∫_Ω of both integrands' absolute values
    std::size_t set_size = 0;
};

/// Requires u ≥ v on the band Ω ∖ inner_region(Ω, 3) ("hypothesis fails").
ComparisonSides comparison_check(const AlmostComplexStructure& J, const ScalarField& u, const ScalarField& v,
                                 const Mask& omega);

/// cap(K ∩ {|u − u_k| > t}) for each k. Requires u_k ≥ u_{k+1} ≥ u.
std::vector<double> convergence_in_capacity(const AlmostComplexStructure& J, const std::vector<ScalarField>& family,
                                            const ScalarField& u, double t, const Mask& K, const Mask& omega,
                                            const CapacityParams& params = {});

}  // namespace ampere
