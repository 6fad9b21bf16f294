#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>

#include "ampere/potential.hpp"

namespace ampere {

namespace {

constexpr Complex kI(0.0, 1.0);

/// Hermitian 2×2 matrix stored as (a, c, b) with h = [[a, b], [b̄, c]].
struct Herm {
    double a = 0.0, c = 0.0;
    Complex b;

    double det() const { return a * c - std::norm(b); }
    double min_eig() const { return 0.5 * (a + c) - std::sqrt(0.25 * (a - c) * (a - c) + std::norm(b)); }
};

/// A_ab[j][l] = U_a[j]·Ū_b[l] − U_a[l]·Ū_b[j], the evaluation of dx^j∧dx^l.
using Pairing = std::array<std::array<std::array<Complex, 4>, 4>, 4>;

Pairing pairing(const PointFrame& f) {
    Pairing A{};
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int j = 0; j < 4; ++j)
                for (int l = 0; l < 4; ++l)
                    A[2 * a + b][j][l] = f.dual[a][j] * std::conj(f.dual[b][l]) - f.dual[a][l] * std::conj(f.dual[b][j]);
    return A;
}

/// Contribution of one second-difference term u(x + s e_j + t e_m) with
/// weight w, where the outer difference is taken at y = x + s e_j and J(y)
/// enters through Π^{0,1}: h_ab += w Σ_l ½(δ_lm + iJ_y[4m + l]) A_ab[j][l].
std::array<Complex, 4> term(const Pairing& A, const double* Jy, int j, int m, double w) {
    std::array<Complex, 4> r{};
    for (int l = 0; l < 4; ++l) {
        const Complex p = 0.5 * (Complex(l == m ? 1.0 : 0.0) + kI * Jy[4 * m + l]);
        if (p == Complex(0.0)) continue;
        for (int ab = 0; ab < 4; ++ab) r[ab] += w * p * A[ab][j][l];
    }
    return r;
}

Herm to_herm(const std::array<Complex, 4>& H) {
    Herm h;
    h.a = H[0].real();
    h.c = H[3].real();
    h.b = 0.5 * (H[1] + std::conj(H[2]));
    return h;
}

/// Offsets ±e_j ± e_m (33 distinct) and their slots.
struct OffsetTable {
    std::vector<Index4> offsets;
    std::array<int, 625> slot{};

    OffsetTable() {
        slot.fill(-1);
        for (int j = 0; j < 4; ++j)
            for (int s = -1; s <= 1; s += 2)
                for (int m = 0; m < 4; ++m)
                    for (int t = -1; t <= 1; t += 2) {
                        Index4 o{0, 0, 0, 0};
                        o[j] += s;
                        o[m] += t;
                        const int key = code(o);
                        if (slot[key] < 0) {
                            slot[key] = static_cast<int>(offsets.size());
                            offsets.push_back(o);
                        }
                    }
    }
    static int code(const Index4& o) { return (((o[0] + 2) * 5 + o[1] + 2) * 5 + o[2] + 2) * 5 + o[3] + 2; }
};

const OffsetTable& offset_table() {
    static const OffsetTable t;
    return t;
}

/// Per-node linear map u ↦ h(u): for each of the 33 offsets a Hermitian weight.
struct NodeStencil {
    std::array<Herm, 33> w;
};

NodeStencil node_stencil(const AlmostComplexStructure& J, const HermitianForm& omega, std::size_t k) {
    const GridDomain& d = *J.domain();
    const OffsetTable& tab = offset_table();
    const Pairing A = pairing(omega.unitary(k));
    std::array<std::array<Complex, 4>, 33> acc{};
    const Index4 i = d.unflat(k);
    for (int j = 0; j < 4; ++j)
        for (int s = -1; s <= 1; s += 2) {
            Index4 y = i;
            y[j] += s;
            const double* Jy = J.J_data(d.flat(y));
            for (int m = 0; m < 4; ++m)
                for (int t = -1; t <= 1; t += 2) {
                    Index4 o{0, 0, 0, 0};
                    o[j] += s;
                    o[m] += t;
                    const double w = (s * t) / (4.0 * d.spacing()[j] * d.spacing()[m]);
                    const auto c = term(A, Jy, j, m, w);
                    auto& dst = acc[tab.slot[OffsetTable::code(o)]];
                    for (int ab = 0; ab < 4; ++ab) dst[ab] += c[ab];
                }
        }
    NodeStencil st;
    for (int q = 0; q < 33; ++q) st.w[q] = to_herm(acc[q]);
    return st;
}

Herm apply(const NodeStencil& st, const std::array<std::ptrdiff_t, 33>& delta, const double* u, std::size_t k) {
    Herm h;
    for (int q = 0; q < 33; ++q) {
        const double v = u[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(k) + delta[q])];
        h.a += st.w[q].a * v;
        h.c += st.w[q].c * v;
        h.b += st.w[q].b * v;
    }
    return h;
}

}  // namespace

std::array<Complex, 4> continuous_hermitian(const AlmostComplexStructure& J, const HermitianForm& omega,
                                            const ScalarFn& u, std::size_t node, double delta) {
    if (!J.model()) throw Error("continuous reference needs a closed-form structure");
    const GridDomain& d = *J.domain();
    const Point4 x = d.point(node);
    const Pairing A = pairing(omega.unitary(node));
    std::array<Complex, 4> H{};
    for (int j = 0; j < 4; ++j)
        for (int s = -1; s <= 1; s += 2) {
            Point4 y = x;
            y[j] += s * delta;
            const Mat4 Jy = model_J(*J.model(), y);
            for (int m = 0; m < 4; ++m)
                for (int t = -1; t <= 1; t += 2) {
                    Point4 z = y;
                    z[m] += t * delta;
                    const double w = (s * t) / (4.0 * delta * delta) * u(z);
                    const auto c = term(A, Jy.data(), j, m, w);
                    for (int ab = 0; ab < 4; ++ab) H[ab] += c[ab];
                }
        }
    return H;
}

MeasureField continuous_monge_ampere(const AlmostComplexStructure& J, const HermitianForm& omega, const ScalarFn& u,
                                     double delta) {
    MeasureField m(J.domain());
    for (std::size_t k = 0; k < J.domain()->size(); ++k) {
        const Herm h = to_herm(continuous_hermitian(J, omega, u, k, delta));
        m.density[k] = h.det() * omega.omega_squared_density(k);
        m.valid[k] = 1;
    }
    return m;
}

DirichletResult dirichlet_solve(const AlmostComplexStructure& J, const HermitianForm& omega, const ScalarField& phi,
                                const MeasureField& f, const DirichletParams& params) {
    const DomainPtr& dom = phi.domain;
    const GridDomain& d = *dom;
    if (!d.same_shape(*J.domain()) || !d.same_shape(*f.domain)) throw Error("shape mismatch");
    for (double v : phi.values)
        if (!std::isfinite(v)) throw Error("boundary data must be finite");

    const Mask& interior = d.interior_mask();
    std::vector<std::size_t> unknowns;
    std::vector<std::int64_t> index(d.size(), -1);
    for (std::size_t k = 0; k < d.size(); ++k)
        if (interior[k] && d.face_distance(d.unflat(k)) >= 2) {
            index[k] = static_cast<std::int64_t>(unknowns.size());
            unknowns.push_back(k);
        }
    if (unknowns.empty()) throw Error("degenerate domain");
    const std::size_t N = unknowns.size();

    // Right-hand side det h = f / density(ω²).
    std::vector<double> g(N);
    double gmax = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
        const std::size_t k = unknowns[n];
        if (!f.valid[k]) throw Error("f undefined at an interior node");
        g[n] = f.density[k] / omega.omega_squared_density(k);
        gmax = std::max(gmax, std::abs(g[n]));
    }
    for (double& v : g) {
        if (v < -1e-12 * (1.0 + gmax)) throw Error("f negative");
        v = std::max(v, 0.0);
    }
    const double tol = params.tol * (1.0 + gmax);

    const OffsetTable& tab = offset_table();
    std::array<std::ptrdiff_t, 33> delta{};
    for (int q = 0; q < 33; ++q) {
        std::ptrdiff_t s = 0;
        for (int a = 0; a < 4; ++a) s += tab.offsets[q][a] * static_cast<std::ptrdiff_t>(d.strides()[a]);
        delta[q] = s;
    }
    std::vector<NodeStencil> stencils(N);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(N); ++n) stencils[n] = node_stencil(J, omega, unknowns[n]);

    auto eval = [&](const std::vector<double>& u, std::vector<Herm>& h) {
        h.resize(N);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(N); ++n)
            h[n] = apply(stencils[n], delta, u.data(), unknowns[n]);
    };
    auto min_eig = [&](const std::vector<Herm>& h) {
        double m = std::numeric_limits<double>::infinity();
        for (const Herm& x : h) m = std::min(m, x.min_eig());
        return m;
    };
    // Under h ⪰ εI the determinant cannot drop below ε(tr h − ε). Where g is
    // below that floor the node equation becomes det(h − εI) = 0, i.e.
    // λ_min(h) = ε; both branches agree at the switch. Only degenerate data
    // such as f = 0 ever reaches the floor.
    auto on_floor = [&](const Herm& x, double gn) { return gn < params.eps * (x.a + x.c - params.eps); };
    auto shifted = [&](const Herm& x, double gn) {
        Herm y = x;
        if (on_floor(x, gn)) {
            y.a -= params.eps;
            y.c -= params.eps;
        }
        return y;
    };
    auto node_residual = [&](const Herm& x, double gn) {
        return on_floor(x, gn) ? shifted(x, gn).det() : x.det() - gn;
    };
    auto residual = [&](const std::vector<Herm>& h) {
        double r = 0.0;
        for (std::size_t n = 0; n < N; ++n) r = std::max(r, std::abs(node_residual(h[n], g[n])));
        return r;
    };

    // Start from φ + s|x|² with s large enough for h ⪰ 2εI.
    const ScalarField quad = ScalarField::sample(dom, [](const Point4& x) {
        return x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
    });
    std::vector<Herm> h;
    eval(phi.values, h);
    const double lam_phi = min_eig(h);
    eval(quad.values, h);
    const double lam_quad = min_eig(h);
    if (!(lam_quad > 0.0)) throw Error("|x|² not strictly psh for this structure");
    const double s0 = std::max(0.0, (2.0 * params.eps - lam_phi) / lam_quad) + 0.01;
    std::vector<double> u(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) u[k] = phi[k] + s0 * quad[k];

    DirichletResult res;
    eval(u, h);
    double rnorm = residual(h);
    bool boundary_done = false;
    using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(N * 33);
    for (int it = 0; it < params.max_newton; ++it) {
        if (boundary_done && rnorm <= tol) break;
        // Newton system for the unknowns with the boundary moving to φ.
        trip.clear();
        Eigen::VectorXd rhs(N);
        for (std::size_t n = 0; n < N; ++n) {
            const Herm hn = shifted(h[n], g[n]);
            double b = -node_residual(h[n], g[n]);
            const std::size_t k = unknowns[n];
            for (int q = 0; q < 33; ++q) {
                const Herm& w = stencils[n].w[q];
                const double jac = hn.c * w.a + hn.a * w.c - 2.0 * (std::conj(hn.b) * w.b).real();
                const std::size_t kk = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(k) + delta[q]);
                if (index[kk] >= 0)
                    trip.emplace_back(static_cast<int>(n), static_cast<int>(index[kk]), jac);
                else
                    b -= jac * (phi[kk] - u[kk]);
            }
            rhs[n] = b;
        }
        SpMat A(N, N);
        A.setFromTriplets(trip.begin(), trip.end());
        // Jacobi-preconditioned BiCGSTAB first. When h is nearly degenerate
        // (small f) its direction can be too poor for the line search, and
        // the step is recomputed with an ILUT preconditioner.
        auto solve = [&](bool strong) {
            Eigen::VectorXd x;
            if (!strong) {
                Eigen::BiCGSTAB<SpMat, Eigen::DiagonalPreconditioner<double>> solver;
                solver.setTolerance(params.linear_tol);
                solver.setMaxIterations(params.max_linear);
                solver.compute(A);
                x = solver.solve(rhs);
                if (solver.info() != Eigen::Success) x.resize(0);
            } else {
                Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> solver;
                solver.preconditioner().setDroptol(1e-4);
                solver.preconditioner().setFillfactor(4);
                solver.setTolerance(params.linear_tol);
                solver.setMaxIterations(params.max_linear);
                solver.compute(A);
                if (solver.info() != Eigen::Success) throw Error("solver stalled");
                x = solver.solve(rhs);
            }
            return x;
        };

        // Line search: keep h ⪰ εI; once the boundary is reached also
        // require a decrease of the residual.
        double alpha = 1.0;
        std::vector<double> trial(d.size());
        std::vector<Herm> ht;
        double rt = 0.0;
        bool accepted = false;
        double step = 0.0;
        for (int pass = 0; pass < 2 && !accepted; ++pass) {
            const Eigen::VectorXd du = solve(pass == 1);
            if (du.size() == 0 || !du.allFinite()) {
                if (pass == 1) throw Error("solver stalled");
                continue;
            }
            alpha = 1.0;
            for (int ls = 0; ls < 40; ++ls) {
                for (std::size_t k = 0; k < d.size(); ++k)
                    trial[k] = index[k] >= 0 ? u[k] + alpha * du[index[k]] : u[k] + alpha * (phi[k] - u[k]);
                eval(trial, ht);
                rt = residual(ht);
                if (min_eig(ht) >= params.eps && (!boundary_done || rt < rnorm * (1.0 - 1e-4 * alpha))) {
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            step = alpha * du.cwiseAbs().maxCoeff();
            // A heavily damped step after the boundary is in place signals a
            // poor direction: retry with the stronger preconditioner.
            if (pass == 0 && boundary_done && alpha < 0.25) accepted = false;
        }
        if (!accepted || (step < 1e-14 && rt > tol)) throw Error("solver stalled");
        u.swap(trial);
        h.swap(ht);
        rnorm = rt;
        if (alpha == 1.0) boundary_done = true;
        res.newton_steps = it + 1;
    }
    if (!(boundary_done && rnorm <= tol)) throw Error("solver stalled");

    res.u = ScalarField(dom, std::move(u));
    for (std::size_t n = 0; n < N; ++n) {
        res.residual = std::max(res.residual, std::abs(h[n].det() - g[n]));
        if (on_floor(h[n], g[n])) ++res.floor_nodes;
    }
    for (std::size_t k = 0; k < d.size(); ++k)
        if (index[k] < 0) res.boundary_error = std::max(res.boundary_error, std::abs(res.u[k] - phi[k]));
    res.min_eigenvalue = 0.5 * min_eig(h);
    return res;
}

}  // namespace ampere
