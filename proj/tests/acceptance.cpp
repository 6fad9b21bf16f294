/// Acceptance run: one PASS/FAIL line per criterion. Arguments select a
/// subset of criteria (default all). Exit status 1 when any selected
/// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "ampere/lab.hpp"
#include "oracles.hpp"

using namespace ampere;
using namespace ampere::lab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

DomainPtr box(int n, double a) {
    Box4 b;
    for (auto& i : b) i = {-a, a};
    return GridDomain::build(b, {n, n, n, n});
}

double abs_z2(const Point4& x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]; }

double sup_coeff(const FormField& f, const Mask& region) {
    double m = 0.0;
    for (std::size_t k = 0; k < f.valid.size(); ++k) {
        if (!f.valid[k] || !region[k]) continue;
        for (int c = 0; c < f.components; ++c) m = std::max(m, std::abs(f.at(k)[c]));
    }
    return m;
}

/// Smooth test functions: a quadratic plus bounded trigonometric and
/// exponential terms with random coefficients.
struct Smooth {
    double a[4], b[4], k[4], q;
    double operator()(const Point4& x) const {
        double s = q * abs_z2(x);
        for (int i = 0; i < 4; ++i) s += a[i] * std::sin(k[i] * x[i] + b[i]);
        return s + 0.3 * std::exp(0.5 * (a[0] * x[0] + a[2] * x[2])) * std::cos(x[1] - x[3]);
    }
};

Smooth random_smooth(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Smooth s;
    for (int i = 0; i < 4; ++i) {
        s.a[i] = U(rng);
        s.b[i] = 3.0 * U(rng);
        s.k[i] = 1.5 + U(rng);
    }
    s.q = 1.0 + 0.5 * U(rng);
    return s;
}

fs::path source_dir() { return fs::path(AMPERE_SOURCE_DIR); }
fs::path out_root() { return fs::path(AMPERE_BINARY_DIR) / "acceptance-out"; }

LabConfig config_from(const std::string& file, const std::string& experiment, Json params = Json::object(),
                      std::function<void(Json&)> edit = {}) {
    std::ifstream in(source_dir() / "configs" / file);
    Json doc = Json::parse(in);
    doc["experiment"] = experiment;
    doc["params"] = params;
    if (edit) edit(doc);
    return parse_config(doc);
}

std::string checks_text(const ExperimentReport& r) {
    std::string s;
    for (const Check& c : r.checks) s += fmt(" %s=%.4g(%s)", c.name.c_str(), c.value, c.pass ? "ok" : "FAIL");
    return s;
}

// ---------------------------------------------------------------------------

Outcome integrable_reduction() {
    Stopwatch sw;
    const auto d = box(17, 1.1);
    const auto J = make_structure(ModelSpec::standard(), d);
    const Mask all(d->size(), 1);
    std::mt19937_64 rng(1);
    double worst_theta = 0.0, worst_ddc = 0.0, worst_alt = 0.0;
    for (int t = 0; t < 3; ++t) {
        const ScalarField u = ScalarField::sample(d, random_smooth(rng)), v = ScalarField::sample(d, random_smooth(rng));
        for (const ScalarField* f : {&u, &v}) {
            const FormField z = scalar_form(*f);
            worst_theta = std::max(worst_theta, sup_coeff(theta(J, del_bar(J, z)), all));
            worst_theta = std::max(worst_theta, sup_coeff(theta_bar(J, del(J, z)), all));
            worst_theta = std::max(worst_theta, torsion_square(J, *f).max_abs_over(all));
            worst_ddc = std::max(worst_ddc, (ddc_squared(J, *f) - monge_ampere(J, *f)).max_abs_over(all));
        }
        worst_alt = std::max(worst_alt, (ma_wedge(J, u, v) - ma_wedge_alt(J, u, v)).max_abs_over(all));
    }
    const double secs = sw.seconds();
    const bool ok = worst_theta <= 1e-12 && worst_ddc <= 1e-12 && worst_alt <= 1e-12 && secs < 10.0;
    return {ok, fmt("sup theta terms %.2e, |ddc^2 - MA| %.2e, |five-term variants| %.2e, %.1f s (n=17)", worst_theta,
                    worst_ddc, worst_alt, secs)};
}

Outcome quadratic_exactness() {
    const auto d = box(17, 1.1);
    const auto J = make_structure(ModelSpec::standard(), d);
    const MeasureField m = monge_ampere(J, ScalarField::sample(d, abs_z2));
    double worst = 0.0;
    std::size_t nodes = 0;
    for (std::size_t k = 0; k < d->size(); ++k)
        if (m.valid[k] && d->interior_mask()[k]) {
            worst = std::max(worst, std::abs(m.density[k] - 8.0) / 8.0);
            ++nodes;
        }
    return {nodes > 0 && worst <= 1e-10, fmt("max relative deviation from 8: %.2e over %zu nodes", worst, nodes)};
}

Outcome wedge_symmetry() {
    Stopwatch sw;
    std::mt19937_64 rng(3);
    std::vector<std::pair<Smooth, Smooth>> pairs;
    for (int i = 0; i < 20; ++i) {
        const Smooth a = random_smooth(rng);
        pairs.push_back({a, random_smooth(rng)});
    }
    std::vector<std::vector<double>> sym(20), nai(20);
    std::vector<double> hs;
    for (int n : {9, 17, 33}) {
        const auto d = box(n, 1.1);
        const auto J = make_structure(ModelSpec::twisted(0.5), d);
        // a fixed physical region, nodes shared by all three grids
        Box4 r;
        for (auto& i : r) i = {-0.3, 0.3};
        const Mask R = d->box_mask(r);
        hs.push_back(d->max_spacing());
        for (int p = 0; p < 20; ++p) {
            const ScalarField u = ScalarField::sample(d, pairs[p].first), v = ScalarField::sample(d, pairs[p].second);
            const MeasureField uv = ma_wedge(J, u, v);
            sym[p].push_back((uv - ma_wedge(J, v, u)).max_abs_over(R));
            nai[p].push_back((uv - naive_wedge(J, u, v)).max_abs_over(R));
        }
    }
    double min_sym = 1e300, min_nai = 1e300;
    for (int p = 0; p < 20; ++p) {
        min_sym = std::min(min_sym, oracle::loglog_slope(hs, sym[p]));
        min_nai = std::min(min_nai, oracle::loglog_slope(hs, nai[p]));
    }
    const double secs = sw.seconds();
    return {min_sym >= 1.8 && min_nai >= 1.0 && secs < 300.0,
            fmt("min symmetry slope %.3f, min formula-vs-naive slope %.3f over 20 pairs, %.0f s", min_sym, min_nai,
                secs)};
}

Outcome torsion_inequality() {
    const auto d = GridDomain::build(box(17, 1.1)->bbox(), {17, 17, 17, 17},
                                     [](const Point4& x) { return abs_z2(x) - 1.0; });
    const auto J = make_structure(ModelSpec::twisted(0.5), d);
    const HermitianForm w = make_hermitian_form(J);
    const Mask region = d->erode(d->interior_mask(), 1);
    const C0Estimate c0 = c0_estimate(J, w, region);
    std::mt19937_64 rng(4);
    std::size_t violations = 0, checked = 0;
    double worst = -1e300;
    for (int t = 0; t < 100; ++t) {
        const TorsionSides s = torsion_sides(J, w, ScalarField::sample(d, random_smooth(rng)));
        for (std::size_t k = 0; k < d->size(); ++k)
            if (region[k] && s.lhs.valid[k] && s.rhs.valid[k]) {
                const double e = s.lhs.density[k] - c0.value * s.rhs.density[k];
                worst = std::max(worst, e);
                violations += e > 1e-10;
                ++checked;
            }
    }
    return {violations == 0,
            fmt("c0 = %.6f (lower bound); %zu violations in %zu node checks, worst excess %.2e", c0.value, violations,
                checked, worst)};
}

/// Shared by the capacity anchor and the support lemma.
struct BallRun {
    CapacityEstimate cap;
    double sup_error = 0.0;
    double fraction = 0.0;
    double seconds = 0.0;
    double h = 0.0;
};

BallRun ball_run(const ModelSpec& m, int n) {
    static std::map<std::pair<int, int>, BallRun> cache;
    const auto key = std::make_pair(m.kind == ModelSpec::Kind::Standard ? 0 : 1, n);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    Stopwatch sw;
    const auto d = box(n, 1.1);
    const auto J = make_structure(m, d);
    const Mask om = ball_mask(*d, {0, 0, 0, 0}, 1.0, false), E = ball_mask(*d, {0, 0, 0, 0}, 0.5, true);
    BallRun r;
    r.cap = capacity(J, E, om);
    r.seconds = sw.seconds();
    r.h = d->max_spacing();
    for (std::size_t k = 0; k < d->size(); ++k)
        if (om[k]) r.sup_error = std::max(r.sup_error, std::abs(r.cap.extremal.u[k] - oracle::extremal_ball(d->point(k), 0.5)));
    r.fraction = boundary_shell_fraction(r.cap, 3.0 * r.h);
    cache[key] = r;
    return r;
}

Outcome capacity_anchor() {
    const double oracle_mass = oracle::extremal_ball_mass(0.5);
    const BallRun r = ball_run(ModelSpec::standard(), 33);
    const double rel = r.cap.envelope_value / oracle_mass - 1.0;
    const bool ok = r.sup_error <= 5.0 * r.h && std::abs(rel) <= 0.10 && r.seconds < 300.0;
    return {ok, fmt("sup |u - oracle| %.4f (5h = %.4f), capacity %.4f vs oracle %.4f (%+.1f%%), %.0f s", r.sup_error,
                    5.0 * r.h, r.cap.envelope_value, oracle_mass, 100.0 * rel, r.seconds)};
}

Outcome support_lemma() {
    std::string detail;
    bool ok = true;
    for (const ModelSpec& m : {ModelSpec::standard(), ModelSpec::twisted(0.5)}) {
        const double f17 = ball_run(m, 17).fraction, f33 = ball_run(m, 33).fraction;
        ok = ok && f33 >= 0.9 && f33 >= f17;
        detail += fmt("%s %.3f -> %.3f; ", m.name().c_str(), f17, f33);
    }
    return {ok, "3h-shell mass fraction n=17 -> 33: " + detail};
}

Outcome experiment_outcome(const std::vector<std::pair<std::string, LabConfig>>& runs, const std::string& extra = {}) {
    bool ok = true;
    std::string detail;
    for (const auto& [label, cfg] : runs) {
        Stopwatch sw;
        const ExperimentReport r = run_experiment(cfg.experiment, cfg);
        write_report(r, (out_root() / (cfg.experiment + "-" + label)).string());
        ok = ok && r.passed() && !r.checks.empty();
        detail += label + ":" + checks_text(r) + fmt(" [%.0f s]; ", sw.seconds());
    }
    return {ok, detail + extra};
}

Outcome cln() {
    return experiment_outcome({{"standard", config_from("base.json", "cln")}, {"twist", config_from("twist05.json", "cln")}});
}

Outcome increasing() {
    return experiment_outcome({{"standard", config_from("base.json", "increasing-convergence")},
                               {"twist", config_from("twist05.json", "increasing-convergence")}});
}

Outcome decreasing_capacity() {
    return experiment_outcome({{"standard", config_from("base.json", "decreasing-capacity")}});
}

Outcome curve() { return experiment_outcome({{"twist", config_from("twist05.json", "curve-pluripolarity")}}); }

Outcome quasicontinuity() { return experiment_outcome({{"twist", config_from("twist05.json", "quasicontinuity")}}); }

Outcome comparison() {
    auto at25 = [](Json& doc) { doc["domain"]["resolutions"] = {25}; };
    return experiment_outcome({{"standard", config_from("base.json", "comparison", Json::object(), at25)},
                               {"twist", config_from("twist05.json", "comparison", Json::object(), at25)}});
}

Outcome dirichlet() {
    Stopwatch sw;
    const LabConfig tw = config_from("dirichlet.json", "dirichlet-accuracy");
    const LabConfig st = config_from("dirichlet.json", "dirichlet-accuracy", Json::object(),
                                     [](Json& doc) { doc["model"] = {{"kind", "standard"}}; });
    bool ok = true;
    std::string detail;
    for (const auto& [label, cfg] : {std::make_pair(std::string("standard"), st), std::make_pair(std::string("twist"), tw)}) {
        Stopwatch leg;
        const ExperimentReport r = run_experiment(cfg.experiment, cfg);
        write_report(r, (out_root() / ("dirichlet-accuracy-" + label)).string());
        const double secs = leg.seconds();
        ok = ok && r.passed() && r.fits.contains("pluriharmonic_C") && secs < 600.0;
        detail += label + fmt(": order %.3f, pluriharmonic C %.3g [%.0f s]; ", r.fits["order"].get<double>(),
                              r.fits["pluriharmonic_C"].get<double>(), secs);
    }
    return {ok, detail};
}

Outcome determinism() {
    const std::vector<LabConfig> cfgs = {
        config_from("twist05.json", "cln", {{"pairs", 5}}, [](Json& d) { d["domain"]["resolutions"] = {9}; }),
        config_from("twist05.json", "comparison", {{"trials", 10}}, [](Json& d) { d["domain"]["resolutions"] = {17}; }),
        config_from("dirichlet.json", "dirichlet-accuracy", Json::object(),
                    [](Json& d) { d["domain"]["resolutions"] = {9, 17}; }),
    };
    bool ok = true;
    std::size_t files = 0;
    std::string detail;
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    };
    for (const LabConfig& c : cfgs) {
        const fs::path a = out_root() / ("determinism-" + c.experiment + "-a"), b = out_root() / ("determinism-" + c.experiment + "-b");
        fs::remove_all(a);
        fs::remove_all(b);
        write_report(run_experiment(c.experiment, c), a.string());
        write_report(run_experiment(c.experiment, c), b.string());
        for (const auto& e : fs::directory_iterator(a)) {
            if (e.path().extension() != ".csv") continue;
            ++files;
            const bool same = slurp(e.path()) == slurp(b / e.path().filename());
            if (!same) detail += " differs: " + c.experiment + "/" + e.path().filename().string();
            ok = ok && same;
        }
    }
    return {ok && files > 0, fmt("%zu CSV files compared over 3 experiments", files) + detail};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"integrable reduction", integrable_reduction},
        {"quadratic exactness", quadratic_exactness},
        {"wedge symmetry and formula consistency", wedge_symmetry},
        {"pointwise torsion inequality", torsion_inequality},
        {"classical capacity anchor", capacity_anchor},
        {"support lemma", support_lemma},
        {"CLN ratios", cln},
        {"increasing-sequence convergence", increasing},
        {"decreasing-sequence convergence in capacity", decreasing_capacity},
        {"curve pluripolarity", curve},
        {"quasi-continuity", quasicontinuity},
        {"comparison principle", comparison},
        {"Dirichlet accuracy", dirichlet},
        {"determinism", determinism},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
    fs::create_directories(out_root());
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("criterion %2d %s  %s: %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
