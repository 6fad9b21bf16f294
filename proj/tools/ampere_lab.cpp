#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "ampere/field_io.hpp"
#include "ampere/lab.hpp"

using namespace ampere;
using namespace ampere::lab;

namespace {

constexpr int kOk = 0, kFailed = 1, kUsage = 2;

struct Globals {
    std::string config;
    std::string out_dir;
    int resolution = 0;
    double tol = 0.0;
    long long seed = -1;
};

LabConfig resolve(const Globals& g) {
    if (g.config.empty()) throw ConfigError("--config is required");
    if (!std::filesystem::exists(g.config)) throw ConfigError("config not found: " + g.config);
    LabConfig c = load_config(g.config);
    if (!g.out_dir.empty()) c.output_dir = g.out_dir;
    if (g.resolution != 0) {
        if (g.resolution < 5 || g.resolution > 129) throw ConfigError("--resolution must be in 5..129");
        c.resolutions = {g.resolution};
    }
    if (g.tol != 0.0) {
        if (!(g.tol > 0.0)) throw ConfigError("--tol must be positive");
        c.tol = g.tol;
    }
    if (g.seed >= 0) c.seed = static_cast<std::uint64_t>(g.seed);
    return c;
}

/// Parameters of the non-experiment subcommands, with their defaults.
Json command_params(const LabConfig& c, const Json& defaults) {
    Json p = defaults;
    if (!c.experiment.empty()) return p;
    for (auto it = c.params.begin(); it != c.params.end(); ++it) {
        if (!p.contains(it.key())) throw ConfigError("invalid config: unknown parameter '" + it.key() + "'");
        if (p[it.key()].is_number() != it.value().is_number() || p[it.key()].is_string() != it.value().is_string())
            throw ConfigError("invalid config: params." + it.key() + " has the wrong type");
        p[it.key()] = it.value();
    }
    return p;
}

void write_json(const std::string& dir, const std::string& file, const Json& j) {
    std::filesystem::create_directories(dir);
    std::ofstream out(std::filesystem::path(dir) / file);
    if (!out) throw Error("cannot write " + file);
    out << j.dump(2) << "\n";
}

int validate_structure(const LabConfig& c) {
    const DomainPtr d = make_domain(c, c.resolutions.front());
    const auto J = make_structure(c.model, d);
    const StructureReport r = validate_structure(J);
    const NijenhuisField N = nijenhuis(J);
    const double nmax = N.max_magnitude(d->interior_mask());
    std::cout << "model " << c.model.name() << " n=" << d->resolution()[0] << "\n"
              << "max |J^2 + I|_F = " << format_number(r.max_defect) << "\n"
              << "max |N| = " << format_number(nmax) << "\n"
              << (r.is_valid ? "valid" : "INVALID") << "\n";
    return r.is_valid ? kOk : kFailed;
}

ScalarField named_function(const std::string& name, const DomainPtr& d) {
    if (name == "quadratic")
        return ScalarField::sample(d, [](const Point4& x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]; });
    if (name == "abs_z1") return ScalarField::sample(d, [](const Point4& x) { return std::hypot(x[0], x[1]); });
    if (name == "abs_z")
        return ScalarField::sample(d, [](const Point4& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]); });
    if (name == "log_z1") return ScalarField::sample(d, [](const Point4& x) { return std::max(std::log(std::hypot(x[0], x[1])), -10.0); });
    throw ConfigError("invalid config: params.u must be quadratic, abs_z1, abs_z or log_z1");
}

int run_ma(const LabConfig& c, const std::string& field) {
    const Json p = command_params(c, {{"u", "quadratic"}});
    const DomainPtr d = make_domain(c, c.resolutions.front());
    const auto J = make_structure(c.model, d);
    const ScalarField u = field.empty() ? named_function(p["u"], d) : load_scalar(field, d);
    const MeasureField m = monge_ampere(J, u);
    const Mask om = omega_mask(c, *d);
    Json j{{"command", "ma"}, {"config", c.to_json()}, {"u", field.empty() ? p["u"].get<std::string>() : field},
           {"mass_over_omega", integrate(m, om)}, {"min_density", m.min_over(om)}, {"max_abs_density", m.max_abs_over(om)}};
    write_json(c.output_dir, "ma.json", j);
    save_field(m, (std::filesystem::path(c.output_dir) / "ma.field").string());
    std::cout << "mass over Omega = " << format_number(j["mass_over_omega"].get<double>()) << "\n";
    return kOk;
}

int run_capacity(const LabConfig& c, bool extremal_only) {
    const Json p = command_params(c, {{"E_radius", 0.5}, {"candidates", 0}});
    const DomainPtr d = make_domain(c, c.resolutions.front());
    const auto J = make_structure(c.model, d);
    const Mask om = omega_mask(c, *d);
    const Mask E = ball_mask(*d, {0, 0, 0, 0}, p["E_radius"].get<double>(), true);
    CapacityParams cp;
    cp.envelope.stop_tol = c.tol;
    cp.envelope.seed = c.seed;
    cp.candidates = p["candidates"].get<int>();
    cp.seed = c.seed;
    Json j{{"config", c.to_json()}, {"E_radius", p["E_radius"]}};
    if (extremal_only) {
        const EnvelopeResult r = extremal_function(J, E, om, cp.envelope);
        j["command"] = "extremal";
        j["iterations"] = r.iterations;
        j["final_update"] = r.final_update;
        j["converged"] = r.converged;
        j["psh_defect"] = r.psh_defect;
        write_json(c.output_dir, "extremal.json", j);
        save_field(r.u, (std::filesystem::path(c.output_dir) / "extremal.field").string());
        std::cout << "sweeps " << r.iterations << (r.converged ? " (converged)" : " (NOT converged)") << "\n";
        return r.converged ? kOk : kFailed;
    }
    const CapacityEstimate e = capacity(J, E, om, cp);
    j["command"] = "capacity";
    j["envelope_value"] = e.envelope_value;
    j["direct_lower_bound"] = e.direct_lower_bound;
    j["slack"] = e.slack;
    j["resolution"] = e.resolution;
    j["resolved"] = e.resolved;
    j["sweeps"] = e.extremal.iterations;
    j["converged"] = e.extremal.converged;
    write_json(c.output_dir, "capacity.json", j);
    std::cout << "capacity = " << format_number(e.envelope_value) << " (direct lower bound "
              << format_number(e.direct_lower_bound) << ")\n";
    if (!e.resolved) std::cout << "warning: E is within the stencil reach of ∂Ω at this resolution\n";
    return e.extremal.converged ? kOk : kFailed;
}

int run_dirichlet(const LabConfig& c) {
    const Json p = command_params(c, {{"eps", 1e-6}, {"newton_tol", 1e-9}});
    const DomainPtr d = make_domain(c, c.resolutions.front());
    const auto J = make_structure(c.model, d);
    const auto w = make_hermitian_form(J);
    const ScalarFn u0 = [](const Point4& x) {
        return x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3] + 0.1 * (x[0] * x[0] - x[1] * x[1]) +
               0.1 * std::exp(x[0] + 0.5 * x[2]);
    };
    DirichletParams dp;
    dp.eps = p["eps"];
    dp.tol = p["newton_tol"];
    const ScalarField phi = ScalarField::sample(d, u0);
    const DirichletResult r = dirichlet_solve(J, w, phi, continuous_monge_ampere(J, w, u0), dp);
    double err = 0.0;
    for (std::size_t k = 0; k < d->size(); ++k) err = std::max(err, std::abs(r.u[k] - phi[k]));
    Json j{{"command", "dirichlet"},      {"config", c.to_json()},        {"sup_error", err},
           {"residual", r.residual},      {"boundary_error", r.boundary_error}, {"newton_steps", r.newton_steps},
           {"min_eigenvalue", r.min_eigenvalue}};
    write_json(c.output_dir, "dirichlet.json", j);
    save_field(r.u, (std::filesystem::path(c.output_dir) / "dirichlet.field").string());
    std::cout << "sup error = " << format_number(err) << " after " << r.newton_steps << " Newton steps\n";
    return kOk;
}

int run_experiment_cmd(const LabConfig& c, const std::string& name) {
    const ExperimentReport r = run_experiment(name, c);
    write_report(r, c.output_dir);
    std::cout << r.name << ": " << r.header << "\n";
    for (const auto& ch : r.checks)
        std::cout << (ch.pass ? "  PASS " : "  FAIL ") << ch.name << " = " << format_number(ch.value) << "  [" << ch.rule
                  << "]\n";
    std::cout << "report written to " << c.output_dir << "\n";
    return r.exploratory || r.passed() ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ampere-lab: pluripotential theory experiments on almost complex surfaces"};
    app.require_subcommand(1);
    Globals g;
    auto add_globals = [&](CLI::App* s) {
        s->add_option("--config", g.config, "JSON config")->required();
        s->add_option("--out-dir", g.out_dir, "output directory (overrides the config)");
        s->add_option("--resolution", g.resolution, "single grid resolution n (overrides the config)");
        s->add_option("--tol", g.tol, "envelope stop tolerance (overrides the config)");
        s->add_option("--seed", g.seed, "random seed (overrides the config)");
    };
    auto* vs = app.add_subcommand("validate-structure", "check J^2 = -I and report the Nijenhuis tensor");
    auto* ma = app.add_subcommand("ma", "Monge-Ampere measure of a named function or a field file");
    std::string field;
    ma->add_option("--field", field, "scalar field file");
    auto* cap = app.add_subcommand("capacity", "relative capacity of a closed ball E = params.E_radius");
    auto* ext = app.add_subcommand("extremal", "relative extremal function of the same ball");
    auto* dir = app.add_subcommand("dirichlet", "Dirichlet solve for the manufactured solution");
    auto* exp = app.add_subcommand("experiment", "run a catalogue experiment");
    std::string name;
    exp->add_option("name", name, "experiment name")->required();
    for (auto* s : {vs, ma, cap, ext, dir, exp}) add_globals(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help() << "\n" << config_schema();
        return kOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n\n" << app.help() << "\n" << config_schema();
        return kUsage;
    }

    try {
        const LabConfig c = resolve(g);
        if (*vs) return validate_structure(c);
        if (*ma) return run_ma(c, field);
        if (*cap) return run_capacity(c, false);
        if (*ext) return run_capacity(c, true);
        if (*dir) return run_dirichlet(c);
        const auto& cat = experiment_catalogue();
        if (std::find(cat.begin(), cat.end(), name) == cat.end()) {
            std::cerr << "unknown experiment '" << name << "'\n\n" << config_schema();
            return kUsage;
        }
        return run_experiment_cmd(c, name);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n\n" << config_schema();
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailed;
    }
}
