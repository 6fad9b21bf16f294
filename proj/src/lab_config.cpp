#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ampere/lab.hpp"

namespace ampere::lab {

namespace {

/// Every default an experiment reads. For a ball B_r, cap ∝ log⁻²(1/r) but
/// cap_ω ∝ log⁻¹(1/r), so the cap_ω decay factor is the square root of the
/// capacity one.
const Json& defaults_table() {
    static const Json t = Json::parse(R"({
      "cln": {"pairs": 20, "max_seeds": 3, "mollify": 0.1, "K_radius": 0.5, "stability": 0.2},
      "decreasing-capomega": {"u": "abs_z1", "eps": [0.2, 0.1, 0.05, 0.025], "t": [0.05, 0.1],
                              "K_radius": 0.5, "factor": 1.4142135623730951},
      "increasing-convergence": {"levels": 6, "delta0": 0.2, "windows": 10, "window_center_radius": 0.45,
                                 "window_width": [0.3, 0.5], "noise": 0.1, "floor_factor": 3.0},
      "decreasing-capacity": {"u": "abs_z1", "eps": [0.2, 0.1, 0.05, 0.025], "t": [0.05, 0.1],
                              "K_radius": 0.5, "factor": 2.0},
      "curve-pluripolarity": {"c": [0.1, 0.0], "piece_radius": 0.2, "radii_h": [4.0, 2.0, 1.0], "factor": 1.5},
      "quasicontinuity": {"a_h": [0.5, 0.5], "eps0": 0.1, "levels": 4, "delta": 0.1, "M0": 1.0,
                          "M_step": 1.3862943611198906, "K_radius": 0.5, "factor": 2.0, "modulus_factor": 2.0},
      "negligible": {"family": 8, "M": 6.0, "K_radius": 0.5, "radii_h": [4.0, 2.0, 1.0]},
      "josefson-probe": {"curves": [[0.1, 0.0], [-0.1, 0.0]], "piece_radius": 0.2, "radii_h": [4.0, 2.0, 1.0],
                         "target": 1000.0, "share_spread": 2.0},
      "comparison": {"trials": 50, "max_seeds": 3, "mollify": 0.1, "slack_h": 5.0, "pass_fraction": 0.95},
      "domination-probe": {"trials": 30, "max_seeds": 2, "mollify": 0.1, "perturbation": 0.05},
      "dirichlet-accuracy": {"eps": 1e-6, "newton_tol": 1e-9, "delta": 1e-3, "min_order": 1.5,
                             "pluriharmonic": true}
    })");
    return t;
}

[[noreturn]] void fail(const std::string& what) { throw ConfigError("invalid config: " + what); }

double get_number(const Json& j, const std::string& what) {
    if (!j.is_number()) fail(what + " must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(what + " must be finite");
    return v;
}

/// Same JSON type as the default (numbers interchangeable, arrays by element).
void check_like(const Json& value, const Json& like, const std::string& what) {
    if (like.is_number()) {
        get_number(value, what);
        if (like.is_number_integer() && !value.is_number_integer()) fail(what + " must be an integer");
        if (like.is_number_integer() && value.get<long long>() < 0) fail(what + " must be non-negative");
    } else if (like.is_boolean()) {
        if (!value.is_boolean()) fail(what + " must be a boolean");
    } else if (like.is_string()) {
        if (!value.is_string()) fail(what + " must be a string");
    } else if (like.is_array()) {
        if (!value.is_array() || value.empty()) fail(what + " must be a non-empty array");
        for (std::size_t i = 0; i < value.size(); ++i) check_like(value[i], like[0], what + "[" + std::to_string(i) + "]");
    }
}

void check_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) fail("unknown key '" + it.key() + "' in " + where);
}

ModelSpec parse_model(const Json& j) {
    if (!j.is_object()) fail("model must be an object");
    check_keys(j, {"kind", "twist"}, "model");
    if (!j.contains("kind") || !j["kind"].is_string()) fail("model.kind must be \"standard\" or \"twist\"");
    const std::string kind = j["kind"];
    if (kind == "standard") {
        if (j.contains("twist")) fail("model.twist only applies to kind \"twist\"");
        return ModelSpec::standard();
    }
    if (kind == "twist") {
        if (!j.contains("twist")) fail("model.twist is required for kind \"twist\"");
        return ModelSpec::twisted(get_number(j["twist"], "model.twist"));
    }
    fail("model.kind must be \"standard\" or \"twist\"");
}

Json model_json(const ModelSpec& m) {
    Json j;
    j["kind"] = m.kind == ModelSpec::Kind::Standard ? "standard" : "twist";
    if (m.kind == ModelSpec::Kind::Twist) j["twist"] = m.twist;
    return j;
}

void check_params(const std::string& name, const Json& p) {
    auto positive = [&](const char* key) {
        if (p[key].is_array()) {
            for (const auto& v : p[key])
                if (!(v.get<double>() > 0.0)) fail(std::string("params.") + key + " must be positive");
        } else if (!(p[key].get<double>() > 0.0)) {
            fail(std::string("params.") + key + " must be positive");
        }
    };
    auto decreasing = [&](const char* key) {
        const auto& a = p[key];
        for (std::size_t i = 1; i < a.size(); ++i)
            if (!(a[i].get<double>() < a[i - 1].get<double>())) fail(std::string("params.") + key + " must be decreasing");
    };
    if (p.contains("max_seeds") && (p["max_seeds"].get<int>() < 1 || p["max_seeds"].get<int>() > 3))
        fail("params.max_seeds must be in 1..3");
    if (p.contains("u")) {
        const std::string u = p["u"];
        if (u != "abs_z1" && u != "abs_z") fail("params.u must be \"abs_z1\" or \"abs_z\"");
    }
    for (const char* key : {"eps", "t", "radii_h", "K_radius", "piece_radius", "delta0", "eps0", "delta", "factor", "share_spread"})
        if (p.contains(key)) positive(key);
    for (const char* key : {"eps", "radii_h"})
        if (p.contains(key)) decreasing(key);
    if (p.contains("c") && p["c"].size() != 2) fail("params.c must be [re, im]");
    if (p.contains("a_h") && p["a_h"].size() != 2) fail("params.a_h must be [re, im]");
    if (p.contains("window_width") && p["window_width"].size() != 2) fail("params.window_width must be [min, max]");
    if (p.contains("curves"))
        for (const auto& c : p["curves"])
            if (!c.is_array() || c.size() != 2) fail("params.curves entries must be [re, im]");
    if (name == "increasing-convergence" && p["levels"].get<int>() < 2) fail("params.levels must be at least 2");
    if (p.contains("pass_fraction") && !(p["pass_fraction"].get<double>() > 0.0 && p["pass_fraction"].get<double>() <= 1.0))
        fail("params.pass_fraction must be in (0, 1]");
}

}  // namespace

std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

const std::vector<std::string>& experiment_catalogue() {
    static const std::vector<std::string> names = {
        "cln",        "decreasing-capomega", "increasing-convergence", "decreasing-capacity",
        "curve-pluripolarity", "quasicontinuity", "negligible", "josefson-probe",
        "comparison", "domination-probe", "dirichlet-accuracy"};
    return names;
}

Json default_params(const std::string& experiment) {
    const Json& t = defaults_table();
    if (!t.contains(experiment)) throw Error("unknown experiment");
    return t[experiment];
}

std::string config_schema() {
    return R"(config (single JSON document):
{
  "model":   {"kind": "standard"} | {"kind": "twist", "twist": <real>},
  "domain":  {"bbox": [lo, hi] | [[lo, hi] x4],
              "resolutions": [n1 < n2 < ...] (each 5..129),
              "omega_radius": <real, default 1>  (Ω = open ball, must fit the box)},
  "experiment": <name, optional>,
  "params":  {<experiment parameter>: <value>, ...}  (defaults filled in and echoed),
  "seed":    <non-negative integer, default 1>,
  "tol":     <envelope stop tolerance, default 1e-7>,
  "output_dir": <path, default "lab-out">
}
experiments: cln, decreasing-capomega, increasing-convergence, decreasing-capacity,
  curve-pluripolarity, quasicontinuity, negligible, josefson-probe, comparison,
  domination-probe, dirichlet-accuracy
)";
}

Json LabConfig::to_json() const {
    Json j;
    j["model"] = model_json(model);
    Json box = Json::array();
    for (const auto& iv : bbox) box.push_back({iv.lo, iv.hi});
    j["domain"] = {{"bbox", box}, {"resolutions", resolutions}, {"omega_radius", omega_radius}};
    if (!experiment.empty()) j["experiment"] = experiment;
    j["params"] = params;
    j["seed"] = seed;
    j["tol"] = tol;
    j["output_dir"] = output_dir;
    return j;
}

LabConfig parse_config(const Json& doc) {
    if (!doc.is_object()) fail("top level must be an object");
    check_keys(doc, {"model", "domain", "experiment", "params", "seed", "tol", "output_dir"}, "config");
    LabConfig c;
    if (!doc.contains("model")) fail("model is required");
    c.model = parse_model(doc["model"]);

    if (!doc.contains("domain") || !doc["domain"].is_object()) fail("domain is required");
    const Json& dom = doc["domain"];
    check_keys(dom, {"bbox", "resolutions", "omega_radius"}, "domain");
    if (!dom.contains("bbox") || !dom["bbox"].is_array()) fail("domain.bbox is required");
    const Json& bb = dom["bbox"];
    if (bb.size() == 2 && bb[0].is_number()) {
        for (auto& iv : c.bbox) iv = {get_number(bb[0], "domain.bbox"), get_number(bb[1], "domain.bbox")};
    } else if (bb.size() == 4) {
        for (int a = 0; a < 4; ++a) {
            if (!bb[a].is_array() || bb[a].size() != 2) fail("domain.bbox entries must be [lo, hi]");
            c.bbox[a] = {get_number(bb[a][0], "domain.bbox"), get_number(bb[a][1], "domain.bbox")};
        }
    } else {
        fail("domain.bbox must be [lo, hi] or four [lo, hi] pairs");
    }
    for (const auto& iv : c.bbox)
        if (!(iv.lo < iv.hi)) fail("domain.bbox needs lo < hi");

    if (!dom.contains("resolutions") || !dom["resolutions"].is_array() || dom["resolutions"].empty())
        fail("domain.resolutions must be a non-empty array");
    for (const auto& r : dom["resolutions"]) {
        if (!r.is_number_integer()) fail("domain.resolutions must be integers");
        const int n = r.get<int>();
        if (n < 5 || n > 129) fail("domain.resolutions entries must be in 5..129");
        if (!c.resolutions.empty() && n <= c.resolutions.back()) fail("domain.resolutions must be strictly increasing");
        c.resolutions.push_back(n);
    }
    if (dom.contains("omega_radius")) c.omega_radius = get_number(dom["omega_radius"], "domain.omega_radius");
    if (!(c.omega_radius > 0.0)) fail("domain.omega_radius must be positive");
    for (const auto& iv : c.bbox)
        if (!(iv.lo < -c.omega_radius && c.omega_radius < iv.hi)) fail("Ω must lie inside the box");

    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_integer() || doc["seed"].get<long long>() < 0)
            fail("seed must be a non-negative integer");
        c.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("tol")) {
        c.tol = get_number(doc["tol"], "tol");
        if (!(c.tol > 0.0)) fail("tol must be positive");
    }
    if (doc.contains("output_dir")) {
        if (!doc["output_dir"].is_string()) fail("output_dir must be a string");
        c.output_dir = doc["output_dir"];
    }

    Json given = doc.contains("params") ? doc["params"] : Json::object();
    if (!given.is_object()) fail("params must be an object");
    if (doc.contains("experiment")) {
        if (!doc["experiment"].is_string()) fail("experiment must be a string");
        c.experiment = doc["experiment"];
        if (!defaults_table().contains(c.experiment)) fail("unknown experiment '" + c.experiment + "'");
        c.params = default_params(c.experiment);
        for (auto it = given.begin(); it != given.end(); ++it) {
            if (!c.params.contains(it.key())) fail("unknown parameter '" + it.key() + "' for " + c.experiment);
            check_like(it.value(), c.params[it.key()], "params." + it.key());
            c.params[it.key()] = it.value();
        }
        check_params(c.experiment, c.params);
    } else {
        c.params = given;
    }
    return c;
}

LabConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path);
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

// ---------------------------------------------------------------------------

bool ExperimentReport::passed() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

const Table& ExperimentReport::table(const std::string& n) const {
    for (const auto& t : tables)
        if (t.name == n) return t;
    throw Error("no table " + n);
}

const Check& ExperimentReport::check(const std::string& n) const {
    for (const auto& c : checks)
        if (c.name == n) return c;
    throw Error("no check " + n);
}

void write_report(const ExperimentReport& r, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto open = [&](const std::string& file) {
        std::ofstream out(fs::path(dir) / file, std::ios::binary);
        if (!out) throw Error("cannot write " + (fs::path(dir) / file).string());
        return out;
    };

    Json rep;
    rep["name"] = r.name;
    rep["header"] = r.header;
    rep["exploratory"] = r.exploratory;
    rep["config"] = r.config;
    Json tables = Json::array();
    for (const auto& t : r.tables) {
        tables.push_back({{"name", t.name}, {"file", t.name + ".csv"}, {"produced_by", t.produced_by},
                          {"columns", t.columns}, {"rows", t.rows.size()}});
        auto out = open(t.name + ".csv");
        for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
        out << "\n";
        for (const auto& row : t.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
            out << "\n";
        }
    }
    rep["tables"] = tables;
    Json series = Json::array();
    for (const auto& s : r.series) {
        series.push_back({{"name", s.name}, {"file", s.name + ".txt"}, {"x", s.x_label}, {"y", s.y_label}});
        auto out = open(s.name + ".txt");
        out << "# " << s.x_label << " " << s.y_label << "\n";
        for (std::size_t i = 0; i < s.x.size(); ++i) out << format_number(s.x[i]) << " " << format_number(s.y[i]) << "\n";
    }
    rep["series"] = series;
    rep["fits"] = r.fits;
    Json checks = Json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name}, {"rule", c.rule}, {"value", c.value}, {"pass", c.pass}});
    rep["checks"] = checks;
    if (!r.exploratory) rep["passed"] = r.passed();
    Json times = Json::object();
    for (const auto& [k, v] : r.timings) times[k] = v;
    rep["wall_clock_seconds"] = times;
    auto out = open("report.json");
    out << rep.dump(2) << "\n";
}

// ---------------------------------------------------------------------------

double PshSeed::operator()(const Point4& x) const {
    double q = 0.0, lin = 0.0;
    for (int i = 0; i < 4; ++i) {
        q += (x[i] - c[i]) * (x[i] - c[i]);
        lin += l[i] * x[i];
    }
    return a * q + lin + b;
}

double PshCandidate::closed_form(const Point4& x) const {
    double v = -std::numeric_limits<double>::infinity();
    for (const auto& s : seeds) v = std::max(v, s(x));
    return v;
}

ScalarField PshCandidate::sample(const DomainPtr& d) const {
    ScalarField u = ScalarField::sample(d, [this](const Point4& x) { return closed_form(x); });
    return mollify_eps > 0.0 ? mollify(u, mollify_eps) : u;
}

Json PshCandidate::describe() const {
    Json j;
    Json s = Json::array();
    for (const auto& q : seeds) s.push_back({{"a", q.a}, {"c", q.c}, {"l", q.l}, {"b", q.b}});
    j["max_of"] = s;
    j["mollify"] = mollify_eps;
    return j;
}

PshSeed random_seed(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto between = [&](double lo, double hi) { return lo + (hi - lo) * U(rng); };
    PshSeed s;
    s.a = between(0.5, 1.5);
    for (auto& v : s.c) v = between(-0.3, 0.3);
    for (auto& v : s.l) v = between(-0.3, 0.3);
    s.b = between(-0.2, 0.2);
    return s;
}

PshCandidate random_candidate(std::mt19937_64& rng, int max_seeds, double mollify_eps) {
    std::uniform_int_distribution<int> K(1, std::max(1, max_seeds));
    PshCandidate c;
    const int k = K(rng);
    for (int i = 0; i < k; ++i) c.seeds.push_back(random_seed(rng));
    c.mollify_eps = k > 1 ? mollify_eps : 0.0;
    return c;
}

DomainPtr make_domain(const LabConfig& config, int n) {
    const double R2 = config.omega_radius * config.omega_radius;
    return GridDomain::build(config.bbox, {n, n, n, n}, [R2](const Point4& x) {
        return x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3] - R2;
    });
}

Mask omega_mask(const LabConfig& config, const GridDomain& d) {
    return ball_mask(d, {0.0, 0.0, 0.0, 0.0}, config.omega_radius, false);
}

DecayCheck decay_check(const std::vector<double>& caps, const std::vector<std::size_t>& set_sizes,
                       std::size_t full_size, double factor) {
    DecayCheck r;
    r.worst_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < caps.size(); ++k) {
        if (set_sizes[k - 1] == full_size || set_sizes[k] == full_size) continue;
        if (caps[k - 1] <= 0.0 && caps[k] <= 0.0) continue;
        ++r.tested;
        const double ratio = caps[k] > 0.0 ? caps[k - 1] / caps[k] : std::numeric_limits<double>::infinity();
        r.worst_ratio = std::min(r.worst_ratio, ratio);
        if (!(ratio >= factor)) r.pass = false;
    }
    return r;
}

}  // namespace ampere::lab
