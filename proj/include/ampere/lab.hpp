#pragma once

/// @file lab.hpp
/// @brief Lab configuration, the experiment catalogue and report emission.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "ampere/potential.hpp"

namespace ampere::lab {

using Json = nlohmann::ordered_json;

/// Raised for schema violations; the CLI maps it to a usage error.
class ConfigError : public Error {
public:
    using Error::Error;
};

struct LabConfig {
    ModelSpec model;
    Box4 bbox{};
    double omega_radius = 1.0;      ///< Ω = open ball of this radius about 0
    std::vector<int> resolutions;   ///< strictly increasing
    std::string experiment;         ///< empty outside `experiment` runs
    Json params = Json::object();   ///< resolved: defaults merged in
    std::uint64_t seed = 1;
    double tol = 1e-7;              ///< envelope stop tolerance
    std::string output_dir = "lab-out";

    Json to_json() const;
};

/// The schema as printed on usage errors.
std::string config_schema();

/// Validates the whole document before anything is computed. Unknown keys,
/// non-increasing resolutions, an Ω that does not fit the box, unknown
/// experiments and unknown or ill-typed experiment parameters are rejected.
LabConfig parse_config(const Json& doc);
LabConfig load_config(const std::string& path);

const std::vector<std::string>& experiment_catalogue();

/// Parameters of an experiment with every default spelled out.
Json default_params(const std::string& experiment);

struct Table {
    std::string name;
    std::string produced_by;  ///< operations and tolerances behind the columns
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

/// Plot data: one two-column text file per series.
struct Series {
    std::string name;
    std::string x_label, y_label;
    std::vector<double> x, y;
};

struct Check {
    std::string name;
    std::string rule;  ///< threshold as stated in the config echo
    double value = 0.0;
    bool pass = false;
};

struct ExperimentReport {
    std::string name;
    std::string header;
    bool exploratory = false;  ///< no pass/fail (open problem)
    Json config;
    std::vector<Table> tables;
    std::vector<Series> series;
    Json fits = Json::object();
    std::vector<Check> checks;
    std::vector<std::pair<std::string, double>> timings;  ///< seconds, report.json only

    bool passed() const;
    const Table& table(const std::string& name) const;
    const Check& check(const std::string& name) const;
};

/// Throws "unknown experiment" and "under-resolved parameters".
ExperimentReport run_experiment(const std::string& name, const LabConfig& config);

/// report.json, one CSV per table and one text file per series. Numbers are
/// printed with 17 significant digits; wall-clock times appear only in
/// report.json so the CSVs are reproducible byte for byte.
void write_report(const ExperimentReport& report, const std::string& dir);

/// "%.17g"
std::string format_number(double x);

// ---------------------------------------------------------------------------
// Randomized psh suite

/// A seed a|x − c|² + ℓ·x + b (quadratic dominates the affine part on both
/// model structures), a candidate the pointwise maximum of 1 to 3 seeds,
/// mollified when it has more than one seed.
struct PshSeed {
    double a = 1.0;
    Point4 c{}, l{};
    double b = 0.0;

    double operator()(const Point4& x) const;
};

struct PshCandidate {
    std::vector<PshSeed> seeds;
    double mollify_eps = 0.0;

    double closed_form(const Point4& x) const;  ///< before mollification
    ScalarField sample(const DomainPtr& d) const;
    Json describe() const;
};

PshSeed random_seed(std::mt19937_64& rng);
PshCandidate random_candidate(std::mt19937_64& rng, int max_seeds, double mollify_eps);

/// Domain of a config at resolution n (Ω's defining function |x|² − R²).
DomainPtr make_domain(const LabConfig& config, int n);
Mask omega_mask(const LabConfig& config, const GridDomain& d);

/// Exceedance-capacity decay test: per threshold, consecutive capacities
/// must drop by `factor`. Levels whose set is all of K are saturated at
/// cap(K) and skipped; 0 → 0 passes.
struct DecayCheck {
    bool pass = true;
    double worst_ratio = 0.0;  ///< smallest ratio among tested transitions (inf if none)
    int tested = 0;
};
DecayCheck decay_check(const std::vector<double>& caps, const std::vector<std::size_t>& set_sizes,
                       std::size_t full_size, double factor);

}  // namespace ampere::lab
