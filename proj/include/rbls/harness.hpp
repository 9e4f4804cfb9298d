#pragma once

// ---------------------------------------------------------------------------
// Experiment runner: sweeps methods × n_subs × replications over a scenario,
// writes per-fit results and grouped aggregates as CSV.
// ---------------------------------------------------------------------------

#include "rbls/datagen.hpp"
#include "rbls/estimators.hpp"

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rbls {

enum class Scenario { Corrupted, Gaussian, T3, T1, Airline };

std::string_view to_string(Scenario s);
std::optional<Scenario> parse_scenario(std::string_view name);

struct ExperimentConfig {
    Scenario scenario = Scenario::Corrupted;
    std::size_t n = 20000;  // training rows (airline: rows read for training)
    std::size_t p = 50;     // ignored for airline, where the encoding fixes p
    std::size_t n_test = 1000;
    CorruptionParams corruption;
    bool corrupt_test = false;

    std::vector<Method> methods;
    std::vector<std::size_t> n_subs_grid;
    std::size_t replications = 20;
    Seed base_seed = 0;

    std::size_t r2 = 0;
    double weight_floor_ratio = 1e-3;
    bool reweight = false;

    std::filesystem::path airline_csv;
    AirlineFilter airline_filter;

    std::filesystem::path output_dir = "results";
    std::size_t threads = 1;
    bool deterministic = false;
    bool gnuplot = true;
};

/// Defaults for missing methods/grid: grid {2p, 4p, 8p, 16p} capped at n;
/// methods OLS, SRHT_LS, ULURU, AIWS_LS, ARWS_LS plus IWS_LS and LEV_LS when
/// n·p² ≤ 1e9. Validation failures throw ConfigError.
void finalize_config(ExperimentConfig& cfg);

/// Parses a flat JSON object. Unknown keys are a ConfigError.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

struct ExperimentResult {
    Method method = Method::OLS;
    std::size_t n_subs = 0;
    std::size_t replication = 0;
    Seed seed = 0;
    double est_error = std::numeric_limits<double>::quiet_NaN();  // NaN when truth is absent
    double rmse = std::numeric_limits<double>::quiet_NaN();
    double wall_time_ms = 0.0;
    std::string error;  // empty on success
};

/// Child seed for one (method, n_subs, replication) cell.
Seed child_seed(Seed base, Method method, std::size_t n_subs, std::size_t replication);
/// Seed of the data generated for one replication; shared by all methods.
Seed data_seed(Seed base, std::size_t replication);

/// Runs the sweep. Fit failures are recorded in `error` and the run continues.
/// Rows are ordered by (method, n_subs, replication) regardless of threading.
std::vector<ExperimentResult> run_experiment(const ExperimentConfig& cfg);

struct MetricSummary {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double sd = std::numeric_limits<double>::quiet_NaN();  // sample sd, 0 for a single value
};

struct AggregateRow {
    Method method = Method::OLS;
    std::size_t n_subs = 0;
    std::size_t runs = 0;
    std::size_t errors = 0;
    MetricSummary est_error;
    MetricSummary rmse;
    MetricSummary wall_time_ms;
};

std::vector<AggregateRow> aggregate(std::span<const ExperimentResult> results);

inline constexpr std::string_view kResultsHeader = "method,n_subs,replication,seed,est_error,rmse,wall_time_ms,error";

/// Under `deterministic`, wall_time_ms is written as 0 so reruns are byte-identical.
void write_results_csv(std::ostream& out, std::span<const ExperimentResult> results, bool deterministic);
void write_aggregate_csv(std::ostream& out, std::span<const AggregateRow> rows, bool deterministic = false);
void write_gnuplot_script(std::ostream& out, std::string_view aggregate_file);

/// Runs, then writes results.csv, aggregate.csv (and plot.gp, run_info.json)
/// into cfg.output_dir. Returns the results.
std::vector<ExperimentResult> run_and_write(const ExperimentConfig& cfg);

struct Fig1Summary {
    double influence_distance = 0.0;
    double leverage_distance = 0.0;
    std::size_t corrupted_rows = 0;
    std::size_t clean_rows = 0;
};

/// Leverage and influence split by the corruption mask: returns the two ℓ1
/// histogram distances. Throws MissingTruth without a mask and
/// MissingCorrupted when either group is empty.
Fig1Summary fig1_summary(const RegressionProblem& problem, std::size_t bins = 50);

/// As fig1_summary, and writes fig1_histograms.csv and fig1_distances.csv.
Fig1Summary emit_fig1_data(const RegressionProblem& problem, const std::filesystem::path& out_dir,
                           std::size_t bins = 50);

} // namespace rbls
