// rbls: experiment runner for randomized robust least squares.
//
//   rbls run --config cfg.json [--seed S] [--deterministic] [--out DIR] [--threads K]
//   rbls fig1 [--n N] [--p P] [--pi PI] [--sigma-w SW] ... [--out DIR]
//   rbls airline --train flights.csv [--n-train N] [--n-test M] ... [--out DIR]
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 1 otherwise.

#include "rbls/error.hpp"
#include "rbls/harness.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace rbls;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct CommonFlags {
    std::optional<Seed> seed;
    bool deterministic = false;
    std::optional<std::string> out;
    std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--seed", f.seed, "Base seed");
    cmd->add_flag("--deterministic", f.deterministic, "Byte-identical outputs (wall times written as 0)");
    cmd->add_option("--out", f.out, "Output directory");
    cmd->add_option("--threads", f.threads, "Worker threads (RBLS_THREADS overrides)")->check(CLI::PositiveNumber);
}

void apply_common(ExperimentConfig& cfg, const CommonFlags& f) {
    if (f.seed) cfg.base_seed = *f.seed;
    if (f.deterministic) cfg.deterministic = true;
    if (f.out) cfg.output_dir = *f.out;
    if (f.threads) cfg.threads = *f.threads;
    if (const char* env = std::getenv("RBLS_THREADS"); env && *env) {
        try {
            const long v = std::stol(env);
            if (v < 1) throw std::invalid_argument("");
            cfg.threads = static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            throw Error(ErrorCode::ConfigError, std::string("RBLS_THREADS must be a positive integer, got '") + env +
                                                    "'");
        }
    }
}

int exit_code_for(ErrorCode c) {
    switch (c) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidParams:
    case ErrorCode::InvalidCounts: return kExitConfig;
    case ErrorCode::ParseError:
    case ErrorCode::SchemaError:
    case ErrorCode::IoError:
    case ErrorCode::MissingTruth:
    case ErrorCode::MissingCorrupted:
    case ErrorCode::InvalidInput:
    case ErrorCode::RankDeficient: return kExitData;
    default: return 1;
    }
}

void report(const std::vector<ExperimentResult>& results, const ExperimentConfig& cfg) {
    std::size_t errors = 0;
    for (const auto& r : results) errors += !r.error.empty();
    std::cout << "wrote " << results.size() << " rows (" << errors << " errored) to "
              << (cfg.output_dir / "results.csv").string() << '\n';
    for (const auto& row : aggregate(results)) {
        std::printf("%-8s n_subs=%-6zu est_error=%-12.6g rmse=%-12.6g errors=%zu\n",
                    std::string(to_string(row.method)).c_str(), row.n_subs, row.est_error.mean, row.rmse.mean,
                    row.errors);
    }
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
    std::vector<Method> out;
    for (const auto& n : names) {
        auto m = parse_method(n);
        if (!m) throw Error(ErrorCode::ConfigError, "unknown method '" + n + "'");
        out.push_back(*m);
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Randomized robust least squares experiments"};
    app.require_subcommand(1);

    // run
    CommonFlags run_flags;
    std::string config_path;
    auto* run = app.add_subcommand("run", "Run a sweep described by a JSON config");
    run->add_option("--config", config_path, "Config file (flat JSON object)")->required();
    add_common(run, run_flags);

    // fig1
    CommonFlags fig_flags;
    std::size_t fig_n = 20000, fig_p = 50, fig_bins = 50;
    CorruptionParams fig_params;
    auto* fig1 = app.add_subcommand("fig1", "Leverage vs influence histograms for corrupted rows");
    fig1->add_option("--n", fig_n, "Rows")->capture_default_str();
    fig1->add_option("--p", fig_p, "Columns")->capture_default_str();
    fig1->add_option("--pi", fig_params.pi, "Corruption probability")->capture_default_str();
    fig1->add_option("--sigma-x", fig_params.sigma_x, "Design entry sd")->capture_default_str();
    fig1->add_option("--sigma-w", fig_params.sigma_w, "Corruption entry sd")->capture_default_str();
    fig1->add_option("--sigma-eps", fig_params.sigma_eps, "Noise sd")->capture_default_str();
    fig1->add_option("--bins", fig_bins, "Histogram bins")->capture_default_str()->check(CLI::Range(2, 100000));
    add_common(fig1, fig_flags);

    // airline
    CommonFlags air_flags;
    std::string train_csv, carrier;
    std::size_t air_train = 13000, air_test = 5000, air_reps = 20;
    int year = 0, month = 0;
    std::vector<std::string> air_methods;
    std::vector<std::size_t> air_grid;
    auto* airline = app.add_subcommand("airline", "Sweep on the airline delay CSV");
    airline->add_option("--train", train_csv, "Airline CSV (Origin, Dest, Distance, ArrDelay columns)")
        ->required();
    airline->add_option("--n-train", air_train, "Training rows")->capture_default_str();
    airline->add_option("--n-test", air_test, "Test rows following the training rows")->capture_default_str();
    airline->add_option("--carrier", carrier, "UniqueCarrier filter");
    airline->add_option("--year", year, "Year filter");
    airline->add_option("--month", month, "Month filter");
    airline->add_option("--methods", air_methods, "Methods")->delimiter(',');
    airline->add_option("--n-subs", air_grid, "n_subs grid")->delimiter(',');
    airline->add_option("--replications", air_reps, "Replications")->capture_default_str();
    add_common(airline, air_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*run) {
            auto cfg = load_config(config_path);
            apply_common(cfg, run_flags);
            const auto results = run_and_write(cfg);
            report(results, cfg);
        } else if (*fig1) {
            ExperimentConfig cfg;
            cfg.output_dir = "fig1";
            apply_common(cfg, fig_flags);
            const auto problem = gen_corrupted(fig_n, fig_p, fig_params, derive_seed(cfg.base_seed, "harness/fig1"));
            const auto s = emit_fig1_data(problem, cfg.output_dir, fig_bins);
            std::printf("corrupted rows %zu, clean rows %zu\n", s.corrupted_rows, s.clean_rows);
            std::printf("l1 distance: influence %.4f, leverage %.4f\n", s.influence_distance, s.leverage_distance);
        } else if (*airline) {
            ExperimentConfig cfg;
            cfg.scenario = Scenario::Airline;
            cfg.airline_csv = train_csv;
            cfg.n = air_train;
            cfg.n_test = air_test;
            cfg.replications = air_reps;
            cfg.airline_filter = {carrier, year, month};
            cfg.methods = parse_methods(air_methods);
            cfg.n_subs_grid = air_grid;
            cfg.output_dir = "airline";
            apply_common(cfg, air_flags);
            const auto results = run_and_write(cfg);
            report(results, cfg);
        }
    } catch (const Error& e) {
        std::cerr << "rbls: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "rbls: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
