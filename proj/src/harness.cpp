#include "rbls/harness.hpp"

#include "rbls/diagnostics.hpp"
#include "rbls/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace rbls {

std::string_view to_string(Scenario s) {
    switch (s) {
    case Scenario::Corrupted: return "corrupted";
    case Scenario::Gaussian:  return "gaussian";
    case Scenario::T3:        return "t3";
    case Scenario::T1:        return "t1";
    case Scenario::Airline:   return "airline";
    }
    return "?";
}

std::optional<Scenario> parse_scenario(std::string_view name) {
    std::string lower;
    for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    for (Scenario s : {Scenario::Corrupted, Scenario::Gaussian, Scenario::T3, Scenario::T1, Scenario::Airline})
        if (to_string(s) == lower) return s;
    return std::nullopt;
}

namespace {

constexpr double kExactCostBudget = 1e9;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

bool exact_affordable(std::size_t n, std::size_t p) {
    return static_cast<double>(n) * static_cast<double>(p) * static_cast<double>(p) <= kExactCostBudget;
}

void check_grid(const std::vector<std::size_t>& grid, std::size_t p) {
    if (grid.empty()) config_error("n_subs_grid is empty");
    if (!std::is_sorted(grid.begin(), grid.end())) config_error("n_subs_grid must be sorted ascending");
    if (grid.front() < p)
        config_error("n_subs_grid values must be >= p (" + std::to_string(p) + "), got " +
                     std::to_string(grid.front()));
}

} // namespace

void finalize_config(ExperimentConfig& cfg) {
    if (cfg.replications < 1) config_error("replications must be >= 1");
    if (cfg.threads < 1) config_error("threads must be >= 1");
    if (!(cfg.weight_floor_ratio > 0.0 && cfg.weight_floor_ratio <= 1.0))
        config_error("weight_floor_ratio must lie in (0, 1]");

    const bool airline = cfg.scenario == Scenario::Airline;
    if (airline) {
        if (cfg.airline_csv.empty()) config_error("airline scenario needs airline_csv");
    } else {
        if (cfg.p == 0) config_error("p must be >= 1");
        if (cfg.n <= cfg.p) config_error("n must exceed p");
        const auto& c = cfg.corruption;
        if (!(c.pi >= 0.0 && c.pi <= 1.0)) config_error("pi must lie in [0, 1]");
        if (!(c.sigma_x > 0.0) || !(c.sigma_w >= 0.0) || !(c.sigma_eps >= 0.0))
            config_error("scales must be non-negative (sigma_x positive)");
    }

    if (cfg.methods.empty()) {
        cfg.methods = {Method::OLS, Method::SRHT_LS, Method::ULURU};
        if (airline || exact_affordable(cfg.n, cfg.p)) {
            cfg.methods.push_back(Method::LEV_LS);
            cfg.methods.push_back(Method::IWS_LS);
        }
        cfg.methods.push_back(Method::AIWS_LS);
        cfg.methods.push_back(Method::ARWS_LS);
        std::sort(cfg.methods.begin(), cfg.methods.end());
    }
    std::set<Method> seen(cfg.methods.begin(), cfg.methods.end());
    if (seen.size() != cfg.methods.size()) config_error("methods contains duplicates");

    if (cfg.n_subs_grid.empty() && !airline) {
        for (std::size_t m : {2, 4, 8, 16}) cfg.n_subs_grid.push_back(std::min(m * cfg.p, cfg.n));
        cfg.n_subs_grid.erase(std::unique(cfg.n_subs_grid.begin(), cfg.n_subs_grid.end()), cfg.n_subs_grid.end());
    }
    if (!airline) check_grid(cfg.n_subs_grid, cfg.p);
}

ExperimentConfig parse_config(std::string_view json_text) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        config_error(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) config_error("config must be a JSON object");

    ExperimentConfig cfg;
    std::vector<std::size_t> multiples;
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "scenario") {
                auto s = parse_scenario(v.get<std::string>());
                if (!s) config_error("unknown scenario '" + v.get<std::string>() + "'");
                cfg.scenario = *s;
            } else if (key == "n") cfg.n = v.get<std::size_t>();
            else if (key == "p") cfg.p = v.get<std::size_t>();
            else if (key == "n_test") cfg.n_test = v.get<std::size_t>();
            else if (key == "pi") cfg.corruption.pi = v.get<double>();
            else if (key == "sigma_x") cfg.corruption.sigma_x = v.get<double>();
            else if (key == "sigma_w") cfg.corruption.sigma_w = v.get<double>();
            else if (key == "sigma_eps") cfg.corruption.sigma_eps = v.get<double>();
            else if (key == "corrupt_test") cfg.corrupt_test = v.get<bool>();
            else if (key == "methods") {
                std::vector<std::string> names;
                if (v.is_string()) {
                    std::stringstream ss(v.get<std::string>());
                    for (std::string tok; std::getline(ss, tok, ',');) names.push_back(tok);
                } else {
                    names = v.get<std::vector<std::string>>();
                }
                for (auto& name : names) {
                    name.erase(std::remove_if(name.begin(), name.end(), ::isspace), name.end());
                    auto m = parse_method(name);
                    if (!m) config_error("unknown method '" + name + "'");
                    cfg.methods.push_back(*m);
                }
            } else if (key == "n_subs_grid") cfg.n_subs_grid = v.get<std::vector<std::size_t>>();
            else if (key == "n_subs_multiples") multiples = v.get<std::vector<std::size_t>>();
            else if (key == "replications") cfg.replications = v.get<std::size_t>();
            else if (key == "base_seed" || key == "seed") cfg.base_seed = v.get<Seed>();
            else if (key == "r2") cfg.r2 = v.get<std::size_t>();
            else if (key == "weight_floor_ratio") cfg.weight_floor_ratio = v.get<double>();
            else if (key == "reweight") cfg.reweight = v.get<bool>();
            else if (key == "airline_csv") cfg.airline_csv = v.get<std::string>();
            else if (key == "airline_carrier") cfg.airline_filter.carrier = v.get<std::string>();
            else if (key == "airline_year") cfg.airline_filter.year = v.get<int>();
            else if (key == "airline_month") cfg.airline_filter.month = v.get<int>();
            else if (key == "output_dir") cfg.output_dir = v.get<std::string>();
            else if (key == "threads") cfg.threads = v.get<std::size_t>();
            else if (key == "deterministic") cfg.deterministic = v.get<bool>();
            else if (key == "gnuplot") cfg.gnuplot = v.get<bool>();
            else config_error("unknown config key '" + key + "'");
        }
    } catch (const json::exception& e) {
        config_error(std::string("bad config value: ") + e.what());
    }
    if (!multiples.empty()) {
        if (!cfg.n_subs_grid.empty()) config_error("give n_subs_grid or n_subs_multiples, not both");
        for (std::size_t m : multiples) cfg.n_subs_grid.push_back(m * cfg.p);
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) config_error("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

Seed child_seed(Seed base, Method method, std::size_t n_subs, std::size_t replication) {
    return derive_seed(base, static_cast<std::uint64_t>(method) + 1, n_subs, replication);
}

Seed data_seed(Seed base, std::size_t replication) {
    return derive_seed(derive_seed(base, "harness/data"), 0, 0, replication);
}

namespace {

double test_rmse(const RegressionProblem& test, std::span<const double> beta) {
    if (test.rows() == 0) return std::numeric_limits<double>::quiet_NaN();
    double ss = 0.0;
    for (std::size_t i = 0; i < test.rows(); ++i) {
        const double r = test.y[i] - dot(test.z.row(i), beta);
        ss += r * r;
    }
    return std::sqrt(ss / static_cast<double>(test.rows()));
}

double estimation_error(const RegressionProblem& train, std::span<const double> beta) {
    if (!train.truth) return std::numeric_limits<double>::quiet_NaN();
    double ss = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j) {
        const double d = beta[j] - train.truth->beta[j];
        ss += d * d;
    }
    return std::sqrt(ss);
}

SplitProblem make_data(const ExperimentConfig& cfg, std::size_t rep) {
    const Seed s = data_seed(cfg.base_seed, rep);
    switch (cfg.scenario) {
    case Scenario::Corrupted:
        return gen_corrupted_split(cfg.n, cfg.n_test, cfg.p, cfg.corruption, s, cfg.corrupt_test);
    case Scenario::Gaussian: return gen_leverage_split(cfg.n, cfg.n_test, cfg.p, LeverageRegime::Gaussian, s);
    case Scenario::T3:       return gen_leverage_split(cfg.n, cfg.n_test, cfg.p, LeverageRegime::T3, s);
    case Scenario::T1:       return gen_leverage_split(cfg.n, cfg.n_test, cfg.p, LeverageRegime::T1, s);
    case Scenario::Airline:  break;
    }
    throw Error(ErrorCode::ConfigError, "airline data is loaded once, not generated");
}

std::string one_line(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
    return s;
}

// One replication: every (method, n_subs) cell on the same data.
void run_replication(const ExperimentConfig& cfg, const SplitProblem& data, std::size_t rep,
                     std::span<ExperimentResult> slots) {
    std::optional<ExperimentResult> ols_cache;
    std::size_t k = 0;
    for (Method m : cfg.methods) {
        for (std::size_t n_subs : cfg.n_subs_grid) {
            ExperimentResult& r = slots[k++];
            r.method = m;
            r.n_subs = n_subs;
            r.replication = rep;
            r.seed = child_seed(cfg.base_seed, m, n_subs, rep);
            if (m == Method::OLS && ols_cache) {
                const Seed seed = r.seed;
                r = *ols_cache;
                r.n_subs = n_subs;
                r.seed = seed;
                continue;
            }
            EstimatorConfig ec;
            ec.method = m;
            ec.n_subs = n_subs;
            ec.r2 = cfg.r2;
            ec.seed = r.seed;
            ec.weight_floor_ratio = cfg.weight_floor_ratio;
            ec.reweight = cfg.reweight;
            try {
                const auto f = fit(data.train, ec);
                r.est_error = estimation_error(data.train, f.coefficients);
                r.rmse = test_rmse(data.test, f.coefficients);
                r.wall_time_ms = std::chrono::duration<double, std::milli>(f.wall_time).count();
            } catch (const std::exception& e) {
                r.error = one_line(e.what());
            }
            if (m == Method::OLS) ols_cache = r;
        }
    }
}

} // namespace

std::vector<ExperimentResult> run_experiment(const ExperimentConfig& cfg_in) {
    ExperimentConfig cfg = cfg_in;

    std::optional<SplitProblem> shared;
    if (cfg.scenario == Scenario::Airline) {
        auto loaded = load_airline_csv(cfg.airline_csv, cfg.n, cfg.n_test, cfg.airline_filter);
        cfg.p = loaded.split.train.cols();
        if (cfg.n_subs_grid.empty())
            for (std::size_t m : {2, 4, 8, 16}) cfg.n_subs_grid.push_back(m * cfg.p);
        shared = std::move(loaded.split);
    }
    finalize_config(cfg);

    const std::size_t cells = cfg.methods.size() * cfg.n_subs_grid.size();
    std::vector<ExperimentResult> results(cells * cfg.replications);

    std::set<Seed> seeds;
    for (Method m : cfg.methods)
        for (std::size_t ns : cfg.n_subs_grid)
            for (std::size_t rep = 0; rep < cfg.replications; ++rep)
                if (!seeds.insert(child_seed(cfg.base_seed, m, ns, rep)).second)
                    throw Error(ErrorCode::InvalidParams, "child seed collision");

    std::atomic<std::size_t> next{0};
    std::mutex fail_mutex;
    std::exception_ptr failure;
    auto worker = [&] {
        for (std::size_t rep; (rep = next.fetch_add(1)) < cfg.replications;) {
            std::span<ExperimentResult> slots(results.data() + rep * cells, cells);
            try {
                if (shared) {
                    run_replication(cfg, *shared, rep, slots);
                } else {
                    run_replication(cfg, make_data(cfg, rep), rep, slots);
                }
            } catch (...) {
                std::lock_guard lock(fail_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t nthreads = std::min(cfg.threads, cfg.replications);
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    std::stable_sort(results.begin(), results.end(), [](const auto& a, const auto& b) {
        return std::tie(a.method, a.n_subs, a.replication) < std::tie(b.method, b.n_subs, b.replication);
    });
    return results;
}

namespace {

MetricSummary summarize(const std::vector<double>& v) {
    MetricSummary s;
    if (v.empty()) return s;
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    if (v.size() == 1) {
        s.sd = 0.0;
        return s;
    }
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    return s;
}

std::string fmt(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace

std::vector<AggregateRow> aggregate(std::span<const ExperimentResult> results) {
    struct Acc {
        std::size_t runs = 0, errors = 0;
        std::vector<double> est, rmse, time;
    };
    std::map<std::pair<Method, std::size_t>, Acc> groups;
    for (const auto& r : results) {
        auto& g = groups[{r.method, r.n_subs}];
        ++g.runs;
        if (!r.error.empty()) {
            ++g.errors;
            continue;
        }
        if (!std::isnan(r.est_error)) g.est.push_back(r.est_error);
        if (!std::isnan(r.rmse)) g.rmse.push_back(r.rmse);
        g.time.push_back(r.wall_time_ms);
    }
    std::vector<AggregateRow> out;
    out.reserve(groups.size());
    for (const auto& [key, g] : groups) {
        AggregateRow row;
        row.method = key.first;
        row.n_subs = key.second;
        row.runs = g.runs;
        row.errors = g.errors;
        row.est_error = summarize(g.est);
        row.rmse = summarize(g.rmse);
        row.wall_time_ms = summarize(g.time);
        out.push_back(row);
    }
    return out;
}

void write_results_csv(std::ostream& out, std::span<const ExperimentResult> results, bool deterministic) {
    out << kResultsHeader << '\n';
    for (const auto& r : results) {
        out << to_string(r.method) << ',' << r.n_subs << ',' << r.replication << ',' << r.seed << ','
            << fmt(r.est_error) << ',' << fmt(r.rmse) << ',' << fmt(deterministic ? 0.0 : r.wall_time_ms) << ','
            << r.error << '\n';
    }
}

void write_aggregate_csv(std::ostream& out, std::span<const AggregateRow> rows, bool deterministic) {
    out << "method,n_subs,runs,errors,est_error_mean,est_error_sd,rmse_mean,rmse_sd,wall_time_ms_mean,"
           "wall_time_ms_sd\n";
    for (const auto& r : rows) {
        out << to_string(r.method) << ',' << r.n_subs << ',' << r.runs << ',' << r.errors << ','
            << fmt(r.est_error.mean) << ',' << fmt(r.est_error.sd) << ',' << fmt(r.rmse.mean) << ','
            << fmt(r.rmse.sd) << ',' << fmt(deterministic ? 0.0 : r.wall_time_ms.mean) << ','
            << fmt(deterministic ? 0.0 : r.wall_time_ms.sd) << '\n';
    }
}

void write_gnuplot_script(std::ostream& out, std::string_view aggregate_file) {
    out << "# gnuplot -p plot.gp\n"
           "set datafile separator ','\n"
           "set key top right\n"
           "set logscale y\n"
           "set xlabel 'n_subs'\n"
           "set ylabel 'estimation error (mean, error bars = sample sd)'\n"
           "file = '"
        << aggregate_file
        << "'\n"
           "methods = 'OLS SRHT_LS LEV_LS ULURU IWS_LS AIWS_LS ARWS_LS'\n"
           "plot for [m in methods] file using 2:(strcol(1) eq m ? $5 : 1/0):6 skip 1 "
           "with yerrorlines title m\n";
}

std::vector<ExperimentResult> run_and_write(const ExperimentConfig& cfg) {
    auto results = run_experiment(cfg);
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + cfg.output_dir.string() + ": " + ec.message());

    auto open = [&](const char* name) {
        std::ofstream f(cfg.output_dir / name, std::ios::binary);
        if (!f) throw Error(ErrorCode::IoError, "cannot write " + (cfg.output_dir / name).string());
        return f;
    };
    {
        auto f = open("results.csv");
        write_results_csv(f, results, cfg.deterministic);
    }
    {
        auto f = open("aggregate.csv");
        const auto rows = aggregate(results);
        write_aggregate_csv(f, rows, cfg.deterministic);
    }
    if (cfg.gnuplot) {
        auto f = open("plot.gp");
        write_gnuplot_script(f, "aggregate.csv");
    }
    if (!cfg.deterministic) {
        auto f = open("run_info.json");
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        nlohmann::json info = {{"generated", stamp},
                               {"scenario", to_string(cfg.scenario)},
                               {"base_seed", cfg.base_seed},
                               {"replications", cfg.replications},
                               {"threads", cfg.threads}};
        f << info.dump(2) << '\n';
    }
    return results;
}

// ---------------------------------------------------------------------------
// Leverage / influence split by corruption
// ---------------------------------------------------------------------------

namespace {

struct Fig1Groups {
    DiagnosticsReport report;
    std::vector<double> lev[2], inf[2];  // [0] clean, [1] corrupted
};

Fig1Groups split_groups(const RegressionProblem& problem) {
    if (!problem.truth) throw Error(ErrorCode::MissingTruth, "problem has no corruption mask");
    const auto& mask = problem.truth->corruption_mask;
    if (mask.size() != problem.rows()) throw Error(ErrorCode::ShapeMismatch, "mask length must equal rows");
    Fig1Groups g;
    g.report = exact_diagnostics(problem.z, problem.y);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const int k = mask[i] ? 1 : 0;
        g.lev[k].push_back(g.report.leverages[i]);
        g.inf[k].push_back(g.report.influences[i]);
    }
    if (g.lev[0].empty() || g.lev[1].empty())
        throw Error(ErrorCode::MissingCorrupted, "need both corrupted and clean rows");
    return g;
}

std::pair<double, double> pooled_range(const std::vector<double>& a, const std::vector<double>& b) {
    auto [a0, a1] = std::minmax_element(a.begin(), a.end());
    auto [b0, b1] = std::minmax_element(b.begin(), b.end());
    return {std::min(*a0, *b0), std::max(*a1, *b1)};
}

Fig1Summary summarize_groups(const Fig1Groups& g, std::size_t bins) {
    Fig1Summary s;
    s.clean_rows = g.lev[0].size();
    s.corrupted_rows = g.lev[1].size();
    s.leverage_distance = histogram_l1_distance(g.lev[1], g.lev[0], bins);
    s.influence_distance = histogram_l1_distance(g.inf[1], g.inf[0], bins);
    return s;
}

} // namespace

Fig1Summary fig1_summary(const RegressionProblem& problem, std::size_t bins) {
    return summarize_groups(split_groups(problem), bins);
}

Fig1Summary emit_fig1_data(const RegressionProblem& problem, const std::filesystem::path& out_dir,
                           std::size_t bins) {
    const auto g = split_groups(problem);
    const auto s = summarize_groups(g, bins);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

    std::ofstream hist(out_dir / "fig1_histograms.csv", std::ios::binary);
    if (!hist) throw Error(ErrorCode::IoError, "cannot write fig1_histograms.csv");
    hist << "quantity,group,bin,bin_lo,bin_hi,mass\n";
    auto emit = [&](const char* quantity, const std::vector<double>* groups) {
        const auto [lo, hi] = pooled_range(groups[0], groups[1]);
        const double width = (hi - lo) / static_cast<double>(bins);
        const char* names[2] = {"clean", "corrupted"};
        for (int k = 0; k < 2; ++k) {
            const auto mass = histogram_mass(groups[k], lo, hi, bins);
            for (std::size_t b = 0; b < bins; ++b)
                hist << quantity << ',' << names[k] << ',' << b << ',' << fmt(lo + width * static_cast<double>(b))
                     << ',' << fmt(lo + width * static_cast<double>(b + 1)) << ',' << fmt(mass[b]) << '\n';
        }
    };
    emit("leverage", g.lev);
    emit("influence", g.inf);

    std::ofstream dist(out_dir / "fig1_distances.csv", std::ios::binary);
    if (!dist) throw Error(ErrorCode::IoError, "cannot write fig1_distances.csv");
    dist << "quantity,l1_distance\n"
         << "leverage," << fmt(s.leverage_distance) << '\n'
         << "influence," << fmt(s.influence_distance) << '\n';
    return s;
}

} // namespace rbls
