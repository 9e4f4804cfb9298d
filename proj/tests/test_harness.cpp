#include "airline_fixture.hpp"
#include "oracles.hpp"

#include "rbls/error.hpp"
#include "rbls/harness.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

using namespace rbls;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.n = 1500;
    cfg.p = 8;
    cfg.n_test = 200;
    cfg.replications = 3;
    cfg.base_seed = 11;
    cfg.methods = {Method::OLS, Method::SRHT_LS, Method::ARWS_LS};
    cfg.n_subs_grid = {32, 64};
    return cfg;
}

std::string csv_of(const std::vector<ExperimentResult>& r, bool deterministic = true) {
    std::ostringstream out;
    write_results_csv(out, r, deterministic);
    return out.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an rbls::Error");
    return ErrorCode::InvalidInput;
}

} // namespace

TEST_CASE("one cell gives one row") {
    auto cfg = small_config();
    cfg.methods = {Method::SRHT_LS};
    cfg.n_subs_grid = {40};
    cfg.replications = 1;
    const auto r = run_experiment(cfg);
    REQUIRE(r.size() == 1);
    CHECK(r[0].error.empty());
    CHECK(r[0].est_error >= 0.0);
    CHECK(r[0].rmse >= 0.0);
    CHECK(r[0].seed == child_seed(11, Method::SRHT_LS, 40, 0));
}

TEST_CASE("results are deterministic, sorted and independent of threading") {
    auto cfg = small_config();
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);
    cfg.threads = 3;
    const auto c = run_experiment(cfg);
    CHECK(csv_of(a) == csv_of(b));
    CHECK(csv_of(a) == csv_of(c));
    CHECK(a.size() == 3 * 2 * 3);
    for (std::size_t i = 1; i < a.size(); ++i)
        CHECK(std::tie(a[i - 1].method, a[i - 1].n_subs, a[i - 1].replication) <
              std::tie(a[i].method, a[i].n_subs, a[i].replication));

    std::set<Seed> seeds;
    for (const auto& r : a) seeds.insert(r.seed);
    CHECK(seeds.size() == a.size());
}

TEST_CASE("paired data: OLS is identical across n_subs within a replication") {
    const auto r = run_experiment(small_config());
    for (const auto& x : r)
        for (const auto& y : r)
            if (x.method == Method::OLS && y.method == Method::OLS && x.replication == y.replication)
                CHECK(x.est_error == y.est_error);
}

TEST_CASE("results CSV schema") {
    const auto r = run_experiment(small_config());
    const auto text = csv_of(r);
    CHECK(text.substr(0, text.find('\n')) == "method,n_subs,replication,seed,est_error,rmse,wall_time_ms,error");
    std::istringstream lines(text);
    std::string line;
    std::size_t count = 0;
    while (std::getline(lines, line)) {
        CHECK(std::count(line.begin(), line.end(), ',') == 7);
        ++count;
    }
    CHECK(count == r.size() + 1);
    // Deterministic mode zeroes timings; otherwise they are measured.
    CHECK(text.find(",0,\n") != std::string::npos);
    CHECK(csv_of(r, false) != text);
}

TEST_CASE("fit errors are recorded per row and the run continues") {
    auto cfg = small_config();
    cfg.n = 100;
    cfg.p = 5;
    cfg.n_subs_grid = {10, 200};  // 200 exceeds the padded row count
    cfg.replications = 2;
    const auto r = run_experiment(cfg);
    CHECK(r.size() == 3 * 2 * 2);
    std::size_t errors = 0;
    for (const auto& x : r) {
        if (!x.error.empty()) {
            ++errors;
            CHECK(x.n_subs == 200);
            CHECK(x.error.find("InvalidCounts") != std::string::npos);
            CHECK(x.error.find(',') == std::string::npos);
        }
    }
    CHECK(errors == 2 * 2);  // SRHT_LS and ARWS_LS; OLS ignores n_subs
    const auto agg = aggregate(r);
    for (const auto& row : agg)
        if (row.n_subs == 200 && row.method != Method::OLS) {
            CHECK(row.errors == 2);
            CHECK(std::isnan(row.est_error.mean));
        }
}

TEST_CASE("aggregate arithmetic") {
    ExperimentResult a;
    a.method = Method::OLS;
    a.n_subs = 10;
    a.est_error = 1.0;
    a.rmse = 0.5;
    SUBCASE("single row") {
        const auto g = aggregate(std::vector{a});
        REQUIRE(g.size() == 1);
        CHECK(g[0].est_error.mean == 1.0);
        CHECK(g[0].est_error.sd == 0.0);
    }
    SUBCASE("two rows") {
        auto b = a;
        b.est_error = 3.0;
        b.replication = 1;
        const auto g = aggregate(std::vector{a, b});
        CHECK(g[0].est_error.mean == doctest::Approx(2.0));
        CHECK(g[0].est_error.sd == doctest::Approx(std::sqrt(2.0)));
        CHECK(g[0].runs == 2);
    }
    SUBCASE("errored rows are excluded and counted") {
        auto b = a;
        b.est_error = std::nan("");
        b.error = "RankDeficient: x";
        const auto g = aggregate(std::vector{a, b});
        CHECK(g[0].errors == 1);
        CHECK(g[0].est_error.mean == 1.0);
    }
}

TEST_CASE("aggregate row count matches the grid") {
    ExperimentConfig cfg;
    cfg.n = 2000;
    cfg.p = 10;
    cfg.n_test = 100;
    cfg.replications = 20;
    cfg.methods = {Method::OLS, Method::SRHT_LS, Method::ULURU, Method::AIWS_LS, Method::ARWS_LS};
    cfg.n_subs_grid = {20, 40, 80, 160};
    const auto r = run_experiment(cfg);
    CHECK(aggregate(r).size() == 5 * 4);
    std::ostringstream out;
    write_aggregate_csv(out, aggregate(r));
    CHECK(out.str().rfind("method,n_subs,runs,errors,est_error_mean,est_error_sd,", 0) == 0);
}

TEST_CASE("config parsing and validation") {
    SUBCASE("full config") {
        auto cfg = parse_config(R"({"scenario":"t3","n":3000,"p":12,"methods":"OLS, aiws-ls","n_subs_multiples":[2,4],
                                    "replications":2,"seed":9,"output_dir":"o","pi":0.1,"deterministic":true})");
        finalize_config(cfg);
        CHECK(cfg.scenario == Scenario::T3);
        CHECK(cfg.methods == std::vector{Method::OLS, Method::AIWS_LS});
        CHECK(cfg.n_subs_grid == std::vector<std::size_t>{24, 48});
        CHECK(cfg.base_seed == 9);
        CHECK(cfg.deterministic);
    }
    SUBCASE("defaults") {
        auto cfg = parse_config(R"({"n":20000,"p":50})");
        finalize_config(cfg);
        CHECK(cfg.n_subs_grid == std::vector<std::size_t>{100, 200, 400, 800});
        CHECK(std::find(cfg.methods.begin(), cfg.methods.end(), Method::IWS_LS) != cfg.methods.end());

        auto big = parse_config(R"({"n":1000000,"p":50})");
        finalize_config(big);
        CHECK(std::find(big.methods.begin(), big.methods.end(), Method::IWS_LS) == big.methods.end());
        CHECK(std::find(big.methods.begin(), big.methods.end(), Method::AIWS_LS) != big.methods.end());
    }
    SUBCASE("invalid configs") {
        auto bad = [](const char* text) {
            return code_of([&] {
                auto c = parse_config(text);
                finalize_config(c);
            });
        };
        CHECK(bad("{") == ErrorCode::ConfigError);
        CHECK(bad("[1]") == ErrorCode::ConfigError);
        CHECK(bad(R"({"colour":1})") == ErrorCode::ConfigError);
        CHECK(bad(R"({"n":"many"})") == ErrorCode::ConfigError);
        CHECK(bad(R"({"p":10,"n_subs_grid":[40,20]})") == ErrorCode::ConfigError);
        CHECK(bad(R"({"p":10,"n_subs_grid":[5,20]})") == ErrorCode::ConfigError);
        CHECK(bad(R"({"replications":0})") == ErrorCode::ConfigError);
        CHECK(bad(R"({"methods":["OLS","LASSO"]})") == ErrorCode::ConfigError);
        CHECK(bad(R"({"methods":["OLS","OLS"]})") == ErrorCode::ConfigError);
        CHECK(bad(R"({"scenario":"weird"})") == ErrorCode::ConfigError);
        CHECK(bad(R"({"scenario":"airline"})") == ErrorCode::ConfigError);
        CHECK(bad(R"({"pi":2})") == ErrorCode::ConfigError);
    }
    SUBCASE("missing file") { CHECK(code_of([] { load_config("/nonexistent.json"); }) == ErrorCode::ConfigError); }
}

TEST_CASE("run_and_write output files") {
    auto cfg = small_config();
    cfg.output_dir = fs::temp_directory_path() / "rbls_harness_out";
    fs::remove_all(cfg.output_dir);
    cfg.deterministic = true;
    run_and_write(cfg);
    CHECK(fs::exists(cfg.output_dir / "results.csv"));
    CHECK(fs::exists(cfg.output_dir / "aggregate.csv"));
    CHECK(fs::exists(cfg.output_dir / "plot.gp"));
    CHECK_FALSE(fs::exists(cfg.output_dir / "run_info.json"));
    const auto first = slurp(cfg.output_dir / "results.csv");
    run_and_write(cfg);
    CHECK(slurp(cfg.output_dir / "results.csv") == first);

    cfg.deterministic = false;
    run_and_write(cfg);
    CHECK(fs::exists(cfg.output_dir / "run_info.json"));
}

TEST_CASE("airline scenario runs without truth") {
    const auto path = fs::temp_directory_path() / "rbls_harness_airline.csv";
    fixture::write_synthetic_airline(path, 500, 3);
    ExperimentConfig cfg;
    cfg.scenario = Scenario::Airline;
    cfg.airline_csv = path;
    cfg.n = 400;
    cfg.n_test = 100;
    cfg.replications = 2;
    cfg.methods = {Method::OLS, Method::SRHT_LS};
    const auto r = run_experiment(cfg);
    CHECK_FALSE(r.empty());
    for (const auto& x : r) {
        CHECK(std::isnan(x.est_error));
        if (x.error.empty()) CHECK(x.rmse > 0.0);
    }
    CHECK(r.front().error.empty());
    CHECK(csv_of(r).find("OLS,") != std::string::npos);
}

TEST_CASE("fig1 data") {
    const auto dir = fs::temp_directory_path() / "rbls_fig1";
    SUBCASE("written and bounded") {
        const auto prob = gen_corrupted(20000, 50, {0.3, 1.0, 0.4, 0.1}, 3);
        const auto s = emit_fig1_data(prob, dir);
        CHECK(s.influence_distance > s.leverage_distance);
        for (double d : {s.influence_distance, s.leverage_distance}) {
            CHECK(d >= 0.0);
            CHECK(d <= 2.0);
        }
        CHECK(s.corrupted_rows + s.clean_rows == 20000);
        const auto hist = slurp(dir / "fig1_histograms.csv");
        CHECK(std::count(hist.begin(), hist.end(), '\n') == 1 + 4 * 50);
        CHECK(slurp(dir / "fig1_distances.csv").rfind("quantity,l1_distance\n", 0) == 0);
    }
    SUBCASE("needs both groups") {
        const auto clean = gen_corrupted(500, 5, {0.0, 1.0, 0.4, 0.1}, 1);
        CHECK(code_of([&] { emit_fig1_data(clean, dir); }) == ErrorCode::MissingCorrupted);
        RegressionProblem real{clean.z, clean.y, std::nullopt};
        CHECK(code_of([&] { emit_fig1_data(real, dir); }) == ErrorCode::MissingTruth);
    }
}

TEST_CASE("corrupted sweep ordering at 8p") {
    ExperimentConfig cfg;
    cfg.n = 20000;
    cfg.p = 50;
    cfg.n_test = 1000;
    cfg.replications = 20;
    cfg.base_seed = 2024;
    cfg.methods = {Method::OLS, Method::SRHT_LS, Method::ULURU, Method::AIWS_LS, Method::ARWS_LS};
    cfg.n_subs_grid = {100, 200, 400, 800};
    const auto r = run_experiment(cfg);
    std::map<Method, std::vector<double>> at8p;
    for (const auto& x : r)
        if (x.n_subs == 400) {
            REQUIRE(x.error.empty());
            at8p[x.method].push_back(x.est_error);
        }
    const double ols = oracle::median(at8p[Method::OLS]);
    CHECK(oracle::median(at8p[Method::AIWS_LS]) < ols);
    CHECK(oracle::median(at8p[Method::ARWS_LS]) < ols);
    CHECK(ols < oracle::median(at8p[Method::SRHT_LS]));
}
