// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Tolerances are fixed here.

#include "airline_fixture.hpp"
#include "oracles.hpp"

#include "rbls/datagen.hpp"
#include "rbls/diagnostics.hpp"
#include "rbls/estimators.hpp"
#include "rbls/harness.hpp"
#include "rbls/srht.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

using namespace rbls;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double residual_norm(const DenseMatrix& z, const DenseVector& y, const DenseVector& beta) {
    auto r = matvec(z, beta);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = y[i] - r[i];
    return norm2(r);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// AC1
Outcome diagnostics_oracles() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240);
    std::uniform_int_distribution<std::size_t> pick_n(30, 200), pick_p(2, 10);
    double worst_trace = 0, worst_loo = 0, worst_infl = 0;
    for (int inst = 0; inst < 50; ++inst) {
        const std::size_t n = pick_n(rng), p = pick_p(rng);
        const auto z = oracle::gaussian(n, p, 1000 + inst);
        const auto y = oracle::gaussian_vector(n, 5000 + inst);
        const auto sol = solve_ls(z, y);
        const auto l = exact_leverage(z, sol);
        double tr = 0;
        for (double v : l) tr += v;
        worst_trace = std::max(worst_trace, std::abs(tr - static_cast<double>(p)) / static_cast<double>(p));

        const auto d = influence(sol.residuals, l);
        for (std::size_t i = 0; i < n; ++i) {
            worst_loo = std::max(worst_loo, oracle::rel_diff(loo_coefficients(z, y, sol, i), oracle::refit_without(z, y, i)));
            const double q = oracle::influence_quadratic_form(z, y, i);
            worst_infl = std::max(worst_infl, std::abs(d[i] - q) / std::max(std::abs(q), 1e-300));
        }
    }
    const double secs = seconds_since(t0);
    return {worst_trace <= 1e-8 && worst_loo <= 1e-8 && worst_infl <= 1e-8 && secs < 10.0,
            fmt("trace %.2e, loo %.2e, influence %.2e (tol 1e-8), %.2fs (< 10s)", worst_trace, worst_loo, worst_infl,
                secs)};
}

// AC2
Outcome srht_correctness() {
    double worst = 0, worst_involution = 0;
    for (std::size_t n = 2; n <= 1024; n *= 2) {
        const auto h = oracle::hadamard(n);
        const auto x = oracle::gaussian_vector(n, n);
        auto v = x;
        fwht_in_place(v);
        const auto ref = oracle::mul(h, x);
        for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(v[i] - ref[i]));
        fwht_in_place(v);
        for (std::size_t i = 0; i < n; ++i) worst_involution = std::max(worst_involution, std::abs(v[i] - x[i]));
    }
    const std::size_t n = 100, n_subs = 20;
    const auto x = oracle::gaussian_vector(n, 77);
    const double nx = norm2(x);
    double mean = 0;
    for (Seed s = 0; s < 1000; ++s) {
        const double nv = norm2(apply_sketch(build_sketch(n, n_subs, s), x));
        mean += nv * nv / (nx * nx);
    }
    mean /= 1000;
    return {worst <= 1e-12 && worst_involution <= 1e-12 && mean >= 0.95 && mean <= 1.05,
            fmt("fwht err %.1e, involution err %.1e (tol 1e-12), isometry mean %.4f in [0.95,1.05]", worst,
                worst_involution, mean)};
}

// AC3
Outcome residual_bound() {
    const auto t0 = Clock::now();
    int ok = 0;
    double worst = 0;
    for (Seed s = 0; s < 20; ++s) {
        const auto prob = gen_leverage_regime(4096, 16, LeverageRegime::Gaussian, 300 + s);
        const auto ols = fit_ols(prob.z, prob.y);
        EstimatorConfig cfg;
        cfg.method = Method::SRHT_LS;
        cfg.n_subs = 1024;
        cfg.seed = 900 + s;
        const auto sk = fit(prob, cfg);
        const double ratio =
            residual_norm(prob.z, prob.y, sk.coefficients) / residual_norm(prob.z, prob.y, ols.coefficients);
        worst = std::max(worst, ratio);
        if (ratio <= 1.5) ++ok;
    }
    const double secs = seconds_since(t0);
    return {ok >= 18 && secs < 30.0, fmt("%d/20 seeds with ratio <= 1.5 (need 18), worst %.4f, %.2fs (< 30s)", ok,
                                         worst, secs)};
}

// AC4
Outcome fig1_ordering() {
    int ok = 0;
    std::vector<double> ratios;
    for (Seed s = 0; s < 20; ++s) {
        const auto prob = gen_corrupted(20000, 50, {0.3, 1.0, 0.4, 0.1}, 4000 + s);
        const auto f = fig1_summary(prob);
        const double ratio = f.influence_distance / f.leverage_distance;
        ratios.push_back(ratio);
        if (ratio >= 3.0) ++ok;
    }
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    return {ok >= 18, fmt("%d/20 seeds with influence/leverage distance ratio >= 3 (need 18); median %.3f, range "
                          "[%.3f, %.3f]",
                          ok, oracle::median(ratios), *lo, *hi)};
}

std::map<std::pair<Method, std::size_t>, double> medians(const std::vector<ExperimentResult>& results,
                                                         std::size_t& errors) {
    std::map<std::pair<Method, std::size_t>, std::vector<double>> groups;
    for (const auto& r : results) {
        if (!r.error.empty()) {
            ++errors;
            continue;
        }
        groups[{r.method, r.n_subs}].push_back(r.est_error);
    }
    std::map<std::pair<Method, std::size_t>, double> out;
    for (auto& [k, v] : groups) out[k] = oracle::median(v);
    return out;
}

// AC5
Outcome robustness_ordering() {
    const auto t0 = Clock::now();
    ExperimentConfig cfg;
    cfg.scenario = Scenario::Corrupted;
    cfg.n = 20000;
    cfg.p = 50;
    cfg.replications = 20;
    cfg.base_seed = 5;
    cfg.methods = {Method::OLS, Method::ULURU, Method::IWS_LS, Method::AIWS_LS, Method::ARWS_LS};
    cfg.n_subs_grid = {400};
    std::size_t errors = 0;
    auto med = medians(run_experiment(cfg), errors);
    const double secs = seconds_since(t0);
    auto m = [&](Method x) { return med[{x, 400}]; };
    const double ols = m(Method::OLS);
    const bool pass = errors == 0 && m(Method::IWS_LS) < ols && m(Method::AIWS_LS) < ols &&
                      m(Method::ARWS_LS) < ols && m(Method::ULURU) >= 0.9 * ols && secs < 300.0;
    return {pass, fmt("median est_error at 8p: OLS %.4f, IWS %.4f, aIWS %.4f, aRWS %.4f, ULURU %.4f (>= %.4f); "
                      "%zu errors; %.1fs (< 300s)",
                      ols, m(Method::IWS_LS), m(Method::AIWS_LS), m(Method::ARWS_LS), m(Method::ULURU), 0.9 * ols,
                      errors, secs)};
}

// AC6
Outcome clean_sanity() {
    ExperimentConfig cfg;
    cfg.scenario = Scenario::Gaussian;
    cfg.n = 20000;
    cfg.p = 50;
    cfg.replications = 20;
    cfg.base_seed = 6;
    cfg.methods = {Method::OLS,    Method::SRHT_LS, Method::LEV_LS, Method::ULURU,
                   Method::IWS_LS, Method::AIWS_LS, Method::ARWS_LS};
    cfg.n_subs_grid = {100, 200, 400, 800};
    std::size_t errors = 0;
    auto med = medians(run_experiment(cfg), errors);
    bool monotone = true;
    std::string inversions;
    for (Method m : cfg.methods) {
        if (m == Method::OLS) continue;
        int inv = 0;
        for (std::size_t k = 1; k < cfg.n_subs_grid.size(); ++k)
            if (med[{m, cfg.n_subs_grid[k]}] > med[{m, cfg.n_subs_grid[k - 1]}]) ++inv;
        if (inv > 1) monotone = false;
        inversions += fmt(" %s:%d", std::string(to_string(m)).c_str(), inv);
    }
    const double ols = med[{Method::OLS, 200}];
    const double uluru = med[{Method::ULURU, 200}];
    return {errors == 0 && monotone && uluru <= 2.0 * ols,
            fmt("inversions (max 1)%s; ULURU at 4p %.4f vs OLS %.4f, ratio %.2f (max 2); %zu errors",
                inversions.c_str(), uluru, ols, uluru / ols, errors)};
}

// AC7
Outcome complexity() {
    const auto prob = gen_leverage_regime(std::size_t{1} << 17, 64, LeverageRegime::Gaussian, 7);
    auto best_time = [&](Method m) {
        double best = 1e300;
        for (Seed s = 0; s < 3; ++s) {
            EstimatorConfig cfg;
            cfg.method = m;
            cfg.n_subs = 16 * 64;
            cfg.seed = s;
            const auto t0 = Clock::now();
            (void)fit(prob, cfg);
            best = std::min(best, seconds_since(t0));
        }
        return best;
    };
    const double iws = best_time(Method::IWS_LS);
    const double arws = best_time(Method::ARWS_LS);
    return {arws < 0.5 * iws, fmt("aRWS %.3fs vs IWS %.3fs, ratio %.3f (< 0.5)", arws, iws, arws / iws)};
}

// AC8
Outcome determinism() {
    const auto dir = fs::current_path() / "acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "cfg.json") << R"({"scenario":"corrupted","n":5000,"p":20,"replications":4,)"
                                       R"("methods":["OLS","SRHT_LS","ULURU","AIWS_LS","ARWS_LS"],"threads":2})";
    for (const char* run : {"a", "b"}) {
        const std::string cmd = std::string("\"") + RBLS_EXE + "\" run --deterministic --config \"" +
                                (dir / "cfg.json").string() + "\" --out \"" + (dir / run).string() + "\" > /dev/null";
        if (std::system(cmd.c_str()) != 0) return {false, "CLI run failed: " + cmd};
    }
    const auto a = slurp(dir / "a" / "results.csv");
    const auto b = slurp(dir / "b" / "results.csv");
    const auto rows = std::count(a.begin(), a.end(), '\n');
    return {!a.empty() && a == b, fmt("results.csv %zu bytes, %ld lines, identical: %s", a.size(),
                                      static_cast<long>(rows), a == b ? "yes" : "no")};
}

// AC9
Outcome airline_pipeline() {
    const auto three = load_airline_csv(fixture::fixture_dir() / "airline_3row.csv", 3, 0);
    const std::size_t p3 = three.split.train.cols();
    const std::size_t expected_p3 = three.dictionary.size() + 1;

    const auto path = fs::current_path() / "acceptance_airline_500.csv";
    fixture::write_synthetic_airline(path, 500, 9);
    const auto data = load_airline_csv(path, 400, 100);
    const auto f = fit(data.split.train, EstimatorConfig{});
    const auto& test = data.split.test;
    const auto pred = matvec(test.z, f.coefficients);
    double ss = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) ss += (test.y[i] - pred[i]) * (test.y[i] - pred[i]);
    const double rmse = std::sqrt(ss / static_cast<double>(pred.size()));
    const bool pass = p3 == 3 && expected_p3 == 3 && test.rows() > 0 && std::isfinite(rmse);
    return {pass, fmt("3-row fixture p = %zu (expected 3); 500-row file: train %zu x %zu, test %zu rows, RMSE %.3f",
                      p3, data.split.train.rows(), data.split.train.cols(), test.rows(), rmse)};
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"AC1 diagnostics oracles", diagnostics_oracles},
        {"AC2 SRHT correctness", srht_correctness},
        {"AC3 sketched residual bound", residual_bound},
        {"AC4 influence vs leverage separation", fig1_ordering},
        {"AC5 robustness ordering", robustness_ordering},
        {"AC6 clean-data sanity", clean_sanity},
        {"AC7 complexity", complexity},
        {"AC8 determinism", determinism},
        {"AC9 airline pipeline", airline_pipeline},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
