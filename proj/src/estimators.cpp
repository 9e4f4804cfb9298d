#include "rbls/estimators.hpp"

#include "rbls/datagen.hpp"
#include "rbls/error.hpp"
#include "rbls/srht.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

namespace rbls {

std::string_view to_string(Method m) {
    switch (m) {
    case Method::OLS:     return "OLS";
    case Method::SRHT_LS: return "SRHT_LS";
    case Method::LEV_LS:  return "LEV_LS";
    case Method::ULURU:   return "ULURU";
    case Method::IWS_LS:  return "IWS_LS";
    case Method::AIWS_LS: return "AIWS_LS";
    case Method::ARWS_LS: return "ARWS_LS";
    }
    return "?";
}

std::optional<Method> parse_method(std::string_view name) {
    std::string norm;
    for (char c : name) norm.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    for (Method m : kAllMethods)
        if (to_string(m) == norm) return m;
    return std::nullopt;
}

bool is_subsampling(Method m) { return m != Method::OLS; }

namespace {

constexpr std::string_view kSketchStream = "fit/sketch";
constexpr std::string_view kSampleStream = "fit/sample";
constexpr std::string_view kProjectionStream = "fit/pi2";

void check_problem(const DenseMatrix& z, std::span<const double> y) {
    if (y.size() != z.rows()) throw Error(ErrorCode::ShapeMismatch, "y length must equal Z rows");
    if (z.rows() < z.cols() || z.cols() == 0) throw Error(ErrorCode::ShapeMismatch, "need n >= p > 0");
}

void check_subsampling(const DenseMatrix& z, std::span<const double> y, const EstimatorConfig& cfg) {
    check_problem(z, y);
    if (cfg.n_subs < z.cols())
        throw Error(ErrorCode::InvalidCounts, "n_subs (" + std::to_string(cfg.n_subs) + ") must be >= p (" +
                                                  std::to_string(z.cols()) + ")");
    if (cfg.n_subs > next_pow2(z.rows()))
        throw Error(ErrorCode::InvalidCounts, "n_subs exceeds the padded row count");
    if (!(cfg.weight_floor_ratio > 0.0 && cfg.weight_floor_ratio <= 1.0))
        throw Error(ErrorCode::InvalidParams, "weight_floor_ratio must lie in (0, 1]");
}

struct SketchedFit {
    DenseMatrix sketched_z;
    LeastSquaresSolution solution;
};

SketchedFit sketched_solve(const DenseMatrix& z, std::span<const double> y, const EstimatorConfig& cfg) {
    const auto op = build_sketch(z.rows(), cfg.n_subs, derive_seed(cfg.seed, kSketchStream));
    SketchedFit out{apply_sketch(op, z), {}};
    const auto sy = apply_sketch(op, y);
    try {
        out.solution = solve_ls(out.sketched_z, sy);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::RankDeficient) throw;
        throw Error(ErrorCode::RankDeficient, "sketched design lost rank; use a larger n_subs");
    }
    return out;
}

DenseVector residuals_of(const DenseMatrix& z, std::span<const double> y, std::span<const double> beta) {
    DenseVector r(z.rows());
    for (std::size_t i = 0; i < z.rows(); ++i) r[i] = y[i] - dot(z.row(i), beta);
    return r;
}

} // namespace

DenseVector inverse_weight_probabilities(std::span<const double> weights, double floor_ratio, bool* uniform_fallback) {
    if (weights.empty()) throw Error(ErrorCode::InvalidInput, "no weights");
    double wmax = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0)
            throw Error(ErrorCode::InvalidInput, "sampling weights must be finite and non-negative");
        wmax = std::max(wmax, w);
    }
    const std::size_t n = weights.size();
    if (uniform_fallback) *uniform_fallback = false;
    if (wmax <= 0.0) {
        if (uniform_fallback) *uniform_fallback = true;
        return DenseVector(n, 1.0 / static_cast<double>(n));
    }
    const double floor = floor_ratio * wmax;
    DenseVector prob(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        prob[i] = 1.0 / std::max(weights[i], floor);
        total += prob[i];
    }
    for (double& v : prob) v /= total;
    return prob;
}

FitResult subsample_ls(const DenseMatrix& z, std::span<const double> y, DenseVector probabilities,
                       const EstimatorConfig& cfg) {
    if (probabilities.size() != z.rows()) throw Error(ErrorCode::ShapeMismatch, "one probability per row required");
    const AliasTable table(probabilities);
    Rng rng(derive_seed(cfg.seed, kSampleStream));
    auto rows = table.sample(cfg.n_subs, rng);

    DenseMatrix zs = z.gather_rows(rows);
    DenseVector ys(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) ys[k] = y[rows[k]];
    if (cfg.reweight) {
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const double s = 1.0 / std::sqrt(static_cast<double>(cfg.n_subs) * probabilities[rows[k]]);
            for (double& v : zs.row(k)) v *= s;
            ys[k] *= s;
        }
    }

    LeastSquaresSolution sol;
    try {
        sol = solve_ls(zs, ys);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::RankDeficient) throw;
        throw Error(ErrorCode::RankDeficient, "subsample of " + std::to_string(cfg.n_subs) +
                                                  " rows is rank deficient; use a larger n_subs");
    }

    FitResult out;
    out.coefficients = std::move(sol.coefficients);
    out.sampled_row_indices = std::move(rows);
    out.sampling_probabilities = std::move(probabilities);
    return out;
}

FitResult fit_ols(const DenseMatrix& z, std::span<const double> y) {
    check_problem(z, y);
    FitResult out;
    out.coefficients = solve_ls(z, y).coefficients;
    return out;
}

FitResult fit_srht_ls(const DenseMatrix& z, std::span<const double> y, const EstimatorConfig& cfg) {
    check_subsampling(z, y, cfg);
    FitResult out;
    out.coefficients = sketched_solve(z, y, cfg).solution.coefficients;
    return out;
}

FitResult fit_lev_ls(const DenseMatrix& z, std::span<const double> y, const EstimatorConfig& cfg) {
    check_subsampling(z, y, cfg);
    const auto sol = solve_ls(z, y);
    auto lev = exact_leverage(z, sol);
    double total = 0.0;
    for (double l : lev) total += l;
    DenseVector prob(lev.size());
    for (std::size_t i = 0; i < lev.size(); ++i) prob[i] = lev[i] / total;

    auto out = subsample_ls(z, y, std::move(prob), cfg);
    DiagnosticsReport rep;
    rep.residuals = sol.residuals;
    rep.leverages = std::move(lev);
    rep.mode = DiagnosticsMode::Exact;
    out.diagnostics = std::move(rep);
    return out;
}

FitResult fit_uluru(const DenseMatrix& z, std::span<const double> y, const EstimatorConfig& cfg) {
    check_subsampling(z, y, cfg);
    const auto first = sketched_solve(z, y, cfg);
    const auto& beta1 = first.solution.coefficients;
    // Correction: ((ΠZ)ᵀΠZ)⁻¹ Zᵀr with r the full-data residual of step one.
    const auto r = residuals_of(z, y, beta1);
    const auto correction = apply_gram_inverse(first.solution, matvec_transposed(z, r));

    FitResult out;
    out.coefficients = beta1;
    for (std::size_t j = 0; j < correction.size(); ++j) out.coefficients[j] += correction[j];
    return out;
}

FitResult fit_iws_ls(const DenseMatrix& z, std::span<const double> y, const EstimatorConfig& cfg) {
    check_subsampling(z, y, cfg);
    auto rep = exact_diagnostics(z, y);
    bool fallback = false;
    auto prob = inverse_weight_probabilities(rep.influences, cfg.weight_floor_ratio, &fallback);
    auto out = subsample_ls(z, y, std::move(prob), cfg);
    out.uniform_fallback = fallback;
    out.diagnostics = std::move(rep);
    return out;
}

FitResult fit_aiws_ls(const DenseMatrix& z, std::span<const double> y, const EstimatorConfig& cfg,
                      const InfluenceOverrides& overrides) {
    check_subsampling(z, y, cfg);
    const std::size_t p = z.cols();
    const std::size_t r2 = cfg.r2 == 0 ? default_r2(p) : cfg.r2;
    if (r2 > p) throw Error(ErrorCode::InvalidCounts, "r2 must not exceed p");

    std::optional<SketchedFit> sketched;
    if (!overrides.residuals || (!overrides.leverages && cfg.r1 == 0)) sketched = sketched_solve(z, y, cfg);

    DiagnosticsReport rep;
    rep.mode = DiagnosticsMode::Approximate;
    rep.residuals = overrides.residuals ? *overrides.residuals
                                        : residuals_of(z, y, sketched->solution.coefficients);
    if (overrides.leverages) {
        rep.leverages = *overrides.leverages;
    } else if (cfg.r1 == 0) {
        rep.leverages = approx_leverage_from_sketch(z, sketched->sketched_z,
                                                    sign_projection(p, r2, derive_seed(cfg.seed, kProjectionStream)));
    } else {
        rep.leverages = approx_leverage(z, cfg.r1, r2, derive_seed(cfg.seed, kProjectionStream));
    }
    if (rep.residuals.size() != z.rows() || rep.leverages.size() != z.rows())
        throw Error(ErrorCode::ShapeMismatch, "override vectors must have one entry per row");

    rep.influences = approx_influence(rep.residuals, rep.leverages);
    rep.leverage_clamp_count = count_clamped(rep.leverages);

    bool fallback = false;
    auto prob = inverse_weight_probabilities(rep.influences, cfg.weight_floor_ratio, &fallback);
    auto out = subsample_ls(z, y, std::move(prob), cfg);
    out.uniform_fallback = fallback;
    out.diagnostics = std::move(rep);
    return out;
}

FitResult fit_arws_ls(const DenseMatrix& z, std::span<const double> y, const EstimatorConfig& cfg) {
    check_subsampling(z, y, cfg);
    const auto sketched = sketched_solve(z, y, cfg);
    auto resid = residuals_of(z, y, sketched.solution.coefficients);
    DenseVector sq(resid.size());
    for (std::size_t i = 0; i < resid.size(); ++i) sq[i] = resid[i] * resid[i];

    bool fallback = false;
    auto prob = inverse_weight_probabilities(sq, cfg.weight_floor_ratio, &fallback);
    auto out = subsample_ls(z, y, std::move(prob), cfg);
    out.uniform_fallback = fallback;
    DiagnosticsReport rep;
    rep.mode = DiagnosticsMode::Approximate;
    rep.residuals = std::move(resid);
    out.diagnostics = std::move(rep);
    return out;
}

FitResult fit(const RegressionProblem& problem, const EstimatorConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const auto& z = problem.z;
    const auto& y = problem.y;
    FitResult out;
    switch (cfg.method) {
    case Method::OLS:     out = fit_ols(z, y); break;
    case Method::SRHT_LS: out = fit_srht_ls(z, y, cfg); break;
    case Method::LEV_LS:  out = fit_lev_ls(z, y, cfg); break;
    case Method::ULURU:   out = fit_uluru(z, y, cfg); break;
    case Method::IWS_LS:  out = fit_iws_ls(z, y, cfg); break;
    case Method::AIWS_LS: out = fit_aiws_ls(z, y, cfg); break;
    case Method::ARWS_LS: out = fit_arws_ls(z, y, cfg); break;
    }
    out.wall_time = std::chrono::steady_clock::now() - start;
    return out;
}

} // namespace rbls
