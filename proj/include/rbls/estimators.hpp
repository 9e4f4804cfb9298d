#pragma once

// ---------------------------------------------------------------------------
// Least-squares estimators behind one interface.
//
//   OLS      full Householder solve
//   SRHT_LS  solve the SRHT-sketched system
//   LEV_LS   sample rows ∝ exact leverage, solve on the sample
//   ULURU    SRHT_LS plus one correction step with the sketched Gram
//   IWS_LS   sample rows ∝ 1/dᵢ (exact influence), solve on the sample
//   AIWS_LS  as IWS_LS with sketched residuals and leverages
//   ARWS_LS  sample rows ∝ 1/ẽᵢ² (sketched residuals), solve on the sample
//
// Row sampling is with replacement through an alias table; n_subs counts
// draws, so a subsample can contain duplicates.
// ---------------------------------------------------------------------------

#include "rbls/diagnostics.hpp"
#include "rbls/matrix.hpp"
#include "rbls/sampling.hpp"

#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rbls {

struct RegressionProblem;

enum class Method { OLS, SRHT_LS, LEV_LS, ULURU, IWS_LS, AIWS_LS, ARWS_LS };

inline constexpr Method kAllMethods[] = {Method::OLS,    Method::SRHT_LS, Method::LEV_LS, Method::ULURU,
                                         Method::IWS_LS, Method::AIWS_LS, Method::ARWS_LS};

std::string_view to_string(Method m);
/// Accepts the enum spelling in any case, with '-' in place of '_'.
std::optional<Method> parse_method(std::string_view name);
bool is_subsampling(Method m);

struct EstimatorConfig {
    Method method = Method::OLS;
    std::size_t n_subs = 0;
    // Rows of the leverage sketch Π₁ for AIWS_LS; 0 reuses the SRHT_LS sketch.
    std::size_t r1 = 0;
    // Columns of Π₂; 0 means ⌈p/2⌉.
    std::size_t r2 = 0;
    Seed seed = 0;
    // Inverse weights are computed from max(wᵢ, ratio · maxⱼ wⱼ).
    double weight_floor_ratio = 1e-3;
    // Scale sampled rows by 1/√(n_subs·pᵢ) before solving.
    bool reweight = false;
};

struct FitResult {
    DenseVector coefficients;
    std::optional<std::vector<std::size_t>> sampled_row_indices;
    std::optional<DenseVector> sampling_probabilities;
    std::chrono::duration<double> wall_time{0.0};
    std::optional<DiagnosticsReport> diagnostics;
    // Set when every sampling weight was zero and uniform sampling was used.
    bool uniform_fallback = false;
};

// Replaces sketched quantities in AIWS_LS with caller-supplied ones.
struct InfluenceOverrides {
    std::optional<DenseVector> residuals;
    std::optional<DenseVector> leverages;
};

/// Dispatches on cfg.method and records wall time.
FitResult fit(const RegressionProblem& problem, const EstimatorConfig& cfg);

FitResult fit_ols(const DenseMatrix& z, std::span<const double> y);
FitResult fit_srht_ls(const DenseMatrix& z, std::span<const double> y, const EstimatorConfig& cfg);
FitResult fit_lev_ls(const DenseMatrix& z, std::span<const double> y, const EstimatorConfig& cfg);
FitResult fit_uluru(const DenseMatrix& z, std::span<const double> y, const EstimatorConfig& cfg);
FitResult fit_iws_ls(const DenseMatrix& z, std::span<const double> y, const EstimatorConfig& cfg);
FitResult fit_aiws_ls(const DenseMatrix& z, std::span<const double> y, const EstimatorConfig& cfg,
                      const InfluenceOverrides& overrides = {});
FitResult fit_arws_ls(const DenseMatrix& z, std::span<const double> y, const EstimatorConfig& cfg);

/// Probabilities ∝ 1/max(wᵢ, ratio·max w). `uniform_fallback` is set and the
/// uniform distribution returned when no weight is positive.
DenseVector inverse_weight_probabilities(std::span<const double> weights, double floor_ratio,
                                         bool* uniform_fallback = nullptr);

/// Draws n_subs rows ∝ `probabilities` (seeded by cfg.seed) and solves least
/// squares on them. The shared tail of LEV_LS, IWS_LS, AIWS_LS and ARWS_LS.
FitResult subsample_ls(const DenseMatrix& z, std::span<const double> y, DenseVector probabilities,
                       const EstimatorConfig& cfg);

} // namespace rbls
