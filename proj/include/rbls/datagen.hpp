#pragma once

// Synthetic regression problems (corrupted-observation model and the three
// leverage regimes) and ingestion of the airline on-time CSV schema.

#include "rbls/matrix.hpp"
#include "rbls/sampling.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace rbls {

struct GroundTruth {
    DenseMatrix x;
    DenseMatrix w;
    DenseVector beta;
    DenseVector noise;
    std::vector<std::uint8_t> corruption_mask;  // uᵢ ∈ {0, 1}
    double sigma_x = 1.0;
    double sigma_w = 0.0;
    double sigma_eps = 0.0;
    double pi = 0.0;
};

struct RegressionProblem {
    DenseMatrix z;
    DenseVector y;
    std::optional<GroundTruth> truth;

    std::size_t rows() const noexcept { return z.rows(); }
    std::size_t cols() const noexcept { return z.cols(); }
};

struct SplitProblem {
    RegressionProblem train;
    RegressionProblem test;
};

struct CorruptionParams {
    double pi = 0.3;
    double sigma_x = 1.0;
    double sigma_w = 0.4;
    double sigma_eps = 0.1;
};

enum class LeverageRegime { Gaussian, T3, T1 };

/// Z = X + diag(u)W, y = Xβ + ε with i.i.d. Gaussian X, W, ε, β ~ N(0, I)
/// and uᵢ ~ Bernoulli(π). Throws InvalidParams.
RegressionProblem gen_corrupted(std::size_t n, std::size_t p, const CorruptionParams& params, Seed seed);

/// Rows from N(0, I) (Gaussian) or a multivariate t with 3 or 1 degrees of
/// freedom and identity scale; y = Xβ + ε with σ_ε = 0.1. Requires n > p.
RegressionProblem gen_leverage_regime(std::size_t n, std::size_t p, LeverageRegime regime, Seed seed);

/// Train and test rows share β. Test designs are clean (Z = X) unless
/// `corrupt_test` is set.
SplitProblem gen_corrupted_split(std::size_t n_train, std::size_t n_test, std::size_t p,
                                 const CorruptionParams& params, Seed seed, bool corrupt_test = false);
SplitProblem gen_leverage_split(std::size_t n_train, std::size_t n_test, std::size_t p, LeverageRegime regime,
                                Seed seed);

DenseMatrix regenerate_design(const GroundTruth& truth);
DenseVector regenerate_response(const GroundTruth& truth);

std::optional<LeverageRegime> parse_regime(std::string_view name);

// ---------------------------------------------------------------------------
// Airline delays
// ---------------------------------------------------------------------------

// Origin–destination pairs in first-seen order of the training rows.
class OdDictionary {
public:
    std::size_t insert(const std::string& origin, const std::string& dest);
    std::optional<std::size_t> encode(const std::string& origin, const std::string& dest) const;
    std::pair<std::string, std::string> decode(std::size_t index) const;
    std::size_t size() const noexcept { return pairs_.size(); }

private:
    static std::string key(const std::string& origin, const std::string& dest);
    std::vector<std::pair<std::string, std::string>> pairs_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct AirlineFilter {
    std::string carrier;  // UniqueCarrier, empty = any
    int year = 0;         // 0 = any
    int month = 0;        // 0 = any
};

struct AirlineData {
    SplitProblem split;
    OdDictionary dictionary;
    double distance_mean = 0.0;
    double distance_sd = 1.0;
    std::size_t dropped_rows = 0;
};

/// Reads a header-led CSV with at least Origin, Dest, Distance, ArrDelay.
/// Rows with a missing ("NA" or empty) required field are dropped; the first
/// n_train kept rows train, the next n_test test. Features are a one-hot OD
/// block learned from the training rows followed by distance standardized
/// with training statistics. Throws SchemaError, ParseError, IoError.
AirlineData load_airline_csv(const std::filesystem::path& path, std::size_t n_train, std::size_t n_test,
                             const AirlineFilter& filter = {});

} // namespace rbls
