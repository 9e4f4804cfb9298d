#pragma once

// Regression diagnostics: leverage, influence (Cook's distance), the
// closed-form leave-one-out fit and the sketched leverage approximation.

#include "rbls/matrix.hpp"
#include "rbls/sampling.hpp"
#include "rbls/srht.hpp"

#include <cstddef>
#include <span>

namespace rbls {

enum class DiagnosticsMode { Exact, Approximate };

struct DiagnosticsReport {
    DenseVector residuals;
    DenseVector leverages;
    DenseVector influences;
    DiagnosticsMode mode = DiagnosticsMode::Exact;
    std::size_t leverage_clamp_count = 0;
};

// Upper clamp applied to leverage before it enters (1 − l)².
inline constexpr double kLeverageClamp = 1.0 - 1e-6;
// loo_coefficients refuses rows at or above this leverage.
inline constexpr double kLeverageOneThreshold = 1.0 - 1e-10;

/// lᵢ = zᵢ(ZᵀZ)⁻¹zᵢᵀ = ‖R⁻ᵀzᵢ‖², one triangular solve per row.
DenseVector exact_leverage(const DenseMatrix& z, const LeastSquaresSolution& sol);

/// dᵢ = eᵢ²lᵢ/(1 − lᵢ)² after clamping lᵢ into [0, 1 − 1e-6].
DenseVector influence(std::span<const double> e, std::span<const double> l);
DenseVector approx_influence(std::span<const double> e, std::span<const double> l);
std::size_t count_clamped(std::span<const double> l);

/// Full exact report from one least-squares fit of (Z, y).
DiagnosticsReport exact_diagnostics(const DenseMatrix& z, std::span<const double> y);

/// β̂₋ᵢ = β̂ − (ZᵀZ)⁻¹zᵢᵀeᵢ/(1 − lᵢ), without refitting. Throws LeverageOne.
DenseVector loo_coefficients(const DenseMatrix& z, std::span<const double> y,
                             const LeastSquaresSolution& sol, std::size_t i);

// Default sketch sizes: r1 = max(2p, ⌈p ln p⌉), r2 = ⌈p/2⌉.
std::size_t default_r1(std::size_t p);
std::size_t default_r2(std::size_t p);

/// p×r2 matrix of independent ±1/√r2 entries.
DenseMatrix sign_projection(std::size_t p, std::size_t r2, Seed seed);

/// Squared row norms of Z·R⁻¹·Π₂ with R⁻¹ = VΣ⁻¹ from the SVD of the sketch
/// ΠZ. Throws SketchRankDeficient if σ_min(ΠZ) < 1e-12·σ_max(ΠZ).
DenseVector approx_leverage_from_sketch(const DenseMatrix& z, const DenseMatrix& sketched_z,
                                        const DenseMatrix& right_projection);

/// Two-projection leverage estimate: Π₁ an SRHT with r1 rows, Π₂ a p×r2
/// sign sketch. Requires r1 ≥ p and 1 ≤ r2 ≤ p.
DenseVector approx_leverage(const DenseMatrix& z, std::size_t r1, std::size_t r2, Seed seed);

/// Σₖ|pₖ − qₖ| over `bins` equal-width bins spanning the pooled range, each
/// histogram normalized to unit mass. Throws DegenerateRange if min = max.
double histogram_l1_distance(std::span<const double> a, std::span<const double> b, std::size_t bins = 50);

/// Probability-mass histogram of `values` over [lo, hi]; the last bin is closed.
DenseVector histogram_mass(std::span<const double> values, double lo, double hi, std::size_t bins);

} // namespace rbls
