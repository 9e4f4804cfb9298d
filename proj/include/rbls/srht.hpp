#pragma once

// ---------------------------------------------------------------------------
// Subsampled randomized Hadamard transform
//
//   Π = √(n′/n_subs) · S · H · D
//
// D flips row signs, H is the orthonormal Walsh–Hadamard matrix of order n′
// (the next power of two ≥ n, rows beyond n are zero padding) and S picks
// n_subs rows uniformly with replacement.
// ---------------------------------------------------------------------------

#include "rbls/matrix.hpp"
#include "rbls/sampling.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace rbls {

constexpr bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }
std::size_t next_pow2(std::size_t n);

/// Normalized in-place transform v ← (1/√n)·H_n·v. Throws NotPowerOfTwo.
void fwht_in_place(std::span<double> v);

struct SketchOperator {
    Seed seed = 0;
    std::size_t original_rows = 0;
    std::size_t padded_rows = 0;
    std::size_t subsample_count = 0;
    std::vector<std::int8_t> sign_flips;       // length padded_rows, entries ±1
    std::vector<std::size_t> sampled_indices;  // length subsample_count, in [0, padded_rows)
    double scale = 1.0;                        // √(padded_rows / subsample_count)
};

/// Deterministic in `seed`; signs and row indices come from separate streams.
/// Throws InvalidCounts unless 1 ≤ n_subs ≤ next_pow2(n).
SketchOperator build_sketch(std::size_t n, std::size_t n_subs, Seed seed);

/// ΠA, an n_subs × cols(A) matrix. Throws ShapeMismatch if rows(A) ≠ n.
DenseMatrix apply_sketch(const SketchOperator& op, const DenseMatrix& a);
DenseVector apply_sketch(const SketchOperator& op, std::span<const double> x);

} // namespace rbls
