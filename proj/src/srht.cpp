#include "rbls/srht.hpp"

#include "rbls/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rbls {

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

namespace {

// Unnormalized butterflies; n must be a power of two.
void fwht_raw(double* __restrict v, std::size_t n) {
    for (std::size_t h = 1; h < n; h <<= 1) {
        for (std::size_t i = 0; i < n; i += 2 * h) {
            for (std::size_t j = i; j < i + h; ++j) {
                const double s = v[j];
                const double t = v[j + h];
                v[j] = s + t;
                v[j + h] = s - t;
            }
        }
    }
}

void check_operator(const SketchOperator& op, std::size_t rows) {
    if (rows != op.original_rows)
        throw Error(ErrorCode::ShapeMismatch, "sketch expects " + std::to_string(op.original_rows) +
                                                  " rows, got " + std::to_string(rows));
}

// Pads one column of length n to n′, applies D then H, gathers sampled rows.
template <class Load, class Store>
void sketch_column(const SketchOperator& op, std::vector<double>& buf, Load load, Store store) {
    const std::size_t n = op.original_rows;
    for (std::size_t i = 0; i < n; ++i) buf[i] = op.sign_flips[i] * load(i);
    std::fill(buf.begin() + static_cast<std::ptrdiff_t>(n), buf.end(), 0.0);
    fwht_raw(buf.data(), buf.size());
    // H normalization folded into the subsampling scale.
    const double f = op.scale / std::sqrt(static_cast<double>(op.padded_rows));
    for (std::size_t k = 0; k < op.subsample_count; ++k) store(k, f * buf[op.sampled_indices[k]]);
}

} // namespace

void fwht_in_place(std::span<double> v) {
    if (!is_power_of_two(v.size()))
        throw Error(ErrorCode::NotPowerOfTwo, "length " + std::to_string(v.size()) + " is not a power of two");
    fwht_raw(v.data(), v.size());
    const double f = 1.0 / std::sqrt(static_cast<double>(v.size()));
    for (double& x : v) x *= f;
}

SketchOperator build_sketch(std::size_t n, std::size_t n_subs, Seed seed) {
    if (n == 0) throw Error(ErrorCode::InvalidCounts, "sketch needs n >= 1");
    const std::size_t padded = next_pow2(n);
    if (n_subs < 1 || n_subs > padded)
        throw Error(ErrorCode::InvalidCounts, "n_subs must lie in [1, " + std::to_string(padded) + "], got " +
                                                  std::to_string(n_subs));

    SketchOperator op;
    op.seed = seed;
    op.original_rows = n;
    op.padded_rows = padded;
    op.subsample_count = n_subs;
    op.scale = std::sqrt(static_cast<double>(padded) / static_cast<double>(n_subs));

    Rng sign_rng(derive_seed(seed, "srht/signs"));
    op.sign_flips.resize(padded);
    for (auto& s : op.sign_flips) s = (sign_rng() >> 63) ? std::int8_t{1} : std::int8_t{-1};

    Rng row_rng(derive_seed(seed, "srht/rows"));
    std::uniform_int_distribution<std::size_t> pick(0, padded - 1);
    op.sampled_indices.resize(n_subs);
    for (auto& idx : op.sampled_indices) idx = pick(row_rng);
    return op;
}

DenseMatrix apply_sketch(const SketchOperator& op, const DenseMatrix& a) {
    check_operator(op, a.rows());
    DenseMatrix out(op.subsample_count, a.cols());
    std::vector<double> buf(op.padded_rows);
    for (std::size_t j = 0; j < a.cols(); ++j) {
        sketch_column(
            op, buf, [&](std::size_t i) { return a(i, j); },
            [&](std::size_t k, double v) { out(k, j) = v; });
    }
    return out;
}

DenseVector apply_sketch(const SketchOperator& op, std::span<const double> x) {
    check_operator(op, x.size());
    DenseVector out(op.subsample_count);
    std::vector<double> buf(op.padded_rows);
    sketch_column(
        op, buf, [&](std::size_t i) { return x[i]; }, [&](std::size_t k, double v) { out[k] = v; });
    return out;
}

} // namespace rbls
