#include "rbls/diagnostics.hpp"

#include "rbls/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rbls {

DenseVector exact_leverage(const DenseMatrix& z, const LeastSquaresSolution& sol) {
    const auto& r = sol.gram_inverse_factor;
    if (r.rows() != z.cols()) throw Error(ErrorCode::ShapeMismatch, "solution was not produced from this Z");
    DenseVector lev(z.rows());
    DenseVector w(z.cols());
    for (std::size_t i = 0; i < z.rows(); ++i) {
        auto zi = z.row(i);
        std::copy(zi.begin(), zi.end(), w.begin());
        solve_upper_transposed(r, w);
        lev[i] = dot(w, w);
    }
    return lev;
}

namespace {

DenseVector influence_impl(std::span<const double> e, std::span<const double> l) {
    if (e.size() != l.size()) throw Error(ErrorCode::ShapeMismatch, "residual and leverage lengths differ");
    DenseVector d(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double li = std::clamp(l[i], 0.0, kLeverageClamp);
        const double gap = 1.0 - li;
        d[i] = e[i] * e[i] * li / (gap * gap);
    }
    return d;
}

} // namespace

DenseVector influence(std::span<const double> e, std::span<const double> l) { return influence_impl(e, l); }

DenseVector approx_influence(std::span<const double> e, std::span<const double> l) { return influence_impl(e, l); }

std::size_t count_clamped(std::span<const double> l) {
    return static_cast<std::size_t>(
        std::count_if(l.begin(), l.end(), [](double x) { return x > kLeverageClamp || x < 0.0; }));
}

DiagnosticsReport exact_diagnostics(const DenseMatrix& z, std::span<const double> y) {
    auto sol = solve_ls(z, y);
    DiagnosticsReport rep;
    rep.leverages = exact_leverage(z, sol);
    rep.influences = influence(sol.residuals, rep.leverages);
    rep.leverage_clamp_count = count_clamped(rep.leverages);
    rep.residuals = std::move(sol.residuals);
    rep.mode = DiagnosticsMode::Exact;
    return rep;
}

DenseVector loo_coefficients(const DenseMatrix& z, std::span<const double> y, const LeastSquaresSolution& sol,
                             std::size_t i) {
    if (i >= z.rows() || y.size() != z.rows()) throw Error(ErrorCode::ShapeMismatch, "row index out of range");
    auto zi = z.row(i);
    DenseVector w(zi.begin(), zi.end());
    solve_upper_transposed(sol.gram_inverse_factor, w);
    const double li = dot(w, w);
    if (li >= kLeverageOneThreshold)
        throw Error(ErrorCode::LeverageOne, "row " + std::to_string(i) + " has leverage " + std::to_string(li));
    solve_upper(sol.gram_inverse_factor, w);  // w = (ZᵀZ)⁻¹zᵢᵀ
    const double ei = y[i] - dot(zi, sol.coefficients);
    const double f = ei / (1.0 - li);
    DenseVector beta = sol.coefficients;
    for (std::size_t j = 0; j < beta.size(); ++j) beta[j] -= f * w[j];
    return beta;
}

std::size_t default_r1(std::size_t p) {
    const double plogp = std::ceil(static_cast<double>(p) * std::log(static_cast<double>(std::max<std::size_t>(p, 1))));
    return std::max<std::size_t>(2 * p, static_cast<std::size_t>(plogp));
}

std::size_t default_r2(std::size_t p) { return std::max<std::size_t>(1, (p + 1) / 2); }

DenseMatrix sign_projection(std::size_t p, std::size_t r2, Seed seed) {
    if (r2 < 1 || r2 > p) throw Error(ErrorCode::InvalidCounts, "r2 must lie in [1, p]");
    DenseMatrix m(p, r2);
    Rng rng(derive_seed(seed, "leverage/pi2"));
    const double s = 1.0 / std::sqrt(static_cast<double>(r2));
    for (double& v : m.data()) v = (rng() >> 63) ? s : -s;
    return m;
}

DenseVector approx_leverage_from_sketch(const DenseMatrix& z, const DenseMatrix& sketched_z,
                                        const DenseMatrix& right_projection) {
    const std::size_t p = z.cols();
    if (sketched_z.cols() != p || right_projection.rows() != p)
        throw Error(ErrorCode::ShapeMismatch, "sketch or projection does not match Z's column count");
    if (sketched_z.rows() < p)
        throw Error(ErrorCode::InvalidCounts, "sketch has fewer rows than columns");

    const auto svd = thin_svd(sketched_z);
    const double smax = svd.singular_values.front();
    const double smin = svd.singular_values.back();
    if (!(smin >= 1e-12 * smax) || smax == 0.0)
        throw Error(ErrorCode::SketchRankDeficient, "sketched design lost rank; increase r1");

    // M = VΣ⁻¹Π₂ (p×r2), then Ũ = ZM.
    DenseMatrix rinv(p, p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) rinv(i, j) = svd.v(i, j) / svd.singular_values[j];
    const DenseMatrix m = matmul(rinv, right_projection);

    const std::size_t r2 = m.cols();
    DenseVector lev(z.rows());
    DenseVector row(r2);
    for (std::size_t i = 0; i < z.rows(); ++i) {
        std::fill(row.begin(), row.end(), 0.0);
        auto zi = z.row(i);
        for (std::size_t k = 0; k < p; ++k) {
            const double zik = zi[k];
            auto mk = m.row(k);
            for (std::size_t j = 0; j < r2; ++j) row[j] += zik * mk[j];
        }
        lev[i] = dot(row, row);
    }
    return lev;
}

DenseVector approx_leverage(const DenseMatrix& z, std::size_t r1, std::size_t r2, Seed seed) {
    const std::size_t p = z.cols();
    if (r1 < p) throw Error(ErrorCode::InvalidCounts, "r1 must be at least p");
    if (r2 < 1 || r2 > p) throw Error(ErrorCode::InvalidCounts, "r2 must lie in [1, p]");
    const auto op = build_sketch(z.rows(), r1, derive_seed(seed, "leverage/pi1"));
    return approx_leverage_from_sketch(z, apply_sketch(op, z), sign_projection(p, r2, seed));
}

DenseVector histogram_mass(std::span<const double> values, double lo, double hi, std::size_t bins) {
    DenseVector mass(bins, 0.0);
    if (values.empty()) return mass;
    const double width = (hi - lo) / static_cast<double>(bins);
    for (double v : values) {
        auto k = static_cast<std::ptrdiff_t>(std::floor((v - lo) / width));
        k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(bins) - 1);
        mass[static_cast<std::size_t>(k)] += 1.0;
    }
    for (double& m : mass) m /= static_cast<double>(values.size());
    return mass;
}

double histogram_l1_distance(std::span<const double> a, std::span<const double> b, std::size_t bins) {
    if (a.empty() || b.empty()) throw Error(ErrorCode::InvalidInput, "histogram inputs must be non-empty");
    if (bins < 2) throw Error(ErrorCode::InvalidInput, "need at least two bins");
    const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
    const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
    const double lo = std::min(*amin, *bmin);
    const double hi = std::max(*amax, *bmax);
    if (!(hi > lo)) throw Error(ErrorCode::DegenerateRange, "pooled minimum equals maximum");
    const auto pa = histogram_mass(a, lo, hi, bins);
    const auto pb = histogram_mass(b, lo, hi, bins);
    double d = 0.0;
    for (std::size_t k = 0; k < bins; ++k) d += std::abs(pa[k] - pb[k]);
    return d;
}

} // namespace rbls
