#include "rbls/matrix.hpp"

#include "rbls/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace rbls {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols)
        throw Error(ErrorCode::ShapeMismatch,
                    "data length " + std::to_string(data_.size()) + " != " +
                        std::to_string(rows) + "x" + std::to_string(cols));
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

DenseMatrix DenseMatrix::gather_rows(std::span<const std::size_t> rows) const {
    DenseMatrix out(rows.size(), cols_);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k] >= rows_)
            throw Error(ErrorCode::ShapeMismatch, "row index out of range");
        std::copy_n(data_.data() + rows[k] * cols_, cols_, out.data_.data() + k * cols_);
    }
    return out;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw Error(ErrorCode::ShapeMismatch, "matmul inner dimensions");
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ci = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            auto bk = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

DenseVector matvec(const DenseMatrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw Error(ErrorCode::ShapeMismatch, "matvec dimensions");
    DenseVector out(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i), x);
    return out;
}

DenseVector matvec_transposed(const DenseMatrix& a, std::span<const double> x) {
    if (a.rows() != x.size()) throw Error(ErrorCode::ShapeMismatch, "matvec_transposed dimensions");
    DenseVector out(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double xi = x[i];
        auto ai = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) out[j] += ai[j] * xi;
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double frobenius_norm(const DenseMatrix& a) { return norm2(a.data()); }

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// ---------------------------------------------------------------------------
// Householder QR
// ---------------------------------------------------------------------------

LeastSquaresSolution solve_ls(const DenseMatrix& z, std::span<const double> y) {
    const std::size_t n = z.rows();
    const std::size_t p = z.cols();
    if (y.size() != n) throw Error(ErrorCode::ShapeMismatch, "y length must equal Z rows");
    if (p == 0 || n < p)
        throw Error(ErrorCode::ShapeMismatch,
                    "least squares needs rows >= cols > 0, got " + std::to_string(n) + "x" +
                        std::to_string(p));
    if (!all_finite(z.data()) || !all_finite(y))
        throw Error(ErrorCode::InvalidInput, "non-finite entry in Z or y");

    // Column-major working copy so reflections touch contiguous memory.
    std::vector<double> a(n * p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) a[j * n + i] = z(i, j);
    DenseVector qty(y.begin(), y.end());

    DenseMatrix r(p, p);
    for (std::size_t k = 0; k < p; ++k) {
        double* col = a.data() + k * n;
        double sq = 0.0;
        for (std::size_t i = k; i < n; ++i) sq += col[i] * col[i];
        const double nrm = std::sqrt(sq);
        if (nrm == 0.0) {
            // Nothing to annihilate; the zero diagonal is caught by the rank check.
            for (std::size_t j = k; j < p; ++j) r(k, j) = a[j * n + k];
            continue;
        }
        const double alpha = col[k] > 0.0 ? -nrm : nrm;
        // v = x − αe₁, stored in place of x; ‖v‖² = 2(‖x‖² − αx₀).
        const double vnorm_sq = 2.0 * (sq - alpha * col[k]);
        col[k] -= alpha;

        auto reflect = [&](double* target) {
            double s = 0.0;
            for (std::size_t i = k; i < n; ++i) s += col[i] * target[i];
            const double f = 2.0 * s / vnorm_sq;
            for (std::size_t i = k; i < n; ++i) target[i] -= f * col[i];
        };
        for (std::size_t j = k + 1; j < p; ++j) reflect(a.data() + j * n);
        reflect(qty.data());

        r(k, k) = alpha;
        for (std::size_t j = k + 1; j < p; ++j) r(k, j) = a[j * n + k];
    }

    double rmax = 0.0;
    for (std::size_t k = 0; k < p; ++k) rmax = std::max(rmax, std::abs(r(k, k)));
    for (std::size_t k = 0; k < p; ++k) {
        if (!(std::abs(r(k, k)) >= 1e-12 * rmax) || rmax == 0.0)
            throw Error(ErrorCode::RankDeficient,
                        "R factor diagonal " + std::to_string(k) + " below 1e-12 of max (collinear design)");
    }

    DenseVector beta(qty.begin(), qty.begin() + static_cast<std::ptrdiff_t>(p));
    solve_upper(r, beta);

    DenseVector resid(n);
    for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - dot(z.row(i), beta);

    return {std::move(beta), std::move(resid), std::move(r)};
}

void solve_upper_transposed(const DenseMatrix& r, std::span<double> v) {
    const std::size_t p = r.rows();
    for (std::size_t i = 0; i < p; ++i) {
        double s = v[i];
        for (std::size_t k = 0; k < i; ++k) s -= r(k, i) * v[k];
        v[i] = s / r(i, i);
    }
}

void solve_upper(const DenseMatrix& r, std::span<double> v) {
    const std::size_t p = r.rows();
    for (std::size_t i = p; i-- > 0;) {
        double s = v[i];
        auto ri = r.row(i);
        for (std::size_t k = i + 1; k < p; ++k) s -= ri[k] * v[k];
        v[i] = s / r(i, i);
    }
}

DenseVector apply_gram_inverse(const LeastSquaresSolution& sol, std::span<const double> v) {
    const auto& r = sol.gram_inverse_factor;
    if (v.size() != r.rows()) throw Error(ErrorCode::ShapeMismatch, "vector length must equal p");
    DenseVector w(v.begin(), v.end());
    solve_upper_transposed(r, w);
    solve_upper(r, w);
    return w;
}

// ---------------------------------------------------------------------------
// One-sided Jacobi SVD
// ---------------------------------------------------------------------------

ThinSvd thin_svd(const DenseMatrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (m < n) throw Error(ErrorCode::ShapeMismatch, "thin_svd expects rows >= cols; transpose first");
    if (!all_finite(a.data())) throw Error(ErrorCode::InvalidInput, "non-finite entry in thin_svd input");

    constexpr int kMaxSweeps = 30;
    constexpr double kTol = 1e-12;

    // Columns of U (col-major) and V (col-major) rotate together.
    std::vector<double> u(m * n), v(n * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) u[j * m + i] = a(i, j);
    for (std::size_t j = 0; j < n; ++j) v[j * n + j] = 1.0;

    const double fro = frobenius_norm(a);
    const double zero_col = (kTol * fro) * (kTol * fro);

    bool converged = n < 2;
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        bool rotated = false;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            double* ui = u.data() + i * m;
            for (std::size_t j = i + 1; j < n; ++j) {
                double* uj = u.data() + j * m;
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t k = 0; k < m; ++k) {
                    alpha += ui[k] * ui[k];
                    beta += uj[k] * uj[k];
                    gamma += ui[k] * uj[k];
                }
                if (alpha <= zero_col || beta <= zero_col) continue;
                if (std::abs(gamma) <= kTol * std::sqrt(alpha * beta)) continue;
                rotated = true;

                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t k = 0; k < m; ++k) {
                    const double x = ui[k], w = uj[k];
                    ui[k] = c * x - s * w;
                    uj[k] = s * x + c * w;
                }
                double* vi = v.data() + i * n;
                double* vj = v.data() + j * n;
                for (std::size_t k = 0; k < n; ++k) {
                    const double x = vi[k], w = vj[k];
                    vi[k] = c * x - s * w;
                    vj[k] = s * x + c * w;
                }
            }
        }
        converged = !rotated;
    }
    if (!converged) throw Error(ErrorCode::NoConvergence, "Jacobi SVD exceeded 30 sweeps");

    DenseVector sigma(n);
    for (std::size_t j = 0; j < n; ++j) sigma[j] = norm2({u.data() + j * m, m});

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    ThinSvd out{DenseMatrix(m, n), DenseVector(n), DenseMatrix(n, n)};
    std::vector<std::size_t> null_cols;
    for (std::size_t jj = 0; jj < n; ++jj) {
        const std::size_t j = order[jj];
        const double s = sigma[j] > std::sqrt(zero_col) ? sigma[j] : 0.0;
        out.singular_values[jj] = s;
        for (std::size_t k = 0; k < n; ++k) out.v(k, jj) = v[j * n + k];
        if (s == 0.0) {
            null_cols.push_back(jj);
            continue;
        }
        for (std::size_t k = 0; k < m; ++k) out.u(k, jj) = u[j * m + k] / s;
    }

    // Complete U with unit vectors orthogonalized against the columns so far.
    for (std::size_t jj : null_cols) {
        for (std::size_t e = 0; e < m; ++e) {
            std::vector<double> cand(m, 0.0);
            cand[e] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t c = 0; c < n; ++c) {
                    if (c == jj) continue;
                    double proj = 0.0;
                    for (std::size_t k = 0; k < m; ++k) proj += out.u(k, c) * cand[k];
                    for (std::size_t k = 0; k < m; ++k) cand[k] -= proj * out.u(k, c);
                }
            }
            const double nrm = norm2(cand);
            if (nrm > 0.5) {
                for (std::size_t k = 0; k < m; ++k) out.u(k, jj) = cand[k] / nrm;
                break;
            }
        }
    }
    return out;
}

} // namespace rbls
