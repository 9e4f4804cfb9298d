#pragma once

// ---------------------------------------------------------------------------
// Dense row-major storage and the handful of kernels the estimators need:
// Householder least squares, one-sided Jacobi thin SVD, and application of
// (ZᵀZ)⁻¹ through the stored triangular factor.
// ---------------------------------------------------------------------------

#include <cstddef>
#include <span>
#include <vector>

namespace rbls {

using DenseVector = std::vector<double>;

class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols);
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static DenseMatrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    DenseMatrix transpose() const;

    // New matrix holding rows[k] of *this in order; duplicates allowed.
    DenseMatrix gather_rows(std::span<const std::size_t> rows) const;

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseVector matvec(const DenseMatrix& a, std::span<const double> x);
// Aᵀx without forming Aᵀ.
DenseVector matvec_transposed(const DenseMatrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double frobenius_norm(const DenseMatrix& a);
bool all_finite(std::span<const double> v);

struct LeastSquaresSolution {
    DenseVector coefficients;
    DenseVector residuals;
    // Upper-triangular p×p R from Z = QR, so that (ZᵀZ)⁻¹ = R⁻¹R⁻ᵀ.
    DenseMatrix gram_inverse_factor;
};

/// Minimizes ‖y − Zβ‖₂ by Householder QR.
///
/// Throws RankDeficient when some |r_jj| < 1e-12·max|r_kk|, InvalidInput on
/// non-finite data and ShapeMismatch when the shapes disagree or Z is wide.
LeastSquaresSolution solve_ls(const DenseMatrix& z, std::span<const double> y);

/// Returns (ZᵀZ)⁻¹v via Rᵀw = v, Rx = w.
DenseVector apply_gram_inverse(const LeastSquaresSolution& sol, std::span<const double> v);

// Solves Rᵀw = v in place for upper-triangular R.
void solve_upper_transposed(const DenseMatrix& r, std::span<double> v);
// Solves Rx = v in place for upper-triangular R.
void solve_upper(const DenseMatrix& r, std::span<double> v);

struct ThinSvd {
    DenseMatrix u;                 // rows(A) × cols(A)
    DenseVector singular_values;   // descending
    DenseMatrix v;                 // cols(A) × cols(A)
};

/// One-sided Jacobi SVD of a tall (rows ≥ cols) matrix.
///
/// At most 30 sweeps; a pair is rotated while its normalized off-diagonal
/// |uᵢ·uⱼ|/(‖uᵢ‖‖uⱼ‖) exceeds 1e-12. Columns whose norm falls below
/// 1e-12·‖A‖_F are treated as zero. Throws NoConvergence past the cap.
ThinSvd thin_svd(const DenseMatrix& a);

} // namespace rbls
