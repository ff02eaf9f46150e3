#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace porodec {

using Vector = std::vector<double>;

/// Thrown for out-of-range indices and non-conforming dimensions.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Row-compressed sparse matrix.
///
/// Instances are immutable once built. Column indices are strictly increasing
/// within each row and no stored entry is exactly zero. `symmetry_hint()` is
/// computed at construction: true iff the matrix is square and
/// max |A_ij - A_ji| <= 1e-12 * max |A|.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t nrows, std::size_t ncols);

  /// Assembly entry point: duplicate (row, col) pairs are summed.
  static SparseMatrix from_triplets(std::size_t nrows, std::size_t ncols,
                                    std::span<const Triplet> triplets);
  static SparseMatrix identity(std::size_t n);
  static SparseMatrix diagonal(std::span<const double> d);
  static SparseMatrix from_dense(const std::vector<Vector>& rows);

  std::size_t rows() const { return nrows_; }
  std::size_t cols() const { return ncols_; }
  std::size_t nnz() const { return values_.size(); }
  bool square() const { return nrows_ == ncols_; }
  bool symmetry_hint() const { return symmetric_; }

  std::span<const std::size_t> row_ptr() const { return row_ptr_; }
  std::span<const std::size_t> col_idx() const { return col_idx_; }
  std::span<const double> values() const { return values_; }

  /// Entry (i, j); zero when not stored.
  double at(std::size_t i, std::size_t j) const;
  double max_abs() const;
  Vector diagonal_entries() const;

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;
  /// y += s * A x
  void multiply_add(std::span<const double> x, std::span<double> y, double s = 1.0) const;
  /// y += s * A^T x
  void multiply_transpose_add(std::span<const double> x, std::span<double> y,
                              double s = 1.0) const;

  Vector apply(std::span<const double> x) const;
  Vector apply_transpose(std::span<const double> x) const;

  SparseMatrix transpose() const;
  SparseMatrix scaled(double s) const;
  std::vector<Triplet> triplets() const;
  std::vector<Vector> to_dense() const;

  /// Symmetry test with tolerance relative to max |A|.
  bool is_symmetric(double rel_tol = 1e-12) const;

 private:
  void finalize_symmetry();

  std::size_t nrows_ = 0;
  std::size_t ncols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  Vector values_;
  bool symmetric_ = false;
};

/// alpha * A + beta * B
SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b, double alpha = 1.0,
                 double beta = 1.0);

/// One cell of a block grid. A null matrix stands for a zero block.
struct Block {
  const SparseMatrix* matrix = nullptr;
  double scale = 1.0;
};

/// Assembles a block matrix. Block (i, j) is shifted by the row offset of
/// block-row i and the column offset of block-column j. Every block-row and
/// block-column needs at least one present block to fix its size unless the
/// sizes are passed explicitly.
SparseMatrix block_compose(const std::vector<std::vector<Block>>& grid,
                           std::span<const std::size_t> row_sizes = {},
                           std::span<const std::size_t> col_sizes = {});

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);
/// y += s * x
void axpy(double s, std::span<const double> x, std::span<double> y);

}  // namespace porodec
