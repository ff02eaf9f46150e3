#include "porodec/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace porodec {

SparseMatrix::SparseMatrix(std::size_t nrows, std::size_t ncols)
    : nrows_(nrows), ncols_(ncols), row_ptr_(nrows + 1, 0) {
  finalize_symmetry();
}

SparseMatrix SparseMatrix::from_triplets(std::size_t nrows, std::size_t ncols,
                                         std::span<const Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row >= nrows || t.col >= ncols) {
      throw DimensionError("triplet (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                           ") out of range for " + std::to_string(nrows) + "x" +
                           std::to_string(ncols) + " matrix");
    }
  }

  // Bucket by row, then sort each row by column and merge duplicates.
  std::vector<std::size_t> count(nrows + 1, 0);
  for (const auto& t : triplets) ++count[t.row + 1];
  std::partial_sum(count.begin(), count.end(), count.begin());

  std::vector<std::size_t> cols(triplets.size());
  Vector vals(triplets.size());
  {
    auto next = count;
    for (const auto& t : triplets) {
      const std::size_t k = next[t.row]++;
      cols[k] = t.col;
      vals[k] = t.value;
    }
  }

  SparseMatrix m;
  m.nrows_ = nrows;
  m.ncols_ = ncols;
  m.row_ptr_.assign(nrows + 1, 0);
  m.col_idx_.reserve(triplets.size());
  m.values_.reserve(triplets.size());

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < nrows; ++i) {
    const std::size_t begin = count[i];
    const std::size_t end = count[i + 1];
    order.resize(end - begin);
    std::iota(order.begin(), order.end(), begin);
    // Stable so that summation order of duplicates is the input order.
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return cols[a] < cols[b]; });
    std::size_t k = 0;
    while (k < order.size()) {
      const std::size_t c = cols[order[k]];
      double sum = 0.0;
      while (k < order.size() && cols[order[k]] == c) sum += vals[order[k++]];
      if (sum != 0.0) {
        m.col_idx_.push_back(c);
        m.values_.push_back(sum);
      }
    }
    m.row_ptr_[i + 1] = m.col_idx_.size();
  }
  m.finalize_symmetry();
  return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  Vector ones(n, 1.0);
  return diagonal(ones);
}

SparseMatrix SparseMatrix::diagonal(std::span<const double> d) {
  std::vector<Triplet> t;
  t.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) t.push_back({i, i, d[i]});
  return from_triplets(d.size(), d.size(), t);
}

SparseMatrix SparseMatrix::from_dense(const std::vector<Vector>& rows) {
  const std::size_t nr = rows.size();
  const std::size_t nc = nr == 0 ? 0 : rows.front().size();
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < nr; ++i) {
    if (rows[i].size() != nc) throw DimensionError("ragged dense matrix");
    for (std::size_t j = 0; j < nc; ++j) {
      if (rows[i][j] != 0.0) t.push_back({i, j, rows[i][j]});
    }
  }
  return from_triplets(nr, nc, t);
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
  if (i >= nrows_ || j >= ncols_) throw DimensionError("SparseMatrix::at out of range");
  const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

double SparseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

Vector SparseMatrix::diagonal_entries() const {
  Vector d(std::min(nrows_, ncols_), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
  return d;
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != ncols_ || y.size() != nrows_) throw DimensionError("multiply: size mismatch");
  for (std::size_t i = 0; i < nrows_; ++i) {
    double s = 0.0;
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * x[col_idx_[k]];
    y[i] = s;
  }
}

void SparseMatrix::multiply_add(std::span<const double> x, std::span<double> y, double s) const {
  if (x.size() != ncols_ || y.size() != nrows_) {
    throw DimensionError("multiply_add: size mismatch");
  }
  for (std::size_t i = 0; i < nrows_; ++i) {
    double acc = 0.0;
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      acc += values_[k] * x[col_idx_[k]];
    }
    y[i] += s * acc;
  }
}

void SparseMatrix::multiply_transpose_add(std::span<const double> x, std::span<double> y,
                                          double s) const {
  if (x.size() != nrows_ || y.size() != ncols_) {
    throw DimensionError("multiply_transpose_add: size mismatch");
  }
  for (std::size_t i = 0; i < nrows_; ++i) {
    const double xi = s * x[i];
    if (xi == 0.0) continue;
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) y[col_idx_[k]] += values_[k] * xi;
  }
}

Vector SparseMatrix::apply(std::span<const double> x) const {
  Vector y(nrows_);
  multiply(x, y);
  return y;
}

Vector SparseMatrix::apply_transpose(std::span<const double> x) const {
  Vector y(ncols_, 0.0);
  multiply_transpose_add(x, y);
  return y;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<Triplet> t;
  t.reserve(nnz());
  for (std::size_t i = 0; i < nrows_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      t.push_back({col_idx_[k], i, values_[k]});
    }
  }
  return from_triplets(ncols_, nrows_, t);
}

SparseMatrix SparseMatrix::scaled(double s) const {
  if (s == 0.0) return SparseMatrix(nrows_, ncols_);
  SparseMatrix m = *this;
  for (double& v : m.values_) v *= s;
  return m;
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> t;
  t.reserve(nnz());
  for (std::size_t i = 0; i < nrows_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      t.push_back({i, col_idx_[k], values_[k]});
    }
  }
  return t;
}

std::vector<Vector> SparseMatrix::to_dense() const {
  std::vector<Vector> d(nrows_, Vector(ncols_, 0.0));
  for (std::size_t i = 0; i < nrows_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) d[i][col_idx_[k]] = values_[k];
  }
  return d;
}

bool SparseMatrix::is_symmetric(double rel_tol) const {
  if (!square()) return false;
  const double bound = rel_tol * max_abs();
  for (std::size_t i = 0; i < nrows_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      if (std::abs(values_[k] - at(col_idx_[k], i)) > bound) return false;
    }
  }
  return true;
}

void SparseMatrix::finalize_symmetry() { symmetric_ = is_symmetric(1e-12); }

SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b, double alpha, double beta) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("add: shape mismatch");
  std::vector<Triplet> t;
  t.reserve(a.nnz() + b.nnz());
  for (auto tr : a.triplets()) t.push_back({tr.row, tr.col, alpha * tr.value});
  for (auto tr : b.triplets()) t.push_back({tr.row, tr.col, beta * tr.value});
  return SparseMatrix::from_triplets(a.rows(), a.cols(), t);
}

SparseMatrix block_compose(const std::vector<std::vector<Block>>& grid,
                           std::span<const std::size_t> row_sizes,
                           std::span<const std::size_t> col_sizes) {
  const std::size_t br = grid.size();
  const std::size_t bc = br == 0 ? 0 : grid.front().size();
  for (const auto& row : grid) {
    if (row.size() != bc) throw DimensionError("block_compose: ragged block grid");
  }
  constexpr std::size_t unset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> rs(br, unset);
  std::vector<std::size_t> cs(bc, unset);
  if (!row_sizes.empty()) {
    if (row_sizes.size() != br) throw DimensionError("block_compose: row_sizes length");
    rs.assign(row_sizes.begin(), row_sizes.end());
  }
  if (!col_sizes.empty()) {
    if (col_sizes.size() != bc) throw DimensionError("block_compose: col_sizes length");
    cs.assign(col_sizes.begin(), col_sizes.end());
  }

  auto name = [](std::size_t i, std::size_t j) {
    return "block (" + std::to_string(i) + ", " + std::to_string(j) + ")";
  };
  for (std::size_t i = 0; i < br; ++i) {
    for (std::size_t j = 0; j < bc; ++j) {
      const SparseMatrix* m = grid[i][j].matrix;
      if (m == nullptr) continue;
      if (rs[i] == unset) {
        rs[i] = m->rows();
      } else if (rs[i] != m->rows()) {
        throw DimensionError(name(i, j) + " has " + std::to_string(m->rows()) +
                             " rows, expected " + std::to_string(rs[i]));
      }
      if (cs[j] == unset) {
        cs[j] = m->cols();
      } else if (cs[j] != m->cols()) {
        throw DimensionError(name(i, j) + " has " + std::to_string(m->cols()) +
                             " columns, expected " + std::to_string(cs[j]));
      }
    }
  }
  for (std::size_t i = 0; i < br; ++i) {
    if (rs[i] == unset) throw DimensionError("block row " + std::to_string(i) + " has no size");
  }
  for (std::size_t j = 0; j < bc; ++j) {
    if (cs[j] == unset) throw DimensionError("block column " + std::to_string(j) + " has no size");
  }

  std::vector<std::size_t> roff(br + 1, 0);
  std::vector<std::size_t> coff(bc + 1, 0);
  for (std::size_t i = 0; i < br; ++i) roff[i + 1] = roff[i] + rs[i];
  for (std::size_t j = 0; j < bc; ++j) coff[j + 1] = coff[j] + cs[j];

  std::vector<Triplet> t;
  for (std::size_t i = 0; i < br; ++i) {
    for (std::size_t j = 0; j < bc; ++j) {
      const Block& b = grid[i][j];
      if (b.matrix == nullptr) continue;
      for (const auto& tr : b.matrix->triplets()) {
        t.push_back({tr.row + roff[i], tr.col + coff[j], b.scale * tr.value});
      }
    }
  }
  return SparseMatrix::from_triplets(roff[br], coff[bc], t);
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

void axpy(double s, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw DimensionError("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

}  // namespace porodec
