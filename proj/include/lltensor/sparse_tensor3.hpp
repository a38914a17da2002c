#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace lltensor {

struct Dims3 {
  std::size_t I = 0;
  std::size_t J = 0;
  std::size_t K = 0;

  friend bool operator==(const Dims3&, const Dims3&) = default;
};

struct TensorEntry {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t k = 0;
  double value = 0.0;

  friend bool operator==(const TensorEntry&, const TensorEntry&) = default;
};

/// Coordinate-format third-order tensor.
///
/// Entries are kept sorted by (k, i, j) and are unique and nonzero. The
/// object is immutable once constructed; all contractions are single
/// sequential passes over the entry list, so results are bitwise
/// reproducible for a given tensor.
class SparseTensor3 {
public:
  SparseTensor3() = default;

  /// Validates and sorts `entries`. Throws DimensionError for out-of-range
  /// coordinates and InvalidArgument for duplicates or zero values.
  SparseTensor3(Dims3 dims, std::vector<TensorEntry> entries);

  const Dims3& dims() const { return dims_; }
  std::span<const TensorEntry> entries() const { return entries_; }
  std::size_t nnz() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// out[i] = sum X(i,j,k) a[j] t[k]
  std::vector<double> contract_modes_2_3(std::span<const double> a,
                                         std::span<const double> t) const;
  /// out[j] = sum X(i,j,k) h[i] t[k]
  std::vector<double> contract_modes_1_3(std::span<const double> h,
                                         std::span<const double> t) const;
  /// out[k] = sum X(i,j,k) h[i] a[j]
  std::vector<double> contract_modes_1_2(std::span<const double> h,
                                         std::span<const double> a) const;

  double frobenius_norm() const;
  double squared_norm() const;

  /// Per-frontal-slice squared Frobenius norms, length K.
  std::vector<double> slice_squared_norms() const;

  /// True iff |X(i,j,k) - X(j,i,k)| <= tol everywhere. Requires I == J.
  bool frontal_slices_symmetric(double tol) const;

  /// Text format: header `I J K nnz`, then `i j k value` per entry.
  void write_text(std::ostream& os) const;
  static SparseTensor3 read_text(std::istream& is);

  friend bool operator==(const SparseTensor3&, const SparseTensor3&) = default;

private:
  Dims3 dims_;
  std::vector<TensorEntry> entries_;
};

}  // namespace lltensor
