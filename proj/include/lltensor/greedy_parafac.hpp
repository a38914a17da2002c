#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lltensor/sparse_tensor3.hpp"

namespace lltensor {

/// Dense column-major matrix of factor columns.
class FactorMatrix {
public:
  FactorMatrix() = default;
  FactorMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[c * rows_ + r]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[c * rows_ + r]; }

  std::span<const double> column(std::size_t c) const {
    return std::span<const double>(data_).subspan(c * rows_, rows_);
  }
  std::span<double> column(std::size_t c) { return std::span<double>(data_).subspan(c * rows_, rows_); }

  void append_column(std::span<const double> col);
  /// Keeps only the first `cols` columns.
  void truncate(std::size_t cols);

  friend bool operator==(const FactorMatrix&, const FactorMatrix&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class InitMethod { SliceSum, SeededRandom };

struct DecomposeOptions {
  std::size_t rank = 2;
  double tol = 1e-9;
  std::size_t max_iters = 500;
  std::uint64_t seed = 0;
  InitMethod init = InitMethod::SliceSum;

  /// Throws InvalidArgument unless rank >= 1, tol > 0, max_iters >= 1.
  void validate() const;
};

struct GroupStatus {
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t restarts = 0;
  // Residual was numerically exhausted when this group was extracted.
  bool exhausted = false;
};

/// Weighted sum of rank-1 (hub, authority, term) outer products.
///
/// lambda is sorted descending, every factor column has unit norm, and the
/// largest-magnitude entry of each term column is nonnegative (lowest index
/// on ties). Column r of hub/authority/term together with lambda[r] and
/// status[r] form group r.
struct CPModel {
  std::vector<double> lambda;
  FactorMatrix hub;
  FactorMatrix authority;
  FactorMatrix term;
  std::vector<GroupStatus> status;
  DecomposeOptions options;

  std::size_t rank() const { return lambda.size(); }
  Dims3 dims() const { return {hub.rows(), authority.rows(), term.rows()}; }

  friend bool operator==(const CPModel& x, const CPModel& y) {
    return x.lambda == y.lambda && x.hub == y.hub && x.authority == y.authority && x.term == y.term;
  }
};

/// The tensor minus a list of rank-1 groups, never materialized.
///
/// Contractions against the residual are contractions against X minus the
/// closed-form contribution of each subtracted group.
class ResidualView {
public:
  explicit ResidualView(const SparseTensor3& x) : x_(&x) {}

  const SparseTensor3& tensor() const { return *x_; }
  Dims3 dims() const { return x_->dims(); }
  std::size_t groups() const { return lambda_.size(); }

  void subtract(double lambda, std::span<const double> h, std::span<const double> a,
                std::span<const double> t);

  std::vector<double> contract_modes_2_3(std::span<const double> a, std::span<const double> t) const;
  std::vector<double> contract_modes_1_3(std::span<const double> h, std::span<const double> t) const;
  std::vector<double> contract_modes_1_2(std::span<const double> h, std::span<const double> a) const;

  /// Squared Frobenius norm of each residual frontal slice (clamped at 0).
  std::vector<double> slice_squared_norms() const;
  /// Squared Frobenius norm of the residual (clamped at 0).
  double squared_norm() const;

private:
  const SparseTensor3* x_;
  std::vector<double> lambda_;
  FactorMatrix h_, a_, t_;
};

struct Rank1Term {
  double lambda = 0.0;
  std::vector<double> hub, authority, term;
  GroupStatus status;
};

/// Dominant rank-1 term of the residual by alternating power iteration.
/// `group` seeds the random restarts so that every group draws a distinct stream.
Rank1Term rank1_power_iteration(const ResidualView& residual, const DecomposeOptions& opts,
                                std::size_t group = 0);

/// Greedy PARAFAC: extract, deflate, repeat `opts.rank` times, then sort by lambda.
CPModel decompose(const SparseTensor3& x, const DecomposeOptions& opts);

/// One forward-deflation run up to the largest requested rank, returning the
/// model each prefix yields. Identical to calling decompose per rank.
std::vector<CPModel> decompose_prefixes(const SparseTensor3& x, const DecomposeOptions& opts,
                                        std::span<const std::size_t> ranks);

/// ||X - Xhat||_F / ||X||_F without densifying either tensor.
double fit_error(const SparseTensor3& x, const CPModel& model);

/// Sign convention for one group: the largest-magnitude term entry is made
/// nonnegative (flipping the hub column along with it), then the same is done
/// for the authority column, again flipping the hub. Ties go to the lowest index.
void canonicalize_signs(std::span<double> h, std::span<double> a, std::span<double> t);

nlohmann::json to_json(const CPModel& model);
CPModel model_from_json(const nlohmann::json& doc);

std::string to_string(InitMethod m);
InitMethod init_method_from_string(const std::string& s);

}  // namespace lltensor
