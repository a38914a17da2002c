#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lltensor/greedy_parafac.hpp"
#include "lltensor/network_builder.hpp"

namespace lltensor {

/// Dense symmetric similarity matrix, row-major.
class DenseMatrix {
public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::vector<double> multiply(std::span<const double> v) const;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct SimilarityMatrices {
  DenseMatrix blogs;  // N x N, cosine of rows of C
  DenseMatrix words;  // M x M, cosine of columns of C
};

/// Cosine of every pair of rows (blogs) and of columns (words). All-zero
/// rows/columns get 0 everywhere, including their own diagonal.
SimilarityMatrices build_similarity_matrices(const CharacteristicMatrix& c);

enum class Domain { Blogs, Words };
enum class Provenance { Standard, Decomposition };

class QueryVector {
public:
  /// Throws InvalidArgument unless entries are 0/1 with at least one 1.
  QueryVector(Domain domain, std::vector<double> indicator);
  static QueryVector all(Domain domain, std::size_t n);

  Domain domain() const { return domain_; }
  std::span<const double> indicator() const { return indicator_; }
  std::size_t size() const { return indicator_.size(); }

private:
  Domain domain_;
  std::vector<double> indicator_;
};

struct RankingVector {
  Domain domain;
  Provenance provenance;
  std::vector<double> scores;
};

struct TaskOptions {
  // Weight group r by lambda_r in the decomposition-side products. Off by
  // default: the formulas use the bare factor matrices.
  bool lambda_weighted = false;
};

// Task 1: blogs relevant to a word query.
RankingVector task1_standard(const CharacteristicMatrix& c, const QueryVector& q_word);
RankingVector task1_decomp(const CPModel& model, const QueryVector& q_word, TaskOptions opts = {});
// Task 2: words relevant to a blog query.
RankingVector task2_standard(const CharacteristicMatrix& c, const QueryVector& q_blog);
RankingVector task2_decomp(const CPModel& model, const QueryVector& q_blog, TaskOptions opts = {});
// Task 3: blogs similar to a blog query.
RankingVector task3_standard(const SimilarityMatrices& sim, const QueryVector& q_blog);
RankingVector task3_decomp(const CPModel& model, const QueryVector& q_blog, TaskOptions opts = {});
// Task 4: words similar to a word query.
RankingVector task4_standard(const SimilarityMatrices& sim, const QueryVector& q_word);
RankingVector task4_decomp(const CPModel& model, const QueryVector& q_word, TaskOptions opts = {});

/// u.v / (|u||v|); 0 when either vector is zero. Throws DimensionError on length mismatch.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

inline constexpr std::size_t kTaskCount = 4;

/// Cosine between standard and decomposition rankings for each task and model.
struct SimilarityReport {
  std::vector<std::size_t> ranks;  // one column per model
  // values[task][model]
  std::vector<std::vector<double>> values;

  double task_average(std::size_t task) const;
  double model_average(std::size_t model) const;
  double overall_average() const;

  /// Rows Task 1..4 then Av.; columns Group <R>... then Av.
  void write_csv(std::ostream& os) const;
  nlohmann::json to_json() const;
};

/// All-ones queries for every task and every model.
SimilarityReport evaluate_all_tasks(const CharacteristicMatrix& c, std::span<const CPModel> models,
                                    TaskOptions opts = {});

struct ScoredLabel {
  std::string label;
  double score = 0.0;
};

struct GroupListing {
  std::size_t group = 0;  // 1-based
  double lambda = 0.0;
  std::vector<ScoredLabel> blogs;
  std::vector<ScoredLabel> words;

  /// Side-by-side columns under the header `Blog  Score  Word  Score`.
  void write_text(std::ostream& os) const;
  nlohmann::json to_json() const;
};

/// Blogs ranked by lambda_r * H(i,r), words by T(k,r); descending, ties by
/// label. `group` is 1-based; top_k == 0 or top_k larger than the list keeps everything.
GroupListing group_listing(const CPModel& model, const CharacteristicMatrix& labels,
                           std::size_t group, std::size_t top_k);

}  // namespace lltensor
