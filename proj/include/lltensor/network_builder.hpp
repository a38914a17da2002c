#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "lltensor/sparse_tensor3.hpp"

namespace lltensor {

/// Blogs-versus-shared-words count matrix, row-major.
class CharacteristicMatrix {
public:
  CharacteristicMatrix() = default;

  /// Throws InvalidArgument on size mismatch, negative counts or duplicate labels.
  CharacteristicMatrix(std::vector<std::string> blog_labels,
                       std::vector<std::string> word_labels,
                       std::vector<std::int64_t> counts);

  std::size_t n_blogs() const { return blog_labels_.size(); }
  std::size_t n_words() const { return word_labels_.size(); }

  std::int64_t operator()(std::size_t blog, std::size_t word) const {
    return counts_[blog * n_words() + word];
  }

  const std::vector<std::string>& blog_labels() const { return blog_labels_; }
  const std::vector<std::string>& word_labels() const { return word_labels_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }

  /// Number of blogs with a nonzero count for `word`.
  std::size_t word_document_frequency(std::size_t word) const;

  friend bool operator==(const CharacteristicMatrix&, const CharacteristicMatrix&) = default;

private:
  std::vector<std::string> blog_labels_;
  std::vector<std::string> word_labels_;
  std::vector<std::int64_t> counts_;
};

/// Case-folded set of words to drop before building the network.
class Stoplist {
public:
  Stoplist() = default;
  explicit Stoplist(const std::vector<std::string>& words);

  /// One word per line; blank lines and `#` comments ignored.
  static Stoplist read(std::istream& is);

  bool contains(const std::string& word) const;
  std::size_t size() const { return words_.size(); }

private:
  std::set<std::string> words_;
};

std::string case_fold(const std::string& s);

/// CSV: header row of word labels (first cell is a corner label and is
/// ignored), then one row per blog: label followed by nonnegative integers.
/// Errors name the offending row/column.
CharacteristicMatrix load_characteristic_matrix(std::istream& csv);
void write_characteristic_matrix(std::ostream& os, const CharacteristicMatrix& c);

inline constexpr std::size_t kDefaultMinBlogs = 2;

/// Drops stoplisted words and words present in fewer than `min_blogs` blogs.
/// Surviving columns keep their order and values.
CharacteristicMatrix filter_vocabulary(const CharacteristicMatrix& c, const Stoplist& stop,
                                       std::size_t min_blogs = kDefaultMinBlogs);

/// Adjacency tensor of the labeled-link network, dims (N, N, M):
/// X(i,j,k) = C(i,k) + C(j,k) when i != j and both counts are positive, else 0.
SparseTensor3 build_adjacency_tensor(const CharacteristicMatrix& c);

struct SyntheticParams {
  std::size_t n_blogs = 151;
  std::size_t n_words = 180;
  std::size_t n_clusters = 4;
  std::uint64_t seed = 1;
  double noise = 0.05;
};

// In-block counts lie in [kInBlockMin, kInBlockMax] (per-word upper cap, see
// generate_synthetic_network); noise cells are uniform on [kNoiseMin, kNoiseMax].
inline constexpr std::int64_t kInBlockMin = 1;
inline constexpr std::int64_t kInBlockMax = 20;
inline constexpr std::int64_t kNoiseMin = 1;
inline constexpr std::int64_t kNoiseMax = 3;

struct SyntheticNetwork {
  CharacteristicMatrix matrix;
  std::vector<std::size_t> blog_cluster;  // planted block of each blog
  std::vector<std::size_t> word_cluster;  // planted block of each word
};

/// Planted-partition characteristic matrix.
///
/// Block sizes decay linearly (weights n_clusters, n_clusters-1, ..., 1) and
/// every block gets at least one blog and one word. Membership is shuffled
/// with the seed so blocks are not contiguous. Every in-block cell is a
/// positive count; every off-block cell is nonzero with probability `noise`.
/// Word popularity inside a block is Zipf-like: the q-th word of a block
/// draws its counts from [kInBlockMin, kInBlockMin + (kInBlockMax - kInBlockMin) / q].
SyntheticNetwork generate_synthetic_network(const SyntheticParams& params);

/// Sizes used by generate_synthetic_network for `total` items in `parts` blocks.
std::vector<std::size_t> planted_block_sizes(std::size_t total, std::size_t parts);

}  // namespace lltensor
