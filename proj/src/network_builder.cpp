#include "lltensor/network_builder.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "lltensor/error.hpp"

namespace lltensor {

namespace {

template <typename Error>
void require_unique(const std::vector<std::string>& labels, const char* axis) {
  std::unordered_set<std::string> seen;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (!seen.insert(labels[n]).second) {
      std::ostringstream msg;
      msg << "duplicate " << axis << " label '" << labels[n] << "' at position " << n;
      throw Error(msg.str());
    }
  }
}

// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_record(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t p = 0; p < line.size(); ++p) {
    char ch = line[p];
    if (quoted) {
      if (ch == '"') {
        if (p + 1 < line.size() && line[p + 1] == '"') {
          cur.push_back('"');
          ++p;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"' && cur.empty() && !was_quoted) {
      quoted = true;
      was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
      was_quoted = false;
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  if (quoted) {
    throw IngestError("csv line " + std::to_string(line_no) + ": unterminated quoted field");
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos && trim(s) == s) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

}  // namespace

CharacteristicMatrix::CharacteristicMatrix(std::vector<std::string> blog_labels,
                                           std::vector<std::string> word_labels,
                                           std::vector<std::int64_t> counts)
    : blog_labels_(std::move(blog_labels)),
      word_labels_(std::move(word_labels)),
      counts_(std::move(counts)) {
  if (counts_.size() != blog_labels_.size() * word_labels_.size()) {
    std::ostringstream msg;
    msg << "counts has " << counts_.size() << " cells, expected " << blog_labels_.size()
        << "x" << word_labels_.size();
    throw InvalidArgument(msg.str());
  }
  for (std::size_t n = 0; n < counts_.size(); ++n) {
    if (counts_[n] < 0) {
      std::ostringstream msg;
      msg << "negative count at blog " << n / n_words() << ", word " << n % n_words();
      throw InvalidArgument(msg.str());
    }
  }
  require_unique<InvalidArgument>(blog_labels_, "blog");
  require_unique<InvalidArgument>(word_labels_, "word");
}

std::size_t CharacteristicMatrix::word_document_frequency(std::size_t word) const {
  std::size_t df = 0;
  for (std::size_t i = 0; i < n_blogs(); ++i) df += (*this)(i, word) > 0 ? 1 : 0;
  return df;
}

std::string case_fold(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

Stoplist::Stoplist(const std::vector<std::string>& words) {
  for (const auto& w : words) {
    if (w.empty()) throw InvalidArgument("stoplist words must be non-empty");
    words_.insert(case_fold(w));
  }
}

Stoplist Stoplist::read(std::istream& is) {
  std::vector<std::string> words;
  std::string line;
  while (std::getline(is, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto w = trim(line);
    if (!w.empty() && w.back() == '\r') w.pop_back();
    if (!w.empty()) words.push_back(w);
  }
  return Stoplist(words);
}

bool Stoplist::contains(const std::string& word) const {
  return words_.count(case_fold(word)) > 0;
}

CharacteristicMatrix load_characteristic_matrix(std::istream& csv) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(csv, line)) {
    ++line_no;
    if (!trim(line).empty() && trim(line) != "\r") {
      header = split_csv_record(line, line_no);
      break;
    }
  }
  if (header.empty()) throw IngestError("csv: missing header row");
  if (header.size() < 2) throw IngestError("csv line 1: header has no word labels");

  std::vector<std::string> words;
  for (std::size_t col = 1; col < header.size(); ++col) {
    auto w = trim(header[col]);
    if (w.empty()) {
      throw IngestError("csv line " + std::to_string(line_no) + ", column " +
                        std::to_string(col + 1) + ": empty word label");
    }
    words.push_back(std::move(w));
  }
  require_unique<IngestError>(words, "word");

  std::vector<std::string> blogs;
  std::vector<std::int64_t> counts;
  while (std::getline(csv, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line) == "\r") continue;
    auto fields = split_csv_record(line, line_no);
    if (fields.size() != header.size()) {
      std::ostringstream msg;
      msg << "csv line " << line_no << ": ragged row with " << fields.size()
          << " fields, expected " << header.size();
      throw IngestError(msg.str());
    }
    auto label = trim(fields[0]);
    if (label.empty()) throw IngestError("csv line " + std::to_string(line_no) + ": empty blog label");
    blogs.push_back(std::move(label));
    for (std::size_t col = 1; col < fields.size(); ++col) {
      auto cell = trim(fields[col]);
      std::int64_t v = -1;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size() || v < 0) {
        std::ostringstream msg;
        msg << "csv line " << line_no << ", column " << col + 1 << " (word '" << words[col - 1]
            << "'): '" << cell << "' is not a nonnegative integer";
        throw IngestError(msg.str());
      }
      counts.push_back(v);
    }
  }
  if (blogs.empty()) throw IngestError("csv: no blogs");
  require_unique<IngestError>(blogs, "blog");
  return CharacteristicMatrix(std::move(blogs), std::move(words), std::move(counts));
}

void write_characteristic_matrix(std::ostream& os, const CharacteristicMatrix& c) {
  os << "blog";
  for (const auto& w : c.word_labels()) os << ',' << csv_quote(w);
  os << '\n';
  for (std::size_t i = 0; i < c.n_blogs(); ++i) {
    os << csv_quote(c.blog_labels()[i]);
    for (std::size_t k = 0; k < c.n_words(); ++k) os << ',' << c(i, k);
    os << '\n';
  }
}

CharacteristicMatrix filter_vocabulary(const CharacteristicMatrix& c, const Stoplist& stop,
                                       std::size_t min_blogs) {
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < c.n_words(); ++k) {
    if (stop.contains(c.word_labels()[k])) continue;
    if (c.word_document_frequency(k) < min_blogs) continue;
    keep.push_back(k);
  }
  if (keep.empty()) throw InvalidArgument("vocabulary filter: no columns remain");

  std::vector<std::string> words;
  for (auto k : keep) words.push_back(c.word_labels()[k]);
  std::vector<std::int64_t> counts;
  counts.reserve(c.n_blogs() * keep.size());
  for (std::size_t i = 0; i < c.n_blogs(); ++i) {
    for (auto k : keep) counts.push_back(c(i, k));
  }
  return CharacteristicMatrix(c.blog_labels(), std::move(words), std::move(counts));
}

SparseTensor3 build_adjacency_tensor(const CharacteristicMatrix& c) {
  const std::size_t n = c.n_blogs();
  const std::size_t m = c.n_words();
  std::vector<TensorEntry> entries;
  std::vector<std::size_t> holders;
  for (std::size_t k = 0; k < m; ++k) {
    holders.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (c(i, k) > 0) holders.push_back(i);
    }
    for (auto i : holders) {
      for (auto j : holders) {
        if (i == j) continue;
        entries.push_back({i, j, k, static_cast<double>(c(i, k) + c(j, k))});
      }
    }
  }
  return SparseTensor3({n, n, m}, std::move(entries));
}

std::vector<std::size_t> planted_block_sizes(std::size_t total, std::size_t parts) {
  if (parts == 0 || parts > total) {
    throw InvalidArgument("planted blocks: need 1 <= parts <= total");
  }
  // One item per block, the rest split by weights parts, parts-1, ..., 1
  // (floored), leftovers to the heaviest blocks first. Sizes never increase.
  std::vector<std::size_t> sizes(parts, 1);
  const std::size_t rest = total - parts;
  const std::size_t weight_sum = parts * (parts + 1) / 2;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < parts; ++c) {
    const std::size_t share = rest * (parts - c) / weight_sum;
    sizes[c] += share;
    assigned += share;
  }
  for (std::size_t c = 0; assigned < rest; ++c, ++assigned) ++sizes[c];
  return sizes;
}

SyntheticNetwork generate_synthetic_network(const SyntheticParams& p) {
  if (p.n_blogs == 0 || p.n_words == 0) throw InvalidArgument("synthetic: empty dimensions");
  if (p.n_clusters == 0 || p.n_clusters > std::min(p.n_blogs, p.n_words)) {
    throw InvalidArgument("synthetic: need 1 <= n_clusters <= min(n_blogs, n_words)");
  }
  if (!(p.noise >= 0.0 && p.noise <= 1.0)) throw InvalidArgument("synthetic: noise must be in [0,1]");

  std::mt19937_64 rng(p.seed);
  auto assign = [&](std::size_t total) {
    std::vector<std::size_t> cluster;
    auto sizes = planted_block_sizes(total, p.n_clusters);
    for (std::size_t c = 0; c < sizes.size(); ++c) cluster.insert(cluster.end(), sizes[c], c);
    std::shuffle(cluster.begin(), cluster.end(), rng);
    return cluster;
  };

  SyntheticNetwork out;
  out.blog_cluster = assign(p.n_blogs);
  out.word_cluster = assign(p.n_words);

  // Word popularity follows a Zipf-like law inside each block: the word with
  // popularity rank q (1-based, shuffled) draws in-block counts from
  // [kInBlockMin, cap(q)] with cap(q) = kInBlockMin + (kInBlockMax - kInBlockMin) / q.
  std::vector<std::int64_t> word_cap(p.n_words, kInBlockMax);
  {
    std::vector<std::size_t> seen(p.n_clusters, 0);
    for (std::size_t k = 0; k < p.n_words; ++k) {
      const auto q = static_cast<std::int64_t>(++seen[out.word_cluster[k]]);
      word_cap[k] = kInBlockMin + (kInBlockMax - kInBlockMin) / q;
    }
  }
  std::uniform_int_distribution<std::int64_t> noise_count(kNoiseMin, kNoiseMax);
  std::bernoulli_distribution noisy(p.noise);

  std::vector<std::int64_t> counts(p.n_blogs * p.n_words, 0);
  for (std::size_t i = 0; i < p.n_blogs; ++i) {
    for (std::size_t k = 0; k < p.n_words; ++k) {
      auto& cell = counts[i * p.n_words + k];
      if (out.blog_cluster[i] == out.word_cluster[k]) {
        cell = std::uniform_int_distribution<std::int64_t>(kInBlockMin, word_cap[k])(rng);
      } else if (noisy(rng)) {
        cell = noise_count(rng);
      }
    }
  }

  auto labels = [](const char* prefix, std::size_t n) {
    std::vector<std::string> v;
    const int width = static_cast<int>(std::to_string(n > 0 ? n - 1 : 0).size());
    for (std::size_t x = 0; x < n; ++x) {
      std::string num = std::to_string(x);
      v.push_back(prefix + std::string(width - num.size(), '0') + num);
    }
    return v;
  };
  out.matrix = CharacteristicMatrix(labels("blog_", p.n_blogs), labels("word_", p.n_words),
                                    std::move(counts));
  return out;
}

}  // namespace lltensor
