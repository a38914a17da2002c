#include "lltensor/ranking_query.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "lltensor/error.hpp"

namespace lltensor {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

void require_domain(const QueryVector& q, Domain d, std::size_t n, const char* task) {
  require(q.domain() == d, std::string(task) + ": query has the wrong domain");
  require(q.size() == n, std::string(task) + ": query length " + std::to_string(q.size()) +
                             ", expected " + std::to_string(n));
}

void require_rank(const CPModel& model, const char* task) {
  if (model.rank() == 0) throw InvalidArgument(std::string(task) + ": model has rank 0");
}

// m = F^T q, optionally scaled by lambda.
std::vector<double> project(const FactorMatrix& f, std::span<const double> q, const CPModel& model,
                            TaskOptions opts) {
  std::vector<double> m(f.cols(), 0.0);
  for (std::size_t r = 0; r < f.cols(); ++r) {
    const auto col = f.column(r);
    double s = 0.0;
    for (std::size_t n = 0; n < col.size(); ++n) s += col[n] * q[n];
    m[r] = opts.lambda_weighted ? model.lambda[r] * s : s;
  }
  return m;
}

// out = F m
std::vector<double> expand(const FactorMatrix& f, std::span<const double> m) {
  std::vector<double> out(f.rows(), 0.0);
  for (std::size_t r = 0; r < f.cols(); ++r) {
    const auto col = f.column(r);
    for (std::size_t n = 0; n < col.size(); ++n) out[n] += col[n] * m[r];
  }
  return out;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

std::vector<double> DenseMatrix::multiply(std::span<const double> v) const {
  require(v.size() == cols_, "matrix-vector product: length mismatch");
  std::vector<double> out(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols_; ++c) s += data_[r * cols_ + c] * v[c];
    out[r] = s;
  }
  return out;
}

SimilarityMatrices build_similarity_matrices(const CharacteristicMatrix& c) {
  const std::size_t n = c.n_blogs();
  const std::size_t m = c.n_words();
  SimilarityMatrices out{DenseMatrix(n, n), DenseMatrix(m, m)};

  std::vector<double> row_norm(n, 0.0), col_norm(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      const double v = static_cast<double>(c(i, k));
      row_norm[i] += v * v;
      col_norm[k] += v * v;
    }
  }
  for (auto& v : row_norm) v = std::sqrt(v);
  for (auto& v : col_norm) v = std::sqrt(v);

  // Integer dot products are exact, so B(i,j) and B(j,i) are bitwise equal.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double cosine = 0.0;
      if (row_norm[i] > 0.0 && row_norm[j] > 0.0) {
        std::int64_t d = 0;
        for (std::size_t k = 0; k < m; ++k) d += c(i, k) * c(j, k);
        cosine = i == j ? 1.0 : static_cast<double>(d) / (row_norm[i] * row_norm[j]);
      }
      out.blogs(i, j) = out.blogs(j, i) = cosine;
    }
  }
  for (std::size_t p = 0; p < m; ++p) {
    for (std::size_t q = p; q < m; ++q) {
      double cosine = 0.0;
      if (col_norm[p] > 0.0 && col_norm[q] > 0.0) {
        std::int64_t d = 0;
        for (std::size_t i = 0; i < n; ++i) d += c(i, p) * c(i, q);
        cosine = p == q ? 1.0 : static_cast<double>(d) / (col_norm[p] * col_norm[q]);
      }
      out.words(p, q) = out.words(q, p) = cosine;
    }
  }
  return out;
}

QueryVector::QueryVector(Domain domain, std::vector<double> indicator)
    : domain_(domain), indicator_(std::move(indicator)) {
  bool any = false;
  for (double v : indicator_) {
    if (v != 0.0 && v != 1.0) throw InvalidArgument("query vector entries must be 0 or 1");
    any = any || v == 1.0;
  }
  if (!any) throw InvalidArgument("query vector must select at least one item");
}

QueryVector QueryVector::all(Domain domain, std::size_t n) {
  return QueryVector(domain, std::vector<double>(n, 1.0));
}

RankingVector task1_standard(const CharacteristicMatrix& c, const QueryVector& q_word) {
  require_domain(q_word, Domain::Words, c.n_words(), "task 1");
  std::vector<double> b(c.n_blogs(), 0.0);
  const auto q = q_word.indicator();
  for (std::size_t i = 0; i < c.n_blogs(); ++i) {
    for (std::size_t k = 0; k < c.n_words(); ++k) b[i] += static_cast<double>(c(i, k)) * q[k];
  }
  return {Domain::Blogs, Provenance::Standard, std::move(b)};
}

RankingVector task1_decomp(const CPModel& model, const QueryVector& q_word, TaskOptions opts) {
  require_rank(model, "task 1");
  require_domain(q_word, Domain::Words, model.term.rows(), "task 1");
  auto m = project(model.term, q_word.indicator(), model, opts);
  return {Domain::Blogs, Provenance::Decomposition, expand(model.hub, m)};
}

RankingVector task2_standard(const CharacteristicMatrix& c, const QueryVector& q_blog) {
  require_domain(q_blog, Domain::Blogs, c.n_blogs(), "task 2");
  std::vector<double> w(c.n_words(), 0.0);
  const auto q = q_blog.indicator();
  for (std::size_t i = 0; i < c.n_blogs(); ++i) {
    for (std::size_t k = 0; k < c.n_words(); ++k) w[k] += static_cast<double>(c(i, k)) * q[i];
  }
  return {Domain::Words, Provenance::Standard, std::move(w)};
}

RankingVector task2_decomp(const CPModel& model, const QueryVector& q_blog, TaskOptions opts) {
  require_rank(model, "task 2");
  require_domain(q_blog, Domain::Blogs, model.hub.rows(), "task 2");
  auto m = project(model.hub, q_blog.indicator(), model, opts);
  return {Domain::Words, Provenance::Decomposition, expand(model.term, m)};
}

RankingVector task3_standard(const SimilarityMatrices& sim, const QueryVector& q_blog) {
  require_domain(q_blog, Domain::Blogs, sim.blogs.rows(), "task 3");
  return {Domain::Blogs, Provenance::Standard, sim.blogs.multiply(q_blog.indicator())};
}

RankingVector task3_decomp(const CPModel& model, const QueryVector& q_blog, TaskOptions opts) {
  require_rank(model, "task 3");
  require_domain(q_blog, Domain::Blogs, model.hub.rows(), "task 3");
  auto m = project(model.hub, q_blog.indicator(), model, opts);
  return {Domain::Blogs, Provenance::Decomposition, expand(model.hub, m)};
}

RankingVector task4_standard(const SimilarityMatrices& sim, const QueryVector& q_word) {
  require_domain(q_word, Domain::Words, sim.words.rows(), "task 4");
  return {Domain::Words, Provenance::Standard, sim.words.multiply(q_word.indicator())};
}

RankingVector task4_decomp(const CPModel& model, const QueryVector& q_word, TaskOptions opts) {
  require_rank(model, "task 4");
  require_domain(q_word, Domain::Words, model.term.rows(), "task 4");
  auto m = project(model.term, q_word.indicator(), model, opts);
  return {Domain::Words, Provenance::Decomposition, expand(model.term, m)};
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  require(u.size() == v.size(), "cosine: length mismatch (" + std::to_string(u.size()) + " vs " +
                                    std::to_string(v.size()) + ")");
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t n = 0; n < u.size(); ++n) {
    uv += u[n] * v[n];
    uu += u[n] * u[n];
    vv += v[n] * v[n];
  }
  if (uu == 0.0 || vv == 0.0) return 0.0;
  return std::clamp(uv / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

double SimilarityReport::task_average(std::size_t task) const {
  const auto& row = values.at(task);
  double s = 0.0;
  for (double v : row) s += v;
  return row.empty() ? 0.0 : s / static_cast<double>(row.size());
}

double SimilarityReport::model_average(std::size_t model) const {
  double s = 0.0;
  for (const auto& row : values) s += row.at(model);
  return values.empty() ? 0.0 : s / static_cast<double>(values.size());
}

double SimilarityReport::overall_average() const {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& row : values) {
    for (double v : row) {
      s += v;
      ++n;
    }
  }
  return n == 0 ? 0.0 : s / static_cast<double>(n);
}

void SimilarityReport::write_csv(std::ostream& os) const {
  os << "Task";
  for (auto r : ranks) os << ",Group " << r;
  os << ",Av.\n";
  for (std::size_t t = 0; t < values.size(); ++t) {
    os << "Task " << t + 1;
    for (double v : values[t]) os << ',' << fixed(v, 4);
    os << ',' << fixed(task_average(t), 4) << '\n';
  }
  os << "Av.";
  for (std::size_t m = 0; m < ranks.size(); ++m) os << ',' << fixed(model_average(m), 4);
  os << ',' << fixed(overall_average(), 4) << '\n';
}

nlohmann::json SimilarityReport::to_json() const {
  nlohmann::json tasks = nlohmann::json::array();
  for (std::size_t t = 0; t < values.size(); ++t) {
    tasks.push_back({{"task", t + 1}, {"values", values[t]}, {"average", task_average(t)}});
  }
  std::vector<double> model_avgs;
  for (std::size_t m = 0; m < ranks.size(); ++m) model_avgs.push_back(model_average(m));
  return {{"ranks", ranks},
          {"tasks", tasks},
          {"model_averages", model_avgs},
          {"overall_average", overall_average()}};
}

SimilarityReport evaluate_all_tasks(const CharacteristicMatrix& c, std::span<const CPModel> models,
                                    TaskOptions opts) {
  if (models.empty()) throw InvalidArgument("evaluate: no models");
  const auto sim = build_similarity_matrices(c);
  const auto q_blog = QueryVector::all(Domain::Blogs, c.n_blogs());
  const auto q_word = QueryVector::all(Domain::Words, c.n_words());
  const auto s1 = task1_standard(c, q_word);
  const auto s2 = task2_standard(c, q_blog);
  const auto s3 = task3_standard(sim, q_blog);
  const auto s4 = task4_standard(sim, q_word);

  SimilarityReport report;
  report.values.assign(kTaskCount, {});
  for (const auto& model : models) {
    report.ranks.push_back(model.rank());
    report.values[0].push_back(cosine_similarity(s1.scores, task1_decomp(model, q_word, opts).scores));
    report.values[1].push_back(cosine_similarity(s2.scores, task2_decomp(model, q_blog, opts).scores));
    report.values[2].push_back(cosine_similarity(s3.scores, task3_decomp(model, q_blog, opts).scores));
    report.values[3].push_back(cosine_similarity(s4.scores, task4_decomp(model, q_word, opts).scores));
  }
  return report;
}

GroupListing group_listing(const CPModel& model, const CharacteristicMatrix& labels,
                           std::size_t group, std::size_t top_k) {
  if (group < 1 || group > model.rank()) {
    throw InvalidArgument("group " + std::to_string(group) + " out of range 1.." +
                          std::to_string(model.rank()));
  }
  if (labels.n_blogs() != model.hub.rows() || labels.n_words() != model.term.rows()) {
    throw DimensionError("group listing: labels do not match model dims");
  }
  const std::size_t r = group - 1;
  auto ranked = [&](const std::vector<std::string>& names, std::span<const double> col,
                    double scale) {
    std::vector<ScoredLabel> out;
    for (std::size_t n = 0; n < names.size(); ++n) out.push_back({names[n], scale * col[n]});
    std::sort(out.begin(), out.end(), [](const ScoredLabel& x, const ScoredLabel& y) {
      if (x.score != y.score) return x.score > y.score;
      return x.label < y.label;
    });
    if (top_k > 0 && top_k < out.size()) out.resize(top_k);
    return out;
  };
  GroupListing listing;
  listing.group = group;
  listing.lambda = model.lambda[r];
  listing.blogs = ranked(labels.blog_labels(), model.hub.column(r), model.lambda[r]);
  listing.words = ranked(labels.word_labels(), model.term.column(r), 1.0);
  return listing;
}

void GroupListing::write_text(std::ostream& os) const {
  auto score_text = [](double v) {
    std::ostringstream s;
    s << std::setprecision(5) << v;
    return s.str();
  };
  std::size_t blog_w = 4, blog_score_w = 5, word_w = 4;
  for (const auto& b : blogs) {
    blog_w = std::max(blog_w, b.label.size());
    blog_score_w = std::max(blog_score_w, score_text(b.score).size());
  }
  for (const auto& w : words) word_w = std::max(word_w, w.label.size());

  os << "Group " << group << " (lambda " << score_text(lambda) << ")\n";
  os << std::left << std::setw(static_cast<int>(blog_w)) << "Blog" << "  "
     << std::setw(static_cast<int>(blog_score_w)) << "Score" << "  "
     << std::setw(static_cast<int>(word_w)) << "Word" << "  " << "Score" << '\n';
  const std::size_t rows = std::max(blogs.size(), words.size());
  for (std::size_t n = 0; n < rows; ++n) {
    std::string bl, bs, wl, ws;
    if (n < blogs.size()) {
      bl = blogs[n].label;
      bs = score_text(blogs[n].score);
    }
    if (n < words.size()) {
      wl = words[n].label;
      ws = score_text(words[n].score);
    }
    std::ostringstream line;
    line << std::left << std::setw(static_cast<int>(blog_w)) << bl << "  "
         << std::setw(static_cast<int>(blog_score_w)) << bs << "  "
         << std::setw(static_cast<int>(word_w)) << wl << "  " << ws;
    auto text = line.str();
    text.erase(text.find_last_not_of(' ') + 1);
    os << text << '\n';
  }
}

nlohmann::json GroupListing::to_json() const {
  auto list = [](const std::vector<ScoredLabel>& v) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& s : v) out.push_back({{"label", s.label}, {"score", s.score}});
    return out;
  };
  return {{"group", group}, {"lambda", lambda}, {"blogs", list(blogs)}, {"words", list(words)}};
}

}  // namespace lltensor
