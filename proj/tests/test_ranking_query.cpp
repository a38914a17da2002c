#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "lltensor/error.hpp"
#include "lltensor/ranking_query.hpp"
#include "oracles.hpp"

using namespace lltensor;

namespace {

CharacteristicMatrix make(std::size_t n, std::size_t m, std::vector<std::int64_t> counts) {
  std::vector<std::string> blogs, words;
  for (std::size_t i = 0; i < n; ++i) blogs.push_back("b" + std::to_string(i));
  for (std::size_t k = 0; k < m; ++k) words.push_back("w" + std::to_string(k));
  return CharacteristicMatrix(blogs, words, std::move(counts));
}

// Random model with arbitrary (not unit) columns; the task formulas do not
// rely on normalization.
CPModel random_model(std::mt19937_64& rng, std::size_t n, std::size_t m, std::size_t rank) {
  CPModel model;
  model.hub = FactorMatrix(n, 0);
  model.authority = FactorMatrix(n, 0);
  model.term = FactorMatrix(m, 0);
  std::uniform_real_distribution<double> lam(0.5, 3.0);
  for (std::size_t r = 0; r < rank; ++r) {
    model.lambda.push_back(lam(rng));
    model.hub.append_column(oracle::random_vector(rng, n));
    model.authority.append_column(oracle::random_vector(rng, n));
    model.term.append_column(oracle::random_vector(rng, m));
    model.status.push_back({});
  }
  std::sort(model.lambda.rbegin(), model.lambda.rend());
  return model;
}

QueryVector random_query(std::mt19937_64& rng, Domain d, std::size_t n) {
  std::bernoulli_distribution coin(0.5);
  std::vector<double> v(n);
  for (auto& x : v) x = coin(rng) ? 1.0 : 0.0;
  v[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)] = 1.0;
  return QueryVector(d, v);
}

std::vector<double> as_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("build_similarity_matrices small cases") {
  auto s = build_similarity_matrices(make(2, 2, {1, 0, 0, 1}));
  CHECK(s.blogs(0, 0) == 1.0);
  CHECK(s.blogs(0, 1) == 0.0);
  CHECK(s.blogs(1, 1) == 1.0);

  CHECK(build_similarity_matrices(make(2, 2, {1, 1, 1, 1})).blogs(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(build_similarity_matrices(make(2, 2, {1, 0, 1, 1})).blogs(0, 1) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));

  auto z = build_similarity_matrices(make(2, 2, {0, 0, 1, 2}));
  CHECK(z.blogs(0, 0) == 0.0);
  CHECK(z.blogs(0, 1) == 0.0);
  CHECK(z.words(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("property: similarity matrices are symmetric, unit-diagonal and in [0,1]") {
  std::mt19937_64 rng(40);
  for (int rep = 0; rep < 100; ++rep) {
    auto c = oracle::random_matrix(rng, 12, 10, 6);
    auto s = build_similarity_matrices(c);
    auto check = [](const DenseMatrix& m, auto nonzero) {
      for (std::size_t p = 0; p < m.rows(); ++p) {
        REQUIRE(m(p, p) == (nonzero(p) ? 1.0 : 0.0));
        for (std::size_t q = 0; q < m.cols(); ++q) {
          REQUIRE(std::abs(m(p, q) - m(q, p)) <= 1e-12);
          REQUIRE(m(p, q) >= 0.0);
          REQUIRE(m(p, q) <= 1.0 + 1e-12);
        }
      }
    };
    check(s.blogs, [&](std::size_t i) {
      for (std::size_t k = 0; k < c.n_words(); ++k) if (c(i, k) > 0) return true;
      return false;
    });
    check(s.words, [&](std::size_t k) { return c.word_document_frequency(k) > 0; });
  }
}

TEST_CASE("task formulas, hand cases") {
  auto c = make(2, 2, {1, 2, 0, 3});
  auto b = task1_standard(c, QueryVector::all(Domain::Words, 2));
  CHECK(b.scores == std::vector<double>{3, 3});
  CHECK(b.domain == Domain::Blogs);
  CHECK(b.provenance == Provenance::Standard);
  CHECK(task2_standard(c, QueryVector::all(Domain::Blogs, 2)).scores == std::vector<double>{1, 5});

  CPModel m;
  m.lambda = {2.0};
  m.hub = FactorMatrix(3, 0);
  m.hub.append_column(std::vector<double>{0.6, 0.0, 0.8});
  QueryVector q(Domain::Blogs, {1, 1, 0});
  auto b3 = task3_decomp(m, q);
  CHECK(b3.provenance == Provenance::Decomposition);
  CHECK(b3.scores[0] == doctest::Approx(0.6 * 0.6));
  CHECK(b3.scores[1] == 0.0);
  CHECK(b3.scores[2] == doctest::Approx(0.8 * 0.6));
  auto weighted = task3_decomp(m, q, {.lambda_weighted = true});
  CHECK(weighted.scores[2] == doctest::Approx(2.0 * 0.8 * 0.6));
}

TEST_CASE("task ops reject mismatched queries and rank-0 models") {
  auto c = make(2, 3, {1, 2, 0, 3, 0, 1});
  CHECK_THROWS_AS(task1_standard(c, QueryVector::all(Domain::Words, 2)), DimensionError);
  CHECK_THROWS_AS(task1_standard(c, QueryVector::all(Domain::Blogs, 3)), DimensionError);
  CHECK_THROWS_AS(task2_standard(c, QueryVector::all(Domain::Blogs, 3)), DimensionError);
  CPModel empty;
  CHECK_THROWS_AS(task1_decomp(empty, QueryVector::all(Domain::Words, 3)), InvalidArgument);
  CHECK_THROWS_AS(QueryVector(Domain::Blogs, {0, 0}), InvalidArgument);
  CHECK_THROWS_AS(QueryVector(Domain::Blogs, {0.5, 1}), InvalidArgument);
}

TEST_CASE("property: task outputs match dense matrix algebra, N, M <= 20") {
  std::mt19937_64 rng(41);
  for (int rep = 0; rep < 100; ++rep) {
    auto c = oracle::random_matrix(rng, 20, 20, 5);
    const std::size_t n = c.n_blogs(), m = c.n_words();
    auto model = random_model(rng, n, m, 1 + rep % 5);
    auto qb = random_query(rng, Domain::Blogs, n);
    auto qw = random_query(rng, Domain::Words, m);
    auto C = oracle::to_mat(c), Ct = oracle::transpose(C);
    auto H = oracle::factor_mat(model.hub), T = oracle::factor_mat(model.term);
    auto Ht = oracle::transpose(H), Tt = oracle::transpose(T);
    auto B = oracle::row_cosines(C), W = oracle::row_cosines(Ct);
    auto sim = build_similarity_matrices(c);
    auto qbv = as_vec(qb.indicator()), qwv = as_vec(qw.indicator());

    REQUIRE(oracle::max_abs_diff(task1_standard(c, qw).scores, oracle::matvec(C, qwv)) <= 1e-10);
    REQUIRE(oracle::max_abs_diff(task1_decomp(model, qw).scores, oracle::matvec(H, oracle::matvec(Tt, qwv))) <= 1e-10);
    REQUIRE(oracle::max_abs_diff(task2_standard(c, qb).scores, oracle::matvec(Ct, qbv)) <= 1e-10);
    REQUIRE(oracle::max_abs_diff(task2_decomp(model, qb).scores, oracle::matvec(T, oracle::matvec(Ht, qbv))) <= 1e-10);
    REQUIRE(oracle::max_abs_diff(task3_standard(sim, qb).scores, oracle::matvec(B, qbv)) <= 1e-10);
    REQUIRE(oracle::max_abs_diff(task3_decomp(model, qb).scores, oracle::matvec(H, oracle::matvec(Ht, qbv))) <= 1e-12);
    REQUIRE(oracle::max_abs_diff(task4_standard(sim, qw).scores, oracle::matvec(W, qwv)) <= 1e-10);
    REQUIRE(oracle::max_abs_diff(task4_decomp(model, qw).scores, oracle::matvec(T, oracle::matvec(Tt, qwv))) <= 1e-10);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) REQUIRE(std::abs(sim.blogs(i, j) - B[i][j]) <= 1e-10);
  }
}

TEST_CASE("property: task ops are linear in the query") {
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 50; ++rep) {
    auto c = oracle::random_matrix(rng, 12, 12, 5);
    const std::size_t n = c.n_blogs(), m = c.n_words();
    if (n < 2 || m < 2) continue;
    auto model = random_model(rng, n, m, 3);
    auto sim = build_similarity_matrices(c);
    // Disjoint 0/1 queries whose sum is still a 0/1 query.
    std::vector<double> b1(n, 0), b2(n, 0), w1(m, 0), w2(m, 0);
    b1[0] = 1; for (std::size_t i = 1; i < n; ++i) b2[i] = 1;
    w1[0] = 1; for (std::size_t k = 1; k < m; ++k) w2[k] = 1;
    QueryVector qb1(Domain::Blogs, b1), qb2(Domain::Blogs, b2), qb(Domain::Blogs, std::vector<double>(n, 1));
    QueryVector qw1(Domain::Words, w1), qw2(Domain::Words, w2), qw(Domain::Words, std::vector<double>(m, 1));
    auto sum = [](std::vector<double> x, const std::vector<double>& y) {
      for (std::size_t p = 0; p < x.size(); ++p) x[p] += y[p];
      return x;
    };
    REQUIRE(oracle::max_abs_diff(task1_decomp(model, qw).scores,
                                 sum(task1_decomp(model, qw1).scores, task1_decomp(model, qw2).scores)) <= 1e-12);
    REQUIRE(oracle::max_abs_diff(task2_decomp(model, qb).scores,
                                 sum(task2_decomp(model, qb1).scores, task2_decomp(model, qb2).scores)) <= 1e-12);
    REQUIRE(oracle::max_abs_diff(task3_decomp(model, qb).scores,
                                 sum(task3_decomp(model, qb1).scores, task3_decomp(model, qb2).scores)) <= 1e-12);
    REQUIRE(oracle::max_abs_diff(task4_decomp(model, qw).scores,
                                 sum(task4_decomp(model, qw1).scores, task4_decomp(model, qw2).scores)) <= 1e-12);
    REQUIRE(oracle::max_abs_diff(task1_standard(c, qw).scores,
                                 sum(task1_standard(c, qw1).scores, task1_standard(c, qw2).scores)) <= 1e-12);
    REQUIRE(oracle::max_abs_diff(task3_standard(sim, qb).scores,
                                 sum(task3_standard(sim, qb1).scores, task3_standard(sim, qb2).scores)) <= 1e-12);
  }
}

TEST_CASE("cosine_similarity") {
  std::vector<double> u{1, 2, 3};
  CHECK(cosine_similarity(u, u) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
  CHECK(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{1, 1}) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 1}) == 0.0);
  CHECK_THROWS_AS(cosine_similarity(std::vector<double>{1}, std::vector<double>{1, 1}), DimensionError);

  std::mt19937_64 rng(43);
  for (int rep = 0; rep < 200; ++rep) {
    auto x = oracle::random_vector(rng, 7), y = oracle::random_vector(rng, 7);
    const double base = cosine_similarity(x, y);
    auto sx = x, sy = y;
    for (auto& v : sx) v *= 3.5;
    for (auto& v : sy) v *= 0.01;
    REQUIRE(std::abs(cosine_similarity(sx, sy) - base) <= 1e-12);
    REQUIRE(std::abs(base) <= 1.0);
  }
}

TEST_CASE("evaluate_all_tasks") {
  // Every blog uses the same word counts, so C = 1 w^T and each frontal
  // slice is w_k (11^T - I), whose dominant eigenvector is uniform. Unequal
  // blog weights would not do: the zero diagonal keeps X off rank 1.
  std::vector<std::int64_t> bw{1, 1, 1, 1}, ww{2, 1, 1};
  std::vector<std::int64_t> counts;
  for (auto b : bw) for (auto w : ww) counts.push_back(b * w);
  auto c = make(4, 3, counts);
  auto x = build_adjacency_tensor(c);
  auto model = decompose(x, {.rank = 1, .tol = 1e-12});

  auto report = evaluate_all_tasks(c, std::vector<CPModel>{model});
  REQUIRE(report.values.size() == 4);
  // Oracle: standard ranking by direct dense products on the same inputs.
  auto C = oracle::to_mat(c);
  auto b_std = oracle::matvec(C, std::vector<double>(3, 1.0));
  auto b_dec = task1_decomp(model, QueryVector::all(Domain::Words, 3)).scores;
  CHECK(report.values[0][0] == doctest::Approx(oracle::cosine(b_std, b_dec)).epsilon(1e-12));
  CHECK(report.values[0][0] >= 0.999);

  auto twice = evaluate_all_tasks(c, std::vector<CPModel>{model, model});
  for (const auto& row : twice.values) CHECK(row[0] == row[1]);
  CHECK(twice.ranks == std::vector<std::size_t>{1, 1});

  CHECK_THROWS_AS(evaluate_all_tasks(c, std::vector<CPModel>{}), InvalidArgument);
}

TEST_CASE("SimilarityReport averages and formats") {
  SimilarityReport r;
  r.ranks = {2, 4};
  r.values = {{0.9, 0.8}, {0.7, 0.6}, {0.5, 0.4}, {0.3, 0.2}};
  CHECK(r.task_average(0) == doctest::Approx(0.85).epsilon(1e-12));
  CHECK(r.model_average(1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.overall_average() == doctest::Approx(0.55).epsilon(1e-12));
  std::ostringstream os;
  r.write_csv(os);
  CHECK(os.str() ==
        "Task,Group 2,Group 4,Av.\n"
        "Task 1,0.9000,0.8000,0.8500\n"
        "Task 2,0.7000,0.6000,0.6500\n"
        "Task 3,0.5000,0.4000,0.4500\n"
        "Task 4,0.3000,0.2000,0.2500\n"
        "Av.,0.6000,0.5000,0.5500\n");
  auto j = r.to_json();
  CHECK(j["tasks"].size() == 4);
  CHECK(j["ranks"][1] == 4);
}

TEST_CASE("group_listing") {
  SUBCASE("exact rank-1 model with hub e2") {
    CPModel m;
    m.lambda = {4.0};
    m.hub = FactorMatrix(3, 0);
    m.hub.append_column(std::vector<double>{0, 0, 1});
    m.authority = m.hub;
    m.term = FactorMatrix(2, 0);
    m.term.append_column(std::vector<double>{0.6, 0.8});
    m.status = {{}};
    auto c = make(3, 2, {0, 0, 0, 0, 1, 1});
    auto l = group_listing(m, c, 1, 10);
    CHECK(l.blogs[0].label == "b2");
    CHECK(l.blogs[0].score == 4.0);
    CHECK(l.words[0].label == "w1");
    CHECK(l.words[0].score == 0.8);
    // b0 and b1 tie at 0: label order.
    CHECK(l.blogs[1].label == "b0");
    CHECK(l.blogs[2].label == "b1");
    CHECK(group_listing(m, c, 1, 1).blogs.size() == 1);
    CHECK(group_listing(m, c, 1, 100).blogs.size() == 3);
    CHECK_THROWS_AS(group_listing(m, c, 0, 5), InvalidArgument);
    CHECK_THROWS_AS(group_listing(m, c, 2, 5), InvalidArgument);

    std::ostringstream os;
    l.write_text(os);
    CHECK(os.str().find("Blog  Score  Word  Score") != std::string::npos);
  }

  SUBCASE("ranking order is invariant under rescaling lambda") {
    std::mt19937_64 rng(44);
    auto c = oracle::random_matrix(rng, 10, 6, 4);
    auto m = random_model(rng, c.n_blogs(), c.n_words(), 2);
    auto scaled = m;
    for (auto& l : scaled.lambda) l *= 7.5;
    for (std::size_t g = 1; g <= 2; ++g) {
      auto a = group_listing(m, c, g, 0), b = group_listing(scaled, c, g, 0);
      for (std::size_t n = 0; n < a.blogs.size(); ++n) CHECK(a.blogs[n].label == b.blogs[n].label);
    }
  }

  SUBCASE("noise-free two-cluster network: each group lists one planted cluster") {
    auto net = generate_synthetic_network({30, 24, 2, 5, 0.0});
    auto c = filter_vocabulary(net.matrix, Stoplist{}, 2);
    auto model = decompose(build_adjacency_tensor(c), {.rank = 2});
    std::set<std::size_t> seen;
    for (std::size_t g = 1; g <= 2; ++g) {
      auto l = group_listing(model, c, g, 5);
      std::set<std::size_t> clusters;
      for (const auto& b : l.blogs) {
        auto it = std::find(c.blog_labels().begin(), c.blog_labels().end(), b.label);
        clusters.insert(net.blog_cluster[static_cast<std::size_t>(it - c.blog_labels().begin())]);
      }
      CHECK(clusters.size() == 1);
      seen.insert(*clusters.begin());
    }
    CHECK(seen.size() == 2);
  }
}

TEST_CASE("decomposition top items per planted cluster agree with the standard ranking") {
  auto net = generate_synthetic_network({24, 18, 3, 11, 0.0});
  auto c = net.matrix;
  auto model = decompose(build_adjacency_tensor(c), {.rank = 3, .tol = 1e-12});
  auto sim = build_similarity_matrices(c);
  auto argmax = [](const std::vector<double>& v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  };
  for (std::size_t cl = 0; cl < 3; ++cl) {
    std::vector<double> qb(c.n_blogs(), 0.0), qw(c.n_words(), 0.0);
    for (std::size_t i = 0; i < c.n_blogs(); ++i) qb[i] = net.blog_cluster[i] == cl ? 1.0 : 0.0;
    for (std::size_t k = 0; k < c.n_words(); ++k) qw[k] = net.word_cluster[k] == cl ? 1.0 : 0.0;
    QueryVector blogs(Domain::Blogs, qb), words(Domain::Words, qw);
    CHECK(argmax(task2_decomp(model, blogs).scores) == argmax(task2_standard(c, blogs).scores));
    // Blog scores inside a cluster are near-ties under random counts, and the
    // hub vector weights words by popularity rather than summing them, so for
    // blogs only the cluster of the top item is checked.
    CHECK(net.blog_cluster[argmax(task1_decomp(model, words).scores)] == cl);
    CHECK(net.blog_cluster[argmax(task1_standard(c, words).scores)] == cl);
    CHECK(net.blog_cluster[argmax(task3_decomp(model, blogs).scores)] == cl);
    CHECK(net.blog_cluster[argmax(task3_standard(sim, blogs).scores)] == cl);
    CHECK(net.word_cluster[argmax(task4_decomp(model, words).scores)] == cl);
    CHECK(net.word_cluster[argmax(task4_standard(sim, words).scores)] == cl);
  }
}
