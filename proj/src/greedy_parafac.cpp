#include "lltensor/greedy_parafac.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "lltensor/error.hpp"

namespace lltensor {

namespace {

constexpr std::size_t kMaxRestarts = 3;
// A group whose weight falls below this fraction of ||X|| is marked exhausted.
constexpr double kExhaustedRatio = 1e-10;

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) s += x[n] * y[n];
  return s;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

// Scales to unit norm; returns the original norm (0 leaves x untouched).
double normalize(std::vector<double>& x) {
  double n = norm2(x);
  if (n > 0.0 && std::isfinite(n)) {
    for (auto& v : x) v /= n;
  }
  return n;
}

std::vector<double> random_unit(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(n);
  do {
    for (auto& x : v) x = dist(rng);
  } while (normalize(v) == 0.0);
  return v;
}


// Unevaluated sum hi + lo carrying about 106 significant bits, built from
// the error-free TwoSum and Dekker-split TwoProduct transformations.
class DoubleDouble {
public:
  DoubleDouble() = default;
  explicit DoubleDouble(double x) : hi_(x) {}

  double value() const { return hi_ + lo_; }

  DoubleDouble& operator+=(const DoubleDouble& y) {
    double e = 0.0;
    const double s = two_sum(hi_, y.hi_, e);
    e += lo_ + y.lo_;
    hi_ = quick_two_sum(s, e, lo_);
    return *this;
  }
  friend DoubleDouble operator+(DoubleDouble x, const DoubleDouble& y) { return x += y; }
  friend DoubleDouble operator-(DoubleDouble x, const DoubleDouble& y) {
    DoubleDouble neg;
    neg.hi_ = -y.hi_;
    neg.lo_ = -y.lo_;
    return x += neg;
  }
  friend DoubleDouble operator*(const DoubleDouble& x, const DoubleDouble& y) {
    double e = 0.0;
    const double p = two_prod(x.hi_, y.hi_, e);
    e += x.hi_ * y.lo_ + x.lo_ * y.hi_;
    DoubleDouble out;
    out.hi_ = quick_two_sum(p, e, out.lo_);
    return out;
  }
  friend DoubleDouble operator*(const DoubleDouble& x, double y) { return x * DoubleDouble(y); }

private:
  static double two_sum(double a, double b, double& err) {
    const double s = a + b;
    const double bb = s - a;
    err = (a - (s - bb)) + (b - bb);
    return s;
  }
  static double quick_two_sum(double a, double b, double& err) {
    const double s = a + b;
    err = b - (s - a);
    return s;
  }
  static void split(double a, double& hi, double& lo) {
    constexpr double kSplitter = 134217729.0;  // 2^27 + 1
    const double c = kSplitter * a;
    hi = c - (c - a);
    lo = a - hi;
  }
  static double two_prod(double a, double b, double& err) {
    const double p = a * b;
    double ah = 0.0, al = 0.0, bh = 0.0, bl = 0.0;
    split(a, ah, al);
    split(b, bh, bl);
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    return p;
  }

  double hi_ = 0.0;
  double lo_ = 0.0;
};

DoubleDouble dot_dd(std::span<const double> x, std::span<const double> y) {
  DoubleDouble s;
  for (std::size_t n = 0; n < x.size(); ++n) s += DoubleDouble(x[n]) * y[n];
  return s;
}

}  // namespace

void FactorMatrix::append_column(std::span<const double> col) {
  if (cols_ == 0 && rows_ == 0) rows_ = col.size();
  if (col.size() != rows_) throw DimensionError("factor column length mismatch");
  data_.insert(data_.end(), col.begin(), col.end());
  ++cols_;
}

void FactorMatrix::truncate(std::size_t cols) {
  if (cols >= cols_) return;
  cols_ = cols;
  data_.resize(rows_ * cols_);
}

void DecomposeOptions::validate() const {
  if (rank < 1) throw InvalidArgument("decompose: rank must be >= 1");
  if (!(tol > 0.0)) throw InvalidArgument("decompose: tol must be > 0");
  if (max_iters < 1) throw InvalidArgument("decompose: max_iters must be >= 1");
}

void ResidualView::subtract(double lambda, std::span<const double> h, std::span<const double> a,
                            std::span<const double> t) {
  const auto d = dims();
  if (h.size() != d.I || a.size() != d.J || t.size() != d.K) {
    throw DimensionError("residual: group vectors do not match tensor dims");
  }
  if (lambda_.empty()) {
    h_ = FactorMatrix(d.I, 0);
    a_ = FactorMatrix(d.J, 0);
    t_ = FactorMatrix(d.K, 0);
  }
  lambda_.push_back(lambda);
  h_.append_column(h);
  a_.append_column(a);
  t_.append_column(t);
}

std::vector<double> ResidualView::contract_modes_2_3(std::span<const double> a,
                                                     std::span<const double> t) const {
  auto out = x_->contract_modes_2_3(a, t);
  for (std::size_t s = 0; s < groups(); ++s) {
    const double w = lambda_[s] * dot(a_.column(s), a) * dot(t_.column(s), t);
    const auto hs = h_.column(s);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= w * hs[i];
  }
  return out;
}

std::vector<double> ResidualView::contract_modes_1_3(std::span<const double> h,
                                                     std::span<const double> t) const {
  auto out = x_->contract_modes_1_3(h, t);
  for (std::size_t s = 0; s < groups(); ++s) {
    const double w = lambda_[s] * dot(h_.column(s), h) * dot(t_.column(s), t);
    const auto as = a_.column(s);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] -= w * as[j];
  }
  return out;
}

std::vector<double> ResidualView::contract_modes_1_2(std::span<const double> h,
                                                     std::span<const double> a) const {
  auto out = x_->contract_modes_1_2(h, a);
  for (std::size_t s = 0; s < groups(); ++s) {
    const double w = lambda_[s] * dot(h_.column(s), h) * dot(a_.column(s), a);
    const auto ts = t_.column(s);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] -= w * ts[k];
  }
  return out;
}

std::vector<double> ResidualView::slice_squared_norms() const {
  auto out = x_->slice_squared_norms();
  const std::size_t r = groups();
  for (std::size_t s = 0; s < r; ++s) {
    const auto cross = x_->contract_modes_1_2(h_.column(s), a_.column(s));
    const auto ts = t_.column(s);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] -= 2.0 * lambda_[s] * ts[k] * cross[k];
  }
  for (std::size_t s = 0; s < r; ++s) {
    for (std::size_t q = 0; q < r; ++q) {
      const double w = lambda_[s] * lambda_[q] * dot(h_.column(s), h_.column(q)) *
                       dot(a_.column(s), a_.column(q));
      const auto ts = t_.column(s);
      const auto tq = t_.column(q);
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * ts[k] * tq[k];
    }
  }
  for (auto& v : out) v = std::max(v, 0.0);
  return out;
}

double ResidualView::squared_norm() const {
  // ||X - Xhat||^2 split as the misfit on stored entries plus the mass Xhat
  // puts elsewhere, both in double-double arithmetic. The plain expansion
  // ||X||^2 - 2<X,Xhat> + ||Xhat||^2 in doubles cannot resolve relative
  // residuals much below 1e-8.
  const std::size_t r = groups();
  std::vector<DoubleDouble> gram_h(r * r), gram_a(r * r), gram_t(r * r);
  for (std::size_t s = 0; s < r; ++s) {
    for (std::size_t q = 0; q < r; ++q) {
      gram_h[s * r + q] = dot_dd(h_.column(s), h_.column(q));
      gram_a[s * r + q] = dot_dd(a_.column(s), a_.column(q));
      gram_t[s * r + q] = dot_dd(t_.column(s), t_.column(q));
    }
  }
  DoubleDouble model_mass;
  for (std::size_t s = 0; s < r; ++s) {
    for (std::size_t q = 0; q < r; ++q) {
      model_mass += DoubleDouble(lambda_[s]) * lambda_[q] * gram_h[s * r + q] * gram_a[s * r + q] *
                    gram_t[s * r + q];
    }
  }
  DoubleDouble misfit, stored_mass;
  for (const auto& e : x_->entries()) {
    DoubleDouble xhat;
    for (std::size_t s = 0; s < r; ++s) {
      xhat += DoubleDouble(lambda_[s]) * h_(e.i, s) * a_(e.j, s) * t_(e.k, s);
    }
    stored_mass += xhat * xhat;
    const DoubleDouble diff = DoubleDouble(e.value) - xhat;
    misfit += diff * diff;
  }
  return std::max((misfit + (model_mass - stored_mass)).value(), 0.0);
}

void canonicalize_signs(std::span<double> h, std::span<double> a, std::span<double> t) {
  auto largest = [](std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t n = 1; n < v.size(); ++n) {
      if (std::abs(v[n]) > std::abs(v[best])) best = n;
    }
    return best;
  };
  auto flip = [](std::span<double> v) {
    for (auto& x : v) x = -x;
  };
  if (!t.empty() && t[largest(t)] < 0.0) {
    flip(t);
    flip(h);
  }
  // With the term sign fixed, the hub carries whatever sign is left, so that
  // H and T alone preserve the sign of the group's contribution to X.
  if (!a.empty() && a[largest(a)] < 0.0) {
    flip(a);
    flip(h);
  }
}

Rank1Term rank1_power_iteration(const ResidualView& residual, const DecomposeOptions& opts,
                                std::size_t group) {
  const auto d = residual.dims();
  std::seed_seq seq{static_cast<std::uint64_t>(opts.seed), static_cast<std::uint64_t>(group)};
  std::mt19937_64 rng(seq);

  std::vector<double> h, a, t;
  if (opts.init == InitMethod::SliceSum) {
    h = residual.contract_modes_2_3(std::vector<double>(d.J, 1.0), std::vector<double>(d.K, 1.0));
    if (d.I == d.J) {
      a = h;
    } else {
      a = residual.contract_modes_1_3(std::vector<double>(d.I, 1.0), std::vector<double>(d.K, 1.0));
    }
    t = residual.slice_squared_norms();
    for (auto& v : t) v = std::sqrt(v);
    if (normalize(h) == 0.0) h = random_unit(d.I, rng);
    if (normalize(a) == 0.0) a = (d.I == d.J) ? h : random_unit(d.J, rng);
    if (normalize(t) == 0.0) t = random_unit(d.K, rng);
  } else {
    h = random_unit(d.I, rng);
    a = (d.I == d.J) ? h : random_unit(d.J, rng);
    t = random_unit(d.K, rng);
  }

  Rank1Term out;
  double lambda = 0.0;
  double previous = 0.0;
  std::size_t sweep = 0;
  while (sweep < opts.max_iters) {
    ++sweep;
    auto nh = residual.contract_modes_2_3(a, t);
    auto na = std::vector<double>{};
    auto nt = std::vector<double>{};
    bool degenerate = normalize(nh) == 0.0;
    if (!degenerate) {
      na = residual.contract_modes_1_3(nh, t);
      degenerate = normalize(na) == 0.0;
    }
    if (!degenerate) {
      nt = residual.contract_modes_1_2(nh, na);
      lambda = normalize(nt);
      degenerate = lambda == 0.0 || !std::isfinite(lambda);
    }
    if (degenerate) {
      if (out.status.restarts == kMaxRestarts) {
        lambda = 0.0;
        break;
      }
      ++out.status.restarts;
      h = random_unit(d.I, rng);
      a = (d.I == d.J) ? h : random_unit(d.J, rng);
      t = random_unit(d.K, rng);
      previous = 0.0;
      continue;
    }
    h = std::move(nh);
    a = std::move(na);
    t = std::move(nt);
    if (previous > 0.0 && std::abs(lambda - previous) <= opts.tol * lambda) {
      out.status.converged = true;
      break;
    }
    previous = lambda;
  }
  out.status.iterations = sweep;

  canonicalize_signs(h, a, t);
  out.lambda = lambda;
  out.hub = std::move(h);
  out.authority = std::move(a);
  out.term = std::move(t);
  return out;
}

std::vector<CPModel> decompose_prefixes(const SparseTensor3& x, const DecomposeOptions& opts,
                                        std::span<const std::size_t> ranks) {
  opts.validate();
  if (x.empty()) throw InvalidArgument("decompose: tensor is zero");
  if (ranks.empty()) throw InvalidArgument("decompose: no ranks requested");
  for (auto r : ranks) {
    if (r < 1) throw InvalidArgument("decompose: rank must be >= 1");
  }
  const std::size_t max_rank = *std::max_element(ranks.begin(), ranks.end());
  const double x_norm = x.frobenius_norm();

  ResidualView residual(x);
  std::vector<Rank1Term> terms;
  for (std::size_t r = 0; r < max_rank; ++r) {
    auto term = rank1_power_iteration(residual, opts, r);
    term.status.exhausted = term.lambda < kExhaustedRatio * x_norm;
    residual.subtract(term.lambda, term.hub, term.authority, term.term);
    terms.push_back(std::move(term));
  }

  const auto d = x.dims();
  std::vector<CPModel> models;
  for (auto r : ranks) {
    std::vector<std::size_t> order(r);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t p, std::size_t q) {
      return terms[p].lambda > terms[q].lambda;
    });
    CPModel m;
    m.options = opts;
    m.options.rank = r;
    m.hub = FactorMatrix(d.I, 0);
    m.authority = FactorMatrix(d.J, 0);
    m.term = FactorMatrix(d.K, 0);
    for (auto p : order) {
      m.lambda.push_back(terms[p].lambda);
      m.hub.append_column(terms[p].hub);
      m.authority.append_column(terms[p].authority);
      m.term.append_column(terms[p].term);
      m.status.push_back(terms[p].status);
    }
    models.push_back(std::move(m));
  }
  return models;
}

CPModel decompose(const SparseTensor3& x, const DecomposeOptions& opts) {
  const std::size_t rank[] = {opts.rank};
  return std::move(decompose_prefixes(x, opts, rank).front());
}

double fit_error(const SparseTensor3& x, const CPModel& model) {
  if (x.empty()) throw InvalidArgument("fit_error: tensor is zero");
  const auto d = x.dims();
  if (model.rank() > 0 && !(model.dims() == d)) {
    throw DimensionError("fit_error: model dims do not match tensor");
  }
  if (model.rank() == 0) return 1.0;
  ResidualView residual(x);
  for (std::size_t r = 0; r < model.rank(); ++r) {
    residual.subtract(model.lambda[r], model.hub.column(r), model.authority.column(r),
                      model.term.column(r));
  }
  return std::sqrt(residual.squared_norm()) / x.frobenius_norm();
}

std::string to_string(InitMethod m) {
  return m == InitMethod::SliceSum ? "slice-sum" : "seeded-random";
}

InitMethod init_method_from_string(const std::string& s) {
  if (s == "slice-sum") return InitMethod::SliceSum;
  if (s == "seeded-random") return InitMethod::SeededRandom;
  throw InvalidArgument("unknown init method '" + s + "'");
}

nlohmann::json to_json(const CPModel& model) {
  using nlohmann::json;
  auto columns = [](const FactorMatrix& f) {
    json cols = json::array();
    for (std::size_t c = 0; c < f.cols(); ++c) {
      auto col = f.column(c);
      cols.push_back(std::vector<double>(col.begin(), col.end()));
    }
    return cols;
  };
  json groups = json::array();
  for (const auto& s : model.status) {
    groups.push_back({{"converged", s.converged},
                      {"iterations", s.iterations},
                      {"restarts", s.restarts},
                      {"exhausted", s.exhausted}});
  }
  const auto d = model.dims();
  return json{{"format", "lltensor-cp-model"},
              {"version", 1},
              {"rank", model.rank()},
              {"dims", {d.I, d.J, d.K}},
              {"lambda", model.lambda},
              {"hub", columns(model.hub)},
              {"authority", columns(model.authority)},
              {"term", columns(model.term)},
              {"groups", groups},
              {"options",
               {{"rank", model.options.rank},
                {"tol", model.options.tol},
                {"max_iters", model.options.max_iters},
                {"seed", model.options.seed},
                {"init", to_string(model.options.init)}}}};
}

CPModel model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "lltensor-cp-model") {
      throw IngestError("model: unrecognized format tag");
    }
    CPModel m;
    const auto dims = doc.at("dims").get<std::vector<std::size_t>>();
    if (dims.size() != 3) throw IngestError("model: dims must have three entries");
    m.lambda = doc.at("lambda").get<std::vector<double>>();
    const std::size_t rank = doc.at("rank").get<std::size_t>();
    if (rank != m.lambda.size()) throw IngestError("model: rank does not match lambda length");
    auto read_factor = [&](const char* key, std::size_t rows) {
      FactorMatrix f(rows, 0);
      const auto& cols = doc.at(key);
      if (cols.size() != rank) throw IngestError(std::string("model: ") + key + " column count != rank");
      for (const auto& col : cols) {
        auto v = col.get<std::vector<double>>();
        if (v.size() != rows) throw IngestError(std::string("model: ") + key + " column length != dims");
        f.append_column(v);
      }
      return f;
    };
    m.hub = read_factor("hub", dims[0]);
    m.authority = read_factor("authority", dims[1]);
    m.term = read_factor("term", dims[2]);
    for (const auto& g : doc.at("groups")) {
      GroupStatus s;
      s.converged = g.at("converged").get<bool>();
      s.iterations = g.at("iterations").get<std::size_t>();
      s.restarts = g.at("restarts").get<std::size_t>();
      s.exhausted = g.at("exhausted").get<bool>();
      m.status.push_back(s);
    }
    if (m.status.size() != rank) throw IngestError("model: groups length != rank");
    const auto& o = doc.at("options");
    m.options.rank = o.at("rank").get<std::size_t>();
    m.options.tol = o.at("tol").get<double>();
    m.options.max_iters = o.at("max_iters").get<std::size_t>();
    m.options.seed = o.at("seed").get<std::uint64_t>();
    m.options.init = init_method_from_string(o.at("init").get<std::string>());
    return m;
  } catch (const nlohmann::json::exception& ex) {
    throw IngestError(std::string("model: ") + ex.what());
  } catch (const InvalidArgument& ex) {
    throw IngestError(std::string("model: ") + ex.what());
  }
}

}  // namespace lltensor
