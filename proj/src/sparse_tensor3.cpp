#include "lltensor/sparse_tensor3.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>

#include "lltensor/error.hpp"

namespace lltensor {

namespace {

void require_length(std::span<const double> v, std::size_t n, const char* name) {
  if (v.size() != n) {
    std::ostringstream msg;
    msg << "vector '" << name << "' has length " << v.size() << ", expected " << n;
    throw DimensionError(msg.str());
  }
}

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

SparseTensor3::SparseTensor3(Dims3 dims, std::vector<TensorEntry> entries)
    : dims_(dims), entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (e.i >= dims_.I || e.j >= dims_.J || e.k >= dims_.K) {
      std::ostringstream msg;
      msg << "entry (" << e.i << "," << e.j << "," << e.k << ") outside dims (" << dims_.I
          << "," << dims_.J << "," << dims_.K << ")";
      throw DimensionError(msg.str());
    }
    if (e.value == 0.0 || !std::isfinite(e.value)) {
      std::ostringstream msg;
      msg << "entry (" << e.i << "," << e.j << "," << e.k << ") has non-storable value "
          << e.value;
      throw InvalidArgument(msg.str());
    }
  }
  auto key = [](const TensorEntry& e) { return std::tie(e.k, e.i, e.j); };
  std::sort(entries_.begin(), entries_.end(),
            [&](const TensorEntry& x, const TensorEntry& y) { return key(x) < key(y); });
  auto dup = std::adjacent_find(entries_.begin(), entries_.end(),
                                [&](const TensorEntry& x, const TensorEntry& y) {
                                  return key(x) == key(y);
                                });
  if (dup != entries_.end()) {
    std::ostringstream msg;
    msg << "duplicate coordinate (" << dup->i << "," << dup->j << "," << dup->k << ")";
    throw InvalidArgument(msg.str());
  }
}

std::vector<double> SparseTensor3::contract_modes_2_3(std::span<const double> a,
                                                      std::span<const double> t) const {
  require_length(a, dims_.J, "a");
  require_length(t, dims_.K, "t");
  std::vector<double> out(dims_.I, 0.0);
  for (const auto& e : entries_) out[e.i] += e.value * a[e.j] * t[e.k];
  return out;
}

std::vector<double> SparseTensor3::contract_modes_1_3(std::span<const double> h,
                                                      std::span<const double> t) const {
  require_length(h, dims_.I, "h");
  require_length(t, dims_.K, "t");
  std::vector<double> out(dims_.J, 0.0);
  for (const auto& e : entries_) out[e.j] += e.value * h[e.i] * t[e.k];
  return out;
}

std::vector<double> SparseTensor3::contract_modes_1_2(std::span<const double> h,
                                                      std::span<const double> a) const {
  require_length(h, dims_.I, "h");
  require_length(a, dims_.J, "a");
  std::vector<double> out(dims_.K, 0.0);
  for (const auto& e : entries_) out[e.k] += e.value * h[e.i] * a[e.j];
  return out;
}

double SparseTensor3::squared_norm() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.value * e.value;
  return s;
}

double SparseTensor3::frobenius_norm() const { return std::sqrt(squared_norm()); }

std::vector<double> SparseTensor3::slice_squared_norms() const {
  std::vector<double> out(dims_.K, 0.0);
  for (const auto& e : entries_) out[e.k] += e.value * e.value;
  return out;
}

bool SparseTensor3::frontal_slices_symmetric(double tol) const {
  if (dims_.I != dims_.J) {
    std::ostringstream msg;
    msg << "frontal slices are " << dims_.I << "x" << dims_.J << ", not square";
    throw DimensionError(msg.str());
  }
  // Entries are sorted by (k,i,j), so the mirror of (i,j,k) is found by binary search.
  auto lookup = [&](std::size_t i, std::size_t j, std::size_t k) {
    TensorEntry probe{i, j, k, 0.0};
    auto it = std::lower_bound(entries_.begin(), entries_.end(), probe,
                               [](const TensorEntry& x, const TensorEntry& y) {
                                 return std::tie(x.k, x.i, x.j) < std::tie(y.k, y.i, y.j);
                               });
    if (it != entries_.end() && it->i == i && it->j == j && it->k == k) return it->value;
    return 0.0;
  };
  for (const auto& e : entries_) {
    if (std::abs(e.value - lookup(e.j, e.i, e.k)) > tol) return false;
  }
  return true;
}

void SparseTensor3::write_text(std::ostream& os) const {
  os << dims_.I << ' ' << dims_.J << ' ' << dims_.K << ' ' << entries_.size() << '\n';
  for (const auto& e : entries_) {
    os << e.i << ' ' << e.j << ' ' << e.k << ' ' << shortest(e.value) << '\n';
  }
}

SparseTensor3 SparseTensor3::read_text(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(is, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };

  if (!next_line()) throw IngestError("tensor text: missing header line");
  Dims3 dims;
  std::size_t nnz = 0;
  {
    std::istringstream hs(line);
    std::string extra;
    if (!(hs >> dims.I >> dims.J >> dims.K >> nnz) || (hs >> extra)) {
      throw IngestError("tensor text line 1: header must be 'I J K nnz'");
    }
  }

  std::vector<TensorEntry> entries;
  entries.reserve(nnz);
  for (std::size_t n = 0; n < nnz; ++n) {
    if (!next_line()) {
      std::ostringstream msg;
      msg << "tensor text: expected " << nnz << " entries, found " << n;
      throw IngestError(msg.str());
    }
    std::istringstream ls(line);
    TensorEntry e;
    std::string value_text, extra;
    if (!(ls >> e.i >> e.j >> e.k >> value_text) || (ls >> extra)) {
      throw IngestError("tensor text line " + std::to_string(line_no) +
                        ": expected 'i j k value'");
    }
    auto [ptr, ec] =
        std::from_chars(value_text.data(), value_text.data() + value_text.size(), e.value);
    if (ec != std::errc{} || ptr != value_text.data() + value_text.size()) {
      throw IngestError("tensor text line " + std::to_string(line_no) + ": bad value '" +
                        value_text + "'");
    }
    entries.push_back(e);
  }
  if (next_line()) {
    throw IngestError("tensor text line " + std::to_string(line_no) +
                      ": more entries than header nnz");
  }
  try {
    return SparseTensor3(dims, std::move(entries));
  } catch (const std::exception& ex) {
    throw IngestError(std::string("tensor text: ") + ex.what());
  }
}

}  // namespace lltensor
