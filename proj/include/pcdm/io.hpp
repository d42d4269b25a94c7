#pragma once

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pcdm/rng.hpp"
#include "pcdm/solver.hpp"
#include "pcdm/sparse_matrix.hpp"

namespace pcdm::io {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LabeledData {
  SparseMatrix features;
  std::vector<double> labels;
};

namespace detail {
inline std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double parse_double(std::string_view tok, std::size_t line, const std::string& path) {
  std::string s(tok);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
    throw FormatError(path + ":" + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}
}  // namespace detail

/// Reads `label idx:val idx:val ...` lines with 1-based, strictly increasing
/// indices. Labels must be -1, 0 or +1; 0 is mapped to -1. Blank lines and
/// lines starting with '#' are skipped. With normalize_rows each nonzero row
/// is scaled to unit L2 norm.
inline LabeledData parse_libsvm(const std::string& path, bool normalize_rows = false) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<Triplet> entries;
  std::vector<double> labels;
  std::size_t cols = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = detail::split_ws(line);
    if (toks.empty() || toks[0].front() == '#') continue;
    const double y = detail::parse_double(toks[0], lineno, path);
    if (y != 1.0 && y != -1.0 && y != 0.0)
      throw FormatError(path + ":" + std::to_string(lineno) + ": label must be -1, 0 or +1");
    const std::size_t row = labels.size();
    labels.push_back(y == 0.0 ? -1.0 : y);
    const std::size_t first = entries.size();
    std::size_t prev = 0;
    for (std::size_t t = 1; t < toks.size(); ++t) {
      const auto tok = toks[t];
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos || colon == 0)
        throw FormatError(path + ":" + std::to_string(lineno) + ": expected idx:val, got '" + std::string(tok) + "'");
      std::size_t idx = 0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + colon, idx);
      if (ec != std::errc() || p != tok.data() + colon || idx == 0)
        throw FormatError(path + ":" + std::to_string(lineno) + ": bad index in '" + std::string(tok) + "'");
      if (idx == prev)
        throw FormatError(path + ":" + std::to_string(lineno) + ": duplicate index " + std::to_string(idx));
      if (idx < prev)
        throw FormatError(path + ":" + std::to_string(lineno) + ": indices not increasing at " + std::to_string(idx));
      prev = idx;
      entries.push_back({row, idx - 1, detail::parse_double(tok.substr(colon + 1), lineno, path)});
      cols = std::max(cols, idx);
    }
    if (normalize_rows) {
      double s = 0.0;
      for (std::size_t k = first; k < entries.size(); ++k) s += entries[k].value * entries[k].value;
      if (s > 0.0) {
        s = std::sqrt(s);
        for (std::size_t k = first; k < entries.size(); ++k) entries[k].value /= s;
      }
    }
  }
  if (labels.empty()) throw FormatError(path + ": no data rows");
  return {SparseMatrix(labels.size(), cols, std::move(entries)), std::move(labels)};
}

inline void write_libsvm(const std::string& path, const SparseMatrix& features, const std::vector<double>& labels) {
  if (labels.size() != features.rows()) throw std::invalid_argument("write_libsvm: one label per row");
  auto out = detail::open_out(path);
  for (std::size_t r = 0; r < features.rows(); ++r) {
    out << (labels[r] > 0 ? "+1" : "-1");
    auto idx = features.row_indices(r);
    auto val = features.row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k) out << ' ' << idx[k] + 1 << ':' << detail::fmt17(val[k]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

struct LeastSquaresInstance {
  SparseMatrix A;
  std::vector<double> b;
  std::vector<double> x_true;
};

/// Random sparse least squares: each row has a uniform number of nonzeros
/// in 1..omega_max at distinct random columns, U(0,1) values, columns
/// scaled to unit norm, and b = A xbar + 0.01 N(0,1) with xbar ~10% dense.
inline LeastSquaresInstance gen_least_squares(std::size_t m, std::size_t n, std::size_t omega_max,
                                              std::uint64_t seed) {
  if (m == 0 || n == 0 || omega_max == 0) throw std::invalid_argument("gen_least_squares: sizes must be positive");
  omega_max = std::min(omega_max, n);
  if (m * omega_max < n) throw std::invalid_argument("gen_least_squares: m * omega too small to cover every column");
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> row_cols(m);
  std::vector<std::size_t> col_count(n, 0);
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t k = 1 + static_cast<std::size_t>(rng.below(omega_max));
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(pool[i], pool[j]);
      row_cols[r].push_back(pool[i]);
      ++col_count[pool[i]];
    }
  }
  // Repair empty columns without pushing any row past omega_max: append to
  // a row with room, otherwise take over an entry whose column is shared.
  for (std::size_t c = 0; c < n; ++c) {
    if (col_count[c] > 0) continue;
    const auto start = static_cast<std::size_t>(rng.below(m));
    bool placed = false;
    for (std::size_t s = 0; s < m && !placed; ++s) {
      auto& cols = row_cols[(start + s) % m];
      if (cols.size() < omega_max) {
        cols.push_back(c);
        placed = true;
      }
    }
    for (std::size_t s = 0; s < m && !placed; ++s) {
      for (auto& slot : row_cols[(start + s) % m]) {
        if (col_count[slot] > 1) {
          --col_count[slot];
          slot = c;
          placed = true;
          break;
        }
      }
    }
    ++col_count[c];
  }
  std::vector<Triplet> t;
  std::vector<double> col_sq(n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    std::sort(row_cols[r].begin(), row_cols[r].end());
    for (std::size_t c : row_cols[r]) {
      const double v = 1.0 - rng.uniform();
      t.push_back({r, c, v});
      col_sq[c] += v * v;
    }
  }
  for (auto& e : t) e.value /= std::sqrt(col_sq[e.col]);
  SparseMatrix A(m, n, std::move(t));

  std::vector<double> xbar(n, 0.0);
  for (double& x : xbar)
    if (rng.uniform() < 0.1) x = rng.normal();
  std::vector<double> b(m);
  A.multiply(xbar, b);
  for (double& e : b) e += 0.01 * rng.normal();
  return {std::move(A), std::move(b), std::move(xbar)};
}

inline void write_vector_csv(const std::string& path, const std::vector<double>& v) {
  auto out = detail::open_out(path);
  for (double e : v) out << detail::fmt17(e) << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline std::vector<double> read_vector_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    out.push_back(detail::parse_double(toks[0], lineno, path));
  }
  return out;
}

/// Least squares data is stored as a LibSVM file whose labels are
/// placeholders; the targets live in `<path>.b.csv`.
inline std::string sidecar_path(const std::string& path) { return path + ".b.csv"; }

inline void write_least_squares(const std::string& path, const LeastSquaresInstance& inst) {
  write_libsvm(path, inst.A, std::vector<double>(inst.A.rows(), 1.0));
  write_vector_csv(sidecar_path(path), inst.b);
}

inline std::pair<SparseMatrix, std::vector<double>> read_least_squares(const std::string& path) {
  auto data = parse_libsvm(path);
  auto b = read_vector_csv(sidecar_path(path));
  if (b.size() != data.features.rows())
    throw FormatError(sidecar_path(path) + ": expected " + std::to_string(data.features.rows()) + " targets, got " +
                      std::to_string(b.size()));
  return {std::move(data.features), std::move(b)};
}

inline constexpr const char* kTraceHeader = "k,F,gap,hnorm2,ns";

inline void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& records) {
  out << kTraceHeader << '\n';
  for (const auto& r : records)
    out << r.k << ',' << detail::fmt17(r.F) << ',' << (std::isnan(r.gap) ? std::string() : detail::fmt17(r.gap))
        << ',' << detail::fmt17(r.hnorm2) << ',' << r.ns << '\n';
}

inline void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& records) {
  auto out = detail::open_out(path);
  write_trace_csv(out, records);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline std::vector<TraceRecord> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw FormatError(path + ": missing trace header");
  std::vector<TraceRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() == 4) cells.emplace_back();
    if (cells.size() != 5) throw FormatError(path + ":" + std::to_string(lineno) + ": expected 5 columns");
    TraceRecord r;
    r.k = static_cast<std::size_t>(std::stoull(cells[0]));
    r.F = detail::parse_double(cells[1], lineno, path);
    if (!cells[2].empty()) r.gap = detail::parse_double(cells[2], lineno, path);
    r.hnorm2 = detail::parse_double(cells[3], lineno, path);
    r.ns = cells[4].empty() ? 0 : std::stoll(cells[4]);
    out.push_back(r);
  }
  return out;
}

struct HistogramBucket {
  double lo;
  double hi;
  std::size_t count;
};

/// Log-spaced histogram over [min v, max v]; a constant v gives one bucket.
inline std::vector<HistogramBucket> v_histogram(const std::vector<double>& v, std::size_t buckets) {
  if (v.empty()) return {};
  if (buckets == 0) throw std::invalid_argument("v_histogram: need at least one bucket");
  const auto [mn_it, mx_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *mn_it, hi = *mx_it;
  if (!(lo > 0.0)) throw std::invalid_argument("v_histogram: entries must be positive");
  if (lo == hi) return {{lo, hi, v.size()}};
  const double llo = std::log(lo), lhi = std::log(hi);
  std::vector<HistogramBucket> out(buckets);
  for (std::size_t b = 0; b < buckets; ++b) {
    out[b].lo = b == 0 ? lo : std::exp(llo + (lhi - llo) * static_cast<double>(b) / static_cast<double>(buckets));
    out[b].hi = b + 1 == buckets ? hi
                                 : std::exp(llo + (lhi - llo) * static_cast<double>(b + 1) / static_cast<double>(buckets));
    out[b].count = 0;
  }
  for (double x : v) {
    auto b = static_cast<std::size_t>((std::log(x) - llo) / (lhi - llo) * static_cast<double>(buckets));
    out[std::min(b, buckets - 1)].count++;
  }
  return out;
}

inline void write_v_histogram(const std::string& path, const std::vector<double>& v, std::size_t buckets) {
  auto out = detail::open_out(path);
  out << "bucket_lo,bucket_hi,count\n";
  for (const auto& b : v_histogram(v, buckets))
    out << detail::fmt17(b.lo) << ',' << detail::fmt17(b.hi) << ',' << b.count << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace pcdm::io
