#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pcdm/rng.hpp"

namespace pcdm {

/// A set of block indices, sorted ascending.
using BlockSet = std::vector<std::size_t>;

struct TauNice {
  std::size_t tau;
};

// q[c] = P(|S| = c) for c = 0..n; shorter vectors are zero-padded.
struct DoublyUniform {
  std::vector<double> q;
};

struct NonoverlappingPartition {
  std::vector<BlockSet> parts;
};

struct SerialUniform {};

/// A uniform sampling over subsets of {0, ..., n-1}.
class SamplingSpec {
 public:
  using Kind = std::variant<TauNice, DoublyUniform, NonoverlappingPartition, SerialUniform>;

  SamplingSpec(Kind kind, std::size_t n) : kind_(std::move(kind)), n_(n) { validate(); }

  static SamplingSpec tau_nice(std::size_t n, std::size_t tau) { return {TauNice{tau}, n}; }
  static SamplingSpec serial(std::size_t n) { return {SerialUniform{}, n}; }
  static SamplingSpec doubly_uniform(std::size_t n, std::vector<double> q) {
    return {DoublyUniform{std::move(q)}, n};
  }
  static SamplingSpec partition(std::size_t n, std::vector<BlockSet> parts) {
    return {NonoverlappingPartition{std::move(parts)}, n};
  }

  const Kind& kind() const { return kind_; }
  std::size_t n() const { return n_; }

  template <class T>
  const T* as() const { return std::get_if<T>(&kind_); }

  std::string describe() const {
    if (auto* t = as<TauNice>()) return "tau-nice(tau=" + std::to_string(t->tau) + ")";
    if (as<SerialUniform>()) return "serial";
    if (as<DoublyUniform>()) return "doubly-uniform";
    return "partition";
  }

 private:
  void validate() {
    if (n_ == 0) throw std::invalid_argument("sampling: n must be >= 1");
    if (auto* t = std::get_if<TauNice>(&kind_)) {
      if (t->tau < 1 || t->tau > n_) throw std::invalid_argument("tau-nice: need 1 <= tau <= n");
    } else if (auto* d = std::get_if<DoublyUniform>(&kind_)) {
      if (d->q.size() > n_ + 1) throw std::invalid_argument("doubly uniform: q has more than n+1 entries");
      d->q.resize(n_ + 1, 0.0);
      double total = 0.0, mean = 0.0;
      for (std::size_t c = 0; c <= n_; ++c) {
        if (d->q[c] < 0.0) throw std::invalid_argument("doubly uniform: negative probability");
        total += d->q[c];
        mean += static_cast<double>(c) * d->q[c];
      }
      if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("doubly uniform: q must sum to 1");
      if (!(mean > 0.0)) throw std::invalid_argument("doubly uniform: improper sampling, E|S| = 0");
    } else if (auto* p = std::get_if<NonoverlappingPartition>(&kind_)) {
      if (p->parts.empty()) throw std::invalid_argument("partition: no parts");
      std::vector<char> seen(n_, 0);
      for (auto& part : p->parts) {
        if (part.empty()) throw std::invalid_argument("partition: empty part");
        std::sort(part.begin(), part.end());
        for (std::size_t i : part) {
          if (i >= n_) throw std::invalid_argument("partition: block index out of range");
          if (seen[i]) throw std::invalid_argument("partition: parts overlap");
          seen[i] = 1;
        }
      }
      if (std::find(seen.begin(), seen.end(), 0) != seen.end())
        throw std::invalid_argument("partition: parts do not cover all blocks");
    }
  }

  Kind kind_;
  std::size_t n_;
};

/// (E|S|, E|S|^2), exact.
inline std::pair<double, double> cardinality_moments(const SamplingSpec& spec) {
  if (auto* t = spec.as<TauNice>()) {
    const double tau = static_cast<double>(t->tau);
    return {tau, tau * tau};
  }
  if (spec.as<SerialUniform>()) return {1.0, 1.0};
  if (auto* d = spec.as<DoublyUniform>()) {
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t c = 0; c < d->q.size(); ++c) {
      const double cd = static_cast<double>(c);
      m1 += cd * d->q[c];
      m2 += cd * cd * d->q[c];
    }
    return {m1, m2};
  }
  const auto& parts = spec.as<NonoverlappingPartition>()->parts;
  double m1 = 0.0, m2 = 0.0;
  for (const auto& part : parts) {
    const double s = static_cast<double>(part.size());
    m1 += s;
    m2 += s * s;
  }
  const double count = static_cast<double>(parts.size());
  return {m1 / count, m2 / count};
}

/// alpha = E|S| / n.
inline double alpha(const SamplingSpec& spec) {
  const double a = cardinality_moments(spec).first / static_cast<double>(spec.n());
  if (!(a > 0.0)) throw std::invalid_argument("alpha: improper sampling");
  return a;
}

/// Draws block subsets. A draw for iteration k depends only on (seed, k):
/// the partial Fisher-Yates swaps on the index buffer are undone after each
/// draw, so the buffer is always the identity permutation between draws.
class Sampler {
 public:
  Sampler(SamplingSpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) {
    buffer_.resize(spec_.n());
    std::iota(buffer_.begin(), buffer_.end(), std::size_t{0});
  }

  const SamplingSpec& spec() const { return spec_; }

  const BlockSet& draw(std::uint64_t k) {
    Rng rng = Rng::stream(seed_, k);
    return draw(rng);
  }

  const BlockSet& draw(Rng& rng) {
    const std::size_t n = spec_.n();
    current_.clear();
    if (auto* t = spec_.as<TauNice>()) {
      choose(rng, t->tau);
    } else if (spec_.as<SerialUniform>()) {
      current_.push_back(static_cast<std::size_t>(rng.below(n)));
    } else if (auto* d = spec_.as<DoublyUniform>()) {
      // Inverse CDF; rounding slack in sum(q) falls through to the last
      // cardinality with positive mass.
      const double u = rng.uniform();
      double cdf = 0.0;
      std::size_t chosen = n + 1;
      std::size_t last_positive = 0;
      for (std::size_t c = 0; c <= n; ++c) {
        if (d->q[c] <= 0.0) continue;
        last_positive = c;
        cdf += d->q[c];
        if (chosen > n && u < cdf) chosen = c;
      }
      choose(rng, chosen > n ? last_positive : chosen);
    } else {
      const auto& parts = spec_.as<NonoverlappingPartition>()->parts;
      current_ = parts[static_cast<std::size_t>(rng.below(parts.size()))];
    }
    return current_;
  }

 private:
  void choose(Rng& rng, std::size_t count) {
    const std::size_t n = buffer_.size();
    swaps_.clear();
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(buffer_[i], buffer_[j]);
      swaps_.push_back(j);
      current_.push_back(buffer_[i]);
    }
    for (std::size_t i = count; i-- > 0;) std::swap(buffer_[i], buffer_[swaps_[i]]);
    std::sort(current_.begin(), current_.end());
  }

  SamplingSpec spec_;
  std::uint64_t seed_;
  std::vector<std::size_t> buffer_;
  std::vector<std::size_t> swaps_;
  BlockSet current_;
};

inline BlockSet draw(const SamplingSpec& spec, Rng& rng) {
  Sampler sampler(spec, 0);
  return sampler.draw(rng);
}

struct WeightedSet {
  BlockSet set;
  double probability;
};

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

namespace detail {
template <class Fn>
void for_each_combination(std::size_t n, std::size_t k, Fn&& fn) {
  BlockSet combo(k);
  std::iota(combo.begin(), combo.end(), std::size_t{0});
  if (k > n) return;
  while (true) {
    fn(combo);
    std::size_t i = k;
    while (i > 0 && combo[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++combo[i - 1];
    for (std::size_t j = i; j < k; ++j) combo[j] = combo[j - 1] + 1;
  }
}
}  // namespace detail

inline constexpr double kMaxSupport = 1e6;

/// Every set in the support together with its probability.
inline std::vector<WeightedSet> enumerate_support(const SamplingSpec& spec) {
  std::vector<WeightedSet> out;
  const std::size_t n = spec.n();
  auto add_level = [&](std::size_t c, double mass) {
    const double count = binomial(n, c);
    detail::for_each_combination(n, c, [&](const BlockSet& s) { out.push_back({s, mass / count}); });
  };
  if (auto* t = spec.as<TauNice>()) {
    if (binomial(n, t->tau) > kMaxSupport) throw std::length_error("enumerate_support: support too large");
    add_level(t->tau, 1.0);
  } else if (spec.as<SerialUniform>()) {
    add_level(1, 1.0);
  } else if (auto* d = spec.as<DoublyUniform>()) {
    double total = 0.0;
    for (std::size_t c = 0; c <= n; ++c)
      if (d->q[c] > 0.0) total += binomial(n, c);
    if (total > kMaxSupport) throw std::length_error("enumerate_support: support too large");
    for (std::size_t c = 0; c <= n; ++c)
      if (d->q[c] > 0.0) add_level(c, d->q[c]);
  } else {
    const auto& parts = spec.as<NonoverlappingPartition>()->parts;
    for (const auto& part : parts) out.push_back({part, 1.0 / static_cast<double>(parts.size())});
  }
  return out;
}

}  // namespace pcdm
