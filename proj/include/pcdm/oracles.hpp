#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcdm/blocks.hpp"
#include "pcdm/eso.hpp"
#include "pcdm/model.hpp"
#include "pcdm/rng.hpp"
#include "pcdm/sampling.hpp"
#include "pcdm/sparse_matrix.hpp"

namespace pcdm::theory {

inline constexpr double kEqualityTol = 1e-10;
inline constexpr double kSlackTol = 1e-9;

/// Outcome of one family of checks. A check passes when its slack is at
/// least -tol; for equalities the slack is -|error|.
struct OracleReport {
  std::string name;
  std::size_t checks = 0;
  std::size_t violations = 0;
  double worst = kInf;
  std::vector<std::string> failures;

  explicit OracleReport(std::string n = {}) : name(std::move(n)) {}

  bool ok() const { return violations == 0; }

  void add(double slack, double tol, const std::function<std::string()>& describe) {
    ++checks;
    worst = std::min(worst, slack);
    if (!(slack >= -tol)) {
      ++violations;
      if (failures.size() < 20) {
        std::ostringstream os;
        os.precision(17);
        os << name << ": slack " << slack << " (tol " << tol << "); " << describe();
        failures.push_back(os.str());
      }
    }
  }

  void merge(const OracleReport& other) {
    checks += other.checks;
    violations += other.violations;
    worst = std::min(worst, other.worst);
    for (const auto& f : other.failures)
      if (failures.size() < 20) failures.push_back(f);
  }
};

namespace detail {
inline std::string vec_str(std::span<const double> x) {
  std::ostringstream os;
  os.precision(17);
  os << '[';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
  os << ']';
  return os.str();
}

inline std::vector<double> add(std::span<const double> x, std::span<const double> h) {
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += h[j];
  return out;
}

inline std::vector<double> sub(std::span<const double> x, std::span<const double> y) {
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] -= y[j];
  return out;
}
}  // namespace detail

/// E_S f(x + h_[S]) <= f(x) + alpha (<grad f(x), h> + 1/2 ||h||_v^2), with
/// the expectation taken exactly over the support of the sampling, at
/// `trials` random (x, h).
inline OracleReport check_eso_inequality(const CompositeProblem& p, const SamplingSpec& spec,
                                         const std::vector<double>& v, std::size_t trials, std::uint64_t seed) {
  OracleReport rep("eso-inequality");
  const auto support = enumerate_support(spec);
  const double a = alpha(spec);
  const auto norms = p.norms(v);
  const auto& layout = p.layout();
  Rng rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<double> x(p.dim()), h(p.dim());
    for (double& e : x) e = rng.normal();
    for (double& e : h) e = rng.normal();
    const auto state = make_state(p, x);
    const double fx = smooth_value(p, x, state);
    const auto g = gradient(p, x, state);
    const double rhs = fx + a * (inner(g, h) + 0.5 * weighted_norm_sq(h, norms, layout));
    double lhs = 0.0;
    for (const auto& ws : support) {
      const auto hs = project_blocks(h, ws.set, layout);
      lhs += ws.probability * smooth_value(p, detail::add(x, hs));
    }
    rep.add(rhs - lhs, kSlackTol, [&] { return "x=" + detail::vec_str(x) + " h=" + detail::vec_str(h); });
  }
  return rep;
}

/// E_S Psi(x + h_[S]) = alpha Psi(x + h) + (1 - alpha) Psi(x).
inline OracleReport check_block_separable_expectation(const CompositeProblem& p, const SamplingSpec& spec,
                                                      std::span<const double> x, std::span<const double> h) {
  OracleReport rep("block-separable-expectation");
  const auto support = enumerate_support(spec);
  const double a = alpha(spec);
  const double psi_x = regularizer_value(p, x);
  const double psi_xh = regularizer_value(p, detail::add(x, h));
  const double rhs = a * psi_xh + (1.0 - a) * psi_x;
  double lhs = 0.0;
  for (const auto& ws : support)
    lhs += ws.probability * regularizer_value(p, detail::add(x, project_blocks(h, ws.set, p.layout())));
  double err;
  if (std::isinf(lhs) || std::isinf(rhs))
    err = (lhs == rhs) ? 0.0 : kInf;
  else
    err = std::abs(lhs - rhs);
  rep.add(-err, kEqualityTol, [&] { return "x=" + detail::vec_str(x) + " h=" + detail::vec_str(h); });
  return rep;
}

/// Slacks of the three-point descent inequality and its two corollaries
/// for x_+ = x + h(x)_[S], computed exactly over the support.
struct DescentSlacks {
  double main;       // with (mu_f + mu_psi) terms
  double expected;   // E F(x_+) <= F(x) - alpha/2 (mu_psi + 1) ||h||_v^2
  double plain;      // specialization with unit weights and no mu
  double dual_gap;   // | ||h||_v^2 - (||g||_v^*)^2 | / max(1, ||h||_v^2)
};

inline DescentSlacks descent_slacks(const CompositeProblem& p, const SamplingSpec& spec, const std::vector<double>& v,
                                    std::span<const double> x, std::span<const double> y, double mu_f,
                                    double mu_psi) {
  const auto support = enumerate_support(spec);
  const double a = alpha(spec);
  const auto norms = p.norms(v);
  const auto& layout = p.layout();
  const auto state = make_state(p, x);
  const auto h = update_direction(p, x, state, norms);
  const double Fx = function_value(p, x, state);
  const double Fy = function_value(p, y);
  const double xy = weighted_norm_sq(detail::sub(x, y), norms, layout);
  const double hh = weighted_norm_sq(h, norms, layout);
  const auto gmap = composite_gradient_map(h, norms, layout);

  double EF = 0.0, Edist = 0.0;
  for (const auto& ws : support) {
    const auto xp = detail::add(x, project_blocks(h, ws.set, layout));
    EF += ws.probability * function_value(p, xp);
    Edist += ws.probability * weighted_norm_sq(detail::sub(xp, y), norms, layout);
  }
  const double w = 0.5 * (mu_psi + 1.0);
  DescentSlacks s{};
  s.main = (Fx + w * xy - a * (Fx - Fy + 0.5 * (mu_f + mu_psi) * xy)) - (EF + w * Edist);
  s.expected = (Fx - a * w * hh) - EF;
  s.plain = (Fx + 0.5 * xy - a * (Fx - Fy)) - (EF + 0.5 * Edist);
  s.dual_gap = std::abs(hh - dual_norm_sq(gmap, norms, layout)) / std::max(1.0, hh);
  return s;
}

/// Checks all parts of the descent lemma at (x, y). v must be an ESO
/// parameter for the sampling; mu_f and mu_psi are measured in ||.||_v.
inline OracleReport check_lemma3(const CompositeProblem& p, const SamplingSpec& spec, const std::vector<double>& v,
                                 std::span<const double> x, std::span<const double> y, double mu_f,
                                 double mu_psi) {
  OracleReport rep("descent-lemma");
  const auto s = descent_slacks(p, spec, v, x, y, mu_f, mu_psi);
  auto where = [&] {
    std::ostringstream os;
    os.precision(17);
    os << "x=" << detail::vec_str(x) << " y=" << detail::vec_str(y) << " mu_f=" << mu_f << " mu_psi=" << mu_psi
       << " sampling=" << spec.describe();
    return os.str();
  };
  rep.add(s.main, kSlackTol, [&] { return "main inequality, " + where(); });
  rep.add(s.expected, kSlackTol, [&] { return "expected descent, " + where(); });
  rep.add(s.plain, kSlackTol, [&] { return "unit-weight form, " + where(); });
  rep.add(-s.dual_gap, kEqualityTol, [&] { return "primal/dual norm identity, " + where(); });
  return rep;
}

/// Two-path stochastic sequence showing the 1/rho dependence of the
/// high-probability bound without a levelset assumption is attained.
struct TightnessResult {
  double theta = 0.0;
  std::int64_t K = 0;
  double probability = 0.0;  // P(xi_K >= epsilon)
  double bound_K = 0.0;      // (1/zeta)((r0/2 + xi0)/(rho eps) - 1)
  std::size_t steps_checked = 0;
  double worst_slack_16 = kInf;  // E[r'/2 + xi'] <= r/2 + (1 - zeta) xi
  double worst_slack_17 = kInf;  // E[xi'] <= xi
  bool assumptions_hold = false;
  bool verdict = false;  // assumptions hold and probability >= rho
  std::string description;
};

inline TightnessResult tightness_example(double rho, double epsilon, double zeta, double r0, double xi0) {
  if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("tightness: rho must lie in (0, 1]");
  if (!(epsilon > 0.0)) throw std::invalid_argument("tightness: epsilon must be > 0");
  if (!(zeta > 0.0 && zeta < 1.0)) throw std::invalid_argument("tightness: zeta must lie in (0, 1)");
  if (!(r0 >= 0.0) || !(xi0 >= 0.0)) throw std::invalid_argument("tightness: r0 and xi0 must be >= 0");
  TightnessResult out;
  out.theta = (0.5 * r0 + (1.0 - zeta) * xi0) / rho - epsilon;
  if (!(out.theta > 0.0)) throw std::invalid_argument("tightness: degenerate construction (theta <= 0)");
  out.K = static_cast<std::int64_t>(std::floor(out.theta / (zeta * epsilon)));
  out.bound_K = ((0.5 * r0 + xi0) / (rho * epsilon) - 1.0) / zeta;

  // Step 0 -> 1 mixes the absorbing path (prob 1 - rho) and the live path.
  const double two_eps_zeta = 2.0 * zeta * epsilon;
  {
    const double e16 = rho * (0.5 * (2.0 * out.theta) + epsilon);
    const double e17 = rho * epsilon;
    out.worst_slack_16 = std::min(out.worst_slack_16, 0.5 * r0 + (1.0 - zeta) * xi0 - e16);
    out.worst_slack_17 = std::min(out.worst_slack_17, xi0 - e17);
    ++out.steps_checked;
  }
  // Live path from k = 1 on; the absorbing state (0, 0) satisfies both
  // assumptions trivially. r_k is kept in closed form to avoid drift.
  double p_at_K = out.K == 0 ? (xi0 >= epsilon ? 1.0 : 0.0) : 0.0;
  for (std::int64_t k = 1;; ++k) {
    const double r = 2.0 * out.theta - two_eps_zeta * static_cast<double>(k - 1);
    const double xi = epsilon;
    if (k == out.K) p_at_K = rho;
    const bool alive = r >= two_eps_zeta;
    const double r_next = alive ? r - two_eps_zeta : 0.0;
    const double xi_next = alive ? epsilon : 0.0;
    out.worst_slack_16 = std::min(out.worst_slack_16, 0.5 * r + (1.0 - zeta) * xi - (0.5 * r_next + xi_next));
    out.worst_slack_17 = std::min(out.worst_slack_17, xi - xi_next);
    ++out.steps_checked;
    if (!alive) {
      if (k < out.K) p_at_K = 0.0;
      break;
    }
  }
  out.probability = p_at_K;
  const double tol = 1e-12 * std::max(1.0, out.theta);
  out.assumptions_hold = out.worst_slack_16 >= -tol && out.worst_slack_17 >= -tol;
  out.verdict = out.assumptions_hold && out.probability >= rho;

  std::ostringstream os;
  os.precision(10);
  os << "(r_1, xi_1) = (0, 0) w.p. " << 1.0 - rho << ", (" << 2.0 * out.theta << ", " << epsilon << ") w.p. "
     << rho << "; then r_{k+1} = r_k - " << two_eps_zeta << " with xi = " << epsilon
     << " while r_k >= " << two_eps_zeta << ", else (0, 0)";
  out.description = os.str();
  return out;
}

/// A random small composite problem for the oracle suite.
struct OracleInstance {
  CompositeProblem problem;
  SamplingSpec sampling;
  eso::EsoParameter eso;
  std::string label;
};

inline SparseMatrix random_sparse(std::size_t rows, std::size_t cols, double density, Rng& rng) {
  std::vector<Triplet> t;
  for (std::size_t c = 0; c < cols; ++c) {
    bool any = false;
    for (std::size_t r = 0; r < rows; ++r)
      if (rng.uniform() < density) {
        t.push_back({r, c, rng.normal()});
        any = true;
      }
    if (!any) t.push_back({static_cast<std::size_t>(rng.below(rows)), c, rng.normal()});
  }
  return SparseMatrix(rows, cols, std::move(t));
}

/// Instance `index` of the suite: regularizer kind cycles through the four
/// kinds and tau through {1, 2, 3, n}; every fifth instance uses wider
/// blocks with a diagonal B, and some use doubly uniform or partition
/// samplings instead of tau-nice.
inline OracleInstance make_oracle_instance(std::uint64_t seed, std::size_t index) {
  Rng rng = Rng::stream(seed, index);
  const auto kind = static_cast<RegularizerKind>(index % 4);
  const std::size_t n = 2 + static_cast<std::size_t>(rng.below(7));  // blocks, 2..8
  std::ostringstream label;
  label << "instance " << index << " (seed " << seed << ")";

  std::vector<std::size_t> sizes(n, 1);
  std::vector<double> b_diag;
  if (index % 5 == 4) {
    for (auto& s : sizes) s = 1 + static_cast<std::size_t>(rng.below(2));
  }
  const BlockLayout layout(sizes);
  if (index % 5 == 4) {
    b_diag.resize(layout.dim());
    for (double& b : b_diag) b = rng.uniform(0.5, 2.0);
  }
  const std::size_t N = layout.dim();

  auto build = [&]() -> CompositeProblem {
    if (kind == RegularizerKind::Box && index % 8 == 2) {
      // SVM dual: box [0,1] on every coordinate.
      const std::size_t d = 3 + static_cast<std::size_t>(rng.below(4));
      auto samples = random_sparse(d, N, 0.6, rng).transposed();
      std::vector<double> labels(N);
      for (double& y : labels) y = rng.uniform() < 0.5 ? -1.0 : 1.0;
      return CompositeProblem(SvmDual{std::move(samples), std::move(labels), rng.uniform(0.05, 1.0)},
                              {Regularizer::box(0.0, 1.0)}, layout, b_diag);
    }
    const std::size_t m = N + static_cast<std::size_t>(rng.below(4));
    auto A = random_sparse(m, N, 0.5, rng);
    std::vector<double> b(m);
    for (double& e : b) e = rng.normal();
    Regularizer reg;
    switch (kind) {
      case RegularizerKind::Zero: reg = Regularizer::zero(); break;
      case RegularizerKind::L1: reg = Regularizer::l1(rng.uniform(0.05, 1.0)); break;
      case RegularizerKind::Box: reg = Regularizer::box(-1.0, 1.0); break;
      case RegularizerKind::SquaredL2: reg = Regularizer::squared_l2(rng.uniform(0.1, 2.0)); break;
    }
    return CompositeProblem(LeastSquares{std::move(A), std::move(b)}, {reg}, layout, b_diag);
  };
  CompositeProblem problem = build();
  label << " " << (problem.as<SvmDual>() ? "svm-dual" : "least-squares") << " "
        << problem.regularizer(0).describe() << " n=" << n << " N=" << N;

  const auto data = smoothness_data(problem);
  const std::size_t taus[] = {1, 2, 3, n};
  const std::size_t tau = std::min(taus[(index / 4) % 4], n);
  const std::size_t variant = index % 7;
  if (variant == 5) {
    std::vector<double> q(n + 1, 0.0);
    for (std::size_t c = 1; c <= n; ++c) q[c] = rng.uniform(0.1, 1.0);
    double total = 0.0;
    for (double e : q) total += e;
    for (double& e : q) e /= total;
    SamplingSpec spec = SamplingSpec::doubly_uniform(n, q);
    auto e = eso::du(data, cardinality_moments(spec));
    label << " doubly-uniform";
    return {std::move(problem), std::move(spec), std::move(e), label.str()};
  }
  if (variant == 6) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    const std::size_t parts = 1 + static_cast<std::size_t>(rng.below(n));
    std::vector<BlockSet> sets(parts);
    for (std::size_t i = 0; i < n; ++i) sets[i < parts ? i : rng.below(parts)].push_back(perm[i]);
    SamplingSpec spec = SamplingSpec::partition(n, std::move(sets));
    auto e = eso::nc(data);
    label << " partition(" << parts << ")";
    return {std::move(problem), std::move(spec), std::move(e), label.str()};
  }
  SamplingSpec spec = SamplingSpec::tau_nice(n, tau);
  auto e = (index % 3 == 0) ? eso::nc(data) : eso::fr(data, tau);
  label << " tau=" << tau << " eso=" << eso::to_string(e.source);
  return {std::move(problem), std::move(spec), std::move(e), label.str()};
}

/// A random point of dom Psi; box constraints are respected.
inline std::vector<double> random_feasible(const CompositeProblem& p, Rng& rng, double scale = 1.0) {
  std::vector<double> x(p.dim());
  const auto& layout = p.layout();
  for (std::size_t i = 0; i < layout.num_blocks(); ++i) {
    const auto& reg = p.regularizer(i);
    for (std::size_t j = layout.offset(i); j < layout.end(i); ++j)
      x[j] = reg.kind == RegularizerKind::Box ? rng.uniform(reg.lo, reg.hi) : scale * rng.normal();
  }
  return x;
}

struct SuiteReport {
  OracleReport eso{"eso-inequality"};
  OracleReport separable{"block-separable-expectation"};
  OracleReport descent{"descent-lemma"};
  std::size_t instances = 0;

  bool ok() const { return eso.ok() && separable.ok() && descent.ok(); }
  std::size_t violations() const { return eso.violations + separable.violations + descent.violations; }
};

/// Runs every oracle on `instances` random small problems.
inline SuiteReport run_oracle_suite(std::uint64_t seed, std::size_t instances = 50, std::size_t points = 5) {
  SuiteReport out;
  for (std::size_t idx = 0; idx < instances; ++idx) {
    const auto inst = make_oracle_instance(seed, idx);
    const auto& p = inst.problem;
    Rng rng = Rng::stream(seed ^ 0x9e3779b97f4a7c15ULL, idx);
    const auto norms = p.norms(inst.eso.v);
    const double mu_f = mu_f_wrt(p, norms);
    const double mu_psi = mu_psi_wrt(p, norms);
    auto tag = [&](OracleReport r) {
      for (auto& f : r.failures) f = inst.label + ": " + f;
      return r;
    };
    out.eso.merge(tag(check_eso_inequality(p, inst.sampling, inst.eso.v, 20, rng())));
    for (std::size_t t = 0; t < points; ++t) {
      const auto x = random_feasible(p, rng);
      const auto xh = random_feasible(p, rng);
      out.separable.merge(tag(check_block_separable_expectation(p, inst.sampling, x, detail::sub(xh, x))));
      const auto y = random_feasible(p, rng);
      out.descent.merge(tag(check_lemma3(p, inst.sampling, inst.eso.v, x, y, mu_f, mu_psi)));
    }
    ++out.instances;
  }
  return out;
}

}  // namespace pcdm::theory
