#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pcdm/blocks.hpp"
#include "pcdm/eso.hpp"
#include "pcdm/model.hpp"
#include "pcdm/sampling.hpp"
#include "pcdm/theory.hpp"

namespace pcdm {

enum class Mode { Pcdm, PcdmM, Auto };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::Pcdm: return "pcdm";
    case Mode::PcdmM: return "pcdm-m";
    case Mode::Auto: return "auto";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  if (s == "pcdm") return Mode::Pcdm;
  if (s == "pcdm-m") return Mode::PcdmM;
  if (s == "auto") return Mode::Auto;
  throw std::invalid_argument("unknown mode '" + s + "'");
}

struct SolverConfig {
  SolverConfig(SamplingSpec s, eso::EsoParameter e) : sampling(std::move(s)), eso(std::move(e)) {}

  SamplingSpec sampling;
  eso::EsoParameter eso;
  std::size_t max_iterations = 1000;
  std::uint64_t seed = 0;
  int thread_count = 1;
  Mode mode = Mode::Auto;
  std::size_t record_stride = 1;
  // Gather-then-apply with ordered residual updates; traces are then
  // byte-identical across thread counts and carry no wall-clock time.
  bool deterministic = true;
  // Extension: PCDM-M compares against F(x_k) instead of F(x_0).
  bool strict_monotone = false;
  std::size_t refresh_interval = 1000;
  std::vector<double> x0;

  void validate(const CompositeProblem& p) const {
    if (sampling.n() != p.num_blocks()) throw std::invalid_argument("solver: sampling n != block count");
    if (eso.v.size() != p.num_blocks()) throw std::invalid_argument("solver: need one v per block");
    if (thread_count < 1) throw std::invalid_argument("solver: thread_count must be >= 1");
    if (record_stride < 1) throw std::invalid_argument("solver: record_stride must be >= 1");
    if (!x0.empty()) p.layout().check_dim(x0.size(), "solver x0");
  }
};

struct TraceRecord {
  std::size_t k = 0;
  double F = 0.0;
  double gap = std::numeric_limits<double>::quiet_NaN();
  double hnorm2 = 0.0;
  std::int64_t ns = 0;

  // Missing gaps (NaN) compare equal to each other.
  friend bool operator==(const TraceRecord& a, const TraceRecord& b) {
    const bool gaps = a.gap == b.gap || (std::isnan(a.gap) && std::isnan(b.gap));
    return a.k == b.k && a.F == b.F && gaps && a.hnorm2 == b.hnorm2 && a.ns == b.ns;
  }
};

struct RunTrace {
  std::vector<TraceRecord> records;
  std::vector<double> x;
  std::uint64_t seed = 0;
  Mode mode = Mode::Pcdm;
  std::string sampling;
  std::string eso;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  bool aborted = false;
  std::string diagnostic;
  std::optional<double> f_star;

  double final_value() const { return records.empty() ? kInf : records.back().F; }
};

/// Plain PCDM is safe without a function-value test when F is strongly convex or
/// the ESO is monotonic; otherwise the levelset-confined variant is used.
/// Unknown convexity constants count as zero. The uncertified baseline
/// always runs plain PCDM so that its instability stays visible.
inline Mode select_mode(const CompositeProblem& p, const eso::EsoParameter& e) {
  if (!e.certified) return Mode::Pcdm;
  const double mu = p.mu_f.value_or(0.0) + p.mu_psi.value_or(0.0);
  if (mu > 0.0 || e.monotonic) return Mode::Pcdm;
  return Mode::PcdmM;
}

/// Mutable iterate plus residual and scratch space for one run.
struct SolverState {
  std::vector<double> x;
  ResidualState residual;
  std::vector<double> h;

  SolverState(const CompositeProblem& p, std::vector<double> x0)
      : x(std::move(x0)), residual(make_state(p, x)), h(x.size(), 0.0) {}
};

/// h_i for every i in S from the same snapshot (x, residual). Blocks are
/// disjoint so threads write disjoint ranges of h.
inline void compute_updates(const CompositeProblem& p, const SolverState& st, const BlockNorms& norms,
                            std::span<const std::size_t> S, std::span<double> h, int threads) {
  const auto& layout = p.layout();
  const auto count = static_cast<std::ptrdiff_t>(S.size());
#pragma omp parallel for num_threads(threads) schedule(static) if (threads > 1 && count > 1)
  for (std::ptrdiff_t t = 0; t < count; ++t) {
    const std::size_t i = S[static_cast<std::size_t>(t)];
    block_update(p, st.x, st.residual, norms, i, h.subspan(layout.offset(i), layout.size(i)));
  }
}

/// Unordered apply with atomic residual accumulation; not reproducible
/// bit-for-bit, used for throughput only.
inline void apply_update_atomic(const CompositeProblem& p, SolverState& st, std::span<const std::size_t> S,
                                int threads) {
  const auto& layout = p.layout();
  auto* ls = p.as<LeastSquares>();
  auto* svm = p.as<SvmDual>();
  const double svm_scale = svm ? 1.0 / (svm->lambda * static_cast<double>(svm->samples.rows())) : 0.0;
  const auto count = static_cast<std::ptrdiff_t>(S.size());
  double* aux = st.residual.aux.data();
#pragma omp parallel for num_threads(threads) schedule(static) if (threads > 1 && count > 1)
  for (std::ptrdiff_t t = 0; t < count; ++t) {
    const std::size_t i = S[static_cast<std::size_t>(t)];
    for (std::size_t j = layout.offset(i); j < layout.end(i); ++j) {
      const double hj = st.h[j];
      if (hj == 0.0) continue;
      st.x[j] += hj;
      if (ls) {
        auto idx = ls->A.col_indices(j);
        auto val = ls->A.col_values(j);
        for (std::size_t k = 0; k < idx.size(); ++k) {
#pragma omp atomic
          aux[idx[k]] += val[k] * hj;
        }
      } else if (svm) {
        const double scale = hj * svm->labels[j] * svm_scale;
        auto idx = svm->samples.row_indices(j);
        auto val = svm->samples.row_values(j);
        for (std::size_t k = 0; k < idx.size(); ++k) {
#pragma omp atomic
          aux[idx[k]] += scale * val[k];
        }
      }
    }
  }
}

/// One PCDM iteration on the blocks S.
inline void pcdm_step(const CompositeProblem& p, SolverState& st, std::span<const std::size_t> S,
                      const BlockNorms& norms, int threads = 1, bool deterministic = true) {
  compute_updates(p, st, norms, S, st.h, threads);
  if (deterministic || threads == 1)
    apply_update(p, st.x, st.residual, S, st.h);
  else
    apply_update_atomic(p, st, S, threads);
}

/// One PCDM-M iteration: the candidate is kept only if F(candidate) does not
/// exceed `threshold`. Returns whether the step was accepted.
inline bool pcdm_m_step(const CompositeProblem& p, SolverState& st, std::span<const std::size_t> S,
                        const BlockNorms& norms, double threshold, int threads = 1) {
  compute_updates(p, st, norms, S, st.h, threads);
  const auto& layout = p.layout();
  std::vector<double> saved_x;
  for (std::size_t i : S)
    for (std::size_t j = layout.offset(i); j < layout.end(i); ++j) saved_x.push_back(st.x[j]);
  const std::vector<double> saved_aux = st.residual.aux;
  apply_update(p, st.x, st.residual, S, st.h);
  const double candidate = function_value(p, st.x, st.residual);
  if (candidate <= threshold) return true;
  std::size_t pos = 0;
  for (std::size_t i : S)
    for (std::size_t j = layout.offset(i); j < layout.end(i); ++j) st.x[j] = saved_x[pos++];
  st.residual.aux = saved_aux;
  return false;
}

/// Runs PCDM (or PCDM-M) for config.max_iterations iterations, recording
/// every record_stride iterations and at the end. A non-finite objective
/// stops the run with `aborted` set.
inline RunTrace run(const CompositeProblem& p, const SolverConfig& config) {
  config.validate(p);
  using clock = std::chrono::steady_clock;
  const auto started = clock::now();
  const BlockNorms norms = p.norms(config.eso.v);

  std::vector<double> x0 = config.x0;
  if (x0.empty()) {
    x0.assign(p.dim(), 0.0);
    for (std::size_t i = 0; i < p.num_blocks(); ++i) {
      const auto& reg = p.regularizer(i);
      if (reg.kind == RegularizerKind::Box)
        for (std::size_t j = p.layout().offset(i); j < p.layout().end(i); ++j)
          x0[j] = std::clamp(0.0, reg.lo, reg.hi);
    }
  }
  SolverState st(p, std::move(x0));

  RunTrace trace;
  trace.seed = config.seed;
  trace.mode = config.mode == Mode::Auto ? select_mode(p, config.eso) : config.mode;
  trace.sampling = config.sampling.describe();
  trace.eso = eso::to_string(config.eso.source);
  const bool is_svm = p.as<SvmDual>() != nullptr;

  auto record = [&](std::size_t k) {
    TraceRecord r;
    r.k = k;
    r.F = function_value(p, st.x, st.residual);
    if (is_svm) r.gap = duality_gap(p, st.x, st.residual);
    const auto h = update_direction(p, st.x, st.residual, norms);
    r.hnorm2 = weighted_norm_sq(h, norms, p.layout());
    if (!config.deterministic)
      r.ns = std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - started).count();
    trace.records.push_back(r);
    if (!std::isfinite(r.F) || !std::isfinite(r.hnorm2)) {
      trace.aborted = true;
      trace.diagnostic = "non-finite objective at iteration " + std::to_string(k) + " (F = " +
                         std::to_string(r.F) + ")";
      return false;
    }
    return true;
  };

  double threshold = function_value(p, st.x, st.residual);
  if (!record(0)) {
    trace.x = st.x;
    return trace;
  }

  Sampler sampler(config.sampling, config.seed);
  for (std::size_t k = 0; k < config.max_iterations; ++k) {
    const BlockSet& S = sampler.draw(k);
    if (trace.mode == Mode::PcdmM) {
      if (pcdm_m_step(p, st, S, norms, threshold, config.thread_count)) {
        ++trace.accepted;
        if (config.strict_monotone) threshold = function_value(p, st.x, st.residual);
      } else {
        ++trace.rejected;
      }
    } else {
      pcdm_step(p, st, S, norms, config.thread_count, config.deterministic);
      ++trace.accepted;
    }
    const std::size_t done = k + 1;
    if (config.refresh_interval > 0 && done % config.refresh_interval == 0) st.residual = make_state(p, st.x);
    if (done % config.record_stride == 0 || done == config.max_iterations) {
      if (!record(done)) break;
    }
  }
  trace.x = std::move(st.x);
  return trace;
}

struct ReferenceSolution {
  std::vector<double> x;
  double F;
};

/// High-accuracy optimum for diagnostics: normal equations for
/// unregularized least squares, otherwise PCDM with full sampling.
inline ReferenceSolution reference_optimum(const CompositeProblem& p, std::size_t iterations = 100000) {
  bool plain = p.as<LeastSquares>() != nullptr;
  for (const auto& r : p.regularizers()) plain = plain && r.kind == RegularizerKind::Zero;
  if (plain && p.dim() <= kMaxDenseDim) {
    const auto& ls = *p.as<LeastSquares>();
    Eigen::MatrixXd Q = dense_hessian(p);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.dim()));
    for (const auto& t : ls.A.triplets()) rhs(static_cast<Eigen::Index>(t.col)) += t.value * ls.b[t.row];
    Eigen::VectorXd sol = Q.completeOrthogonalDecomposition().solve(rhs);
    std::vector<double> x(sol.data(), sol.data() + sol.size());
    const double F = function_value(p, x);
    return {std::move(x), F};
  }
  const auto data = smoothness_data(p);
  const std::size_t n = p.num_blocks();
  SolverConfig cfg(SamplingSpec::tau_nice(n, n), eso::fr(data, n));
  cfg.max_iterations = iterations;
  cfg.record_stride = iterations;
  cfg.mode = Mode::Pcdm;
  auto trace = run(p, cfg);
  const double F = function_value(p, trace.x);
  return {std::move(trace.x), F};
}

struct RestartResult {
  theory::RestartPlan plan;
  std::vector<double> finals;
  std::size_t best = 0;
  RunTrace best_trace;
};

/// Runs plan.runs independent copies of the solver for plan.per_run.K
/// iterations each (seeds seed, seed+1, ...) and keeps the lowest F.
inline RestartResult multi_run_restart(const CompositeProblem& p, const SolverConfig& config,
                                       const theory::RateInputs& inputs) {
  RestartResult out{theory::k_restart(inputs), {}, 0, {}};
  double best = kInf;
  for (std::int64_t l = 0; l < out.plan.runs; ++l) {
    SolverConfig cfg = config;
    cfg.seed = config.seed + static_cast<std::uint64_t>(l);
    cfg.max_iterations = static_cast<std::size_t>(out.plan.per_run.K);
    cfg.record_stride = std::max<std::size_t>(cfg.max_iterations, 1);
    auto trace = run(p, cfg);
    const double F = trace.final_value();
    out.finals.push_back(F);
    if (F < best || out.finals.size() == 1) {
      best = F;
      out.best = static_cast<std::size_t>(l);
      out.best_trace = std::move(trace);
    }
  }
  return out;
}

}  // namespace pcdm
