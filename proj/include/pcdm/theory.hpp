#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>

namespace pcdm::theory {

/// Inputs to the rate and complexity certificates. Strong convexity
/// constants and distances are measured in ||.||_v.
struct RateInputs {
  double alpha = 1.0;
  double mu_f = 0.0;
  double mu_psi = 0.0;
  double dist0_sq = 0.0;  // ||x_0 - x*||_v^2
  double xi0 = 0.0;       // F(x_0) - F*
  double epsilon = 0.0;
  double rho = 0.0;
  // Squared levelset radius R_{v,0}^2; +inf when unknown or unbounded.
  double levelset_radius_sq = std::numeric_limits<double>::infinity();

  // c = max{R^2, xi0}
  double c() const { return std::max(levelset_radius_sq, xi0); }
  double mu() const { return mu_f + mu_psi; }

  void check_basic() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
    if (!(dist0_sq >= 0.0) || !(xi0 >= 0.0)) throw std::invalid_argument("dist0_sq and xi0 must be >= 0");
    if (!(mu_f >= 0.0) || !(mu_psi >= 0.0)) throw std::invalid_argument("mu_f and mu_psi must be >= 0");
  }
  void check_target() const {
    check_basic();
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0, 1)");
  }
};

/// Iteration count before and after rounding up (never negative).
struct Certificate {
  double real;
  std::int64_t K;
};

inline Certificate ceil_certificate(double real) {
  const double clamped = std::max(0.0, real);
  return {real, static_cast<std::int64_t>(std::ceil(clamped))};
}

/// R^2 bound for an F that is strongly convex in ||.||_v with modulus mu:
/// F(x) - F* >= (mu/2) ||x - x*||^2 on the levelset gives R^2 <= 2 xi0 / mu.
inline double levelset_radius_sq_strongly_convex(double xi0, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("levelset radius: mu must be > 0");
  if (!(xi0 >= 0.0)) throw std::invalid_argument("levelset radius: xi0 must be >= 0");
  return 2.0 * xi0 / mu;
}

/// E[F(x_k) - F*] <= (dist0_sq/2 + xi0) / (1 + alpha k)
inline double bound_convex(const RateInputs& in, double k) {
  in.check_basic();
  return (0.5 * in.dist0_sq + in.xi0) / (1.0 + in.alpha * k);
}

/// gamma* = 2(mu_f + mu_psi) / (1 + mu_f + 2 mu_psi)
inline double gamma_star(const RateInputs& in) {
  return 2.0 * in.mu() / (1.0 + in.mu_f + 2.0 * in.mu_psi);
}

inline double strong_contraction(const RateInputs& in) { return 1.0 - in.alpha * gamma_star(in); }

/// E[F(x_k) - F*] <= (1 - alpha gamma*)^k ((1 + mu_psi)/2 dist0_sq + xi0)
inline double bound_strongly_convex(const RateInputs& in, double k) {
  in.check_basic();
  if (!(in.mu() > 0.0)) throw std::invalid_argument("bound_strongly_convex: mu_f + mu_psi must be > 0");
  const double q = std::max(0.0, strong_contraction(in));
  const double start = 0.5 * (1.0 + in.mu_psi) * in.dist0_sq + in.xi0;
  if (k == 0) return start;
  return std::pow(q, k) * start;
}

/// High-probability K for convex F with a bounded levelset.
inline Certificate k_convex(const RateInputs& in) {
  in.check_target();
  const double c = in.c();
  if (!std::isfinite(c))
    throw std::invalid_argument("k_convex: levelset radius is unbounded; use k_unbounded or k_restart");
  const double lead = 2.0 * c / (in.alpha * in.epsilon);
  const double real =
      lead * (1.0 + std::log((0.5 * in.dist0_sq + in.xi0) / (2.0 * c * in.rho))) + 2.0 - 1.0 / in.alpha;
  return ceil_certificate(real);
}

/// High-probability K for strongly convex F.
inline Certificate k_strongly_convex(const RateInputs& in) {
  in.check_target();
  if (!(in.mu() > 0.0)) throw std::invalid_argument("k_strongly_convex: mu_f + mu_psi must be > 0");
  const double lead = (1.0 + in.mu_f + 2.0 * in.mu_psi) / (2.0 * in.alpha * in.mu());
  const double real =
      lead * std::log((0.5 * (1.0 + in.mu_psi) * in.dist0_sq + in.xi0) / (in.epsilon * in.rho));
  return ceil_certificate(real);
}

/// High-probability K with no levelset assumption; grows like 1/rho.
inline Certificate k_unbounded(const RateInputs& in) {
  in.check_target();
  const double real = ((0.5 * in.dist0_sq + in.xi0) / (in.rho * in.epsilon) - 1.0) / in.alpha;
  return ceil_certificate(real);
}

struct RestartPlan {
  std::int64_t runs;
  Certificate per_run;
};

/// Multiple-run strategy: ceil(log(1/rho)) independent runs of K each, where
/// each run succeeds with probability at least 1 - 1/e.
inline RestartPlan k_restart(const RateInputs& in) {
  in.check_target();
  // log(1/rho) lands a hair above an integer for rho = e^{-j} in floating point.
  const double logs = std::log(1.0 / in.rho);
  const auto runs = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(logs - 1e-12)));
  const double real =
      ((0.5 * in.dist0_sq + in.xi0) / (in.epsilon / std::numbers::e) - 1.0) / in.alpha;
  return {runs, ceil_certificate(real)};
}

/// Earlier bounds reported side by side with the ones above.
struct PriorBounds {
  double rate;                     // 2c xi0 / (2c + alpha k xi0)
  std::optional<double> rate_sc;   // (1 - alpha mu/(1+mu_psi))^k xi0
  std::optional<Certificate> K_tilde;
  std::optional<Certificate> K_hat;
  double ratio;                    // asymptotic b/a = 4c / (dist0_sq + 2 xi0)
};

inline PriorBounds rt12a_bounds(const RateInputs& in, double k) {
  in.check_basic();
  const double c = in.c();
  PriorBounds out{};
  out.rate = std::isfinite(c) ? 2.0 * c * in.xi0 / (2.0 * c + in.alpha * k * in.xi0) : in.xi0;
  out.ratio = 4.0 * c / (in.dist0_sq + 2.0 * in.xi0);
  if (in.mu() > 0.0)
    out.rate_sc = std::pow(std::max(0.0, 1.0 - in.alpha * in.mu() / (1.0 + in.mu_psi)), k) * in.xi0;
  const bool has_target = in.epsilon > 0.0 && in.rho > 0.0 && in.rho < 1.0;
  if (has_target && std::isfinite(c) && in.xi0 > 0.0) {
    const double real = 2.0 * c / (in.alpha * in.epsilon) * (1.0 + std::log(1.0 / in.rho)) + 2.0 -
                        2.0 * c / (in.alpha * in.xi0);
    out.K_tilde = ceil_certificate(real);
  }
  if (has_target && in.mu() > 0.0) {
    const double real = (1.0 + in.mu_psi) / (in.alpha * in.mu()) * std::log(in.xi0 / (in.epsilon * in.rho));
    out.K_hat = ceil_certificate(real);
  }
  return out;
}

}  // namespace pcdm::theory
