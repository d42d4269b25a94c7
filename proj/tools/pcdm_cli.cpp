// pcdm command-line front end: gen, solve, eso, bounds, verify.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcdm/pcdm.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitAbort = 3;
constexpr int kExitVerify = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double x, int digits = 10) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("bad number '" + s + "' in " + what);
  }
}

// none | l1:LAMBDA | box | box:LO:HI | l2:MU
pcdm::Regularizer parse_reg(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  if (parts.empty()) throw UsageError("empty --reg");
  try {
    if (parts[0] == "none" && parts.size() == 1) return pcdm::Regularizer::zero();
    if (parts[0] == "l1" && parts.size() == 2) return pcdm::Regularizer::l1(parse_number(parts[1], "--reg"));
    if (parts[0] == "l2" && parts.size() == 2) return pcdm::Regularizer::squared_l2(parse_number(parts[1], "--reg"));
    if (parts[0] == "box" && parts.size() == 1) return pcdm::Regularizer::box(0.0, 1.0);
    if (parts[0] == "box" && parts.size() == 3)
      return pcdm::Regularizer::box(parse_number(parts[1], "--reg"), parse_number(parts[2], "--reg"));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  throw UsageError("unknown --reg '" + spec + "' (none, l1:LAMBDA, box[:LO:HI], l2:MU)");
}

// Flat key=value lines become --key=value tokens placed before the real
// arguments, so anything given on the command line wins.
std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config '" + path + "'");
  std::vector<std::string> out;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw UsageError(path + ":" + std::to_string(lineno) + ": empty key");
    out.push_back("--" + key + "=" + value);
  }
  return out;
}

struct LoadedProblem {
  pcdm::CompositeProblem problem;
  pcdm::eso::SmoothnessData data;
  std::optional<pcdm::SparseMatrix> factor;  // f = 1/2 ||M x||^2 + linear
};

LoadedProblem load_problem(const std::string& kind, const std::string& path, const std::string& reg,
                           double lambda, bool normalize) {
  if (kind == "ls") {
    auto [A, b] = pcdm::io::read_least_squares(path);
    auto p = pcdm::make_least_squares(A, std::move(b), parse_reg(reg.empty() ? "none" : reg));
    auto data = pcdm::smoothness_data(p);
    return {std::move(p), std::move(data), std::move(A)};
  }
  if (!reg.empty() && reg != "box" && reg != "box:0:1")
    throw UsageError("svm: the dual is constrained to box [0,1]; --reg must be omitted or 'box'");
  auto d = pcdm::io::parse_libsvm(path, normalize);
  if (lambda <= 0.0) lambda = 1.0 / static_cast<double>(d.features.rows());
  auto p = pcdm::make_svm_dual(std::move(d.features), std::move(d.labels), lambda);
  auto factor = pcdm::svm_quadratic_factor(*p.as<pcdm::SvmDual>());
  auto data = pcdm::smoothness_data(p);
  return {std::move(p), std::move(data), std::move(factor)};
}

struct EsoRequest {
  std::string tag;
  std::size_t tau = 1;
  std::optional<double> sigma;
};

pcdm::eso::EsoParameter make_eso(const LoadedProblem& lp, const EsoRequest& req, double* sigma_used) {
  using namespace pcdm::eso;
  const auto src = parse_source(req.tag);
  const std::size_t n = lp.data.n;
  if (req.tau < 1 || req.tau > n) throw UsageError("--tau must lie in [1, " + std::to_string(n) + "]");
  switch (src) {
    case Source::RtP: return rt_p(lp.data.L, lp.data.omega, req.tau, n);
    case Source::RtD: {
      double sigma = 0.0;
      if (req.sigma) {
        sigma = *req.sigma;
      } else {
        try {
          sigma = normalized_sigma(*lp.factor, lp.data.L);
        } catch (const NotConverged& e) {
          std::cerr << "warning: " << e.what() << "; using best estimate\n";
          sigma = e.best_estimate();
        }
      }
      if (sigma_used) *sigma_used = sigma;
      auto e = rt_d(lp.data.L, sigma, req.tau, n);
      if (!e.warning.empty()) std::cerr << "warning: " << e.warning << "\n";
      return e;
    }
    case Source::FR: return fr(lp.data, req.tau);
    case Source::DU: return du(lp.data, pcdm::cardinality_moments(pcdm::SamplingSpec::tau_nice(n, req.tau)));
    case Source::NC: return nc(lp.data);
    case Source::BKBG: return bkbg(lp.data.L);
  }
  throw UsageError("unknown eso");
}

const std::vector<std::string> kEsoTags = {"rt-p", "rt-d", "fr", "du", "nc", "bkbg"};

int cmd_gen(std::size_t m, std::size_t n, std::size_t omega, std::uint64_t seed, const std::string& out) {
  const auto inst = pcdm::io::gen_least_squares(m, n, omega, seed);
  pcdm::io::write_least_squares(out, inst);
  const auto data = pcdm::eso::lipschitz_from_quadratic(inst.A);
  std::cout << "wrote " << out << " and " << pcdm::io::sidecar_path(out) << ": m=" << m << " n=" << n
            << " nnz=" << inst.A.nnz() << " omega=" << data.omega << "\n";
  return kExitOk;
}

struct SolveArgs {
  std::string problem, data, reg, eso = "fr", mode = "auto", out;
  std::size_t tau = 1, iters = 1000, stride = 1;
  std::uint64_t seed = 0;
  int threads = 1;
  double lambda = 0.0;
  bool deterministic = true;
  bool normalize = false;
  bool strict = false;
  std::optional<double> sigma;
};

int cmd_solve(const SolveArgs& a) {
  auto lp = load_problem(a.problem, a.data, a.reg, a.lambda, a.normalize);
  double sigma = std::nan("");
  EsoRequest req{a.eso, a.tau, a.sigma};
  auto e = make_eso(lp, req, &sigma);
  const std::size_t n = lp.problem.num_blocks();
  pcdm::SolverConfig cfg(pcdm::SamplingSpec::tau_nice(n, a.tau), std::move(e));
  cfg.max_iterations = a.iters;
  cfg.seed = a.seed;
  cfg.thread_count = a.threads;
  cfg.mode = pcdm::parse_mode(a.mode);
  cfg.record_stride = a.stride;
  cfg.deterministic = a.deterministic;
  cfg.strict_monotone = a.strict;
  const auto trace = pcdm::run(lp.problem, cfg);
  pcdm::io::write_trace_csv(a.out, trace.records);

  const auto& last = trace.records.back();
  std::cout << "mode=" << pcdm::to_string(trace.mode) << " eso=" << trace.eso << " sampling=" << trace.sampling
            << " iters=" << last.k << " F=" << fmt(last.F, 17);
  if (!std::isnan(last.gap)) std::cout << " gap=" << fmt(last.gap, 17);
  if (!std::isnan(sigma)) std::cout << " sigma=" << fmt(sigma);
  std::cout << " accepted=" << trace.accepted << " rejected=" << trace.rejected << "\n";
  if (trace.aborted) {
    std::cerr << "aborted: " << trace.diagnostic << "\n";
    return kExitAbort;
  }
  return kExitOk;
}

struct EsoArgs {
  std::string problem = "ls", data, hist;
  std::vector<std::string> esos;
  std::size_t tau = 1, buckets = 20;
  double lambda = 0.0;
  bool normalize = false;
  std::optional<double> sigma;
};

int cmd_eso(const EsoArgs& a) {
  auto lp = load_problem(a.problem, a.data, "", a.lambda, a.normalize);
  std::vector<std::string> tags = a.esos.empty() ? kEsoTags : a.esos;
  std::cout << "eso,tau,n,factor,min,median,max,mean\n";
  std::optional<double> sigma = a.sigma;
  for (std::size_t t = 0; t < tags.size(); ++t) {
    double used = std::nan("");
    auto e = make_eso(lp, {tags[t], a.tau, sigma}, &used);
    if (!std::isnan(used)) sigma = used;
    std::vector<double> v = e.v;
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size();
    const double median = k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(k);
    std::cout << tags[t] << ',' << a.tau << ',' << k << ',' << (e.factor ? fmt(*e.factor) : "") << ','
              << fmt(v.front()) << ',' << fmt(median) << ',' << fmt(v.back()) << ',' << fmt(mean) << "\n";
    if (!a.hist.empty()) {
      const std::string path = tags.size() == 1 ? a.hist : a.hist + "." + tags[t] + ".csv";
      pcdm::io::write_v_histogram(path, e.v, a.buckets);
    }
  }
  return kExitOk;
}

struct BoundsArgs {
  pcdm::theory::RateInputs in;
  std::size_t kmax = 1000, kstep = 100;
};

int cmd_bounds(const BoundsArgs& a) {
  using namespace pcdm::theory;
  const auto& in = a.in;
  in.check_target();
  auto row = [](const std::string& name, std::optional<Certificate> c) {
    std::cout << name << ',' << (c ? fmt(c->real) : "") << ',' << (c ? std::to_string(c->K) : "") << "\n";
  };
  std::cout << "quantity,real,K\n";
  row("k_convex", std::isfinite(in.c()) ? std::optional(k_convex(in)) : std::nullopt);
  row("k_strongly_convex", in.mu() > 0.0 ? std::optional(k_strongly_convex(in)) : std::nullopt);
  row("k_unbounded", k_unbounded(in));
  const auto plan = k_restart(in);
  std::cout << "k_restart_runs,," << plan.runs << "\n";
  row("k_restart_per_run", plan.per_run);
  const auto prior = rt12a_bounds(in, 0.0);
  row("rt12a_k_tilde", prior.K_tilde);
  row("rt12a_k_hat", prior.K_hat);
  std::cout << "rt12a_ratio," << fmt(prior.ratio) << ",\n";
  std::cout << "\nk,bound_convex,bound_strongly_convex,rt12a_rate,rt12a_rate_sc\n";
  for (std::size_t k = 0; k <= a.kmax; k += std::max<std::size_t>(a.kstep, 1)) {
    const double kd = static_cast<double>(k);
    const auto pb = rt12a_bounds(in, kd);
    std::cout << k << ',' << fmt(bound_convex(in, kd)) << ','
              << (in.mu() > 0.0 ? fmt(bound_strongly_convex(in, kd)) : "") << ',' << fmt(pb.rate) << ','
              << (pb.rate_sc ? fmt(*pb.rate_sc) : "") << "\n";
  }
  return kExitOk;
}

int cmd_verify(std::uint64_t seed, std::size_t instances, std::size_t points) {
  using namespace pcdm::theory;
  const auto suite = run_oracle_suite(seed, instances, points);
  bool ok = suite.ok();
  std::cout << "oracle,checks,violations,worst_slack\n";
  for (const auto* r : {&suite.eso, &suite.separable, &suite.descent})
    std::cout << r->name << ',' << r->checks << ',' << r->violations << ',' << fmt(r->worst) << "\n";
  const auto tight = tightness_example(0.1, 0.01, 0.5, 1.0, 1.0);
  std::cout << "tightness,1," << (tight.verdict ? 0 : 1) << ','
            << fmt(std::min(tight.worst_slack_16, tight.worst_slack_17)) << "\n";
  ok = ok && tight.verdict;
  if (!ok) {
    for (const auto* r : {&suite.eso, &suite.separable, &suite.descent})
      for (const auto& f : r->failures) std::cerr << "VIOLATION " << f << "\n";
    if (!tight.verdict)
      std::cerr << "VIOLATION tightness rho=0.1 eps=0.01 zeta=0.5 r0=1 xi0=1: P=" << tight.probability
                << " K=" << tight.K << "\n";
    return kExitVerify;
  }
  std::cout << "all " << suite.instances << " instances passed (seed " << seed << ")\n";
  return kExitOk;
}

CLI::Validator open_unit_interval() {
  return CLI::Validator(
      [](std::string& s) -> std::string {
        try {
          const double v = std::stod(s);
          if (v > 0.0 && v < 1.0) return {};
        } catch (const std::exception&) {
        }
        return "value must lie in (0, 1)";
      },
      "(0,1)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel coordinate descent for composite convex problems"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "flat key=value file with defaults for the subcommand flags");

  // gen
  auto* gen = app.add_subcommand("gen", "generate a sparse least-squares instance");
  std::size_t gm = 0, gn = 0, gomega = 20;
  std::uint64_t gseed = 0;
  std::string gout;
  gen->add_option("--m", gm, "rows")->required()->check(CLI::PositiveNumber);
  gen->add_option("--n", gn, "columns")->required()->check(CLI::PositiveNumber);
  gen->add_option("--omega", gomega, "maximum nonzeros per row")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gseed);
  gen->add_option("--out", gout, "output LibSVM path (targets go to OUT.b.csv)")->required();

  // solve
  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "run PCDM and write a trace CSV");
  solve->add_option("--problem", sa.problem)->required()->check(CLI::IsMember({"ls", "svm"}));
  solve->add_option("--data", sa.data)->required();
  solve->add_option("--reg", sa.reg, "none | l1:LAMBDA | box[:LO:HI] | l2:MU");
  solve->add_option("--tau", sa.tau)->check(CLI::PositiveNumber);
  solve->add_option("--eso", sa.eso)->check(CLI::IsMember(kEsoTags));
  solve->add_option("--sigma", sa.sigma, "override the estimated sigma for rt-d");
  solve->add_option("--iters", sa.iters);
  solve->add_option("--seed", sa.seed);
  solve->add_option("--threads", sa.threads)->check(CLI::PositiveNumber);
  solve->add_option("--mode", sa.mode)->check(CLI::IsMember({"auto", "pcdm", "pcdm-m"}));
  solve->add_option("--record-stride", sa.stride)->check(CLI::PositiveNumber);
  solve->add_option("--out", sa.out)->required();
  solve->add_option("--lambda", sa.lambda, "svm regularization (default 1/N)");
  solve->add_option("--deterministic", sa.deterministic, "reproducible updates, no timings (default true)");
  solve->add_flag("--normalize", sa.normalize, "scale svm samples to unit norm");
  solve->add_flag("--strict-monotone", sa.strict, "pcdm-m compares against the current F");

  // eso
  EsoArgs ea;
  auto* eso = app.add_subcommand("eso", "print ESO parameter statistics");
  eso->add_option("--problem", ea.problem)->check(CLI::IsMember({"ls", "svm"}));
  eso->add_option("--data", ea.data)->required();
  eso->add_option("--tau", ea.tau)->check(CLI::PositiveNumber);
  eso->add_option("--eso", ea.esos, "one or more of rt-p rt-d fr du nc bkbg (default all)")
      ->check(CLI::IsMember(kEsoTags))
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->delimiter(',');
  eso->add_option("--sigma", ea.sigma);
  eso->add_option("--lambda", ea.lambda);
  eso->add_flag("--normalize", ea.normalize);
  eso->add_option("--hist", ea.hist, "write a log-spaced histogram of v");
  eso->add_option("--buckets", ea.buckets)->check(CLI::PositiveNumber);

  // bounds
  BoundsArgs ba;
  ba.in.epsilon = 0.1;
  ba.in.rho = 0.1;
  auto* bounds = app.add_subcommand("bounds", "print iteration complexity certificates and rate bounds");
  bounds->add_option("--alpha", ba.in.alpha)->required()->check(CLI::Range(0.0, 1.0));
  bounds->add_option("--eps", ba.in.epsilon)->required()->check(CLI::PositiveNumber);
  bounds->add_option("--rho", ba.in.rho)->required()->check(open_unit_interval());
  bounds->add_option("--dist0sq", ba.in.dist0_sq)->required()->check(CLI::NonNegativeNumber);
  bounds->add_option("--xi0", ba.in.xi0)->required()->check(CLI::NonNegativeNumber);
  bounds->add_option("--muf", ba.in.mu_f)->check(CLI::NonNegativeNumber);
  bounds->add_option("--mupsi", ba.in.mu_psi)->check(CLI::NonNegativeNumber);
  bounds->add_option("--R2", ba.in.levelset_radius_sq, "squared levelset radius (default unbounded)")
      ->check(CLI::NonNegativeNumber);
  bounds->add_option("--kmax", ba.kmax);
  bounds->add_option("--kstep", ba.kstep)->check(CLI::PositiveNumber);

  // verify
  auto* verify = app.add_subcommand("verify", "run the exhaustive oracle suite");
  std::uint64_t vseed = 7;
  std::size_t vinst = 50, vpoints = 5;
  verify->add_option("--seed", vseed);
  verify->add_option("--instances", vinst)->check(CLI::PositiveNumber);
  verify->add_option("--points", vpoints)->check(CLI::PositiveNumber);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    // Config file contents are spliced in right after the subcommand name.
    for (std::size_t i = 0; i < args.size(); ++i) {
      std::string path;
      std::size_t erase = 0;
      if (args[i] == "--config" && i + 1 < args.size()) {
        path = args[i + 1];
        erase = 2;
      } else if (args[i].rfind("--config=", 0) == 0) {
        path = args[i].substr(9);
        erase = 1;
      }
      if (erase == 0) continue;
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + erase));
      const auto extra = config_tokens(path);
      auto sub = std::find_if(args.begin(), args.end(), [](const std::string& s) {
        return s == "gen" || s == "solve" || s == "eso" || s == "bounds" || s == "verify";
      });
      if (sub == args.end()) throw UsageError("--config needs a subcommand");
      args.insert(sub + 1, extra.begin(), extra.end());
      break;
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*gen) return cmd_gen(gm, gn, gomega, gseed, gout);
    if (*solve) return cmd_solve(sa);
    if (*eso) return cmd_eso(ea);
    if (*bounds) return cmd_bounds(ba);
    if (*verify) return cmd_verify(vseed, vinst, vpoints);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
