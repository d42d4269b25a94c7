#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace pcdm;
using testing_helpers::dense_to_sparse;
using testing_helpers::finite_difference_gradient;
using testing_helpers::prox_oracle;

namespace {

CompositeProblem random_svm(std::size_t N, std::size_t d, std::uint64_t seed, double lambda = 0.3) {
  Rng rng(seed);
  auto samples = theory::random_sparse(d, N, 0.5, rng).transposed();
  std::vector<double> labels(N);
  for (double& y : labels) y = rng.uniform() < 0.5 ? -1.0 : 1.0;
  return make_svm_dual(std::move(samples), std::move(labels), lambda);
}

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> x(n);
  for (double& e : x) e = rng.normal();
  return x;
}

}  // namespace

TEST(Gradient, LeastSquaresAtZeroIsMinusATb) {
  auto p = make_least_squares(dense_to_sparse({{1, 2}, {3, 0}, {0, 4}}), {1, 2, 3}, Regularizer::zero());
  const auto g = gradient(p, std::vector<double>{0, 0});
  EXPECT_DOUBLE_EQ(g[0], -(1 * 1 + 3 * 2));
  EXPECT_DOUBLE_EQ(g[1], -(2 * 1 + 4 * 3));
}

TEST(Gradient, IdentityLeastSquaresReturnsX) {
  auto p = make_least_squares(dense_to_sparse({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}), {0, 0, 0}, Regularizer::zero());
  const std::vector<double> x = {1.5, -2, 0.25};
  EXPECT_EQ(gradient(p, x), x);
}

TEST(Gradient, MatchesFiniteDifferences) {
  Rng rng(10);
  auto ls = testing_helpers::random_least_squares(10, 6, 0.5, 1, Regularizer::zero());
  auto svm = random_svm(7, 4, 2);
  auto toy = toy_logistic(5, 1.5);
  for (const auto* p : {&ls, &svm, &toy}) {
    const auto x = random_vec(p->dim(), rng);
    const auto g = gradient(*p, x);
    const auto fd = finite_difference_gradient(*p, x);
    EXPECT_LE(testing_helpers::max_rel_diff(g, fd), 1e-6);
  }
}

TEST(Prox, ClosedFormExamples) {
  EXPECT_DOUBLE_EQ(Regularizer::zero().step(4, 0, 2), -2.0);
  EXPECT_DOUBLE_EQ(Regularizer::l1(1).step(0, 0, 1), 0.0);
  EXPECT_DOUBLE_EQ(Regularizer::l1(1).step(10, 3, 2), -4.5);
  EXPECT_NEAR(Regularizer::box(0, 1).step(-3, 0.8, 2), 0.2, 1e-15);
  EXPECT_DOUBLE_EQ(Regularizer::squared_l2(1).step(2, 1, 3), -(2 + 1) / (3.0 + 1));
}

TEST(Prox, HandExamplesAgreeWithSearchOracle) {
  EXPECT_NEAR(prox_oracle(Regularizer::l1(1), 10, 3, 2), -4.5, 1e-6);
  EXPECT_NEAR(prox_oracle(Regularizer::box(0, 1), -3, 0.8, 2), 0.2, 1e-6);
}

TEST(Prox, MatchesSearchOracleOnRandomInputs) {
  Rng rng(21);
  const std::vector<Regularizer> regs = {Regularizer::zero(), Regularizer::l1(0.7), Regularizer::box(-1, 0.5),
                                         Regularizer::squared_l2(1.3)};
  for (const auto& reg : regs) {
    for (int t = 0; t < 40; ++t) {
      const double g = 3 * rng.normal(), c = rng.uniform(0.2, 4.0);
      double x = rng.normal();
      if (reg.kind == RegularizerKind::Box) x = rng.uniform(reg.lo, reg.hi);
      EXPECT_NEAR(reg.step(g, x, c), prox_oracle(reg, g, x, c), 1e-6) << reg.describe();
    }
  }
}

TEST(Prox, SubgradientOptimality) {
  Rng rng(22);
  for (int t = 0; t < 200; ++t) {
    const double g = 3 * rng.normal(), c = rng.uniform(0.2, 4.0), x = rng.normal();
    // L1: -g - c h in lambda * d|x + h|
    const auto l1 = Regularizer::l1(0.8);
    const double h = l1.step(g, x, c), r = -g - c * h, z = x + h;
    if (z == 0.0)
      EXPECT_LE(std::abs(r), 0.8 + 1e-12);
    else
      EXPECT_NEAR(r, 0.8 * (z > 0 ? 1 : -1), 1e-12);
    // Box: -g - c h in normal cone of [lo, hi] at x + h
    const auto box = Regularizer::box(-0.5, 0.5);
    const double xb = rng.uniform(-0.5, 0.5);
    const double hb = box.step(g, xb, c), rb = -g - c * hb, zb = xb + hb;
    if (zb > -0.5 && zb < 0.5) EXPECT_NEAR(rb, 0.0, 1e-12);
    if (zb == 0.5) EXPECT_GE(rb, -1e-12);
    if (zb == -0.5) EXPECT_LE(rb, 1e-12);
    // SquaredL2: -g - c h = mu (x + h)
    const auto l2 = Regularizer::squared_l2(1.7);
    const double h2 = l2.step(g, x, c);
    EXPECT_NEAR(-g - c * h2, 1.7 * (x + h2), 1e-12);
  }
}

TEST(Prox, BoxTieReturnsBoundary) {
  EXPECT_EQ(Regularizer::box(0, 1).step(-1, 0.5, 2), 0.5);
}

TEST(Prox, BlockProxUsesDiagonalScaling) {
  const std::vector<double> g = {1, -2}, x = {0, 0}, b = {2, 4};
  std::vector<double> h(2);
  block_prox(Regularizer::zero(), g, x, 0.5, b, h);
  EXPECT_DOUBLE_EQ(h[0], -1.0);
  EXPECT_DOUBLE_EQ(h[1], 1.0);
  EXPECT_THROW(block_prox(Regularizer::zero(), g, x, 0.0, b, h), std::invalid_argument);
}

TEST(CompositeGradientMap, Identities) {
  auto layout = BlockLayout::singletons(3);
  BlockNorms unit(layout, {1, 1, 1});
  const std::vector<double> h = {1, -2, 3};
  EXPECT_EQ(composite_gradient_map(h, unit, layout), (std::vector<double>{-1, 2, -3}));
  EXPECT_EQ(composite_gradient_map(std::vector<double>{0, 0, 0}, unit, layout), (std::vector<double>{0, 0, 0}));
}

TEST(OverapproxH, ZeroStepGivesF) {
  auto p = testing_helpers::random_least_squares(8, 5, 0.5, 3, Regularizer::l1(0.3));
  Rng rng(1);
  const auto x = random_vec(5, rng);
  const auto norms = p.norms(std::vector<double>(5, 2.0));
  EXPECT_NEAR(overapprox_H(p, x, std::vector<double>(5, 0.0), norms), function_value(p, x), 1e-12);
}

TEST(OverapproxH, MinimizerDoesNotIncreaseAndBoundsFAtFullSampling) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto p = testing_helpers::random_least_squares(9, 6, 0.5, seed, Regularizer::l1(0.2));
    const auto norms = p.norms(eso::fr(smoothness_data(p), 6).v);
    Rng rng(seed + 100);
    const auto x = random_vec(6, rng);
    const auto state = make_state(p, x);
    const auto h = update_direction(p, x, state, norms);
    const double H = overapprox_H(p, x, h, norms);
    EXPECT_LE(H, function_value(p, x) + 1e-12);
    std::vector<double> xh = x;
    for (std::size_t j = 0; j < 6; ++j) xh[j] += h[j];
    EXPECT_GE(H, function_value(p, xh) - 1e-12);
    const auto r = random_vec(6, rng);
    std::vector<double> xr = x;
    for (std::size_t j = 0; j < 6; ++j) xr[j] += r[j];
    EXPECT_GE(overapprox_H(p, x, r, norms), function_value(p, xr) - 1e-12);
  }
}

TEST(OverapproxH, InfeasibleStepIsInfinite) {
  auto p = make_least_squares(dense_to_sparse({{1}}), {1}, Regularizer::box(0, 1));
  const auto norms = p.norms({1.0});
  EXPECT_EQ(overapprox_H(p, std::vector<double>{0.5}, std::vector<double>{1.0}, norms), kInf);
}

TEST(ApplyUpdate, EmptyAndFullSets) {
  auto p = testing_helpers::random_least_squares(8, 5, 0.5, 4, Regularizer::zero());
  Rng rng(4);
  auto x = random_vec(5, rng);
  const auto h = random_vec(5, rng);
  auto state = make_state(p, x);
  const auto x0 = x;
  apply_update(p, x, state, std::vector<std::size_t>{}, h);
  EXPECT_EQ(x, x0);
  apply_update(p, x, state, std::vector<std::size_t>{0, 1, 2, 3, 4}, h);
  const auto fresh = make_state(p, x);
  EXPECT_LE(testing_helpers::max_rel_diff(state.aux, fresh.aux), 1e-14);
}

TEST(ApplyUpdate, IncrementalMatchesRecomputation) {
  Rng rng(12);
  auto ls = testing_helpers::random_least_squares(20, 10, 0.4, 5, Regularizer::zero());
  auto svm = random_svm(10, 6, 6);
  for (const auto* p : {&ls, &svm}) {
    auto x = random_vec(p->dim(), rng);
    auto state = make_state(*p, x);
    Sampler s(SamplingSpec::tau_nice(p->num_blocks(), 3), 1);
    for (std::uint64_t k = 0; k < 50; ++k) {
      const auto h = random_vec(p->dim(), rng);
      apply_update(*p, x, state, s.draw(k), h);
    }
    EXPECT_LE(testing_helpers::max_rel_diff(state.aux, make_state(*p, x).aux), 1e-10);
  }
}

TEST(ApplyUpdate, DriftAfterManyUpdates) {
  Rng rng(13);
  auto p = testing_helpers::random_least_squares(40, 20, 0.3, 7, Regularizer::zero());
  auto x = random_vec(20, rng);
  auto state = make_state(p, x);
  Sampler s(SamplingSpec::tau_nice(20, 4), 3);
  for (std::uint64_t k = 0; k < 10000; ++k) {
    std::vector<double> h(20);
    for (double& e : h) e = 0.1 * rng.normal();
    apply_update(p, x, state, s.draw(k), h);
  }
  EXPECT_LE(testing_helpers::max_rel_diff(state.aux, make_state(p, x).aux), 1e-6);
}

TEST(FunctionValue, InterpolatingLeastSquaresIsZero) {
  auto p = make_least_squares(dense_to_sparse({{1, 2}, {3, 4}}), {5, 11}, Regularizer::zero());
  EXPECT_EQ(function_value(p, std::vector<double>{1, 2}), 0.0);
}

TEST(FunctionValue, BoxViolationIsInfinite) {
  auto p = make_least_squares(dense_to_sparse({{1}}), {0}, Regularizer::box(0, 1));
  EXPECT_EQ(function_value(p, std::vector<double>{2}), kInf);
}

TEST(Svm, ZeroDualPoint) {
  auto p = random_svm(12, 5, 9);
  const std::vector<double> x(12, 0.0);
  const auto s = make_state(p, x);
  EXPECT_EQ(svm_dual_value(p, x, s), 0.0);
  EXPECT_EQ(svm_primal_value(p, s.aux), 1.0);
  EXPECT_EQ(duality_gap(p, x, s), 1.0);
  EXPECT_EQ(function_value(p, x, s), 0.0);
}

TEST(Svm, WeakDuality) {
  Rng rng(30);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto p = random_svm(15, 6, seed, rng.uniform(0.01, 1.0));
    for (int t = 0; t < 20; ++t) {
      std::vector<double> x(15);
      for (double& e : x) e = rng.uniform();
      EXPECT_GE(duality_gap(p, x, make_state(p, x)), -1e-10);
    }
  }
}

TEST(Svm, DualValueIsNegatedSmoothPart) {
  auto p = random_svm(6, 4, 3, 0.5);
  const auto& svm = *p.as<SvmDual>();
  const std::vector<double> x = {0.1, 0.9, 0.5, 0, 1, 0.3};
  // D(x) = (1/N) sum x - (lambda/2) ||w||^2 with w = (1/(lambda N)) sum x_i y_i a_i
  std::vector<double> w(svm.samples.cols(), 0.0);
  for (std::size_t i = 0; i < 6; ++i) {
    auto idx = svm.samples.row_indices(i);
    auto val = svm.samples.row_values(i);
    for (std::size_t k = 0; k < idx.size(); ++k) w[idx[k]] += x[i] * svm.labels[i] * val[k] / (0.5 * 6);
  }
  double ww = 0.0, sx = 0.0;
  for (double e : w) ww += e * e;
  for (double e : x) sx += e;
  const double D = sx / 6 - 0.25 * ww;
  EXPECT_NEAR(svm_dual_value(p, x, make_state(p, x)), D, 1e-14);
  EXPECT_NEAR(function_value(p, x), -D, 1e-14);
}

TEST(Svm, ValidatesLabelsAndFeasibleSet) {
  auto A = dense_to_sparse({{1, 0}, {0, 1}});
  EXPECT_THROW(make_svm_dual(A, {1, 2}, 0.1), std::invalid_argument);
  EXPECT_THROW(make_svm_dual(A, {1, -1}, 0.0), std::invalid_argument);
  EXPECT_THROW(CompositeProblem(SvmDual{A, {1, -1}, 0.1}, {Regularizer::zero()}, BlockLayout::singletons(2)),
               std::invalid_argument);
}

TEST(Problem, RegularizerCountMustMatchBlocks) {
  auto A = dense_to_sparse({{1, 0, 1}, {0, 1, 1}});
  EXPECT_THROW(CompositeProblem(LeastSquares{A, {1, 1}}, {Regularizer::zero(), Regularizer::zero()},
                                BlockLayout::singletons(3)),
               std::invalid_argument);
  EXPECT_THROW(CompositeProblem(LeastSquares{A, {1}}, {Regularizer::zero()}, BlockLayout::singletons(3)),
               std::invalid_argument);
  EXPECT_THROW(CompositeProblem(LeastSquares{A, {1, 1}}, {Regularizer::zero()}, BlockLayout({1, 1})),
               std::invalid_argument);
}

TEST(ToyLogistic, SingleFunctionEsosCoincide) {
  const auto d = toy_logistic_smoothness(1, 3.0);
  EXPECT_NEAR(eso::nc(d).v[0], 0.25, 1e-12);
  EXPECT_NEAR(eso::rt_p(d.L, d.omega, 1, 1).v[0], 0.25, 1e-9);
}

TEST(ToyLogistic, NcIsAboutMTimesWorse) {
  const auto d = toy_logistic_smoothness(10, 100.0);
  const double ratio = eso::nc(d).v[0] / eso::rt_p(d.L, d.omega, 1, 1).v[0];
  EXPECT_NEAR(ratio, 10.0, 0.5);
}

TEST(ToyLogistic, GlobalConstantBoundsCurvatureScan) {
  for (double zeta : {0.5, 3.0, 100.0}) {
    const std::size_t m = 10;
    const auto d = toy_logistic_smoothness(m, zeta);
    double worst = 0.0;
    for (double x = -20; x <= zeta * m + 20; x += 1e-3) {
      double c = 0.0;
      for (std::size_t j = 1; j <= m; ++j) {
        const double s = 1.0 / (1.0 + std::exp(x - zeta * double(j)));
        c += s * (1 - s);
      }
      worst = std::max(worst, c);
    }
    EXPECT_GE(d.L[0], worst - 1e-9);
    EXPECT_LE(d.L[0], worst + 1e-6);
  }
  EXPECT_LE(toy_logistic_smoothness(10, 100.0).L[0], 0.25 + 1e-6);
}

TEST(StrongConvexity, RelativeToWeightedNorm) {
  auto p = make_least_squares(dense_to_sparse({{1, 0}, {0, 2}}), {0, 0}, Regularizer::squared_l2(0.5));
  const auto norms = p.norms({1.0, 4.0});
  EXPECT_NEAR(mu_f_wrt(p, norms), 1.0, 1e-12);
  EXPECT_NEAR(mu_psi_wrt(p, norms), 0.5 / 4.0, 1e-15);
  auto q = make_least_squares(dense_to_sparse({{1, 1}}), {0}, Regularizer::l1(1));
  EXPECT_NEAR(mu_f_wrt(q, q.norms({1.0, 1.0})), 0.0, 1e-12);
  EXPECT_EQ(mu_psi_wrt(q, q.norms({1.0, 1.0})), 0.0);
}

TEST(StrongConvexity, ModulusHoldsOnRandomPairs) {
  auto p = testing_helpers::random_least_squares(12, 5, 0.6, 11, Regularizer::zero());
  const auto norms = p.norms(eso::fr(smoothness_data(p), 2).v);
  const double mu = mu_f_wrt(p, norms);
  ASSERT_GT(mu, 0.0);
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const auto x = random_vec(5, rng), y = random_vec(5, rng);
    std::vector<double> d(5);
    for (std::size_t j = 0; j < 5; ++j) d[j] = y[j] - x[j];
    const double lhs = smooth_value(p, y);
    const double rhs = smooth_value(p, x) + inner(gradient(p, x), d) + 0.5 * mu * weighted_norm_sq(d, norms, p.layout());
    EXPECT_GE(lhs, rhs - 1e-10);
  }
}
