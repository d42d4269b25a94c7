#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace pcdm;

TEST(BlockLayout, OffsetsAndSizes) {
  BlockLayout layout({2, 3, 1});
  EXPECT_EQ(layout.num_blocks(), 3u);
  EXPECT_EQ(layout.dim(), 6u);
  EXPECT_EQ(layout.offset(1), 2u);
  EXPECT_EQ(layout.end(1), 5u);
  EXPECT_EQ(layout.block_of(4), 1u);
  EXPECT_EQ(layout.block_of(5), 2u);
  EXPECT_FALSE(layout.is_singleton());
  EXPECT_TRUE(BlockLayout::singletons(4).is_singleton());
}

TEST(BlockLayout, RejectsEmptyBlocks) {
  EXPECT_THROW(BlockLayout({2, 0}), std::invalid_argument);
  EXPECT_THROW(BlockLayout(std::vector<std::size_t>{}), std::invalid_argument);
}

TEST(BlockView, ReturnsContiguousBlockAndWritesThrough) {
  BlockLayout layout({2, 3});
  std::vector<double> x = {1, 2, 3, 4, 5};
  auto view = block_view(std::span<double>(x), 1, layout);
  ASSERT_EQ(view.size(), 3u);
  EXPECT_EQ(view[0], 3);
  EXPECT_EQ(view[2], 5);
  view[1] = 40;
  EXPECT_EQ(x[3], 40);
}

TEST(BlockView, SingletonIsScalarSlot) {
  auto layout = BlockLayout::singletons(3);
  std::vector<double> x = {7, 8, 9};
  auto view = block_view(std::span<const double>(x), 0, layout);
  ASSERT_EQ(view.size(), 1u);
  EXPECT_EQ(view[0], 7);
}

TEST(BlockView, OutOfRangeThrows) {
  BlockLayout layout({2, 3});
  std::vector<double> x(5);
  EXPECT_THROW(block_view(std::span<double>(x), 2, layout), std::out_of_range);
}

TEST(Norms, WeightedNormExamples) {
  auto layout = BlockLayout::singletons(2);
  BlockNorms norms(layout, {2, 3});
  EXPECT_EQ(weighted_norm_sq(std::vector<double>{0, 0}, norms, layout), 0.0);
  EXPECT_DOUBLE_EQ(weighted_norm_sq(std::vector<double>{1, 2}, norms, layout), 14.0);
  EXPECT_DOUBLE_EQ(dual_norm_sq(std::vector<double>{2, 3}, norms, layout), 5.0);
  EXPECT_EQ(dual_norm_sq(std::vector<double>{0, 0}, norms, layout), 0.0);
}

TEST(Norms, UnitVectorHasUnitNorm) {
  auto layout = BlockLayout::singletons(4);
  BlockNorms norms(layout, {1, 1, 1, 1});
  EXPECT_EQ(weighted_norm_sq(std::vector<double>{0, 0, 1, 0}, norms, layout), 1.0);
}

TEST(Norms, IdentityIsSelfDual) {
  BlockLayout layout({2, 1, 3});
  BlockNorms norms(layout, {1, 1, 1});
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> y(6);
    for (double& e : y) e = rng.normal();
    EXPECT_NEAR(weighted_norm_sq(y, norms, layout), dual_norm_sq(y, norms, layout), 1e-12);
  }
}

TEST(Norms, DimensionMismatchThrows) {
  auto layout = BlockLayout::singletons(2);
  BlockNorms norms(layout, {1, 1});
  EXPECT_THROW(weighted_norm_sq(std::vector<double>{1, 2, 3}, norms, layout), std::invalid_argument);
  EXPECT_THROW(dual_norm_sq(std::vector<double>{1}, norms, layout), std::invalid_argument);
}

TEST(Norms, RejectsNonPositiveWeights) {
  auto layout = BlockLayout::singletons(2);
  EXPECT_THROW(BlockNorms(layout, {1, 0}), std::invalid_argument);
  EXPECT_THROW(BlockNorms(layout, {1, 1}, {1, -1}), std::invalid_argument);
  EXPECT_THROW(BlockNorms(layout, {1}), std::invalid_argument);
}

TEST(Norms, CauchySchwarzPairing) {
  BlockLayout layout({1, 2, 2, 1});
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> v(4), b(6), x(6), y(6);
    for (double& e : v) e = rng.uniform(0.1, 5.0);
    for (double& e : b) e = rng.uniform(0.1, 3.0);
    for (double& e : x) e = rng.normal();
    for (double& e : y) e = rng.normal();
    BlockNorms norms(layout, v, b);
    const double ip = inner(x, y);
    EXPECT_LE(ip * ip, weighted_norm_sq(x, norms, layout) * dual_norm_sq(y, norms, layout) * (1 + 1e-12));
  }
}

TEST(Norms, CompositeMappingIdentity) {
  BlockLayout layout({2, 1, 3});
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v(3), b(6), h(6);
    for (double& e : v) e = rng.uniform(0.1, 5.0);
    for (double& e : b) e = rng.uniform(0.1, 3.0);
    for (double& e : h) e = rng.normal();
    BlockNorms norms(layout, v, b);
    const auto g = composite_gradient_map(h, norms, layout);
    const double hh = weighted_norm_sq(h, norms, layout);
    EXPECT_NEAR(dual_norm_sq(g, norms, layout), hh, 1e-12 * hh);
    EXPECT_NEAR(-inner(g, h), hh, 1e-12 * hh);
  }
}

TEST(ProjectBlocks, Examples) {
  auto layout = BlockLayout::singletons(3);
  std::vector<double> x = {7, 8, 9};
  EXPECT_EQ(project_blocks(x, std::vector<std::size_t>{}, layout), (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(project_blocks(x, std::vector<std::size_t>{0, 1, 2}, layout), x);
  EXPECT_EQ(project_blocks(x, std::vector<std::size_t>{1}, layout), (std::vector<double>{0, 8, 0}));
}

TEST(ProjectBlocks, ComplementsSumToOriginal) {
  BlockLayout layout({2, 1, 3, 1});
  std::vector<double> x = {1.5, -2, 3, 4, 5.25, -6, 7};
  const auto a = project_blocks(x, std::vector<std::size_t>{0, 2}, layout);
  const auto b = project_blocks(x, std::vector<std::size_t>{1, 3}, layout);
  for (std::size_t j = 0; j < x.size(); ++j) EXPECT_EQ(a[j] + b[j], x[j]);
}
