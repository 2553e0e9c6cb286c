#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lowmode/grid.hpp"

namespace lowmode {
namespace {

using std::numbers::pi;

TEST(Grid, MakeGridSpacingAndSize) {
  const Grid2D g1 = make_grid(1);
  EXPECT_EQ(g1.h(), 0.5);
  EXPECT_EQ(g1.size(), 1);
  const Grid2D g255 = make_grid(255);
  EXPECT_EQ(g255.h(), 1.0 / 256.0);
  EXPECT_EQ(g255.size(), 65025);
  const Grid2D g127 = make_grid(127);
  EXPECT_EQ(g127.h(), 1.0 / 128.0);
  EXPECT_EQ(g127.size(), 16129);
  for (int m : {1, 2, 7, 100, 511}) {
    const Grid2D g = make_grid(m);
    EXPECT_NEAR(g.h() * (m + 1), 1.0, 1e-15);
    EXPECT_GT(g.coord(1), 0.0);
    EXPECT_LT(g.coord(m), 1.0);
  }
}

TEST(Grid, RejectsEmptyGrid) {
  try {
    make_grid(0);
    FAIL() << "expected invalid-argument";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::invalid_argument);
  }
}

TEST(Grid, NodeIndexExamples) {
  const Grid2D g = make_grid(4);
  EXPECT_EQ(node_index(1, 1, g), 0);
  EXPECT_EQ(node_index(4, 1, g), 3);
  EXPECT_EQ(node_index(1, 2, g), 4);
  EXPECT_THROW(node_index(0, 1, g), Error);
  EXPECT_THROW(node_index(1, 5, g), Error);
}

TEST(Grid, NodeIndexIsBijectionExhaustive) {
  for (int m = 1; m <= 64; ++m) {
    const Grid2D g = make_grid(m);
    std::vector<char> seen(static_cast<std::size_t>(g.size()), 0);
    for (int j = 1; j <= m; ++j)
      for (int i = 1; i <= m; ++i) {
        const auto k = g.index(i, j);
        ASSERT_GE(k, 0);
        ASSERT_LT(k, g.size());
        ASSERT_EQ(seen[static_cast<std::size_t>(k)], 0);
        seen[static_cast<std::size_t>(k)] = 1;
        const auto [ii, jj] = g.node(k);
        ASSERT_EQ(ii, i);
        ASSERT_EQ(jj, j);
      }
  }
}

TEST(Grid, SampleFieldExamples) {
  const Grid2D g1 = make_grid(1);
  const auto s = sample_field(g1, [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); });
  EXPECT_NEAR(s.values[0], 1.0, 1e-15);

  const Grid2D g3 = make_grid(3);
  const auto xy = sample_field(g3, [](double x, double y) { return x * y; });
  EXPECT_DOUBLE_EQ(xy(2, 2), 0.25);
  EXPECT_DOUBLE_EQ(xy(1, 3), 0.25 * 0.75);

  const auto zero = sample_field(g3, [](double, double) { return 0.0; });
  EXPECT_EQ(zero.values.norm(), 0.0);
}

TEST(Grid, SampleFieldReportsNonFiniteNode) {
  const Grid2D g = make_grid(3);
  try {
    sample_field(g, [](double x, double) { return x > 0.6 ? std::nan("") : 1.0; });
    FAIL() << "expected evaluation-error";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::evaluation);
    EXPECT_NE(std::string(e.what()).find("(3,1)"), std::string::npos);
  }
}

TEST(Grid, L2NormExamples) {
  const Grid2D g = make_grid(3);
  EXPECT_DOUBLE_EQ(discrete_l2_norm(g, Vector::Ones(9)), 0.75);
  EXPECT_EQ(discrete_l2_norm(g, Vector::Zero(9)), 0.0);

  // Σ sin²(πih) over i = 1..m is (m+1)/2, so the discrete norm is exactly 1/2.
  const Grid2D fine = make_grid(255);
  const auto u = sample_field(fine, [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); });
  EXPECT_NEAR(discrete_l2_norm(u), 0.5, 1e-4);
  EXPECT_NEAR(discrete_l2_norm(u), 0.5, 1e-14);
}

TEST(Grid, H1SeminormExamples) {
  const Grid2D g1 = make_grid(1);
  EXPECT_DOUBLE_EQ(discrete_h1_seminorm(g1, Vector::Ones(1)), 2.0);
  EXPECT_EQ(discrete_h1_seminorm(make_grid(5), Vector::Zero(25)), 0.0);

  for (int m : {127, 255}) {
    const Grid2D g = make_grid(m);
    const auto u = sample_field(g, [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); });
    const double h1 = discrete_h1_seminorm(u);
    // Closed form of the edge sum: 2(m+1)² sin²(πh/2).
    const double exact_discrete = std::sqrt(2.0) * (m + 1) * std::sin(pi * g.h() / 2.0);
    EXPECT_NEAR(h1, exact_discrete, 1e-12 * exact_discrete);
    EXPECT_NEAR(h1, pi / std::sqrt(2.0), 0.01 * pi / std::sqrt(2.0));
  }
}

TEST(Grid, NormsAreAbsolutelyHomogeneous) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  const Grid2D g = make_grid(17);
  for (int trial = 0; trial < 20; ++trial) {
    Vector v(g.size());
    for (auto& x : v) x = normal(rng);
    const double alpha = normal(rng) * 10.0;
    EXPECT_NEAR(discrete_l2_norm(g, alpha * v), std::abs(alpha) * discrete_l2_norm(g, v),
                1e-13 * std::abs(alpha) * discrete_l2_norm(g, v));
    EXPECT_NEAR(discrete_h1_seminorm(g, alpha * v), std::abs(alpha) * discrete_h1_seminorm(g, v),
                1e-13 * std::abs(alpha) * discrete_h1_seminorm(g, v));
  }
}

TEST(Grid, NormsConvergeToContinuumValues) {
  // u = x(1-x)y(1-y): ‖u‖_L² = 1/30, |u|²_H¹ = 2·(1/3)·(1/30) = 1/45.
  auto field = [](double x, double y) { return x * (1 - x) * y * (1 - y); };
  const double l2_exact = 1.0 / 30.0, h1_exact = std::sqrt(1.0 / 45.0);
  double prev_l2 = 0, prev_h1 = 0, prev_h = 0;
  for (int m : {15, 31, 63, 127}) {
    const Grid2D g = make_grid(m);
    const auto u = sample_field(g, field);
    const double el2 = std::abs(discrete_l2_norm(u) - l2_exact);
    const double eh1 = std::abs(discrete_h1_seminorm(u) - h1_exact);
    if (prev_h > 0) {
      EXPECT_GT(std::log(prev_l2 / el2) / std::log(prev_h / g.h()), 1.9);
      EXPECT_GT(std::log(prev_h1 / eh1) / std::log(prev_h / g.h()), 0.9);
    }
    prev_l2 = el2;
    prev_h1 = eh1;
    prev_h = g.h();
  }
}

}  // namespace
}  // namespace lowmode
