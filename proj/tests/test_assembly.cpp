#include <gtest/gtest.h>

#include <Eigen/Cholesky>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

#include "lowmode/assembly.hpp"

namespace lowmode {
namespace {

using std::numbers::pi;

ScalarField unit_kappa() {
  return [](double, double) { return 1.0; };
}

Vector random_vector(std::ptrdiff_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

TEST(Assembly, UnitCoefficientStencil) {
  const Grid2D g = make_grid(3);
  const SparseOperator a = assemble_operator(g, unit_kappa());
  EXPECT_EQ(a.rows(), 9);
  for (std::ptrdiff_t r = 0; r < 9; ++r) {
    EXPECT_DOUBLE_EQ(a.diagonal(r), 64.0);
    for (std::ptrdiff_t k = a.row_offsets()[r]; k < a.row_offsets()[r + 1]; ++k)
      if (a.col_indices()[k] != r) EXPECT_DOUBLE_EQ(a.values()[k], -16.0);
  }
  // Centre node couples to all four neighbours, corners to two.
  EXPECT_EQ(a.row_offsets()[5] - a.row_offsets()[4], 5);
  EXPECT_EQ(a.row_offsets()[1] - a.row_offsets()[0], 3);
}

TEST(Assembly, SmallestUnitEigenvalueMatchesInversePowerIteration) {
  const Grid2D g = make_grid(15);
  const SparseOperator a = assemble_operator(g, unit_kappa());
  const double h = g.h();
  const double formula = 8.0 / (h * h) * std::pow(std::sin(pi * h / 2.0), 2);
  EXPECT_NEAR(formula, 19.6759, 1e-4);

  // Independent route: inverse power iteration on the dense operator.
  const Eigen::LLT<Matrix> llt(a.to_dense());
  Vector x = Vector::Ones(g.size());
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    Vector y = llt.solve(x);
    lambda = x.dot(x) / x.dot(y);
    x = y / y.norm();
  }
  EXPECT_NEAR(lambda, formula, 1e-10 * formula);
}

TEST(Assembly, VariableCoefficientIsSymmetricAndDiagonallyDominant) {
  const Problem p = manufactured_problem("example1");
  for (int m : {1, 4, 9, 16}) {
    const Grid2D g = make_grid(m);
    const SparseOperator a = assemble_operator(g, p.kappa);
    EXPECT_EQ(a.asymmetry(), 0.0);
    for (std::ptrdiff_t r = 0; r < a.rows(); ++r) {
      double off = 0.0, row_sum = 0.0;
      EXPECT_LE(a.row_offsets()[r + 1] - a.row_offsets()[r], 5);
      for (std::ptrdiff_t k = a.row_offsets()[r]; k < a.row_offsets()[r + 1]; ++k) {
        row_sum += a.values()[k];
        if (a.col_indices()[k] != r) off += std::abs(a.values()[k]);
        if (k > a.row_offsets()[r]) EXPECT_LT(a.col_indices()[k - 1], a.col_indices()[k]);
      }
      EXPECT_GT(a.diagonal(r), 0.0);
      EXPECT_GE(a.diagonal(r), off * (1 - 1e-14));
      EXPECT_GE(row_sum, -1e-9 * a.diagonal(r));
    }
  }
}

TEST(Assembly, OperatorIsPositiveDefinite) {
  for (const char* name : {"example1", "example2"}) {
    const Grid2D g = make_grid(12);
    const SparseOperator a = assemble_operator(g, manufactured_problem(name).kappa);
    EXPECT_EQ(Eigen::LLT<Matrix>(a.to_dense()).info(), Eigen::Success) << name;
  }
}

TEST(Assembly, NonPositiveCoefficientIsRejectedWithLocation) {
  const Grid2D g = make_grid(7);
  auto bad = [](double x, double y) { return (x > 0.5 && y > 0.5) ? -1.0 : 1.0; };
  for (Averaging rule : {Averaging::midpoint, Averaging::harmonic}) {
    try {
      assemble_operator(g, bad, rule);
      FAIL() << "expected ellipticity violation";
    } catch (const Error& e) {
      EXPECT_EQ(e.category(), ErrorCategory::ellipticity_violation);
      EXPECT_NE(std::string(e.what()).find("at ("), std::string::npos);
    }
  }
}

TEST(Assembly, HarmonicAveragingMatchesMidpointForConstantCoefficient) {
  const Grid2D g = make_grid(6);
  auto k = [](double, double) { return 2.5; };
  const Matrix mid = assemble_operator(g, k, Averaging::midpoint).to_dense();
  const Matrix harm = assemble_operator(g, k, Averaging::harmonic).to_dense();
  EXPECT_LT((mid - harm).cwiseAbs().maxCoeff(), 1e-12 * mid.cwiseAbs().maxCoeff());
  const SparseOperator h2 = assemble_operator(g, manufactured_problem("example2").kappa, Averaging::harmonic);
  EXPECT_EQ(h2.asymmetry(), 0.0);
}

TEST(Assembly, RhsExamples) {
  const Grid2D g = make_grid(3);
  EXPECT_EQ(assemble_rhs(g, [](double, double) { return 0.0; }).values.norm(), 0.0);
  EXPECT_EQ(assemble_rhs(g, [](double, double) { return 1.0; }).values, Vector::Ones(9));
  const Problem p = manufactured_problem("example1");
  EXPECT_NEAR(p.f(0.5, 0.5), 2.0 * pi * pi, 1e-12);
  EXPECT_NEAR(p.f(0.5, 0.5), 19.7392, 1e-4);
}

TEST(Assembly, ManufacturedCoefficients) {
  EXPECT_DOUBLE_EQ(manufactured_problem("example1").kappa(0.25, 0.25), 1.5);
  EXPECT_NEAR(manufactured_problem("example2").kappa(1.0 / 16, 1.0 / 16), 1.9, 1e-15);
  const Problem p2 = manufactured_problem("example2");
  EXPECT_DOUBLE_EQ(p2.kappa_min, 0.1);
  EXPECT_DOUBLE_EQ(p2.kappa_max, 1.9);
  for (const char* name : {"example1", "example2"}) {
    const Problem p = manufactured_problem(name);
    ASSERT_TRUE(p.u_exact.has_value());
    for (double t : {0.0, 0.3, 0.77, 1.0}) {
      EXPECT_NEAR((*p.u_exact)(0.0, t), 0.0, 1e-15);
      EXPECT_NEAR((*p.u_exact)(1.0, t), 0.0, 1e-15);
      EXPECT_NEAR((*p.u_exact)(t, 0.0), 0.0, 1e-15);
      EXPECT_NEAR((*p.u_exact)(t, 1.0), 0.0, 1e-15);
    }
  }
  EXPECT_THROW(manufactured_problem("example3"), Error);
}

TEST(Assembly, ForcingMatchesFiniteDifferenceOfFlux) {
  // Independent check of the symbolic forcing: central differences of κ∇u at a few points.
  for (const char* name : {"example1", "example2"}) {
    const Problem p = manufactured_problem(name);
    const auto& u = *p.u_exact;
    const double d = 1e-4;
    for (auto [x, y] : {std::pair{0.3, 0.6}, std::pair{0.71, 0.12}, std::pair{0.5, 0.5}}) {
      auto flux_x = [&](double xx, double yy) { return p.kappa(xx, yy) * (u(xx + d, yy) - u(xx - d, yy)) / (2 * d); };
      auto flux_y = [&](double xx, double yy) { return p.kappa(xx, yy) * (u(xx, yy + d) - u(xx, yy - d)) / (2 * d); };
      const double div = (flux_x(x + d, y) - flux_x(x - d, y)) / (2 * d) + (flux_y(x, y + d) - flux_y(x, y - d)) / (2 * d);
      EXPECT_NEAR(-div, p.f(x, y), 1e-4 * std::max(1.0, std::abs(p.f(x, y)))) << name << " at " << x << "," << y;
    }
  }
}

TEST(Assembly, TruncationErrorIsSecondOrder) {
  for (const char* name : {"example1", "example2"}) {
    const Problem p = manufactured_problem(name);
    double prev = 0.0;
    for (int m : {31, 63, 127, 255}) {
      const Grid2D g = make_grid(m);
      const SparseOperator a = assemble_operator(g, p.kappa);
      const Vector tau = apply_operator(a, sample_field(g, *p.u_exact).values) - assemble_rhs(g, p.f).values;
      const double t = tau.lpNorm<Eigen::Infinity>();
      if (prev > 0.0 && m >= 63) {
        EXPECT_GE(prev / t, 3.5) << name << " m=" << m;
        EXPECT_LE(prev / t, 4.5) << name << " m=" << m;
      }
      prev = t;
    }
  }
}

TEST(Assembly, SampledSineModesAreExactEigenvectors) {
  for (int m : {3, 8, 21}) {
    const Grid2D g = make_grid(m);
    const SparseOperator a = assemble_operator(g, unit_kappa());
    const double h = g.h();
    for (int p = 1; p <= std::min(m, 8); ++p)
      for (int q = 1; q <= std::min(m, 8); ++q) {
        const Vector v = sample_field(g, [&](double x, double y) { return std::sin(p * pi * x) * std::sin(q * pi * y); }).values;
        const double lam = 4.0 / (h * h) * (std::pow(std::sin(p * pi * h / 2), 2) + std::pow(std::sin(q * pi * h / 2), 2));
        const Vector av = apply_operator(a, v);
        EXPECT_LE((av - lam * v).norm(), 1e-12 * lam * v.norm()) << "m=" << m << " p=" << p << " q=" << q;
      }
  }
}

TEST(Assembly, EllipticityBoundsInheritedFromCoefficient) {
  const Grid2D g = make_grid(20);
  const SparseOperator lap = assemble_operator(g, unit_kappa());
  for (const char* name : {"example1", "example2"}) {
    const Problem p = manufactured_problem(name);
    const SparseOperator a = assemble_operator(g, p.kappa);
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
      const Vector v = random_vector(g.size(), seed);
      const double e = v.dot(apply_operator(a, v));
      const double e0 = v.dot(apply_operator(lap, v));
      EXPECT_GE(e, p.kappa_min * e0 * (1 - 1e-12));
      EXPECT_LE(e, p.kappa_max * e0 * (1 + 1e-12));
    }
  }
}

TEST(Assembly, UnitEnergyEqualsH1Seminorm) {
  const Grid2D g = make_grid(13);
  const SparseOperator lap = assemble_operator(g, unit_kappa());
  const Vector v = random_vector(g.size(), 99);
  const double energy = g.h() * g.h() * v.dot(apply_operator(lap, v));
  const double h1 = discrete_h1_seminorm(g, v);
  EXPECT_NEAR(std::sqrt(energy), h1, 1e-12 * h1);
}

TEST(Assembly, ApplyAndResidual) {
  const Grid2D g = make_grid(9);
  const Problem p = manufactured_problem("example1");
  const SparseOperator a = assemble_operator(g, p.kappa);
  EXPECT_EQ(apply_operator(a, Vector::Zero(g.size())).norm(), 0.0);
  EXPECT_THROW(apply_operator(a, Vector::Zero(5)), Error);

  const Vector f = assemble_rhs(g, p.f).values;
  const Vector u = Eigen::LLT<Matrix>(a.to_dense()).solve(f);
  EXPECT_LE(residual(a, u, f).norm(), 1e-10 * f.norm());
}

TEST(Assembly, MatrixMarketDump) {
  const Grid2D g = make_grid(2);
  const SparseOperator a = assemble_operator(g, unit_kappa());
  const auto path = (std::filesystem::temp_directory_path() / "lowmode_test_operator.mtx").string();
  write_matrix_market(a, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "%%MatrixMarket matrix coordinate real symmetric");
  int rows = 0, cols = 0, entries = 0;
  in >> rows >> cols >> entries;
  EXPECT_EQ(rows, 4);
  EXPECT_EQ(cols, 4);
  EXPECT_EQ(entries, 8);  // 4 diagonal + 4 lower couplings
  int r = 0, c = 0;
  double v = 0;
  in >> r >> c >> v;
  EXPECT_EQ(r, 1);
  EXPECT_EQ(c, 1);
  EXPECT_DOUBLE_EQ(v, 36.0);
  std::filesystem::remove(path);
  EXPECT_THROW(write_matrix_market(a, "/nonexistent-dir/x.mtx"), Error);
}


TEST(Assembly, RowBlockProductMatchesFullProduct) {
  const Grid2D g = make_grid(9);
  const SparseOperator a = assemble_operator(g, manufactured_problem("example2").kappa);
  Matrix x(g.size(), 3);
  for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = std::sin(0.1 * static_cast<double>(k));
  const Matrix full = a.multiply(x);
  Matrix part(20, 3);
  for (std::ptrdiff_t first = 0; first < g.size(); first += 20) {
    const std::ptrdiff_t count = std::min<std::ptrdiff_t>(20, g.size() - first);
    a.multiply_rows(x, first, count, part);
    EXPECT_EQ(part.topRows(count), full.middleRows(first, count));
  }
  EXPECT_THROW(a.multiply_rows(x, 75, 10, part), Error);
  // operand held as a window of rows [9, 45)
  const Matrix window = x.middleRows(9, 36);
  a.multiply_rows(window, 18, 18, part, 9);
  EXPECT_EQ(part.topRows(18), full.middleRows(18, 18));
  EXPECT_THROW(a.multiply_rows(window, 9, 18, part, 9), Error);
}

}  // namespace
}  // namespace lowmode
