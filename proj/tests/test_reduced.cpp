#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Cholesky>

#include "lowmode/assembly.hpp"
#include "lowmode/baselines/direct.hpp"
#include "lowmode/reduced.hpp"

namespace lowmode {
namespace {

using std::numbers::pi;

ScalarField unit_kappa() {
  return [](double, double) { return 1.0; };
}

Vector random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

struct Fixture {
  Grid2D grid;
  SparseOperator a;
  Vector f;
};

Fixture make_fixture(const char* problem, int m) {
  const Problem p = manufactured_problem(problem);
  Fixture s{make_grid(m), {}, {}};
  s.a = assemble_operator(s.grid, p.kappa);
  s.f = assemble_rhs(s.grid, p.f).values;
  return s;
}

TEST(Reduced, UnitCoefficientRawProjectionIsDiagonal) {
  const Grid2D g = make_grid(31);
  const SparseOperator a = assemble_operator(g, unit_kappa());
  const SpectralBasis b = build_basis(g, 5, Normalization::raw);
  const ReducedSystem rs = project_system(a, Vector::Ones(g.size()), b);
  const double c = std::pow((g.m() + 1) / 2.0, 2);
  for (Eigen::Index i = 0; i < rs.a_ll.rows(); ++i)
    for (Eigen::Index j = 0; j < rs.a_ll.cols(); ++j) {
      const ModeIndex mode = b.mode(i);
      const double expect = i == j ? c * discrete_eigenvalue(g, mode.p, mode.q) : 0.0;
      EXPECT_NEAR(rs.a_ll(i, j), expect, 1e-12 * c * discrete_eigenvalue(g, 5, 5));
    }
  EXPECT_NE(rs.basis_label.find("interp"), std::string::npos);
}

TEST(Reduced, ZeroLoadProjectsToZero) {
  const Fixture s = make_fixture("example1", 15);
  const ReducedSystem rs = project_system(s.a, Vector::Zero(s.grid.size()), build_basis(s.grid, 3));
  EXPECT_EQ(rs.f_m.norm(), 0.0);
  EXPECT_EQ(solve_reduced(rs).norm(), 0.0);
}

TEST(Reduced, ProjectedOperatorIsSymmetricPositiveDefinite) {
  const Fixture s = make_fixture("example2", 31);
  const ReducedSystem rs = project_system(s.a, s.f, build_basis(s.grid, 6));
  EXPECT_EQ((rs.a_ll - rs.a_ll.transpose()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(Eigen::LLT<Matrix>(rs.a_ll).info(), Eigen::Success);
}

TEST(Reduced, ProjectionRejectsMismatchAndOversize) {
  const Fixture s = make_fixture("example1", 15);
  const SpectralBasis b = build_basis(make_grid(7), 3);
  EXPECT_THROW(project_system(s.a, s.f, b), Error);
  const Fixture big = make_fixture("poisson", 40);
  try {
    project_system(big.a, big.f, build_basis(big.grid, 33));
    FAIL() << "expected feasibility error";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::feasibility);
  }
}

TEST(Reduced, SolveExamples) {
  ReducedSystem id{Matrix::Identity(4, 4), Vector::Unit(4, 0), "id", 0, 0};
  EXPECT_EQ(solve_reduced(id), Vector::Unit(4, 0));

  const Vector d = (Vector(3) << 2.0, 5.0, 0.5).finished();
  ReducedSystem diag{d.asDiagonal().toDenseMatrix(), Vector::Ones(3), "diag", 0, 0};
  const Vector z = solve_reduced(diag);
  for (int k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(z[k], 1.0 / d[k]);

  std::mt19937_64 rng(4);
  Matrix x(16, 16);
  for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = random_vector(1, rng)[0];
  ReducedSystem spd{x * x.transpose() + 16.0 * Matrix::Identity(16, 16), random_vector(16, rng), "rand", 0, 0};
  const Vector zr = solve_reduced(spd);
  EXPECT_LE((spd.a_ll * zr - spd.f_m).norm(), 1e-12 * spd.f_m.norm());

  ReducedSystem indefinite{-Matrix::Identity(2, 2), Vector::Ones(2), "neg", 0, 0};
  try {
    solve_reduced(indefinite);
    FAIL() << "expected definiteness failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::definiteness_failure);
  }
}

TEST(Reduced, LiftExamples) {
  const Grid2D g = make_grid(9);
  const SpectralBasis b = build_basis(g, 3, Normalization::raw);
  EXPECT_EQ(lift(b, Vector::Zero(9)).values.norm(), 0.0);
  const Vector u = lift(b, Vector::Unit(9, b.column({1, 1}))).values;
  const Vector expect = sample_field(g, [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); }).values;
  EXPECT_LT((u - expect).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(lift(b, Vector::Zero(4)), Error);
}

TEST(Reduced, SingleModeSolutionIsReproducedExactly) {
  const Grid2D g = make_grid(63);
  const SparseOperator a = assemble_operator(g, unit_kappa());
  const Vector f = sample_field(g, [](double x, double y) { return 2 * pi * pi * std::sin(pi * x) * std::sin(pi * y); }).values;
  const Vector u_fd = Eigen::LLT<Matrix>(a.to_dense()).solve(f);
  for (int M : {1, 2, 5}) {
    const ReducedSolution rd = solve_reduced_pipeline(a, f, g, M);
    EXPECT_LE((rd.u.values - u_fd).lpNorm<Eigen::Infinity>(), 1e-10 * u_fd.lpNorm<Eigen::Infinity>()) << "M=" << M;
  }
}

TEST(Reduced, EnergyNormExamples) {
  const Grid2D g = make_grid(21);
  const SparseOperator a = assemble_operator(g, unit_kappa());
  EXPECT_EQ(energy_norm(a, Vector::Zero(g.size())), 0.0);
  for (auto [p, q] : {std::pair{1, 1}, std::pair{3, 7}}) {
    const Vector v = build_basis(g, 7, Normalization::raw).matrix().col((p - 1) * 7 + q - 1);
    EXPECT_NEAR(energy_norm(a, v), std::sqrt(discrete_eigenvalue(g, p, q)) * v.norm(), 1e-12 * energy_norm(a, v));
  }
  std::mt19937_64 rng(17);
  const Vector v = random_vector(g.size(), rng);
  EXPECT_NEAR(energy_norm(a, 2.0 * v), 2.0 * energy_norm(a, v), 1e-12 * energy_norm(a, v));
  EXPECT_THROW(energy_norm(a, Vector::Zero(3)), Error);
}

TEST(Reduced, EnergyNormRejectsNegativeRadicand) {
  const SparseOperator neg(2, 2, {0, 1, 2}, {0, 1}, {-1.0, 1.0});
  try {
    energy_norm(neg, Vector::Unit(2, 0));
    FAIL() << "expected definiteness failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::definiteness_failure);
  }
  // Round-off sized negative energy is clamped to zero.
  const SparseOperator tiny(1, 1, {0, 1}, {0}, {-1e-16});
  EXPECT_EQ(energy_norm(tiny, Vector::Ones(1)), 0.0);
}

TEST(Reduced, ConditionNumberExamples) {
  EXPECT_DOUBLE_EQ(condition_number(Matrix::Identity(5, 5)), 1.0);
  EXPECT_THROW(condition_number(-Matrix::Identity(2, 2)), Error);
  EXPECT_THROW(condition_number(Matrix(0, 0)), Error);

  const Grid2D g = make_grid(255);
  const SparseOperator a = assemble_operator(g, unit_kappa());
  const ReducedSystem rs = project_system(a, Vector::Ones(g.size()), build_basis(g, 2));
  const double expect = discrete_eigenvalue(g, 2, 2) / discrete_eigenvalue(g, 1, 1);
  EXPECT_NEAR(condition_number(rs.a_ll), expect, 1e-10 * expect);
  EXPECT_NEAR(condition_number(rs.a_ll), 4.0, 1e-3);
}

TEST(Reduced, VariableCoefficientConditioningNearTabulated) {
  const Fixture s = make_fixture("example1", 255);
  const double k2 = condition_number(project_system(s.a, s.f, build_basis(s.grid, 2)).a_ll);
  EXPECT_NEAR(k2, 4.0, 0.1);
  const double k8 = condition_number(project_system(s.a, s.f, build_basis(s.grid, 8)).a_ll);
  EXPECT_NEAR(k8, 66.8, 0.1 * 66.8);
}

TEST(Reduced, ConditioningIsMeshIndependent) {
  std::vector<double> k;
  for (int m : {63, 127, 255}) {
    const Fixture s = make_fixture("example1", m);
    k.push_back(condition_number(project_system(s.a, s.f, build_basis(s.grid, 8)).a_ll));
  }
  const auto [lo, hi] = std::minmax_element(k.begin(), k.end());
  EXPECT_LT((*hi - *lo) / *lo, 0.05);
}

TEST(Reduced, ConditioningGrowsWithDimension) {
  const Fixture s = make_fixture("example1", 63);
  double prev = 0.0;
  for (int M : {1, 2, 4, 8, 12}) {
    const double k = condition_number(project_system(s.a, s.f, build_basis(s.grid, M)).a_ll);
    EXPECT_GT(k, prev);
    prev = k;
  }
}

TEST(Reduced, GalerkinOrthogonality) {
  for (const char* name : {"example1", "example2", "poisson"}) {
    const Fixture s = make_fixture(name, 63);
    for (int M : {2, 8}) {
      const SpectralBasis b = build_basis(s.grid, M);
      const ReducedSolution rd = solve_reduced_pipeline(s.a, s.f, s.grid, M);
      const Vector btf = b.matrix().transpose() * s.f;
      const Vector btr = b.matrix().transpose() * residual(s.a, rd.u.values, s.f);
      EXPECT_LE(btr.lpNorm<Eigen::Infinity>(), 1e-9 * btf.lpNorm<Eigen::Infinity>()) << name << " M=" << M;
    }
  }
}

TEST(Reduced, BestApproximationInEnergyNorm) {
  const Fixture s = make_fixture("example2", 31);
  const Vector u_fd = solve_direct(s.a, s.f).solution;
  const int M = 4;
  const SpectralBasis b = build_basis(s.grid, M);
  const ReducedSolution rd = solve_reduced_pipeline(s.a, s.f, s.grid, M);
  const double best = energy_norm(s.a, u_fd - rd.u.values);
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 100; ++t) {
    const Vector w = rd.z + 1e-3 * std::pow(10.0, t % 4) * random_vector(b.dimension(), rng);
    EXPECT_LE(best, energy_norm(s.a, u_fd - b.matrix() * w) + 1e-12);
  }
}

TEST(Reduced, FullBasisIsExact) {
  for (const char* name : {"example1", "example2"}) {
    const Fixture s = make_fixture(name, 15);
    const Vector u_fd = solve_direct(s.a, s.f).solution;
    const ReducedSolution rd = solve_reduced_pipeline(s.a, s.f, s.grid, 15);
    EXPECT_LE((rd.u.values - u_fd).lpNorm<Eigen::Infinity>(), 1e-9 * u_fd.lpNorm<Eigen::Infinity>()) << name;
  }
}

TEST(Reduced, MatrixFreeRouteMatchesDense) {
  const Fixture s = make_fixture("example2", 31);
  const ReducedSolution dense = solve_reduced_pipeline(s.a, s.f, s.grid, 6);
  const ReducedSolution free = solve_reduced_matrix_free(s.a, s.f, s.grid, 6);
  EXPECT_GT(free.iterations, 0);
  EXPECT_LE((dense.u.values - free.u.values).lpNorm<Eigen::Infinity>(), 1e-10 * dense.u.values.lpNorm<Eigen::Infinity>());

  const Vector u_fd = solve_direct(s.a, s.f).solution;
  const ReducedSolution full = solve_reduced_matrix_free(s.a, s.f, s.grid, s.grid.m());
  EXPECT_LE((full.u.values - u_fd).lpNorm<Eigen::Infinity>(), 1e-9 * u_fd.lpNorm<Eigen::Infinity>());
  EXPECT_EQ(solve_reduced_matrix_free(s.a, Vector::Zero(s.grid.size()), s.grid, 4).u.values.norm(), 0.0);
}

TEST(Reduced, ProjectionIsIdempotent) {
  const Fixture s = make_fixture("example1", 31);
  const SpectralBasis b = build_basis(s.grid, 5);
  const ReducedSolution rd = solve_reduced_pipeline(s.a, s.f, s.grid, 5);
  // Re-project the load generated by the lifted solution itself.
  const Vector f2 = apply_operator(s.a, rd.u.values);
  const Vector z2 = solve_reduced(project_system(s.a, f2, b));
  EXPECT_LE((z2 - rd.z).norm(), 1e-12 * rd.z.norm());
}

TEST(Reduced, PipelineReportsPhaseTimes) {
  const Fixture s = make_fixture("example1", 63);
  const ReducedSolution rd = solve_reduced_pipeline(s.a, s.f, s.grid, 4);
  EXPECT_GE(rd.times.basis_s, 0.0);
  EXPECT_GE(rd.times.total(true), rd.times.total(false));
  EXPECT_EQ(rd.iterations, 0);
}


TEST(Reduced, StreamedProjectionMatchesExplicitBasis) {
  for (int m : {7, 31, 600}) {
    const Fixture s = make_fixture("example2", m);
    const int M = std::min(m, 6);
    const ReducedSystem dense = project_system(s.a, s.f, build_basis(s.grid, M));
    const ReducedSystem streamed = project_system(s.a, s.f, TensorSineBasis(s.grid, M, 2.0 / (s.grid.h() * (m + 1))));
    EXPECT_LE((dense.a_ll - streamed.a_ll).cwiseAbs().maxCoeff(), 1e-12 * dense.a_ll.cwiseAbs().maxCoeff()) << "m=" << m;
    EXPECT_LE((dense.f_m - streamed.f_m).cwiseAbs().maxCoeff(), 1e-12 * dense.f_m.cwiseAbs().maxCoeff()) << "m=" << m;
  }
  // an operator coupling distant grid lines is refused
  const Grid2D g = make_grid(4);
  std::vector<std::ptrdiff_t> offsets{0}, cols;
  for (std::ptrdiff_t r = 0; r < 16; ++r) {
    cols.push_back(r);
    if (r == 0) cols.push_back(15);
    offsets.push_back(static_cast<std::ptrdiff_t>(cols.size()));
  }
  const SparseOperator far(16, 16, offsets, cols, std::vector<double>(cols.size(), 1.0));
  EXPECT_THROW(project_system(far, Vector::Zero(16), TensorSineBasis(g, 2)), Error);
}

}  // namespace
}  // namespace lowmode
