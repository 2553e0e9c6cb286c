// Solves Example 1 on a 127x127 grid with the full finite-difference system and with
// the 64-mode reduced system, then prints both errors against the exact solution.

#include <cstdio>

#include "lowmode/assembly.hpp"
#include "lowmode/baselines/direct.hpp"
#include "lowmode/reduced.hpp"

int main() {
  using namespace lowmode;
  const Grid2D g = make_grid(127);
  const Problem p = manufactured_problem("example1");
  const SparseOperator a = assemble_operator(g, p.kappa);
  const Vector f = assemble_rhs(g, p.f).values;
  const Vector u = sample_field(g, *p.u_exact).values;

  const SolveReport fd = solve_direct(a, f);
  const ReducedSolution rd = solve_reduced_pipeline(a, f, g, 8);

  std::printf("m=%d  N=%td  K=%d\n", g.m(), g.size(), 64);
  std::printf("FD       L2 error %.6e   %.4f s\n", discrete_l2_norm(g, fd.solution - u), fd.wall_time_s);
  std::printf("reduced  L2 error %.6e   %.4f s\n", discrete_l2_norm(g, rd.u.values - u), rd.times.total());
  std::printf("||u_FD - u_RD||   %.6e\n", discrete_l2_norm(g, fd.solution - rd.u.values));
  return 0;
}
