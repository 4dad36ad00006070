#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "sgflow/sgflow.h"
#include "test_util.hpp"

namespace {

struct Handles {
  sgflow_grid* grid = nullptr;
  sgflow_problem* problem = nullptr;
  ~Handles() {
    sgflow_problem_destroy(problem);
    sgflow_grid_destroy(grid);
  }
};

std::vector<double> uniform_gl(size_t nodes) {
  std::vector<double> u(4 * nodes, 0.0);
  std::fill(u.begin(), u.begin() + nodes, 1.0);
  return u;
}

}  // namespace

TEST(CApi, VersionAndStatusStrings) {
  EXPECT_STREQ(sgflow_version(), "0.1.0");
  EXPECT_STREQ(sgflow_status_string(SGFLOW_OK), "ok");
  EXPECT_NE(std::string(sgflow_status_string(SGFLOW_ERR_SINGULAR)).find("singular"), std::string::npos);
}

TEST(CApi, GridAndProblemLifecycle) {
  Handles h;
  ASSERT_EQ(sgflow_grid_create(6, 5, 4, 3, &h.grid), SGFLOW_OK);
  EXPECT_EQ(sgflow_grid_node_count(h.grid), 30u);
  ASSERT_EQ(sgflow_problem_create_gl(h.grid, 4, 0, &h.problem), SGFLOW_OK);
  EXPECT_EQ(sgflow_problem_dof_count(h.problem), 120u);

  const auto u = uniform_gl(30);
  double e = -1;
  ASSERT_EQ(sgflow_energy(h.problem, u.data(), u.size(), &e), SGFLOW_OK);
  EXPECT_EQ(e, 0.0);
  std::vector<double> g(u.size(), 1.0);
  ASSERT_EQ(sgflow_gradient(h.problem, u.data(), u.size(), g.data()), SGFLOW_OK);
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(CApi, ErrorsAreReported) {
  sgflow_grid* grid = nullptr;
  EXPECT_EQ(sgflow_grid_create(1, 5, 1, 1, &grid), SGFLOW_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(grid, nullptr);
  EXPECT_GT(std::strlen(sgflow_last_error()), 0u);
  EXPECT_EQ(sgflow_grid_create(4, 4, 1, 1, nullptr), SGFLOW_ERR_INVALID_ARGUMENT);

  Handles h;
  ASSERT_EQ(sgflow_grid_create(5, 1, 1, 1, &h.grid), SGFLOW_OK);
  EXPECT_EQ(sgflow_problem_create_gl(h.grid, 4, 1, &h.problem), SGFLOW_ERR_INVALID_ARGUMENT);
  ASSERT_EQ(sgflow_problem_create_exp1d(h.grid, 1e3, &h.problem), SGFLOW_OK);
  std::vector<double> u(4, 0.0);
  double e;
  EXPECT_EQ(sgflow_energy(h.problem, u.data(), u.size(), &e), SGFLOW_ERR_SHAPE_MISMATCH);
  EXPECT_EQ(sgflow_energy(nullptr, u.data(), u.size(), &e), SGFLOW_ERR_INVALID_ARGUMENT);
  u.assign(5, 0.0);
  ASSERT_EQ(sgflow_energy(h.problem, u.data(), u.size(), &e), SGFLOW_OK);
  EXPECT_DOUBLE_EQ(e, 500.0);
}

TEST(CApi, DirectionsAndChecks) {
  Handles h;
  ASSERT_EQ(sgflow_grid_create(4, 4, 4, 4, &h.grid), SGFLOW_OK);
  ASSERT_EQ(sgflow_problem_create_gl(h.grid, 4, 2, &h.problem), SGFLOW_OK);
  std::vector<double> u = uniform_gl(16);
  for (size_t i = 0; i < u.size(); ++i) u[i] += 0.1 * std::sin(1.0 + 3.0 * i);

  std::vector<double> primal(u.size()), dual(u.size()), g(u.size());
  ASSERT_EQ(sgflow_direction(h.problem, u.data(), u.size(), SGFLOW_DIR_LM_PRIMAL, 1.0, 0.0, primal.data()),
            SGFLOW_OK);
  ASSERT_EQ(sgflow_direction(h.problem, u.data(), u.size(), SGFLOW_DIR_LM_DUAL, 1.0, 0.0, dual.data()),
            SGFLOW_OK);
  double diff = 0, norm = 0, gd = 0;
  ASSERT_EQ(sgflow_gradient(h.problem, u.data(), u.size(), g.data()), SGFLOW_OK);
  for (size_t i = 0; i < u.size(); ++i) {
    diff += (primal[i] - dual[i]) * (primal[i] - dual[i]);
    norm += primal[i] * primal[i];
    gd += g[i] * primal[i];
  }
  EXPECT_LT(std::sqrt(diff / norm), 1e-6);
  EXPECT_GT(gd, 0.0);

  EXPECT_EQ(sgflow_direction(h.problem, u.data(), u.size(), SGFLOW_DIR_GAUSS_NEWTON, 1.0, 0.0, g.data()),
            SGFLOW_ERR_SINGULAR);
  EXPECT_EQ(sgflow_direction(h.problem, u.data(), u.size(), static_cast<sgflow_direction_kind>(17), 1, 0,
                             g.data()),
            SGFLOW_ERR_INVALID_ARGUMENT);

  double err = 1;
  ASSERT_EQ(sgflow_fd_jacobian_check(h.problem, u.data(), u.size(), 10, &err), SGFLOW_OK);
  EXPECT_LT(err, 1e-6);
}

TEST(CApi, ConfigSetValidateSerialize) {
  sgflow_config* c = nullptr;
  ASSERT_EQ(sgflow_config_create(&c), SGFLOW_OK);
  EXPECT_EQ(sgflow_config_validate(c), SGFLOW_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(sgflow_config_set(c, "problem", "poisson2d"), SGFLOW_OK);
  EXPECT_EQ(sgflow_config_set(c, "nx", "nine"), SGFLOW_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(sgflow_config_set(c, "nope", "1"), SGFLOW_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(sgflow_config_set(c, nullptr, "1"), SGFLOW_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(sgflow_config_validate(c), SGFLOW_OK);

  size_t needed = 0;
  ASSERT_EQ(sgflow_config_serialize(c, nullptr, 0, &needed), SGFLOW_OK);
  std::string buf(needed, 'x');
  ASSERT_EQ(sgflow_config_serialize(c, buf.data(), buf.size(), &needed), SGFLOW_OK);
  EXPECT_EQ(buf.back(), '\0');
  EXPECT_NE(buf.find("problem = poisson2d"), std::string::npos);
  char tiny[8];
  ASSERT_EQ(sgflow_config_serialize(c, tiny, sizeof tiny, &needed), SGFLOW_OK);
  EXPECT_EQ(std::strlen(tiny), 7u);

  testutil::TempDir dir("capi_cfg");
  EXPECT_EQ(sgflow_config_load(c, (dir / "missing.cfg").c_str()), SGFLOW_ERR_IO);
  sgflow_config_destroy(c);
}

TEST(CApi, SolveSweepChecks) {
  testutil::TempDir dir("capi");
  sgflow_config* c = nullptr;
  ASSERT_EQ(sgflow_config_create(&c), SGFLOW_OK);
  sgflow_config_set(c, "problem", "poisson2d");
  sgflow_config_set(c, "nx", "7");
  sgflow_config_set(c, "ny", "7");
  sgflow_config_set(c, "out", (dir / "solve").c_str());
  sgflow_run* run = nullptr;
  ASSERT_EQ(sgflow_solve(c, &run), SGFLOW_OK);
  EXPECT_TRUE(sgflow_run_ok(run));
  EXPECT_STREQ(sgflow_run_termination(run), "gradient_tolerance");
  EXPECT_LT(sgflow_run_final_energy(run), 1e-12);
  EXPECT_GT(sgflow_run_iterations(run), 0u);
  EXPECT_LE(sgflow_run_accepted(run), sgflow_run_iterations(run));
  EXPECT_EQ(sgflow_run_vortex_count(run), -1);
  sgflow_run_destroy(run);

  sgflow_sweep* sweep = nullptr;
  EXPECT_EQ(sgflow_sweep_run(c, 1, &sweep), SGFLOW_ERR_INVALID_ARGUMENT);  // poisson has no h0
  sgflow_config_set(c, "problem", "gl");
  sgflow_config_set(c, "h0", "1,3");
  sgflow_config_set(c, "max_iter", "5");
  sgflow_config_set(c, "out", (dir / "sweep").c_str());
  ASSERT_EQ(sgflow_sweep_run(c, 0, &sweep), SGFLOW_OK);
  ASSERT_EQ(sgflow_sweep_count(sweep), 2u);
  EXPECT_EQ(sgflow_sweep_failed(sweep), 0u);
  EXPECT_EQ(sgflow_sweep_h0(sweep, 1), 3.0);
  EXPECT_STREQ(sgflow_sweep_error(sweep, 0), "");
  const sgflow_run* r1 = sgflow_sweep_result(sweep, 1);
  ASSERT_NE(r1, nullptr);
  EXPECT_GE(sgflow_run_vortex_count(r1), 0);
  EXPECT_EQ(sgflow_sweep_result(sweep, 5), nullptr);
  sgflow_sweep_destroy(sweep);
  sgflow_config_destroy(c);

  sgflow_checks* checks = nullptr;
  ASSERT_EQ(sgflow_checks_run("adjoint", 0, &checks), SGFLOW_OK);
  ASSERT_EQ(sgflow_checks_count(checks), 1u);
  EXPECT_STREQ(sgflow_checks_name(checks, 0), "adjoint");
  EXPECT_TRUE(sgflow_checks_passed(checks, 0));
  EXPECT_LE(sgflow_checks_value(checks, 0), sgflow_checks_limit(checks, 0));
  EXPECT_NE(sgflow_checks_detail(checks, 0), nullptr);
  sgflow_checks_destroy(checks);
}
