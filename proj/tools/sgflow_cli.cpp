// Command-line front end. Talks to the library only through the C API.
#include <cstdio>
#include <cstdlib>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sgflow/sgflow.h"

namespace {

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;

using ConfigPtr = std::unique_ptr<sgflow_config, decltype(&sgflow_config_destroy)>;

struct Flags {
  std::string config_file;
  // Flag name -> config key, in the order they were declared.
  std::vector<std::pair<std::string, std::string>> keyed;
  std::map<std::string, std::string> values;
  std::vector<std::string> extra;  // --set key=value
};

void add_run_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_file, "key = value config file; flags override it");
  const std::vector<std::pair<std::string, std::string>> flags = {
      {"problem", "gl, exp1d or poisson2d"},
      {"nx", "nodes in x"},
      {"ny", "nodes in y (1 for exp1d)"},
      {"lx", "domain length in x"},
      {"ly", "domain length in y"},
      {"kappa", "GL parameter"},
      {"h0", "applied field; a comma-separated list for sweep"},
      {"seed", "noise seed (sweeps use seed + index)"},
      {"lambda0", "initial damping / time step"},
      {"max-iter", "iteration budget"},
      {"grad-tol", "relative gradient tolerance"},
      {"direction", "sobolev, lm or gn"},
      {"out", "output directory"},
  };
  for (const auto& [name, help] : flags) {
    f.keyed.emplace_back(name, name);
    cmd->add_option("--" + name, f.values[name], help);
  }
  cmd->add_option("--set", f.extra, "any other config setting as key=value")->take_all();
}

void report(const char* what) {
  std::fprintf(stderr, "sgflow: %s: %s\n", what, sgflow_last_error());
}

/// Builds the config from file and flags. Returns 0 or an exit code.
int build_config(const Flags& f, CLI::App* cmd, ConfigPtr& cfg) {
  sgflow_config* raw = nullptr;
  if (sgflow_config_create(&raw) != SGFLOW_OK) {
    report("config");
    return kExitError;
  }
  cfg.reset(raw);
  if (!f.config_file.empty() && sgflow_config_load(cfg.get(), f.config_file.c_str()) != SGFLOW_OK) {
    report("config file");
    return kExitUsage;
  }
  for (const auto& [name, key] : f.keyed) {
    if (cmd->count("--" + name) == 0) continue;
    if (sgflow_config_set(cfg.get(), key.c_str(), f.values.at(name).c_str()) != SGFLOW_OK) {
      report(("--" + name).c_str());
      return kExitUsage;
    }
  }
  for (const auto& kv : f.extra) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "sgflow: --set expects key=value, got '%s'\n", kv.c_str());
      return kExitUsage;
    }
    if (sgflow_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()) != SGFLOW_OK) {
      report("--set");
      return kExitUsage;
    }
  }
  if (sgflow_config_validate(cfg.get()) != SGFLOW_OK) {
    report("invalid configuration");
    return kExitUsage;
  }
  return 0;
}

void print_run(const sgflow_run* run) {
  std::printf("termination: %s\n", sgflow_run_termination(run));
  std::printf("final energy: %.17g\n", sgflow_run_final_energy(run));
  std::printf("iterations: %zu (%zu accepted)\n", sgflow_run_iterations(run), sgflow_run_accepted(run));
  if (sgflow_run_vortex_count(run) >= 0)
    std::printf("vortices: %ld (total winding %ld)\n", sgflow_run_vortex_count(run),
                sgflow_run_total_winding(run));
  if (*sgflow_run_message(run)) std::printf("message: %s\n", sgflow_run_message(run));
}

int cmd_solve(const Flags& f, CLI::App* cmd) {
  ConfigPtr cfg(nullptr, sgflow_config_destroy);
  if (int rc = build_config(f, cmd, cfg)) return rc;
  sgflow_run* run = nullptr;
  const sgflow_status st = sgflow_solve(cfg.get(), &run);
  if (st != SGFLOW_OK) {
    report("solve");
    return st == SGFLOW_ERR_INVALID_ARGUMENT ? kExitUsage : kExitError;
  }
  print_run(run);
  const int rc = sgflow_run_ok(run) ? 0 : kExitError;
  sgflow_run_destroy(run);
  return rc;
}

int cmd_sweep(const Flags& f, CLI::App* cmd) {
  ConfigPtr cfg(nullptr, sgflow_config_destroy);
  if (int rc = build_config(f, cmd, cfg)) return rc;
  sgflow_sweep* sweep = nullptr;
  const sgflow_status st = sgflow_sweep_run(cfg.get(), 0, &sweep);
  if (st != SGFLOW_OK) {
    report("sweep");
    return st == SGFLOW_ERR_INVALID_ARGUMENT ? kExitUsage : kExitError;
  }
  const std::size_t n = sgflow_sweep_count(sweep);
  std::printf("%-10s %-20s %-24s %8s %8s\n", "h0", "termination", "final_energy", "iters", "vortices");
  for (std::size_t i = 0; i < n; ++i) {
    const sgflow_run* r = sgflow_sweep_result(sweep, i);
    std::printf("%-10g %-20s %-24.17g %8zu %8ld\n", sgflow_sweep_h0(sweep, i), sgflow_run_termination(r),
                sgflow_run_final_energy(r), sgflow_run_iterations(r), sgflow_run_vortex_count(r));
    if (*sgflow_sweep_error(sweep, i))
      std::fprintf(stderr, "sgflow: h0 = %g failed: %s\n", sgflow_sweep_h0(sweep, i), sgflow_sweep_error(sweep, i));
  }
  const bool all_failed = n > 0 && sgflow_sweep_failed(sweep) == n;
  sgflow_sweep_destroy(sweep);
  return all_failed ? kExitError : 0;
}

int cmd_check(const std::string& filter) {
  const char* env = std::getenv("SGFLOW_CHECK_INJECT_FAULT");
  const int inject = env && *env && std::string(env) != "0";
  sgflow_checks* checks = nullptr;
  if (sgflow_checks_run(filter.c_str(), inject, &checks) != SGFLOW_OK) {
    report("check");
    return kExitError;
  }
  const std::size_t n = sgflow_checks_count(checks);
  if (n == 0) {
    std::fprintf(stderr, "sgflow: no check matches '%s'\n", filter.c_str());
    sgflow_checks_destroy(checks);
    return kExitUsage;
  }
  std::printf("%-30s %-6s %-12s %-8s %s\n", "check", "result", "value", "limit", "detail");
  std::vector<std::string> failed;
  for (std::size_t i = 0; i < n; ++i) {
    const bool ok = sgflow_checks_passed(checks, i);
    std::printf("%-30s %-6s %-12.3e %-8.0e %s\n", sgflow_checks_name(checks, i), ok ? "PASS" : "FAIL",
                sgflow_checks_value(checks, i), sgflow_checks_limit(checks, i), sgflow_checks_detail(checks, i));
    if (!ok) failed.emplace_back(sgflow_checks_name(checks, i));
  }
  sgflow_checks_destroy(checks);
  if (failed.empty()) return 0;
  std::fflush(stdout);
  std::fprintf(stderr, "failed checks:");
  for (const auto& name : failed) std::fprintf(stderr, " %s", name.c_str());
  std::fprintf(stderr, "\n");
  return kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sobolev-gradient and Levenberg-Marquardt flows for least-squares PDE energies"};
  app.set_version_flag("--version", std::string(sgflow_version()));
  app.require_subcommand(1);

  Flags solve_flags, sweep_flags;
  std::string filter;
  auto* solve = app.add_subcommand("solve", "run one flow and write its artifacts");
  add_run_flags(solve, solve_flags);
  auto* sweep = app.add_subcommand("sweep", "one gl run per h0 value, plus summary.csv");
  add_run_flags(sweep, sweep_flags);
  auto* check = app.add_subcommand("check", "run the verification battery");
  check->add_option("--filter", filter, "run only checks whose name contains this");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*solve) return cmd_solve(solve_flags, solve);
  if (*sweep) return cmd_sweep(sweep_flags, sweep);
  return cmd_check(filter);
}
