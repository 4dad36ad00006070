#include "sgflow/run.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "sgflow/error.hpp"

namespace sgflow {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string library_version() { return "0.1.0"; }

const char* to_string(ProblemKind kind) noexcept {
  switch (kind) {
    case ProblemKind::gl: return "gl";
    case ProblemKind::exp1d: return "exp1d";
    case ProblemKind::poisson2d: return "poisson2d";
  }
  return "unknown";
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::invalid_argument, what); }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
    bad("invalid number '" + s + "' for " + std::string(key));
  return v;
}

std::uint64_t parse_uint(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    bad("invalid non-negative integer '" + s + "' for " + std::string(key));
  return v;
}

std::vector<double> parse_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  const std::string s = trim(text);
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(parse_double(key, std::string_view(s).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

DirectionKind parse_direction(std::string_view text) {
  const std::string s = trim(text);
  if (s == "lm" || s == "lm_primal") return DirectionKind::lm_primal;
  if (s == "lm_dual") return DirectionKind::lm_dual;
  if (s == "sobolev") return DirectionKind::sobolev;
  if (s == "gn" || s == "gauss_newton") return DirectionKind::gauss_newton;
  if (s == "euclidean") return DirectionKind::euclidean;
  bad("unknown direction '" + s + "' (expected sobolev, lm, lm_dual, gn or euclidean)");
}

const char* direction_key(DirectionKind k) {
  switch (k) {
    case DirectionKind::lm_primal: return "lm";
    case DirectionKind::lm_dual: return "lm_dual";
    case DirectionKind::sobolev: return "sobolev";
    case DirectionKind::gauss_newton: return "gn";
    case DirectionKind::euclidean: return "euclidean";
  }
  return "lm";
}

ProblemKind parse_problem(std::string_view text) {
  const std::string s = trim(text);
  if (s == "gl") return ProblemKind::gl;
  if (s == "exp1d") return ProblemKind::exp1d;
  if (s == "poisson2d") return ProblemKind::poisson2d;
  bad("unknown problem '" + s + "' (expected gl, exp1d or poisson2d)");
}

Acceptance parse_acceptance(std::string_view text) {
  const std::string s = trim(text);
  if (s == "decrease") return Acceptance::decrease;
  if (s == "ratio") return Acceptance::ratio;
  bad("unknown acceptance '" + s + "' (expected decrease or ratio)");
}

GLInit parse_init(std::string_view text) {
  const std::string s = trim(text);
  if (s == "uniform") return GLInit::uniform;
  if (s == "gauged") return GLInit::gauged;
  if (s == "seeded-noise" || s == "seeded_noise" || s == "noise") return GLInit::seeded_noise;
  bad("unknown init '" + s + "' (expected uniform, gauged or seeded-noise)");
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace

void RunConfig::set(std::string_view raw_key, std::string_view value) {
  std::string key = trim(raw_key);
  std::replace(key.begin(), key.end(), '-', '_');
  if (key == "problem") problem = parse_problem(value);
  else if (key == "nx") nx = parse_uint(key, value);
  else if (key == "ny") ny = parse_uint(key, value);
  else if (key == "lx") lx = parse_double(key, value);
  else if (key == "ly") ly = parse_double(key, value);
  else if (key == "direction") direction = parse_direction(value);
  else if (key == "lambda0") lambda0 = parse_double(key, value);
  else if (key == "lambda_ceiling") lambda_ceiling = parse_double(key, value);
  else if (key == "regularization") regularization = parse_double(key, value);
  else if (key == "max_iter") max_iter = parse_uint(key, value);
  else if (key == "grad_tol") grad_tol = parse_double(key, value);
  else if (key == "stall_tol") stall_tol = parse_double(key, value);
  else if (key == "stall_window") stall_window = parse_uint(key, value);
  else if (key == "cg_tol") cg_tol = parse_double(key, value);
  else if (key == "acceptance") acceptance = parse_acceptance(value);
  else if (key == "kappa") kappa = parse_double(key, value);
  else if (key == "h0") h0 = parse_list(key, value);
  else if (key == "init") init = parse_init(value);
  else if (key == "noise") noise = parse_double(key, value);
  else if (key == "min_modulus") min_modulus = parse_double(key, value);
  else if (key == "source_x") source_x = parse_double(key, value);
  else if (key == "source_y") source_y = parse_double(key, value);
  else if (key == "penalty_weight") penalty_weight = parse_double(key, value);
  else if (key == "seed") seed = parse_uint(key, value);
  else if (key == "out") {
    out = trim(value);
    if (out.empty()) bad("out must not be empty");
  } else bad("unknown configuration key '" + key + "'");
}

Grid2D RunConfig::grid() const {
  if (!problem) bad("no problem selected");
  switch (*problem) {
    case ProblemKind::gl: return Grid2D(nx.value_or(48), ny.value_or(48), lx.value_or(4.0), ly.value_or(4.0));
    case ProblemKind::poisson2d:
      return Grid2D(nx.value_or(17), ny.value_or(17), lx.value_or(1.0), ly.value_or(1.0));
    case ProblemKind::exp1d:
      if (ny.value_or(1) != 1) bad("exp1d is one-dimensional: ny must be 1");
      return Grid2D::line(nx.value_or(65), lx.value_or(1.0));
  }
  bad("unknown problem");
}

FlowConfig RunConfig::flow_config() const {
  FlowConfig fc;
  fc.direction = direction;
  fc.lambda0 = lambda0;
  fc.lambda_ceiling = lambda_ceiling;
  fc.regularization = regularization;
  fc.max_iterations = max_iter;
  fc.grad_tol = grad_tol;
  fc.stall_tol = stall_tol;
  fc.stall_window = stall_window;
  fc.solver.tol = cg_tol;
  fc.acceptance = acceptance;
  return fc;
}

GLConfig RunConfig::gl_config(double h0_value) const {
  GLConfig gc;
  gc.kappa = kappa;
  gc.h0 = h0_value;
  const Grid2D g = grid();
  gc.lx = g.lx();
  gc.ly = g.ly();
  gc.init = init;
  gc.seed = seed;
  gc.noise = noise;
  return gc;
}

void RunConfig::validate() const {
  if (!problem) bad("missing required setting: problem");
  const Grid2D g = grid();
  flow_config().validate();
  if (*problem == ProblemKind::gl) gl_config(h0.empty() ? 0.0 : h0.front()).validate();
  if (*problem != ProblemKind::gl && g.dim() == 2 && *problem == ProblemKind::exp1d)
    bad("exp1d needs ny = 1");
  if (!(penalty_weight > 0.0)) bad("penalty_weight must be positive");
  if (!(min_modulus > 0.0)) bad("min_modulus must be positive");
}

RunConfig parse_config(std::string_view text) {
  RunConfig c;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      bad("config line " + std::to_string(line_no) + ": expected key = value");
    c.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize(const RunConfig& c) {
  std::ostringstream o;
  if (c.problem) o << "problem = " << to_string(*c.problem) << '\n';
  if (c.nx) o << "nx = " << *c.nx << '\n';
  if (c.ny) o << "ny = " << *c.ny << '\n';
  if (c.lx) o << "lx = " << format_double(*c.lx) << '\n';
  if (c.ly) o << "ly = " << format_double(*c.ly) << '\n';
  o << "direction = " << direction_key(c.direction) << '\n'
    << "lambda0 = " << format_double(c.lambda0) << '\n'
    << "lambda_ceiling = " << format_double(c.lambda_ceiling) << '\n'
    << "regularization = " << format_double(c.regularization) << '\n'
    << "max_iter = " << c.max_iter << '\n'
    << "grad_tol = " << format_double(c.grad_tol) << '\n'
    << "stall_tol = " << format_double(c.stall_tol) << '\n'
    << "stall_window = " << c.stall_window << '\n'
    << "cg_tol = " << format_double(c.cg_tol) << '\n'
    << "acceptance = " << (c.acceptance == Acceptance::ratio ? "ratio" : "decrease") << '\n'
    << "kappa = " << format_double(c.kappa) << '\n';
  if (!c.h0.empty()) o << "h0 = " << join(c.h0) << '\n';
  o << "init = " << to_string(c.init) << '\n'
    << "noise = " << format_double(c.noise) << '\n'
    << "min_modulus = " << format_double(c.min_modulus) << '\n'
    << "source_x = " << format_double(c.source_x) << '\n'
    << "source_y = " << format_double(c.source_y) << '\n'
    << "penalty_weight = " << format_double(c.penalty_weight) << '\n'
    << "seed = " << c.seed << '\n'
    << "out = " << c.out << '\n';
  return o.str();
}

namespace {

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof buf);
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::io, "cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  void write(const std::string& name, const std::string& content) {
    const fs::path p = dir_ / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write " + p.string());
    out << content;
    out.close();
    if (!out) throw Error(ErrorCode::io, "failed writing " + p.string());
    files_.push_back(p);
  }

  const std::vector<fs::path>& files() const noexcept { return files_; }
  const fs::path& dir() const noexcept { return dir_; }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
};

/// Row = y index, comma-separated x values.
std::string matrix_csv(const Grid2D& grid, std::span<const double> values) {
  std::string out;
  for (std::size_t j = 0; j < grid.ny(); ++j) {
    for (std::size_t i = 0; i < grid.nx(); ++i) {
      if (i) out += ',';
      out += format_double(values[grid.node(i, j)]);
    }
    out += '\n';
  }
  return out;
}

std::string iterations_csv(const FlowTrace& trace) {
  std::string out = "iteration,energy,grad_norm,lambda,accepted,cg_iters\n";
  for (const auto& r : trace.records) {
    out += std::to_string(r.iteration) + ',' + format_double(r.energy) + ',' +
           format_double(r.metric_grad_norm) + ',' + format_double(r.lambda) + ',' +
           (r.accepted ? "1" : "0") + ',' + std::to_string(r.cg_iterations) + '\n';
  }
  return out;
}

json vortex_json(const Grid2D& grid, const VortexReport& v, double min_modulus) {
  json cells = json::array();
  for (const auto& c : v.vortices) {
    const auto xy = grid.cell_center(c.cell);
    cells.push_back({{"cell", c.cell}, {"x", xy[0]}, {"y", xy[1]}, {"winding", c.winding}, {"modulus", c.modulus}});
  }
  return {{"count", v.count()},
          {"total_winding", v.total_winding},
          {"min_modulus", min_modulus},
          {"vortices", cells},
          {"under_resolved", v.under_resolved},
          {"indeterminate", v.indeterminate}};
}

}  // namespace

RunOutcome run_solve(const RunConfig& config) {
  config.validate();
  if (config.h0.size() > 1) bad("solve takes a single h0 value; use sweep for a list");
  const double h0 = config.h0.empty() ? 0.0 : config.h0.front();
  const Grid2D grid = config.grid();

  SystemPtr system;
  NodalField u0;
  switch (*config.problem) {
    case ProblemKind::gl: {
      const GLConfig gc = config.gl_config(h0);
      system = gl_system(gc);
      u0 = gl_initialize(gc, grid);
      break;
    }
    case ProblemKind::exp1d:
      system = model_problem_exponential(config.penalty_weight);
      u0 = NodalField(grid.node_count(), 1, 1.0);
      break;
    case ProblemKind::poisson2d:
      system = model_problem_linear_poisson(config.source_x, config.source_y, config.penalty_weight);
      u0 = NodalField(grid.node_count(), 1, 0.0);
      break;
  }
  const Problem problem(system, grid);
  const FlowConfig fc = config.flow_config();

  const auto t0 = std::chrono::steady_clock::now();
  FlowTrace trace = run_flow(problem, std::move(u0), fc);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  RunOutcome outcome;
  outcome.termination = trace.termination;
  outcome.message = trace.message;
  outcome.final_energy = trace.final_state.energy;
  outcome.iterations = trace.records.size();
  outcome.accepted = trace.accepted_steps();
  outcome.monitor = trace.monitor;

  ArtifactWriter writer(config.out);
  const NodalField& u = trace.final_state.u;
  if (*config.problem == ProblemKind::gl) {
    const char* names[] = {"r.csv", "s.csv", "a.csv", "b.csv"};
    for (std::size_t f = 0; f < 4; ++f) writer.write(names[f], matrix_csv(grid, u.field(f)));
    writer.write("density.csv", matrix_csv(grid, gl_density(u)));
    outcome.vortices = count_vortices(grid, u, config.min_modulus);
    writer.write("vortices.json", vortex_json(grid, *outcome.vortices, config.min_modulus).dump(2) + "\n");
  } else {
    writer.write("u.csv", matrix_csv(grid, u.field(0)));
  }
  writer.write("iterations.csv", iterations_csv(trace));
  writer.write("config.txt", serialize(config));

  json manifest;
  manifest["version"] = library_version();
  manifest["problem"] = to_string(*config.problem);
  json cfg = json::object();
  const RunConfig echo = parse_config(serialize(config));
  {
    std::istringstream lines(serialize(echo));
    std::string line;
    while (std::getline(lines, line)) {
      const auto eq = line.find('=');
      cfg[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
  }
  manifest["config"] = cfg;
  manifest["grid"] = {{"nx", grid.nx()}, {"ny", grid.ny()}, {"lx", grid.lx()}, {"ly", grid.ly()}};
  manifest["termination"] = to_string(trace.termination);
  manifest["message"] = trace.message;
  manifest["final_energy"] = trace.final_state.energy;
  manifest["iterations"] = outcome.iterations;
  manifest["accepted_steps"] = outcome.accepted;
  manifest["final_lambda"] = trace.final_state.lambda;
  manifest["wall_time_s"] = wall;
  manifest["gradient_inequality"] = {{"theta", trace.monitor.theta},
                                     {"m", trace.monitor.m},
                                     {"points", trace.monitor.points},
                                     {"valid", trace.monitor.valid}};
  if (outcome.vortices)
    manifest["vortices"] = {{"count", outcome.vortices->count()}, {"total_winding", outcome.vortices->total_winding}};
  json files = json::array();
  for (const auto& p : writer.files())
    files.push_back({{"file", p.filename().string()}, {"bytes", fs::file_size(p)}, {"sha256", sha256_file(p)}});
  manifest["artifacts"] = files;
  outcome.artifacts = writer.files();
  writer.write("manifest.json", manifest.dump(2) + "\n");
  outcome.artifacts.push_back(writer.files().back());
  return outcome;
}

std::size_t SweepOutcome::failed() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(failures.begin(), failures.end(), [](const std::string& s) { return !s.empty(); }));
}

namespace {

std::size_t thread_budget(std::size_t requested) {
  if (requested > 0) return requested;
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SGFLOW_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) n = std::min<std::size_t>(n, static_cast<std::size_t>(v));
  }
  return n;
}

std::string h0_dirname(double h0) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "h0_%g", h0);
  return buf;
}

}  // namespace

SweepOutcome run_sweep(const RunConfig& config, std::size_t threads) {
  if (config.h0.empty()) bad("sweep needs at least one h0 value");
  config.validate();
  if (*config.problem != ProblemKind::gl) bad("sweep is defined for the gl problem");

  SweepOutcome sweep;
  sweep.h0 = config.h0;
  const std::size_t n = config.h0.size();
  sweep.runs.resize(n);
  sweep.failures.assign(n, {});

  std::vector<RunConfig> subs(n, config);
  for (std::size_t k = 0; k < n; ++k) {
    subs[k].h0 = {config.h0[k]};
    subs[k].seed = config.seed + k;
    subs[k].out = (fs::path(config.out) / h0_dirname(config.h0[k])).string();
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        sweep.runs[k] = run_solve(subs[k]);
        if (!sweep.runs[k].ok()) sweep.failures[k] = sweep.runs[k].message;
      } catch (const std::exception& e) {
        sweep.failures[k] = e.what();
      }
    }
  };
  const std::size_t workers = std::min(thread_budget(threads), n);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  ArtifactWriter writer(config.out);
  std::string summary = "h0,final_energy,iterations,vortex_count,total_winding\n";
  json runs = json::array();
  for (std::size_t k = 0; k < n; ++k) {
    const auto& r = sweep.runs[k];
    const bool have = sweep.failures[k].empty() || r.vortices.has_value();
    summary += format_double(config.h0[k]) + ',' + (have ? format_double(r.final_energy) : "nan") + ',' +
               std::to_string(r.iterations) + ',' +
               (r.vortices ? std::to_string(r.vortices->count()) : "") + ',' +
               (r.vortices ? std::to_string(r.vortices->total_winding) : "") + '\n';
    runs.push_back({{"h0", config.h0[k]},
                    {"seed", subs[k].seed},
                    {"directory", h0_dirname(config.h0[k])},
                    {"termination", to_string(r.termination)},
                    {"error", sweep.failures[k]}});
  }
  writer.write("summary.csv", summary);
  json manifest = {{"version", library_version()}, {"runs", runs}, {"failed", sweep.failed()}};
  writer.write("sweep.json", manifest.dump(2) + "\n");
  return sweep;
}

}  // namespace sgflow
