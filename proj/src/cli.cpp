#include "qsd/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qsd/analysis.hpp"
#include "qsd/benchmark.hpp"
#include "qsd/driver.hpp"
#include "qsd/errors.hpp"
#include "qsd/euler.hpp"
#include "qsd/finite_kernel.hpp"
#include "qsd/io.hpp"
#include "qsd/measure_ode.hpp"
#include "qsd/oracle.hpp"
#include "qsd/version.hpp"

namespace qsd {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Strict schema helpers: every key is checked against a per-command
// allowlist and every value against its expected type, with dotted paths in
// error messages.

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw config_error(path + ": " + msg);
}

void need_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

double need_num(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

std::int64_t need_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<std::int64_t>();
}

std::uint64_t need_u64(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  fail(path, "expected a nonnegative integer");
}

bool need_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected a boolean");
  return j.get<bool>();
}

std::string need_str(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

void check_allowed(const json& obj, const std::string& path,
                   std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (item.key() == a) {
        ok = true;
        break;
      }
    if (!ok) fail(path + "." + item.key(), "unknown key");
  }
}

const json* opt(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& req(const json& obj, const std::string& path, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "required key is missing");
  return *it;
}

// ---------------------------------------------------------------------------
// Parsed configuration pieces.

struct ParsedModel {
  enum class Kind { finite, benchmark, ou } kind = Kind::finite;
  KernelFamily family;  // finite only
  EulerModel model;     // benchmark / ou
  double gamma = 0.0;   // benchmark coupling
  double h = 0.0;
};

ParsedModel parse_model(const json& j, const std::string& path) {
  need_object(j, path);
  const std::string kind = need_str(req(j, path, "kind"), path + ".kind");
  ParsedModel out;
  if (kind == "finite") {
    check_allowed(j, path, {"kind", "m", "kappa", "beta", "P"});
    const auto m64 = need_int(req(j, path, "m"), path + ".m");
    if (m64 < 1 || m64 > 1000) fail(path + ".m", "state count must be in [1, 1000]");
    const int m = static_cast<int>(m64);
    const double kappa = need_num(req(j, path, "kappa"), path + ".kappa");
    if (!(kappa > 0.0 && kappa < 1.0)) fail(path + ".kappa", "must lie in (0,1)");
    const double beta = need_num(req(j, path, "beta"), path + ".beta");
    if (!(beta >= 0.0)) fail(path + ".beta", "must be >= 0");
    out.kind = ParsedModel::Kind::finite;
    const json* P = opt(j, "P");
    if (P == nullptr || (P->is_string() && P->get<std::string>() == "uniform")) {
      out.family = mean_field_family_uniform(m, kappa, beta);
    } else if (P->is_array()) {
      if (static_cast<int>(P->size()) != m) fail(path + ".P", "needs m rows");
      Mat rows(m, m);
      for (int i = 0; i < m; ++i) {
        const json& r = (*P)[static_cast<std::size_t>(i)];
        if (!r.is_array() || static_cast<int>(r.size()) != m)
          fail(path + ".P", "row " + std::to_string(i) + " needs m entries");
        for (int c = 0; c < m; ++c)
          rows(i, c) = need_num(r[static_cast<std::size_t>(c)],
                                path + ".P[" + std::to_string(i) + "]");
      }
      try {
        out.family = mean_field_family(m, kappa, beta, rows);
      } catch (const model_error& e) {
        fail(path + ".P", e.what());
      }
    } else {
      fail(path + ".P", "expected \"uniform\" or an m x m array");
    }
    return out;
  }
  if (kind == "benchmark") {
    check_allowed(j, path, {"kind", "gamma", "h"});
    out.kind = ParsedModel::Kind::benchmark;
    out.gamma = need_num(req(j, path, "gamma"), path + ".gamma");
    if (!(out.gamma >= 0.0)) fail(path + ".gamma", "must be >= 0");
    out.h = need_num(req(j, path, "h"), path + ".h");
    if (!(out.h > 0.0)) fail(path + ".h", "must be > 0");
    out.model = benchmark_model(out.gamma, out.h);
    return out;
  }
  if (kind == "ou_interaction") {
    check_allowed(j, path, {"kind", "h", "decay", "coupling", "R", "noise"});
    out.kind = ParsedModel::Kind::ou;
    out.h = need_num(req(j, path, "h"), path + ".h");
    if (!(out.h > 0.0)) fail(path + ".h", "must be > 0");
    const double decay = need_num(req(j, path, "decay"), path + ".decay");
    if (!(decay > 0.0)) fail(path + ".decay", "must be > 0");
    const double coupling = need_num(req(j, path, "coupling"), path + ".coupling");
    const double R = need_num(req(j, path, "R"), path + ".R");
    if (!(R > 0.0)) fail(path + ".R", "must be > 0");

    EulerModel m;
    m.dim = 1;
    m.h = out.h;
    m.drift = [decay, coupling](const double* x, const MeasureView& mu, double* o) {
      o[0] = -decay * x[0] + coupling * std::tanh(mu.mean(0) - x[0]);
    };
    m.domain = Domain::interval(0.0, std::numeric_limits<double>::infinity());
    m.truncation = TruncationMap{R};
    if (const json* nj = opt(j, "noise")) {
      need_object(*nj, path + ".noise");
      check_allowed(*nj, path + ".noise", {"kind", "alpha"});
      const std::string nk = need_str(req(*nj, path + ".noise", "kind"), path + ".noise.kind");
      if (nk == "gaussian") {
        m.noise.kind = NoiseSpec::Kind::gaussian;
      } else if (nk == "stable") {
        m.noise.kind = NoiseSpec::Kind::stable;
        m.noise.alpha = need_num(req(*nj, path + ".noise", "alpha"), path + ".noise.alpha");
        if (!(m.noise.alpha > 0.0 && m.noise.alpha < 2.0))
          fail(path + ".noise.alpha", "stable index must lie in (0,2)");
      } else {
        fail(path + ".noise.kind", "expected \"gaussian\" or \"stable\"");
      }
    }
    out.model = std::move(m);
    return out;
  }
  fail(path + ".kind", "expected \"finite\", \"benchmark\", or \"ou_interaction\"");
}

StepSchedule parse_schedule(const json& j, const std::string& path) {
  need_object(j, path);
  check_allowed(j, path, {"kind", "alpha"});
  const std::string kind = need_str(req(j, path, "kind"), path + ".kind");
  if (kind == "constant-gamma")
    fail(path + ".kind",
         "constant step sizes are not admissible: the update weights must "
         "satisfy sum gamma_n^2 < infinity and gamma_n = o(1/log n); use "
         "\"polynomial\" or \"constant-weight\"");
  if (kind == "constant-weight") {
    if (opt(j, "alpha") != nullptr)
      fail(path + ".alpha", "not accepted for constant-weight");
    return StepSchedule::constant_weight();
  }
  if (kind == "polynomial") {
    const double alpha = need_num(req(j, path, "alpha"), path + ".alpha");
    if (!(alpha > -1.0)) fail(path + ".alpha", "must be > -1");
    return StepSchedule::polynomial(alpha);
  }
  fail(path + ".kind", "expected \"polynomial\" or \"constant-weight\"");
}

struct AnalysisConfig {
  double grid_a = -1.0, grid_b = 1.0;
  int grid_n = 401;
  double bandwidth = 0.0;  // <= 0: data-driven
  HistogramSpec histogram{50, -1.0, 1.0};
};

AnalysisConfig parse_analysis(const json* j, const std::string& path,
                              const ParsedModel& model) {
  AnalysisConfig a;
  if (model.kind == ParsedModel::Kind::ou) {
    a.grid_a = 0.0;
    a.grid_b = 10.0;
    a.histogram = HistogramSpec{50, 0.0, 10.0};
  }
  if (j == nullptr) return a;
  need_object(*j, path);
  check_allowed(*j, path, {"grid", "bandwidth", "histogram"});
  if (const json* g = opt(*j, "grid")) {
    need_object(*g, path + ".grid");
    check_allowed(*g, path + ".grid", {"a", "b", "n"});
    a.grid_a = need_num(req(*g, path + ".grid", "a"), path + ".grid.a");
    a.grid_b = need_num(req(*g, path + ".grid", "b"), path + ".grid.b");
    const auto n = need_int(req(*g, path + ".grid", "n"), path + ".grid.n");
    if (!(a.grid_a < a.grid_b)) fail(path + ".grid", "needs a < b");
    if (n < 2 || n > 1000000) fail(path + ".grid.n", "must be in [2, 1000000]");
    a.grid_n = static_cast<int>(n);
    a.histogram.lo = a.grid_a;
    a.histogram.hi = a.grid_b;
  }
  if (const json* b = opt(*j, "bandwidth"))
    a.bandwidth = need_num(*b, path + ".bandwidth");
  if (const json* h = opt(*j, "histogram")) {
    need_object(*h, path + ".histogram");
    check_allowed(*h, path + ".histogram", {"bins", "lo", "hi"});
    const auto bins = need_int(req(*h, path + ".histogram", "bins"), path + ".histogram.bins");
    if (bins < 0 || bins > 100000) fail(path + ".histogram.bins", "must be in [0, 100000]");
    a.histogram.bins = static_cast<int>(bins);
    a.histogram.lo = need_num(req(*h, path + ".histogram", "lo"), path + ".histogram.lo");
    a.histogram.hi = need_num(req(*h, path + ".histogram", "hi"), path + ".histogram.hi");
    if (a.histogram.bins > 0 && !(a.histogram.lo < a.histogram.hi))
      fail(path + ".histogram", "needs lo < hi");
  }
  return a;
}

struct OutputConfig {
  fs::path dir = "out";
  bool particle_dump = false;
};

OutputConfig parse_output(const json* j, const std::string& path) {
  OutputConfig o;
  if (j == nullptr) return o;
  need_object(*j, path);
  check_allowed(*j, path, {"dir", "particle_dump"});
  if (const json* d = opt(*j, "dir")) o.dir = need_str(*d, path + ".dir");
  if (const json* p = opt(*j, "particle_dump"))
    o.particle_dump = need_bool(*p, path + ".particle_dump");
  return o;
}

void check_top_level(const json& cfg, const std::string& command,
                     std::initializer_list<const char*> allowed) {
  need_object(cfg, "config");
  check_allowed(cfg, "config", allowed);
  const std::string c = need_str(req(cfg, "config", "command"), "config.command");
  if (c != command)
    fail("config.command", "is \"" + c + "\" but the invoked command is \"" + command + "\"");
}

// ---------------------------------------------------------------------------
// Shared output helpers.

std::string csv_header_line(const json& header) { return "# " + header.dump() + "\n"; }

void append_snapshot_csv(std::string& out, const std::vector<Snapshot>& snaps) {
  std::size_t bins = 0;
  for (const auto& s : snaps) bins = std::max(bins, s.hist.size());
  out += "n,gamma,kills_cum,mean,var,lyapunov";
  for (std::size_t b = 0; b < bins; ++b) out += ",hist_" + std::to_string(b);
  out += "\n";
  for (const auto& s : snaps) {
    out += std::to_string(s.n);
    out += ',';
    out += io::format_double(s.gamma);
    out += ',';
    out += std::to_string(s.kills_cum);
    out += ',';
    out += io::format_double(s.mean);
    out += ',';
    out += io::format_double(s.variance);
    out += ',';
    out += io::format_double(s.lyapunov);
    for (std::size_t b = 0; b < bins; ++b) {
      out += ',';
      out += io::format_double(b < s.hist.size() ? s.hist[b] : 0.0);
    }
    out += "\n";
  }
}

std::string density_csv(const json& header, const DensityOnGrid& d) {
  std::string out = csv_header_line(header);
  out += "x,f\n";
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    out += io::format_double(d.x[i]);
    out += ',';
    out += io::format_double(d.f[i]);
    out += '\n';
  }
  return out;
}

// Late-window kill rate over roughly the last fifth of the run.
double late_kill_rate(const std::vector<Snapshot>& snaps, std::uint64_t n_steps,
                      std::uint64_t kills_total) {
  const Snapshot* anchor = nullptr;
  for (const auto& s : snaps)
    if (s.n <= n_steps - n_steps / 5)
      anchor = &s;
    else
      break;
  if (anchor == nullptr || anchor->n == n_steps)
    return static_cast<double>(kills_total) / static_cast<double>(n_steps);
  return static_cast<double>(kills_total - anchor->kills_cum) /
         static_cast<double>(n_steps - anchor->n);
}

// Distinct self-consistent occupation laws of a finite family, found from
// every corner plus the uniform start.
std::vector<FixedPointReport> distinct_fixed_points(const KernelFamily& fam) {
  std::vector<FixedPointReport> out;
  for (const auto& start : make_mu_grid(fam.m, 0, 1)) {
    FixedPointReport rep = qsd_fixed_point(fam, start);
    if (!rep.converged) continue;
    bool fresh = true;
    for (const auto& seen : out)
      if (seen.mu.tv(rep.mu) < 1e-8) {
        fresh = false;
        break;
      }
    if (fresh) out.push_back(std::move(rep));
  }
  return out;
}

json measure_json(const DiscreteMeasure& mu) {
  json j = json::array();
  for (const double p : mu.p) j.push_back(p);
  return j;
}

// ---------------------------------------------------------------------------
// simulate

struct ReplicaOutput {
  std::vector<Snapshot> snapshots;
  json final_measure;
  json summary;
  std::optional<DensityOnGrid> density;
  std::optional<DiscreteMeasure> finite_occupation;
  WeightedEmpiricalMeasure particles;
  bool euler = false;
};

ReplicaOutput simulate_one(const ParsedModel& model, const StepSchedule& schedule,
                           const RunConfig& base_cfg, const json& run_j,
                           const AnalysisConfig& ana, std::uint64_t seed) {
  RunConfig cfg = base_cfg;
  cfg.schedule = schedule;
  cfg.seed = seed;

  ReplicaOutput out;
  if (model.kind == ParsedModel::Kind::finite) {
    int x0 = 0;
    if (const json* x = opt(run_j, "x0")) x0 = static_cast<int>(need_int(*x, "config.run.x0"));
    cfg.histogram.bins = 0;  // snapshots carry the per-state occupation
    FiniteRunResult res = run_finite(model.family, x0, cfg);

    out.snapshots = std::move(res.snapshots);
    out.finite_occupation = res.occupation;
    out.final_measure["kind"] = "finite";
    out.final_measure["probabilities"] = measure_json(res.occupation);

    json sum;
    sum["n_steps"] = cfg.n_steps;
    sum["kills"] = res.kills;
    const double late = late_kill_rate(out.snapshots, cfg.n_steps, res.kills);
    sum["kill_rate_late"] = late;
    sum["final_mean"] = res.occupation.mean_position();

    const auto fps = distinct_fixed_points(model.family);
    json fixed = json::array();
    double best_tv = std::numeric_limits<double>::infinity();
    int best_idx = -1;
    for (std::size_t i = 0; i < fps.size(); ++i) {
      const double tv = res.occupation.tv(fps[i].mu);
      const auto cert = check_qsd_characterization(model.family, fps[i].mu);
      json f;
      f["mu"] = measure_json(fps[i].mu);
      f["tv_to_occupation"] = tv;
      f["extinction_rate"] = 1.0 - cert.survival_rate;
      fixed.push_back(std::move(f));
      if (tv < best_tv) {
        best_tv = tv;
        best_idx = static_cast<int>(i);
      }
    }
    sum["oracle_fixed_points"] = std::move(fixed);
    sum["tv_to_nearest"] = best_tv;
    sum["nearest_index"] = best_idx;
    if (best_idx >= 0) {
      const auto cert = check_qsd_characterization(model.family, fps[static_cast<std::size_t>(best_idx)].mu);
      sum["kill_rate_dev"] = late - (1.0 - cert.survival_rate);
    }
    out.summary = std::move(sum);
    return out;
  }

  // Euler models.
  std::vector<double> x0{model.kind == ParsedModel::Kind::ou ? 1.0 : 0.0};
  if (const json* x = opt(run_j, "x0")) {
    if (x->is_array()) {
      if (x->size() != 1) fail("config.run.x0", "expected a single coordinate");
      x0[0] = need_num((*x)[0], "config.run.x0[0]");
    } else {
      x0[0] = need_num(*x, "config.run.x0");
    }
  }
  cfg.histogram = ana.histogram;
  EulerRunResult res = run_euler(model.model, x0, cfg);
  out.euler = true;
  out.snapshots = std::move(res.snapshots);

  DensityOnGrid grid = make_grid(ana.grid_a, ana.grid_b, ana.grid_n);
  out.density = kde(res.occupation, ana.bandwidth, std::move(grid));

  out.final_measure["kind"] = "empirical";
  out.final_measure["count"] = res.occupation.size();
  out.final_measure["mean"] = res.occupation.mean(0);
  out.final_measure["variance"] = res.occupation.variance(0);

  json sum;
  sum["n_steps"] = cfg.n_steps;
  sum["kills"] = res.kills;
  sum["kill_rate_late"] = late_kill_rate(out.snapshots, cfg.n_steps, res.kills);
  sum["final_mean"] = res.occupation.mean(0);
  sum["final_variance"] = res.occupation.variance(0);

  if (model.kind == ParsedModel::Kind::benchmark) {
    const std::vector<double> roots = b_fixed_points(model.gamma);
    json dist = json::array();
    double min_l1 = std::numeric_limits<double>::infinity();
    double closest_b = 0.0;
    for (const double b : roots) {
      DensityOnGrid ref = pi_b_density(b, make_grid(ana.grid_a, ana.grid_b, ana.grid_n));
      const DistanceReport r = distances(*out.density, ref);
      json d;
      d["b"] = b;
      d["l1"] = r.l1;
      d["tv"] = r.tv;
      d["w1"] = r.w1;
      d["ks"] = r.ks;
      dist.push_back(std::move(d));
      if (r.l1 < min_l1) {
        min_l1 = r.l1;
        closest_b = b;
      }
    }
    json ref;
    ref["gamma"] = model.gamma;
    ref["roots"] = roots;
    ref["distances"] = std::move(dist);
    ref["min_l1"] = min_l1;
    ref["closest_b"] = closest_b;
    sum["reference"] = std::move(ref);
  }

  if (cfg.lyapunov_p) {
    double first_half = 0.0, second_half = 0.0;
    for (const auto& s : out.snapshots) {
      if (s.n * 2 <= cfg.n_steps)
        first_half = std::max(first_half, s.lyapunov);
      else
        second_half = std::max(second_half, s.lyapunov);
    }
    json ly;
    ly["p"] = *cfg.lyapunov_p;
    ly["running_max_first_half"] = first_half;
    ly["running_max_second_half"] = second_half;
    sum["lyapunov"] = std::move(ly);
  }

  out.summary = std::move(sum);
  out.particles = std::move(res.occupation);
  return out;
}

int cmd_simulate(const json& cfg, const std::optional<std::uint64_t>& seed_override,
                 const std::optional<std::string>& out_override,
                 const std::optional<int>& replicas_override) {
  check_top_level(cfg, "simulate",
                  {"command", "model", "schedule", "run", "analysis", "output"});
  const ParsedModel model = parse_model(req(cfg, "config", "model"), "config.model");
  const StepSchedule schedule =
      parse_schedule(req(cfg, "config", "schedule"), "config.schedule");
  const json& run_j = req(cfg, "config", "run");
  need_object(run_j, "config.run");
  check_allowed(run_j, "config.run",
                {"n_steps", "seed", "snapshot_every", "x0", "replicas", "lyapunov_p"});
  const AnalysisConfig ana = parse_analysis(opt(cfg, "analysis"), "config.analysis", model);
  OutputConfig output = parse_output(opt(cfg, "output"), "config.output");
  if (out_override) output.dir = *out_override;

  RunConfig base;
  base.n_steps = need_u64(req(run_j, "config.run", "n_steps"), "config.run.n_steps");
  if (base.n_steps < 1) fail("config.run.n_steps", "must be >= 1");
  base.seed = 1;
  if (const json* s = opt(run_j, "seed")) base.seed = need_u64(*s, "config.run.seed");
  if (seed_override) base.seed = *seed_override;
  if (const json* s = opt(run_j, "snapshot_every"))
    base.snapshot_every = need_u64(*s, "config.run.snapshot_every");
  if (const json* p = opt(run_j, "lyapunov_p")) {
    const double v = need_num(*p, "config.run.lyapunov_p");
    if (!(v >= 0.0)) fail("config.run.lyapunov_p", "must be >= 0");
    base.lyapunov_p = v;
  }

  int replicas = 1;
  if (const json* r = opt(run_j, "replicas"))
    replicas = static_cast<int>(need_int(*r, "config.run.replicas"));
  if (replicas_override) replicas = *replicas_override;
  if (replicas < 1 || replicas > 64) fail("config.run.replicas", "must be in [1, 64]");

  // Independent chains on a small thread pool; files are written replica by
  // replica afterwards so output is deterministic.
  std::vector<ReplicaOutput> results(static_cast<std::size_t>(replicas));
  // Config-flavored failures keep their category across the thread join so
  // the process still exits with the argument-error code.
  std::vector<std::pair<int, std::string>> errors(static_cast<std::size_t>(replicas));
  {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(replicas));
    for (int r = 0; r < replicas; ++r) {
      pool.emplace_back([&, r] {
        try {
          results[static_cast<std::size_t>(r)] =
              simulate_one(model, schedule, base, run_j, ana,
                           base.seed + static_cast<std::uint64_t>(r));
        } catch (const config_error& e) {
          errors[static_cast<std::size_t>(r)] = {1, e.what()};
        } catch (const std::invalid_argument& e) {
          errors[static_cast<std::size_t>(r)] = {1, e.what()};
        } catch (const std::exception& e) {
          errors[static_cast<std::size_t>(r)] = {2, e.what()};
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e.first == 1) throw config_error(e.second);
    if (e.first == 2) throw state_error("replica failed: " + e.second);
  }

  json combined = json::array();
  for (int r = 0; r < replicas; ++r) {
    ReplicaOutput& res = results[static_cast<std::size_t>(r)];
    const std::uint64_t seed = base.seed + static_cast<std::uint64_t>(r);
    const json header = io::header_block(cfg, seed);
    const std::string suffix = replicas == 1 ? "" : "_r" + std::to_string(r);

    std::string snaps = csv_header_line(header);
    append_snapshot_csv(snaps, res.snapshots);
    io::write_text(output.dir / ("snapshots" + suffix + ".csv"), snaps);

    res.final_measure["header"] = header;
    if (res.euler && output.particle_dump) {
      const std::string dump = "particles" + suffix + ".bin";
      io::write_particle_dump(output.dir / dump, res.particles);
      res.final_measure["dump"] = dump;
    }
    io::write_json(output.dir / ("final_measure" + suffix + ".json"), res.final_measure);

    if (res.density) {
      io::write_text(output.dir / ("density" + suffix + ".csv"),
                     density_csv(header, *res.density));
    } else if (res.finite_occupation) {
      std::string csv = csv_header_line(header);
      csv += "state,prob\n";
      for (int i = 0; i < res.finite_occupation->size(); ++i) {
        csv += std::to_string(i);
        csv += ',';
        csv += io::format_double(res.finite_occupation->p[static_cast<std::size_t>(i)]);
        csv += '\n';
      }
      io::write_text(output.dir / ("density" + suffix + ".csv"), csv);
    }

    res.summary["header"] = header;
    res.summary["replica"] = r;
    io::write_json(output.dir / ("summary" + suffix + ".json"), res.summary);
    combined.push_back(res.summary);
  }
  if (replicas > 1) {
    json all;
    all["header"] = io::header_block(cfg, base.seed);
    all["replicas"] = std::move(combined);
    io::write_json(output.dir / "summary.json", all);
  }
  std::cout << "simulate: wrote outputs to " << output.dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// oracle

int cmd_oracle(const json& cfg, const std::optional<std::uint64_t>& seed_override,
               const std::optional<std::string>& out_override) {
  check_top_level(cfg, "oracle", {"command", "model", "run", "output"});
  const ParsedModel model = parse_model(req(cfg, "config", "model"), "config.model");
  if (model.kind != ParsedModel::Kind::finite)
    fail("config.model.kind", "oracle requires a finite model");
  OutputConfig output = parse_output(opt(cfg, "output"), "config.output");
  if (out_override) output.dir = *out_override;

  double damping = 0.5, tol = 1e-12;
  int max_iter = 100000;
  std::vector<DiscreteMeasure> starts;
  std::uint64_t seed = 1;
  if (const json* run_j = opt(cfg, "run")) {
    need_object(*run_j, "config.run");
    check_allowed(*run_j, "config.run", {"starts", "damping", "tol", "max_iter", "seed"});
    if (const json* d = opt(*run_j, "damping")) {
      damping = need_num(*d, "config.run.damping");
      if (!(damping > 0.0 && damping <= 1.0)) fail("config.run.damping", "must lie in (0,1]");
    }
    if (const json* t = opt(*run_j, "tol")) {
      tol = need_num(*t, "config.run.tol");
      if (!(tol > 0.0)) fail("config.run.tol", "must be > 0");
    }
    if (const json* m = opt(*run_j, "max_iter")) {
      max_iter = static_cast<int>(need_int(*m, "config.run.max_iter"));
      if (max_iter < 1) fail("config.run.max_iter", "must be >= 1");
    }
    if (const json* s = opt(*run_j, "seed")) seed = need_u64(*s, "config.run.seed");
    if (const json* st = opt(*run_j, "starts")) {
      if (!st->is_array()) fail("config.run.starts", "expected an array of probability vectors");
      for (std::size_t i = 0; i < st->size(); ++i) {
        const json& v = (*st)[i];
        const std::string p = "config.run.starts[" + std::to_string(i) + "]";
        if (!v.is_array() || static_cast<int>(v.size()) != model.family.m)
          fail(p, "expected m probabilities");
        std::vector<double> probs;
        for (std::size_t c = 0; c < v.size(); ++c)
          probs.push_back(need_num(v[c], p + "[" + std::to_string(c) + "]"));
        try {
          DiscreteMeasure mu(std::move(probs));
          starts.push_back(std::move(mu));
        } catch (const std::invalid_argument& e) {
          fail(p, e.what());
        }
      }
    }
  }
  if (seed_override) seed = *seed_override;
  if (starts.empty()) starts = make_mu_grid(model.family.m, 0, 1);

  json out;
  out["header"] = io::header_block(cfg, seed);
  json runs = json::array();
  json fixed = json::array();
  std::vector<DiscreteMeasure> distinct;
  bool all_converged = true;
  for (const auto& start : starts) {
    FixedPointReport rep =
        qsd_fixed_point(model.family, start, damping, tol, max_iter);
    json r;
    r["start"] = measure_json(start);
    r["converged"] = rep.converged;
    r["iterations"] = rep.iterations;
    r["residual_tv"] = rep.residual_tv;
    r["mu"] = measure_json(rep.mu);
    if (rep.converged) {
      const auto cert = check_qsd_characterization(model.family, rep.mu);
      r["balance_residual"] = cert.balance_residual;
      r["survival_dev"] = cert.survival_dev;
      r["extinction_rate"] = 1.0 - cert.survival_rate;
      bool fresh = true;
      for (const auto& seen : distinct)
        if (seen.tv(rep.mu) < 1e-8) {
          fresh = false;
          break;
        }
      if (fresh) {
        distinct.push_back(rep.mu);
        fixed.push_back(measure_json(rep.mu));
      }
    } else {
      all_converged = false;
    }
    runs.push_back(std::move(r));
  }
  out["runs"] = std::move(runs);
  out["distinct_fixed_points"] = std::move(fixed);
  out["all_converged"] = all_converged;
  io::write_json(output.dir / "qsd.json", out);
  std::cout << "oracle: wrote " << (output.dir / "qsd.json").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// ode

int cmd_ode(const json& cfg, const std::optional<std::uint64_t>& seed_override,
            const std::optional<std::string>& out_override) {
  (void)seed_override;  // integration is deterministic
  check_top_level(cfg, "ode", {"command", "model", "run", "output"});
  const ParsedModel model = parse_model(req(cfg, "config", "model"), "config.model");
  if (model.kind != ParsedModel::Kind::finite)
    fail("config.model.kind", "ode requires a finite model");
  OutputConfig output = parse_output(opt(cfg, "output"), "config.output");
  if (out_override) output.dir = *out_override;

  const json& run_j = req(cfg, "config", "run");
  need_object(run_j, "config.run");
  check_allowed(run_j, "config.run", {"T", "dt", "start", "store_every", "equivalence_check"});
  OdeOptions opts;
  const double T = need_num(req(run_j, "config.run", "T"), "config.run.T");
  if (!(T >= 0.0)) fail("config.run.T", "must be >= 0");
  opts.dt = need_num(req(run_j, "config.run", "dt"), "config.run.dt");
  if (!(opts.dt > 0.0)) fail("config.run.dt", "must be > 0");
  if (const json* s = opt(run_j, "store_every")) {
    opts.store_every = static_cast<int>(need_int(*s, "config.run.store_every"));
    if (opts.store_every < 1) fail("config.run.store_every", "must be >= 1");
  }
  DiscreteMeasure start = DiscreteMeasure::uniform(model.family.m);
  if (const json* st = opt(run_j, "start")) {
    if (st->is_string()) {
      if (st->get<std::string>() != "uniform")
        fail("config.run.start", "expected \"uniform\" or an array");
    } else if (st->is_array()) {
      std::vector<double> probs;
      for (std::size_t c = 0; c < st->size(); ++c)
        probs.push_back(need_num((*st)[c], "config.run.start[" + std::to_string(c) + "]"));
      if (static_cast<int>(probs.size()) != model.family.m)
        fail("config.run.start", "expected m probabilities");
      try {
        start = DiscreteMeasure(std::move(probs));
      } catch (const std::invalid_argument& e) {
        fail("config.run.start", e.what());
      }
    } else {
      fail("config.run.start", "expected \"uniform\" or an array");
    }
  }
  bool equivalence = false;
  if (const json* e = opt(run_j, "equivalence_check"))
    equivalence = need_bool(*e, "config.run.equivalence_check");

  const OdePath path = integrate_qsd_ode(model.family, start, T, opts);
  json header = io::header_block(cfg, 0);
  if (equivalence)
    header["equivalence_deviation"] =
        check_time_change_equivalence(model.family, start, T, opts.dt);
  header["terminal_residual"] = qsd_ode_residual(model.family, path.values.back());

  std::string csv = csv_header_line(header);
  csv += "time";
  for (int i = 0; i < model.family.m; ++i) csv += ",p_" + std::to_string(i);
  csv += ",residual\n";
  for (std::size_t k = 0; k < path.times.size(); ++k) {
    csv += io::format_double(path.times[k]);
    for (const double p : path.values[k]) {
      csv += ',';
      csv += io::format_double(p);
    }
    csv += ',';
    csv += io::format_double(qsd_ode_residual(model.family, path.values[k]));
    csv += '\n';
  }
  io::write_text(output.dir / "path.csv", csv);
  std::cout << "ode: wrote " << (output.dir / "path.csv").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// check

int cmd_check(const json& cfg, const std::optional<std::uint64_t>& seed_override,
              const std::optional<std::string>& out_override) {
  check_top_level(cfg, "check", {"command", "model", "run", "output"});
  const ParsedModel model = parse_model(req(cfg, "config", "model"), "config.model");
  if (model.kind != ParsedModel::Kind::finite)
    fail("config.model.kind", "check requires a finite model");
  OutputConfig output = parse_output(opt(cfg, "output"), "config.output");
  if (out_override) output.dir = *out_override;

  int extra = 20, ell_max = 5;
  std::uint64_t seed = 1;
  if (const json* run_j = opt(cfg, "run")) {
    need_object(*run_j, "config.run");
    check_allowed(*run_j, "config.run", {"mu_grid_extra", "ell_max", "seed"});
    if (const json* e = opt(*run_j, "mu_grid_extra")) {
      extra = static_cast<int>(need_int(*e, "config.run.mu_grid_extra"));
      if (extra < 0) fail("config.run.mu_grid_extra", "must be >= 0");
    }
    if (const json* l = opt(*run_j, "ell_max")) {
      ell_max = static_cast<int>(need_int(*l, "config.run.ell_max"));
      if (ell_max < 1) fail("config.run.ell_max", "must be >= 1");
    }
    if (const json* s = opt(*run_j, "seed")) seed = need_u64(*s, "config.run.seed");
  }
  if (seed_override) seed = *seed_override;

  const auto grid = make_mu_grid(model.family.m, extra, seed);
  const H0Report h0 = check_h0(model.family, grid, ell_max);
  const MinorizationReport minor =
      check_minorization(model.family, grid, h0.ok ? h0.ell : 1);
  EnvelopeReport env;
  if (minor.ok) env = check_lower_upper(model.family, grid, minor.psi);

  json out;
  out["header"] = io::header_block(cfg, seed);
  out["mu_grid_size"] = grid.size();
  out["geometric_killing"] = {{"ok", h0.ok}, {"ell", h0.ell}, {"rho", h0.rho}};
  out["minorization"] = {{"ok", minor.ok}, {"epsilon", minor.epsilon}, {"psi", minor.psi}};
  out["envelope"] = {{"ok", env.ok}, {"c1", env.c1}, {"c2", env.c2}};
  out["all_ok"] = h0.ok && minor.ok && env.ok;
  io::write_json(output.dir / "assumptions.json", out);
  std::cout << "check: wrote " << (output.dir / "assumptions.json").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// fixed_points

int cmd_fixed_points(double gamma) {
  if (!(gamma > 0.0)) throw config_error("--gamma must be > 0");
  const std::vector<double> roots = b_fixed_points(gamma);
  std::cout << "gamma = " << io::format_double(gamma) << "\n";
  std::cout << "roots of the drift self-consistency map:";
  for (const double r : roots) std::cout << ' ' << io::format_double(r);
  std::cout << "\n";
  const double cb = uniqueness_bound_gamma();
  const double rb = root_birth_gamma();
  std::cout << "contraction bound " << io::format_double(cb)
            << (gamma <= cb ? " (gamma below: unique root guaranteed)"
                            : " (gamma above: contraction guarantee void)")
            << "\n";
  std::cout << "slope-at-zero threshold " << io::format_double(rb)
            << (gamma > rb ? " (gamma above: nonzero roots present)"
                           : " (gamma below: scan finds only 0)")
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// hsweep

int cmd_hsweep(const json& cfg, const std::optional<std::uint64_t>& seed_override,
               const std::optional<std::string>& out_override) {
  check_top_level(cfg, "hsweep",
                  {"command", "model", "schedule", "run", "analysis", "output"});
  const json& model_j = req(cfg, "config", "model");
  ParsedModel model = parse_model(model_j, "config.model");
  if (model.kind != ParsedModel::Kind::benchmark)
    fail("config.model.kind", "hsweep requires the benchmark model");
  const StepSchedule schedule =
      parse_schedule(req(cfg, "config", "schedule"), "config.schedule");
  const json& run_j = req(cfg, "config", "run");
  need_object(run_j, "config.run");
  check_allowed(run_j, "config.run", {"n_steps", "seed", "x0", "h_values"});
  const AnalysisConfig ana = parse_analysis(opt(cfg, "analysis"), "config.analysis", model);
  OutputConfig output = parse_output(opt(cfg, "output"), "config.output");
  if (out_override) output.dir = *out_override;

  RunConfig base;
  base.n_steps = need_u64(req(run_j, "config.run", "n_steps"), "config.run.n_steps");
  base.seed = 1;
  if (const json* s = opt(run_j, "seed")) base.seed = need_u64(*s, "config.run.seed");
  if (seed_override) base.seed = *seed_override;

  std::vector<double> h_values{0.04, 0.02, 0.01};
  if (const json* hv = opt(run_j, "h_values")) {
    if (!hv->is_array() || hv->size() < 2)
      fail("config.run.h_values", "expected an array of at least 2 step sizes");
    h_values.clear();
    for (std::size_t i = 0; i < hv->size(); ++i) {
      const double h = need_num((*hv)[i], "config.run.h_values[" + std::to_string(i) + "]");
      if (!(h > 0.0)) fail("config.run.h_values", "step sizes must be > 0");
      if (!h_values.empty() && !(h < h_values.back()))
        fail("config.run.h_values", "step sizes must be strictly decreasing");
      h_values.push_back(h);
    }
  }

  // Same seed for every h: common random numbers sharpen the comparison of
  // successive discretizations.
  std::vector<DensityOnGrid> kdes;
  const json header = io::header_block(cfg, base.seed);
  for (const double h : h_values) {
    EulerModel m = benchmark_model(model.gamma, h);
    RunConfig cfg_run = base;
    cfg_run.schedule = schedule;
    cfg_run.histogram = ana.histogram;
    std::vector<double> x0{0.0};
    if (const json* x = opt(run_j, "x0")) x0[0] = need_num(*x, "config.run.x0");
    EulerRunResult res = run_euler(m, x0, cfg_run);
    DensityOnGrid d =
        kde(res.occupation, ana.bandwidth, make_grid(ana.grid_a, ana.grid_b, ana.grid_n));
    io::write_text(output.dir / ("density_h" + io::format_double(h) + ".csv"),
                   density_csv(header, d));
    kdes.push_back(std::move(d));
  }

  json out;
  out["header"] = header;
  out["h_values"] = h_values;
  json w1s = json::array();
  bool monotone = true;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < kdes.size(); ++i) {
    const double w1 = distances(kdes[i], kdes[i + 1]).w1;
    w1s.push_back(w1);
    if (!(w1 < prev)) monotone = false;
    prev = w1;
  }
  out["w1_successive"] = std::move(w1s);
  out["monotone_decreasing"] = monotone;
  io::write_json(output.dir / "hsweep.json", out);
  std::cout << "hsweep: wrote " << (output.dir / "hsweep.json").string() << "\n";
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Killed mean-field chain simulator and exact finite-state solver"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int replicas = 0;
  double gamma = 0.0;

  auto add_common = [&](CLI::App* sub, bool with_replicas) {
    sub->add_option("--config", config_path, "Path to the JSON experiment config")
        ->required();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--out", out_dir, "Override the output directory");
    if (with_replicas)
      sub->add_option("--replicas", replicas, "Override the replica count");
  };

  CLI::App* sim = app.add_subcommand("simulate", "Run the self-interacting chain");
  add_common(sim, true);
  CLI::App* orc = app.add_subcommand("oracle", "Exact fixed points of a finite family");
  add_common(orc, false);
  CLI::App* ode = app.add_subcommand("ode", "Integrate the limiting measure flow");
  add_common(ode, false);
  CLI::App* chk = app.add_subcommand("check", "Assumption checkers over a measure grid");
  add_common(chk, false);
  CLI::App* hsw = app.add_subcommand("hsweep", "Step-size refinement diagnostic");
  add_common(hsw, true);
  CLI::App* fpt = app.add_subcommand("fixed_points",
                                     "Roots of the drift self-consistency map");
  fpt->add_option("--gamma", gamma, "Interaction strength")->required();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return 2;
  }

  try {
    CLI::App* active = nullptr;
    for (CLI::App* s : {sim, orc, ode, chk, hsw, fpt})
      if (s->parsed()) active = s;
    const bool seed_given = active != nullptr && active != fpt && active->count("--seed") > 0;
    const std::optional<std::uint64_t> seed_ovr =
        seed_given ? std::optional<std::uint64_t>(seed) : std::nullopt;
    const std::optional<std::string> out_ovr =
        out_dir.empty() ? std::nullopt : std::optional<std::string>(out_dir);
    const std::optional<int> rep_ovr =
        replicas > 0 ? std::optional<int>(replicas) : std::nullopt;

    if (fpt->parsed()) return cmd_fixed_points(gamma);
    json cfg;
    try {
      cfg = io::read_json(config_path);
    } catch (const state_error& e) {
      throw config_error(e.what());
    }
    if (sim->parsed()) return cmd_simulate(cfg, seed_ovr, out_ovr, rep_ovr);
    if (orc->parsed()) return cmd_oracle(cfg, seed_ovr, out_ovr);
    if (ode->parsed()) return cmd_ode(cfg, seed_ovr, out_ovr);
    if (chk->parsed()) return cmd_check(cfg, seed_ovr, out_ovr);
    if (hsw->parsed()) return cmd_hsweep(cfg, seed_ovr, out_ovr);
    std::cerr << "argument error: no command given\n";
    return 2;
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace qsd
