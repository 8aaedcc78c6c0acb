#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "qsd/cli.hpp"
#include "qsd/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  std::streambuf* old_out = std::cout.rdbuf(out.rdbuf());
  std::streambuf* old_err = std::cerr.rdbuf(err.rdbuf());
  CliResult r;
  try {
    r.code = qsd::run_cli(args);
  } catch (...) {
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    throw;
  }
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "qsd_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const json& cfg) {
  const fs::path p = dir / "config.json";
  qsd::io::write_json(p, cfg);
  return p;
}

json finite_simulate_config(const fs::path& outdir) {
  json cfg;
  cfg["command"] = "simulate";
  cfg["model"] = {{"kind", "finite"}, {"m", 3}, {"kappa", 0.7}, {"beta", 1.0}, {"P", "uniform"}};
  cfg["schedule"] = {{"kind", "constant-weight"}};
  cfg["run"] = {{"n_steps", 2000}, {"seed", 5}, {"snapshot_every", 500}};
  cfg["output"] = {{"dir", outdir.string()}};
  return cfg;
}

}  // namespace

TEST_CASE("version and help exit cleanly") {
  CHECK(run({"--version"}).code == 0);
  const CliResult h = run({"--help"});
  CHECK(h.code == 0);
  CHECK(h.out.find("simulate") != std::string::npos);
}

TEST_CASE("a subcommand is required") {
  CHECK(run({}).code == 2);
}

TEST_CASE("schema violations exit 2 with a dotted path") {
  const fs::path dir = scratch("schema");
  json cfg = finite_simulate_config(dir / "out");

  json unknown = cfg;
  unknown["model"]["kppa"] = 1.0;
  CliResult r = run({"simulate", "--config", write_config(dir, unknown).string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("config.model.kppa: unknown key") != std::string::npos);

  json missing = cfg;
  missing["model"].erase("kappa");
  r = run({"simulate", "--config", write_config(dir, missing).string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("config.model.kappa") != std::string::npos);

  json wrong_type = cfg;
  wrong_type["run"]["n_steps"] = "many";
  r = run({"simulate", "--config", write_config(dir, wrong_type).string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("config.run.n_steps") != std::string::npos);
}

TEST_CASE("fixed step sizes are rejected with an explanation") {
  const fs::path dir = scratch("constgamma");
  json cfg = finite_simulate_config(dir / "out");
  cfg["schedule"] = {{"kind", "constant-gamma"}};
  const CliResult r = run({"simulate", "--config", write_config(dir, cfg).string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("constant step sizes are not admissible") != std::string::npos);
}

TEST_CASE("config command must match the invoked subcommand") {
  const fs::path dir = scratch("mismatch");
  json cfg = finite_simulate_config(dir / "out");
  cfg["command"] = "oracle";
  const CliResult r = run({"simulate", "--config", write_config(dir, cfg).string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("config.command") != std::string::npos);
}

TEST_CASE("unreadable or malformed config files exit 2") {
  const fs::path dir = scratch("badfile");
  CHECK(run({"simulate", "--config", (dir / "absent.json").string()}).code == 2);
  qsd::io::write_text(dir / "broken.json", "{ not json ]");
  CHECK(run({"simulate", "--config", (dir / "broken.json").string()}).code == 2);
}

TEST_CASE("out-of-range start state exits 2") {
  const fs::path dir = scratch("badstart");
  json cfg = finite_simulate_config(dir / "out");
  cfg["run"]["x0"] = 7;
  CHECK(run({"simulate", "--config", write_config(dir, cfg).string()}).code == 2);
}

TEST_CASE("root report prints roots and both thresholds") {
  const CliResult r = run({"fixed_points", "--gamma", "6"});
  CHECK(r.code == 0);
  CHECK(r.out.find("0.40116") != std::string::npos);
  CHECK(r.out.find("contraction bound") != std::string::npos);
  CHECK(r.out.find("slope-at-zero threshold") != std::string::npos);
  CHECK(run({"fixed_points", "--gamma", "-1"}).code == 2);
  CHECK(run({"fixed_points"}).code == 2);
}

TEST_CASE("finite simulation writes its outputs and reruns identically") {
  const fs::path dir = scratch("finitesim");
  const fs::path out = dir / "out";
  const fs::path cfgp = write_config(dir, finite_simulate_config(out));
  const CliResult r = run({"simulate", "--config", cfgp.string()});
  CHECK(r.code == 0);
  REQUIRE(fs::exists(out / "snapshots.csv"));
  REQUIRE(fs::exists(out / "final_measure.json"));
  REQUIRE(fs::exists(out / "summary.json"));

  const std::string snaps1 = qsd::io::read_text(out / "snapshots.csv");
  CHECK(snaps1.rfind("# {", 0) == 0);  // self-describing header line
  CHECK(snaps1.find("n,gamma,kills_cum,mean,var,lyapunov") != std::string::npos);

  const json summary = qsd::io::read_json(out / "summary.json");
  CHECK(summary.contains("oracle_fixed_points"));
  CHECK(summary["tv_to_nearest"].get<double>() < 0.2);

  // A rerun with the same config and seed reproduces every byte.
  const CliResult r2 = run({"simulate", "--config", cfgp.string()});
  CHECK(r2.code == 0);
  CHECK(qsd::io::read_text(out / "snapshots.csv") == snaps1);
}

TEST_CASE("seed and output-dir flags override the config") {
  const fs::path dir = scratch("overrides");
  const fs::path cfgp = write_config(dir, finite_simulate_config(dir / "out"));
  const fs::path alt = dir / "alt";
  CHECK(run({"simulate", "--config", cfgp.string(), "--out", alt.string()}).code == 0);
  REQUIRE(fs::exists(alt / "snapshots.csv"));
  const std::string base = qsd::io::read_text(alt / "snapshots.csv");

  const fs::path alt2 = dir / "alt2";
  CHECK(run({"simulate", "--config", cfgp.string(), "--out", alt2.string(),
             "--seed", "99"}).code == 0);
  CHECK(qsd::io::read_text(alt2 / "snapshots.csv") != base);
}

TEST_CASE("replicated runs produce per-replica files plus a combined summary") {
  const fs::path dir = scratch("replicas");
  const fs::path out = dir / "out";
  const fs::path cfgp = write_config(dir, finite_simulate_config(out));
  const CliResult r = run({"simulate", "--config", cfgp.string(), "--replicas", "2"});
  CHECK(r.code == 0);
  CHECK(fs::exists(out / "snapshots_r0.csv"));
  CHECK(fs::exists(out / "snapshots_r1.csv"));
  CHECK(fs::exists(out / "summary_r0.json"));
  CHECK(fs::exists(out / "summary_r1.json"));
  REQUIRE(fs::exists(out / "summary.json"));
  const json combined = qsd::io::read_json(out / "summary.json");
  REQUIRE(combined["replicas"].size() == 2);
  // Different replica seeds must not collide.
  CHECK(qsd::io::read_text(out / "snapshots_r0.csv") !=
        qsd::io::read_text(out / "snapshots_r1.csv"));
}

TEST_CASE("diffusion simulation writes a density estimate and reference block") {
  const fs::path dir = scratch("benchsim");
  const fs::path out = dir / "out";
  json cfg;
  cfg["command"] = "simulate";
  cfg["model"] = {{"kind", "benchmark"}, {"gamma", 0.5}, {"h", 0.05}};
  cfg["schedule"] = {{"kind", "constant-weight"}};
  cfg["run"] = {{"n_steps", 3000}, {"seed", 11}, {"x0", 0.0}};
  cfg["analysis"] = {{"grid", {{"a", -1.0}, {"b", 1.0}, {"n", 201}}}};
  cfg["output"] = {{"dir", out.string()}, {"particle_dump", true}};
  const CliResult r = run({"simulate", "--config", write_config(dir, cfg).string()});
  CHECK(r.code == 0);
  REQUIRE(fs::exists(out / "density.csv"));
  REQUIRE(fs::exists(out / "summary.json"));
  REQUIRE(fs::exists(out / "particles.bin"));
  const json summary = qsd::io::read_json(out / "summary.json");
  REQUIRE(summary.contains("reference"));
  CHECK(summary["reference"]["roots"].size() == 1);
  CHECK(summary["reference"].contains("distances"));
  const std::string density = qsd::io::read_text(out / "density.csv");
  CHECK(density.find("x,f") != std::string::npos);
}

TEST_CASE("half-line interaction model runs with a confinement diagnostic") {
  const fs::path dir = scratch("ousim");
  const fs::path out = dir / "out";
  json cfg;
  cfg["command"] = "simulate";
  cfg["model"] = {{"kind", "ou_interaction"}, {"h", 0.01}, {"decay", 1.0},
                  {"coupling", 0.5}, {"R", 5.0}};
  cfg["schedule"] = {{"kind", "constant-weight"}};
  cfg["run"] = {{"n_steps", 2000}, {"seed", 3}, {"x0", 1.0}, {"lyapunov_p", 2.0},
                {"snapshot_every", 200}};
  cfg["output"] = {{"dir", out.string()}};
  const CliResult r = run({"simulate", "--config", write_config(dir, cfg).string()});
  CHECK(r.code == 0);
  const json summary = qsd::io::read_json(out / "summary.json");
  REQUIRE(summary.contains("lyapunov"));
  CHECK(summary["lyapunov"]["p"].get<double>() == 2.0);
  CHECK(summary["lyapunov"]["running_max_second_half"].get<double>() > 0.0);
}

TEST_CASE("oracle command certifies the finite fixed point") {
  const fs::path dir = scratch("oraclecmd");
  const fs::path out = dir / "out";
  json cfg;
  cfg["command"] = "oracle";
  cfg["model"] = {{"kind", "finite"}, {"m", 4}, {"kappa", 0.8}, {"beta", 2.0}, {"P", "uniform"}};
  cfg["output"] = {{"dir", out.string()}};
  const CliResult r = run({"oracle", "--config", write_config(dir, cfg).string()});
  CHECK(r.code == 0);
  const json q = qsd::io::read_json(out / "qsd.json");
  CHECK(q["all_converged"].get<bool>());
  CHECK(q["distinct_fixed_points"].size() >= 1);
  REQUIRE(q["runs"].size() >= 5);  // corners plus the uniform start
  for (const auto& rr : q["runs"]) {
    CHECK(rr["converged"].get<bool>());
    CHECK(rr["balance_residual"].get<double>() < 1e-10);
  }
}

TEST_CASE("oracle command refuses diffusion models") {
  const fs::path dir = scratch("oraclebad");
  json cfg;
  cfg["command"] = "oracle";
  cfg["model"] = {{"kind", "benchmark"}, {"gamma", 0.5}, {"h", 0.01}};
  cfg["output"] = {{"dir", (dir / "out").string()}};
  CHECK(run({"oracle", "--config", write_config(dir, cfg).string()}).code == 2);
}

TEST_CASE("ode command writes the path with a terminal residual") {
  const fs::path dir = scratch("odecmd");
  const fs::path out = dir / "out";
  json cfg;
  cfg["command"] = "ode";
  cfg["model"] = {{"kind", "finite"}, {"m", 3}, {"kappa", 0.7}, {"beta", 1.0}, {"P", "uniform"}};
  cfg["run"] = {{"T", 5.0}, {"dt", 0.005}, {"store_every", 10},
                {"start", "uniform"}, {"equivalence_check", true}};
  cfg["output"] = {{"dir", out.string()}};
  const CliResult r = run({"ode", "--config", write_config(dir, cfg).string()});
  CHECK(r.code == 0);
  const std::string path_csv = qsd::io::read_text(out / "path.csv");
  REQUIRE(path_csv.rfind("# {", 0) == 0);
  const std::string header = path_csv.substr(2, path_csv.find('\n') - 2);
  const json h = json::parse(header);
  CHECK(h["terminal_residual"].get<double>() < 1e-2);
  CHECK(h["equivalence_deviation"].get<double>() < 1e-5);
  CHECK(path_csv.find("time,") != std::string::npos);
}

TEST_CASE("check command certifies the standing assumptions") {
  const fs::path dir = scratch("checkcmd");
  const fs::path out = dir / "out";
  json cfg;
  cfg["command"] = "check";
  cfg["model"] = {{"kind", "finite"}, {"m", 3}, {"kappa", 0.7}, {"beta", 1.0}, {"P", "uniform"}};
  cfg["run"] = {{"mu_grid_extra", 10}, {"ell_max", 4}, {"seed", 2}};
  cfg["output"] = {{"dir", out.string()}};
  const CliResult r = run({"check", "--config", write_config(dir, cfg).string()});
  CHECK(r.code == 0);
  const json a = qsd::io::read_json(out / "assumptions.json");
  CHECK(a["all_ok"].get<bool>());
  CHECK(a["geometric_killing"]["ok"].get<bool>());
  CHECK(a["minorization"]["ok"].get<bool>());
  CHECK(a["envelope"]["ok"].get<bool>());
}

TEST_CASE("step-size sweep reports successive transport distances") {
  const fs::path dir = scratch("hsweepcmd");
  const fs::path out = dir / "out";
  json cfg;
  cfg["command"] = "hsweep";
  cfg["model"] = {{"kind", "benchmark"}, {"gamma", 0.5}, {"h", 0.04}};
  cfg["schedule"] = {{"kind", "constant-weight"}};
  cfg["run"] = {{"n_steps", 2000}, {"seed", 13}, {"h_values", {0.04, 0.02}}};
  cfg["analysis"] = {{"grid", {{"a", -1.0}, {"b", 1.0}, {"n", 201}}}};
  cfg["output"] = {{"dir", out.string()}};
  const CliResult r = run({"hsweep", "--config", write_config(dir, cfg).string()});
  CHECK(r.code == 0);
  const json h = qsd::io::read_json(out / "hsweep.json");
  REQUIRE(h["h_values"].size() == 2);
  REQUIRE(h["w1_successive"].size() == 1);
  CHECK(h["w1_successive"][0].get<double>() > 0.0);
  CHECK(fs::exists(out / "density_h0.04.csv"));
  CHECK(fs::exists(out / "density_h0.02.csv"));

  json bad = cfg;
  bad["run"]["h_values"] = {0.02, 0.04};  // not decreasing
  CHECK(run({"hsweep", "--config", write_config(dir, bad).string()}).code == 2);
}
