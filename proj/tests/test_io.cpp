#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "qsd/errors.hpp"
#include "qsd/io.hpp"
#include "qsd/measure.hpp"
#include "qsd/rng.hpp"

using namespace qsd;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path p = fs::temp_directory_path() / "qsd_io_tests";
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("shortest decimal form round-trips exactly") {
  for (const double v : {0.0, 1.0, -1.0, 0.1, 1.0 / 3.0, 1e-300, -2.5e17,
                         3.141592653589793, 5.278980085486887}) {
    const std::string s = io::format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(io::format_double(0.25) == "0.25");
  CHECK(io::format_double(2.0) == "2");
}

TEST_CASE("hash matches the published 64-bit FNV-1a vectors") {
  CHECK(io::fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(io::fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(io::fnv1a("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("config hash ignores key insertion order") {
  nlohmann::json a;
  a["model"]["kind"] = "benchmark";
  a["model"]["gamma"] = 0.5;
  a["seed"] = 7;
  nlohmann::json b;
  b["seed"] = 7;
  b["model"]["gamma"] = 0.5;
  b["model"]["kind"] = "benchmark";
  CHECK(io::config_hash(a) == io::config_hash(b));

  nlohmann::json c = a;
  c["seed"] = 8;
  CHECK(io::config_hash(c) != io::config_hash(a));
}

TEST_CASE("header block carries hash, seed, and version") {
  nlohmann::json cfg;
  cfg["x"] = 1;
  const nlohmann::json h = io::header_block(cfg, 42);
  CHECK(h.contains("config_hash"));
  CHECK(h.contains("seed"));
  CHECK(h.contains("version"));
  CHECK(h["seed"].get<std::uint64_t>() == 42);
  const std::string hash = h["config_hash"].get<std::string>();
  CHECK(hash.substr(0, 2) == "0x");
  CHECK(hash.size() == 18);
}

TEST_CASE("text files round-trip and parents are created on demand") {
  const fs::path dir = scratch_dir() / "nested" / "deeper";
  fs::remove_all(scratch_dir() / "nested");
  const fs::path file = dir / "t.txt";
  io::write_text(file, "hello\nworld\n");
  CHECK(io::read_text(file) == "hello\nworld\n");
  CHECK_THROWS_AS(io::read_text(dir / "missing.txt"), state_error);
}

TEST_CASE("json files round-trip; malformed input is a config error") {
  const fs::path file = scratch_dir() / "cfg.json";
  nlohmann::json j;
  j["alpha"] = 0.5;
  j["list"] = {1, 2, 3};
  io::write_json(file, j);
  CHECK(io::read_json(file) == j);

  const fs::path bad = scratch_dir() / "bad.json";
  io::write_text(bad, "{ not json ]");
  CHECK_THROWS_AS(io::read_json(bad), config_error);
}

TEST_CASE("particle dumps restore points bitwise and weights up to scale") {
  WeightedEmpiricalMeasure m(2);
  Rng rng(99);
  for (int i = 0; i < 257; ++i) {
    const double x[2] = {rng.normal(), 10.0 * rng.uniform()};
    m.add_sample(x, 0.1 + rng.uniform());
  }
  const fs::path file = scratch_dir() / "particles.bin";
  io::write_particle_dump(file, m);
  const WeightedEmpiricalMeasure r = io::read_particle_dump(file);
  REQUIRE(r.size() == m.size());
  REQUIRE(r.dim() == 2);
  for (std::size_t k = 0; k < m.size(); ++k) {
    CHECK(r.point(k)[0] == m.point(k)[0]);
    CHECK(r.point(k)[1] == m.point(k)[1]);
    CHECK(r.prob(k) == doctest::Approx(m.prob(k)).epsilon(1e-15));
  }
  CHECK(r.mean(0) == doctest::Approx(m.mean(0)).epsilon(1e-14));
}

TEST_CASE("corrupt particle dumps are refused") {
  const fs::path dir = scratch_dir();
  WeightedEmpiricalMeasure m(1);
  m.add_sample1(0.5, 1.0);
  m.add_sample1(-0.5, 2.0);
  const fs::path good = dir / "good.bin";
  io::write_particle_dump(good, m);

  // Truncate the valid file mid-record.
  const std::string bytes = io::read_text(good);
  const fs::path cut = dir / "cut.bin";
  io::write_text(cut, bytes.substr(0, bytes.size() - 4));
  CHECK_THROWS_AS(io::read_particle_dump(cut), state_error);

  // Break the magic.
  std::string wrong = bytes;
  wrong[0] = 'X';
  const fs::path nomagic = dir / "nomagic.bin";
  io::write_text(nomagic, wrong);
  CHECK_THROWS_AS(io::read_particle_dump(nomagic), state_error);

  CHECK_THROWS_AS(io::read_particle_dump(dir / "absent.bin"), state_error);
}
