#include "qsd/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <system_error>

#include "qsd/errors.hpp"
#include "qsd/version.hpp"

static_assert(std::endian::native == std::endian::little,
              "particle dump assumes a little-endian host");

namespace qsd::io {

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t config_hash(const nlohmann::json& config) {
  return fnv1a(config.dump());
}

nlohmann::json header_block(const nlohmann::json& config, std::uint64_t seed) {
  nlohmann::json h;
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx",
                static_cast<unsigned long long>(config_hash(config)));
  h["config_hash"] = buf;
  h["seed"] = seed;
  h["version"] = kVersion;
  return h;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw state_error("cannot open for reading: " + path.string());
  std::string s((std::istreambuf_iterator<char>(in)),
                std::istreambuf_iterator<char>());
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw state_error("cannot open for writing: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw state_error("write failed: " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw config_error(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

namespace {

constexpr char kMagic[8] = {'Q', 'S', 'D', 'P', 'A', 'R', 'T', '1'};
constexpr std::uint32_t kLayoutVersion = 1;

template <typename T>
void put(std::string& out, const T& v) {
  const char* p = reinterpret_cast<const char*>(&v);
  out.append(p, sizeof(T));
}

template <typename T>
T take(const std::string& s, std::size_t& off) {
  if (off + sizeof(T) > s.size())
    throw state_error("particle dump: truncated file");
  T v;
  std::memcpy(&v, s.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

}  // namespace

void write_particle_dump(const std::filesystem::path& path,
                         const WeightedEmpiricalMeasure& m) {
  std::string out;
  const std::uint64_t count = m.size();
  const std::uint32_t dim = static_cast<std::uint32_t>(m.dim());
  out.reserve(sizeof(kMagic) + 16 + count * (dim + 1) * sizeof(double));
  out.append(kMagic, sizeof(kMagic));
  put(out, kLayoutVersion);
  put(out, dim);
  put(out, count);
  for (std::uint64_t k = 0; k < count; ++k) {
    const double* p = m.point(k);
    for (std::uint32_t c = 0; c < dim; ++c) put(out, p[c]);
    put(out, m.weight(k));
  }
  write_text(path, out);
}

WeightedEmpiricalMeasure read_particle_dump(const std::filesystem::path& path) {
  const std::string s = read_text(path);
  if (s.size() < sizeof(kMagic) || std::memcmp(s.data(), kMagic, sizeof(kMagic)) != 0)
    throw state_error("particle dump: bad magic");
  std::size_t off = sizeof(kMagic);
  const auto layout = take<std::uint32_t>(s, off);
  if (layout != kLayoutVersion)
    throw state_error("particle dump: unsupported layout version");
  const auto dim = take<std::uint32_t>(s, off);
  const auto count = take<std::uint64_t>(s, off);
  WeightedEmpiricalMeasure m(static_cast<int>(dim));
  m.reserve(count);
  double pt[64];
  if (dim == 0 || dim > 64) throw state_error("particle dump: bad dimension");
  for (std::uint64_t k = 0; k < count; ++k) {
    for (std::uint32_t c = 0; c < dim; ++c) pt[c] = take<double>(s, off);
    const double w = take<double>(s, off);
    m.add_sample(pt, w);
  }
  return m;
}

}  // namespace qsd::io
