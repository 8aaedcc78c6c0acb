#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "qsd/measure.hpp"

namespace qsd::io {

// Shortest round-trip decimal form; used for every CSV number so reruns
// with the same seed produce byte-identical files.
std::string format_double(double v);

// FNV-1a over the canonical (sorted-key) JSON dump.
std::uint64_t fnv1a(const std::string& s);
std::uint64_t config_hash(const nlohmann::json& config);

// Standard header carried by every output: config hash, seed, version.
nlohmann::json header_block(const nlohmann::json& config, std::uint64_t seed);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& content);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

// Flat binary particle dump: magic "QSDPART1", then u32 layout version,
// u32 dimension, u64 record count, then per record dim coordinates plus
// one weight, all little-endian f64.
void write_particle_dump(const std::filesystem::path& path,
                         const WeightedEmpiricalMeasure& m);
WeightedEmpiricalMeasure read_particle_dump(const std::filesystem::path& path);

}  // namespace qsd::io
