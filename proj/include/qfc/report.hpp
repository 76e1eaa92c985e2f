#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace qfc::io {

// Column-oriented numeric table. CSV and JSON emissions carry the same
// numbers: every value is written in its shortest round-trip form, so the
// two files parse back to identical doubles.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

std::string format_double(double v);

struct Provenance {
  std::string scenario_hash;
  std::uint64_t root_seed = 0;
};

void write_csv(const Table& table, const std::filesystem::path& path, const Provenance& prov);
void write_json(const Table& table, const std::filesystem::path& path, const Provenance& prov);
Table read_csv(const std::filesystem::path& path);
Table read_json(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

std::uint64_t fnv1a64(const std::string& bytes);
std::uint64_t file_checksum(const std::filesystem::path& path);

}  // namespace qfc::io
