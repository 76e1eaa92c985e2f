#include "qfc/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qfc/errors.hpp"

namespace qfc::io {

std::string format_double(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  if (std::isinf(v)) {
    return v > 0.0 ? "inf" : "-inf";
  }
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string header_lines(const Table& table, const Provenance& prov) {
  std::ostringstream out;
  out << "# qfc table v1 name=" << table.name << "\n";
  out << "# scenario_hash=" << prov.scenario_hash << " root_seed=" << prov.root_seed << "\n";
  return out.str();
}

double parse_double(const std::string& token) {
  if (token == "nan") return std::nan("");
  if (token == "inf") return HUGE_VAL;
  if (token == "-inf") return -HUGE_VAL;
  return std::strtod(token.c_str(), nullptr);
}

}  // namespace

void write_csv(const Table& table, const std::filesystem::path& path, const Provenance& prov) {
  std::ostringstream out;
  out << header_lines(table, prov);
  for (size_t c = 0; c < table.columns.size(); ++c) {
    out << (c ? "," : "") << table.columns[c];
  }
  out << "\n";
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) {
      throw InvalidInput("write_csv: row width does not match the column count");
    }
    for (size_t c = 0; c < row.size(); ++c) {
      out << (c ? "," : "") << format_double(row[c]);
    }
    out << "\n";
  }
  write_text(path, out.str());
}

void write_json(const Table& table, const std::filesystem::path& path, const Provenance& prov) {
  nlohmann::json j;
  j["schema"] = "qfc.table.v1";
  j["name"] = table.name;
  j["scenario_hash"] = prov.scenario_hash;
  j["root_seed"] = prov.root_seed;
  j["columns"] = table.columns;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json r = nlohmann::json::array();
    for (double v : row) {
      if (std::isfinite(v)) {
        r.push_back(v);
      } else {
        r.push_back(format_double(v));
      }
    }
    rows.push_back(r);
  }
  j["rows"] = rows;
  write_text(path, j.dump(1) + "\n");
}

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidInput("read_csv: cannot open " + path.string());
  }
  Table table;
  std::string line;
  bool have_columns = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') {
      continue;
    }
    std::vector<std::string> tokens;
    std::stringstream ss(line);
    std::string token;
    while (std::getline(ss, token, ',')) {
      tokens.push_back(token);
    }
    if (!have_columns) {
      table.columns = tokens;
      have_columns = true;
      continue;
    }
    std::vector<double> row;
    row.reserve(tokens.size());
    for (const auto& t : tokens) {
      row.push_back(parse_double(t));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

Table read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidInput("read_json: cannot open " + path.string());
  }
  nlohmann::json j;
  in >> j;
  Table table;
  table.name = j.value("name", "");
  table.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& row : j.at("rows")) {
    std::vector<double> r;
    r.reserve(row.size());
    for (const auto& v : row) {
      if (v.is_string()) {
        r.push_back(parse_double(v.get<std::string>()));
      } else {
        r.push_back(v.get<double>());
      }
    }
    table.rows.push_back(std::move(r));
  }
  return table;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("write_text: cannot open " + path.string() + " for writing");
  }
  out << text;
  if (!out) {
    throw std::runtime_error("write_text: failed writing " + path.string());
  }
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

std::uint64_t file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InvalidInput("file_checksum: cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a64(ss.str());
}

}  // namespace qfc::io
