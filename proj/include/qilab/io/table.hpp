#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "qilab/emission/model.hpp"
#include "qilab/error.hpp"

namespace qilab::io {

inline constexpr const char* kToolName = "qi-lab";
inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

enum class Format { csv, json };

inline Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw ValidationError("format: expected csv or json, got '" + s + "'");
}

/// 17 significant digits, enough to round-trip any double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Cell = std::variant<double, std::int64_t, std::string>;

inline nlohmann::ordered_json constants_json(const emission::PhysicalConstants& k) {
  return {{"hbar_J_s", k.hbar}, {"eps0_F_per_m", k.eps0}, {"e_C", k.e_charge}, {"c_m_per_s", k.c}, {"m_e_kg", k.m_e}};
}

/// FNV-1a 64-bit hash of the serialized config, as 16 hex digits.
inline std::string config_hash(const nlohmann::ordered_json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Header block written before any rows.
struct Provenance {
  std::string command;
  nlohmann::ordered_json config;
  std::uint64_t seed = 0;
  std::string timestamp; // empty to omit
};

/// Streams rows as CSV (with '#'-prefixed header lines) or JSON.
class RowWriter {
public:
  RowWriter(std::ostream& out, Format format) : out_(out), format_(format) {}

  void begin(const Provenance& prov, std::vector<std::string> columns) {
    columns_ = std::move(columns);
    nlohmann::ordered_json header = {{"tool", kToolName},
                                     {"version", kToolVersion},
                                     {"schema_version", kSchemaVersion},
                                     {"command", prov.command},
                                     {"seed", prov.seed},
                                     {"constants", constants_json(emission::kCodata2018)},
                                     {"config", prov.config},
                                     {"config_hash", config_hash(prov.config)}};
    if (format_ == Format::csv) {
      out_ << "# tool: " << kToolName << ' ' << kToolVersion << '\n';
      out_ << "# schema_version: " << kSchemaVersion << '\n';
      out_ << "# command: " << prov.command << '\n';
      out_ << "# seed: " << prov.seed << '\n';
      out_ << "# constants: " << header["constants"].dump() << '\n';
      out_ << "# config: " << prov.config.dump() << '\n';
      out_ << "# config_hash: " << header["config_hash"].get<std::string>() << '\n';
      if (!prov.timestamp.empty()) out_ << "# generated_at: " << prov.timestamp << '\n';
      for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
      out_ << '\n';
    } else {
      if (!prov.timestamp.empty()) header["generated_at"] = prov.timestamp;
      header["columns"] = columns_;
      std::string h = header.dump(1);
      h.pop_back(); // reopen the object to append rows
      while (!h.empty() && (h.back() == '\n' || h.back() == ' ')) h.pop_back();
      out_ << h << ",\n \"rows\": [";
    }
  }

  void row(const std::vector<Cell>& cells) {
    if (cells.size() != columns_.size()) throw InvariantError("RowWriter: row width does not match columns");
    if (format_ == Format::csv) {
      for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << text(cells[i], false);
      out_ << '\n';
    } else {
      out_ << (rows_ ? ",\n  [" : "\n  [");
      for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? ", " : "") << text(cells[i], true);
      out_ << ']';
    }
    ++rows_;
  }

  void end() {
    if (format_ == Format::json) out_ << (rows_ ? "\n ]\n}\n" : "]\n}\n");
    out_.flush();
  }

private:
  static std::string text(const Cell& c, bool json) {
    if (const auto* d = std::get_if<double>(&c)) {
      if (std::isfinite(*d)) return format_double(*d);
      return json ? "null" : "nan";
    }
    if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
    const auto& s = std::get<std::string>(c);
    return json ? nlohmann::json(s).dump() : s;
  }

  std::ostream& out_;
  Format format_;
  std::vector<std::string> columns_;
  std::size_t rows_ = 0;
};

} // namespace qilab::io
