#pragma once

// JSON encoding of the domain types and a minimal CSV reader/writer.
// Doubles are written in shortest round-trip form so encode/decode is exact.

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sofo/domain.hpp"

namespace sofo {

using Json = nlohmann::json;

inline void to_json(Json& j, const TimeGrid& g) {
  j = Json{{"start_index", g.start_index}, {"horizon_T", g.horizon_T}, {"step_hours", g.step_hours}};
}
inline void from_json(const Json& j, TimeGrid& g) {
  g.start_index = j.at("start_index").get<std::int64_t>();
  g.horizon_T = j.at("horizon_T").get<std::size_t>();
  g.step_hours = j.value("step_hours", 1.0);
}

inline void to_json(Json& j, const GenerationDevice& d) {
  j = Json{{"id", d.id}, {"p_min", d.p_min}, {"p_max_capacity", d.p_max_capacity}};
}
inline void from_json(const Json& j, GenerationDevice& d) {
  d.id = j.at("id").get<std::string>();
  d.p_min = j.at("p_min").get<Series>();
  d.p_max_capacity = j.at("p_max_capacity").get<double>();
}

inline void to_json(Json& j, const StorageDevice& d) {
  j = Json{{"id", d.id},
           {"e_min", d.e_min},
           {"e_max", d.e_max},
           {"p_charge_max", d.p_charge_max},
           {"p_discharge_max", d.p_discharge_max},
           {"e_initial", d.e_initial},
           {"eta_charge", d.eta_charge},
           {"eta_discharge", d.eta_discharge}};
}
inline void from_json(const Json& j, StorageDevice& d) {
  d.id = j.at("id").get<std::string>();
  d.e_min = j.at("e_min").get<double>();
  d.e_max = j.at("e_max").get<double>();
  d.p_charge_max = j.at("p_charge_max").get<double>();
  d.p_discharge_max = j.at("p_discharge_max").get<double>();
  d.e_initial = j.at("e_initial").get<double>();
  d.eta_charge = j.value("eta_charge", 1.0);
  d.eta_discharge = j.value("eta_discharge", 1.0);
}

inline void to_json(Json& j, const MarketSeries& m) {
  j = Json{{"price", m.price}, {"carbon_intensity", m.carbon_intensity}};
}
inline void from_json(const Json& j, MarketSeries& m) {
  m.price = j.at("price").get<Series>();
  m.carbon_intensity = j.at("carbon_intensity").get<Series>();
}

inline void to_json(Json& j, const BuildingSeries& b) {
  j = Json{{"id", b.id}, {"load", b.load}, {"solar_capacity", b.solar_capacity}};
}
inline void from_json(const Json& j, BuildingSeries& b) {
  b.id = j.at("id").get<std::string>();
  b.load = j.at("load").get<Series>();
  b.solar_capacity = j.at("solar_capacity").get<Series>();
}

inline void to_json(Json& j, const ProblemInstance& p) {
  j = Json{{"grid", p.grid},
           {"buildings", p.buildings},
           {"generators", p.generators},
           {"storages", p.storages},
           {"market", p.market}};
}
inline void from_json(const Json& j, ProblemInstance& p) {
  p.grid = j.at("grid").get<TimeGrid>();
  p.buildings = j.at("buildings").get<std::vector<BuildingSeries>>();
  p.generators = j.value("generators", std::vector<GenerationDevice>{});
  p.storages = j.value("storages", std::vector<StorageDevice>{});
  p.market = j.at("market").get<MarketSeries>();
}

inline void to_json(Json& j, const DispatchPlan& p) {
  j = Json{{"p_grid", p.p_grid},
           {"p_gen", p.p_gen},
           {"p_charge", p.p_charge},
           {"p_discharge", p.p_discharge},
           {"soc", p.soc}};
}
inline void from_json(const Json& j, DispatchPlan& p) {
  p.p_grid = j.at("p_grid").get<Series>();
  p.p_gen = j.at("p_gen").get<std::vector<Series>>();
  p.p_charge = j.at("p_charge").get<std::vector<Series>>();
  p.p_discharge = j.at("p_discharge").get<std::vector<Series>>();
  p.soc = j.at("soc").get<std::vector<Series>>();
}

template <class T>
std::string encode(const T& value) {
  return Json(value).dump(2);
}

template <class T>
T decode(std::string_view text) {
  return Json::parse(text).get<T>();
}

inline ProblemInstance read_instance_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, -1, "cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return decode<ProblemInstance>(ss.str());
  } catch (const Json::exception& e) {
    throw ParseError(path, -1, e.what());
  }
}

// ---------------------------------------------------------------------------
// CSV

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name, or -1.
  int column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, -1, "cannot open");
  CsvTable table;
  std::string line;
  long row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (row == 0) {
      table.header = std::move(fields);
    } else {
      if (fields.size() != table.header.size())
        throw ParseError(path, row, "expected " + std::to_string(table.header.size()) + " fields, got " +
                                        std::to_string(fields.size()));
      table.rows.push_back(std::move(fields));
    }
    ++row;
  }
  if (table.header.empty()) throw ParseError(path, -1, "empty file");
  return table;
}

/// Accumulates CSV text; numbers go through format_double.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out_ << ',';
      out_ << header[i];
    }
    out_ << '\n';
  }

  CsvWriter& cell(const std::string& s) {
    sep();
    out_ << s;
    return *this;
  }
  CsvWriter& cell(double v) {
    sep();
    out_ << format_double(v);
    return *this;
  }
  CsvWriter& cell(long v) {
    sep();
    out_ << v;
    return *this;
  }
  CsvWriter& cell(int v) { return cell(static_cast<long>(v)); }
  CsvWriter& cell(std::size_t v) { return cell(static_cast<long>(v)); }
  CsvWriter& end_row() {
    out_ << '\n';
    first_ = true;
    return *this;
  }

  std::string str() const { return out_.str(); }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << out_.str();
  }

 private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }
  std::ostringstream out_;
  bool first_ = true;
};

}  // namespace sofo
