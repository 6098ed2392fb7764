#pragma once

// Dataset directories on disk and the seeded synthetic district generator.
//
// Directory layout read by load_dataset:
//   district.csv      timestamp, price, carbon_intensity
//   building_<id>.csv timestamp, hour, load_kw, solar_kw   (one per building)
//   batteries.csv     id, e_max, e_min, p_charge_max, p_discharge_max,
//                     e_initial, eta_charge, eta_discharge
//   generators.csv    id, p_max_capacity                    (optional)
//
// Timestamps are integer hours since Monday 00:00, 1 January. Battery and
// generator ids name the building they sit in. Without generators.csv every
// building with nonzero solar gets a generator whose nameplate is its peak.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "sofo/domain.hpp"
#include "sofo/errors.hpp"
#include "sofo/rng.hpp"
#include "sofo/serialize.hpp"

namespace sofo::data {

namespace fs = std::filesystem;

namespace detail {

inline std::size_t require_column(const CsvTable& t, const std::string& file, const std::string& name) {
  const int c = t.column(name);
  if (c < 0) throw ParseError(file, 0, "missing column '" + name + "'");
  return static_cast<std::size_t>(c);
}

// Accepts the Unicode minus sign so that a negative value is reported as
// negative rather than as unparsable.
inline double number(const std::string& cell, const std::string& file, long row, const std::string& column) {
  std::string s = cell;
  for (std::size_t p; (p = s.find("\xE2\x88\x92")) != std::string::npos;) s.replace(p, 3, "-");
  double v = 0.0;
  if (!parse_double(s, v) || !std::isfinite(v))
    throw ParseError(file, row, "column '" + column + "': not a number: '" + cell + "'");
  return v;
}

inline double nonnegative(const std::string& cell, const std::string& file, long row, const std::string& column) {
  const double v = number(cell, file, row, column);
  if (v < 0.0) throw ParseError(file, row, "column '" + column + "': negative value " + cell);
  return v;
}

// Reads the timestamp column and checks hourly contiguity. Rows are numbered
// from 1 for the first data line.
inline std::vector<std::int64_t> timestamps(const CsvTable& t, const std::string& file) {
  const auto c = require_column(t, file, "timestamp");
  std::vector<std::int64_t> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const long row = static_cast<long>(r) + 1;
    const double v = number(t.rows[r][c], file, row, "timestamp");
    if (v != std::floor(v)) throw ParseError(file, row, "timestamp must be an integer hour");
    const auto ts = static_cast<std::int64_t>(v);
    if (!out.empty() && ts != out.back() + 1)
      throw ParseError(file, row, "timestamps not contiguous: " + std::to_string(out.back()) + " then " +
                                      std::to_string(ts));
    out.push_back(ts);
  }
  if (out.empty()) throw ParseError(file, -1, "no data rows");
  return out;
}

inline std::int64_t floor_mod(std::int64_t a, std::int64_t b) { return ((a % b) + b) % b; }

}  // namespace detail

/// Reads a dataset directory into an instance.
inline ProblemInstance load_dataset(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw ParseError(dir, -1, "not a dataset directory");

  ProblemInstance inst;
  const std::string district_file = (root / "district.csv").string();
  const auto district = read_csv(district_file);
  const auto ts = detail::timestamps(district, district_file);
  const auto c_price = detail::require_column(district, district_file, "price");
  const auto c_carbon = detail::require_column(district, district_file, "carbon_intensity");
  for (std::size_t r = 0; r < district.rows.size(); ++r) {
    const long row = static_cast<long>(r) + 1;
    inst.market.price.push_back(detail::nonnegative(district.rows[r][c_price], district_file, row, "price"));
    inst.market.carbon_intensity.push_back(
        detail::nonnegative(district.rows[r][c_carbon], district_file, row, "carbon_intensity"));
  }
  inst.grid = {ts.front(), ts.size(), 1.0};

  std::vector<fs::path> building_files;
  for (const auto& e : fs::directory_iterator(root)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("building_", 0) == 0 && e.path().extension() == ".csv")
      building_files.push_back(e.path());
  }
  std::sort(building_files.begin(), building_files.end());
  if (building_files.empty()) throw ParseError(dir, -1, "no building_<id>.csv files");

  for (const auto& path : building_files) {
    const std::string file = path.string();
    const auto t = read_csv(file);
    const auto bts = detail::timestamps(t, file);
    if (bts.size() != ts.size() || bts.front() != ts.front())
      throw ParseError(file, -1, "timestamps do not match district.csv");
    const auto c_hour = detail::require_column(t, file, "hour");
    const auto c_load = detail::require_column(t, file, "load_kw");
    const auto c_solar = detail::require_column(t, file, "solar_kw");
    BuildingSeries b;
    b.id = path.stem().string().substr(std::string("building_").size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const long row = static_cast<long>(r) + 1;
      const double hour = detail::number(t.rows[r][c_hour], file, row, "hour");
      if (hour != static_cast<double>(detail::floor_mod(bts[r], 24)))
        throw ParseError(file, row, "hour " + t.rows[r][c_hour] + " inconsistent with timestamp");
      b.load.push_back(detail::nonnegative(t.rows[r][c_load], file, row, "load_kw"));
      b.solar_capacity.push_back(detail::nonnegative(t.rows[r][c_solar], file, row, "solar_kw"));
    }
    inst.buildings.push_back(std::move(b));
  }

  const std::string battery_file = (root / "batteries.csv").string();
  const auto bt = read_csv(battery_file);
  const auto c_id = detail::require_column(bt, battery_file, "id");
  const std::vector<std::string> fields = {"e_max", "e_min", "p_charge_max", "p_discharge_max",
                                           "e_initial", "eta_charge", "eta_discharge"};
  std::vector<std::size_t> cols;
  for (const auto& f : fields) cols.push_back(detail::require_column(bt, battery_file, f));
  for (std::size_t r = 0; r < bt.rows.size(); ++r) {
    const long row = static_cast<long>(r) + 1;
    double v[7];
    for (std::size_t k = 0; k < 7; ++k) v[k] = detail::nonnegative(bt.rows[r][cols[k]], battery_file, row, fields[k]);
    StorageDevice s{bt.rows[r][c_id], v[1], v[0], v[2], v[3], v[4], v[5], v[6]};
    if (inst.building_index(s.id) == inst.buildings.size())
      throw ParseError(battery_file, row, "no building named '" + s.id + "'");
    inst.storages.push_back(s);
  }

  const fs::path gen_path = root / "generators.csv";
  const Series zeros(inst.horizon(), 0.0);
  if (fs::exists(gen_path)) {
    const std::string file = gen_path.string();
    const auto gt = read_csv(file);
    const auto g_id = detail::require_column(gt, file, "id");
    const auto g_cap = detail::require_column(gt, file, "p_max_capacity");
    for (std::size_t r = 0; r < gt.rows.size(); ++r) {
      const long row = static_cast<long>(r) + 1;
      GenerationDevice g{gt.rows[r][g_id], zeros, detail::nonnegative(gt.rows[r][g_cap], file, row, "p_max_capacity")};
      if (inst.building_index(g.id) == inst.buildings.size())
        throw ParseError(file, row, "no building named '" + g.id + "'");
      inst.generators.push_back(std::move(g));
    }
  } else {
    for (const auto& b : inst.buildings) {
      const double peak = *std::max_element(b.solar_capacity.begin(), b.solar_capacity.end());
      if (peak > 0.0) inst.generators.push_back({b.id, zeros, peak});
    }
  }

  auto violations = validate_instance(inst);
  if (!violations.empty())
    throw ParseError(dir, -1, violations.front().path + ": " + violations.front().message);
  return inst;
}

/// Writes the layout read by load_dataset. Generator p_min is not stored and
/// must be zero.
inline void write_dataset(const ProblemInstance& inst, const std::string& dir) {
  for (const auto& g : inst.generators)
    for (double v : g.p_min)
      if (v != 0.0) throw ContractError("write_dataset: generator '" + g.id + "' has nonzero p_min");
  const fs::path root(dir);
  fs::create_directories(root);
  const std::size_t T = inst.horizon();
  auto ts = [&](std::size_t t) { return static_cast<long>(inst.grid.hour_index(t)); };

  CsvWriter district({"timestamp", "price", "carbon_intensity"});
  for (std::size_t t = 0; t < T; ++t)
    district.cell(ts(t)).cell(inst.market.price[t]).cell(inst.market.carbon_intensity[t]).end_row();
  district.save((root / "district.csv").string());

  for (const auto& b : inst.buildings) {
    CsvWriter w({"timestamp", "hour", "load_kw", "solar_kw"});
    for (std::size_t t = 0; t < T; ++t)
      w.cell(ts(t)).cell(inst.grid.hour_of_day(t)).cell(b.load[t]).cell(b.solar_capacity[t]).end_row();
    w.save((root / ("building_" + b.id + ".csv")).string());
  }

  CsvWriter bat({"id", "e_max", "e_min", "p_charge_max", "p_discharge_max", "e_initial", "eta_charge",
                 "eta_discharge"});
  for (const auto& s : inst.storages)
    bat.cell(s.id).cell(s.e_max).cell(s.e_min).cell(s.p_charge_max).cell(s.p_discharge_max).cell(s.e_initial)
        .cell(s.eta_charge).cell(s.eta_discharge).end_row();
  bat.save((root / "batteries.csv").string());

  CsvWriter gen({"id", "p_max_capacity"});
  for (const auto& g : inst.generators) gen.cell(g.id).cell(g.p_max_capacity).end_row();
  gen.save((root / "generators.csv").string());
}

// ---------------------------------------------------------------------------
// Synthetic district

struct DriftSpec {
  std::size_t day = 0;      // first scaled day, 0-based; 0 disables
  double load_scale = 1.0;  // multiplier on load from `day` on
};

struct SyntheticSpec {
  std::size_t days = 30;
  std::size_t n_buildings = 3;
  DriftSpec drift;
  double load_noise = 0.05;   // std as a fraction of the building's base load
  double solar_noise = 0.15;  // std of the daily cloudiness factor
  double price_noise = 0.0;   // std as a fraction of the tariff
  std::uint64_t seed = 0;
  std::int64_t start_index = 0;
  // Battery in every building.
  double battery_e_max = 6.4;
  double battery_p_max = 5.0;
  double battery_eta = 1.0;
  double solar_ratio = 4.0;  // solar nameplate per kW of base load

  void validate() const {
    if (days < 2) throw ContractError("synthetic dataset needs days >= 2");
    if (n_buildings < 1) throw ContractError("synthetic dataset needs at least one building");
    if (!(drift.load_scale > 0.0)) throw ContractError("drift load_scale must be positive");
    if (load_noise < 0.0 || solar_noise < 0.0 || price_noise < 0.0 || solar_ratio < 0.0) throw ContractError("noise levels must be >= 0");
    if (!(battery_eta > 0.0 && battery_eta <= 1.0)) throw ContractError("battery_eta must be in (0,1]");
  }
};

/// Two-tier time-of-use tariff: 0.50 from 16:00 to 21:59 every day, else 0.21.
inline double tou_price(int hour) { return (hour >= 16 && hour <= 21) ? 0.50 : 0.21; }

/// Normalised load shape: morning and evening peaks on a base, lower at weekends.
inline double load_shape(int hour, int day_of_week) {
  const double h = static_cast<double>(hour);
  const double morning = std::exp(-0.5 * std::pow((h - 8.0) / 2.0, 2));
  const double evening = std::exp(-0.5 * std::pow((h - 19.0) / 2.5, 2));
  const double weekly = day_of_week >= 5 ? 0.85 : 1.0;
  return weekly * (0.6 + 0.35 * morning + 0.7 * evening);
}

/// Clear-sky solar fraction: half sine between 06:00 and 18:00.
inline double solar_shape(int hour) {
  if (hour <= 6 || hour >= 18) return 0.0;
  return std::sin(std::numbers::pi * (hour - 6) / 12.0);
}

inline double carbon_shape(int hour) {
  return 0.35 + 0.1 * std::cos(2.0 * std::numbers::pi * (hour - 19) / 24.0);
}

/// Seeded synthetic district. Building b has base load 2 + 0.5 b kW and solar
/// nameplate solar_ratio times that.
inline ProblemInstance generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t T = spec.days * 24;
  ProblemInstance inst;
  inst.grid = {spec.start_index, T, 1.0};
  Rng rng(derive_seed(spec.seed, {0x5EED}));
  std::normal_distribution<double> z(0.0, 1.0);

  // Daily cloudiness shared by the district.
  std::vector<double> cloud(spec.days);
  for (auto& c : cloud) c = std::clamp(1.0 - spec.solar_noise * std::abs(z(rng)), 0.0, 1.0);

  const Series zeros(T, 0.0);
  for (std::size_t b = 0; b < spec.n_buildings; ++b) {
    BuildingSeries bs;
    bs.id = std::to_string(b);
    const double base = 2.0 + 0.5 * static_cast<double>(b);
    const double nameplate = spec.solar_ratio * base;
    bs.load.resize(T);
    bs.solar_capacity.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
      const int h = inst.grid.hour_of_day(t), dow = inst.grid.day_of_week(t);
      const std::size_t day = t / 24;
      double load = base * load_shape(h, dow) + spec.load_noise * base * z(rng);
      if (spec.drift.day > 0 && day >= spec.drift.day) load *= spec.drift.load_scale;
      bs.load[t] = std::max(load, 0.0);
      bs.solar_capacity[t] = nameplate * solar_shape(h) * cloud[day];
    }
    inst.generators.push_back({bs.id, zeros, nameplate});
    StorageDevice s;
    s.id = bs.id;
    s.e_max = spec.battery_e_max;
    s.p_charge_max = spec.battery_p_max;
    s.p_discharge_max = spec.battery_p_max;
    s.eta_charge = spec.battery_eta;
    s.eta_discharge = spec.battery_eta;
    inst.storages.push_back(s);
    inst.buildings.push_back(std::move(bs));
  }

  inst.market.price.resize(T);
  inst.market.carbon_intensity.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    const int h = inst.grid.hour_of_day(t);
    const double p = tou_price(h);
    inst.market.price[t] = std::max(0.0, p * (1.0 + spec.price_noise * z(rng)));
    inst.market.carbon_intensity[t] = carbon_shape(h);
  }
  return inst;
}

inline void to_json(Json& j, const SyntheticSpec& s) {
  j = Json{{"days", s.days},
           {"n_buildings", s.n_buildings},
           {"drift", {{"day", s.drift.day}, {"load_scale", s.drift.load_scale}}},
           {"load_noise", s.load_noise},
           {"solar_noise", s.solar_noise},
           {"price_noise", s.price_noise},
           {"seed", s.seed},
           {"start_index", s.start_index},
           {"battery_e_max", s.battery_e_max},
           {"battery_p_max", s.battery_p_max},
           {"battery_eta", s.battery_eta},
           {"solar_ratio", s.solar_ratio}};
}

inline void from_json(const Json& j, SyntheticSpec& s) {
  const SyntheticSpec d;
  s.days = j.value("days", d.days);
  s.n_buildings = j.value("n_buildings", d.n_buildings);
  if (j.contains("drift")) {
    s.drift.day = j.at("drift").value("day", std::size_t{0});
    s.drift.load_scale = j.at("drift").value("load_scale", 1.0);
  }
  s.load_noise = j.value("load_noise", d.load_noise);
  s.solar_noise = j.value("solar_noise", d.solar_noise);
  s.price_noise = j.value("price_noise", d.price_noise);
  s.seed = j.value("seed", d.seed);
  s.start_index = j.value("start_index", d.start_index);
  s.battery_e_max = j.value("battery_e_max", d.battery_e_max);
  s.battery_p_max = j.value("battery_p_max", d.battery_p_max);
  s.battery_eta = j.value("battery_eta", d.battery_eta);
  s.solar_ratio = j.value("solar_ratio", d.solar_ratio);
}

}  // namespace sofo::data
