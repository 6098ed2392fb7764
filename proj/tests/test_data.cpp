#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "sofo/data.hpp"

using namespace sofo;
using namespace sofo::data;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("sofo_data_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  void write(const std::string& file, const std::string& text) const { std::ofstream(path / file) << text; }
};

// 1 building, `rows` hourly rows, optional override of one building line.
void write_minimal(const TempDir& d, int rows, int bad_row = -1, const std::string& bad_line = "") {
  std::string district = "timestamp,price,carbon_intensity\n";
  std::string building = "timestamp,hour,load_kw,solar_kw\n";
  for (int r = 1; r <= rows; ++r) {
    const int ts = r - 1;
    district += std::to_string(ts) + ",0.2,0.4\n";
    building += r == bad_row ? bad_line + "\n" : std::to_string(ts) + "," + std::to_string(ts % 24) + ",1.5,0.5\n";
  }
  d.write("district.csv", district);
  d.write("building_a.csv", building);
  d.write("batteries.csv",
          "id,e_max,e_min,p_charge_max,p_discharge_max,e_initial,eta_charge,eta_discharge\na,6.4,0,5,5,0,1,1\n");
}

long parse_row(const std::string& dir) {
  try {
    load_dataset(dir);
  } catch (const ParseError& e) {
    return e.row();
  }
  return -100;
}

}  // namespace

TEST(LoadDataset, MinimalValid) {
  TempDir d("minimal");
  write_minimal(d, 48);
  const auto inst = load_dataset(d.path.string());
  EXPECT_EQ(inst.horizon(), 48u);
  ASSERT_EQ(inst.buildings.size(), 1u);
  EXPECT_EQ(inst.buildings[0].id, "a");
  EXPECT_EQ(inst.buildings[0].load[47], 1.5);
  ASSERT_EQ(inst.generators.size(), 1u);
  EXPECT_EQ(inst.generators[0].p_max_capacity, 0.5);
  ASSERT_EQ(inst.storages.size(), 1u);
  EXPECT_EQ(inst.storages[0].e_max, 6.4);
  EXPECT_TRUE(validate_instance(inst).empty());
}

TEST(LoadDataset, GapCitesRow) {
  TempDir d("gap");
  write_minimal(d, 48, 30, "30,6,1.5,0.5");  // timestamp 29 skipped
  EXPECT_EQ(parse_row(d.path.string()), 30);
  try {
    load_dataset(d.path.string());
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("building_a.csv:30"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("contiguous"), std::string::npos);
  }
}

TEST(LoadDataset, NegativeLoad) {
  TempDir d("negative");
  write_minimal(d, 48, 5, "4,4,\xE2\x88\x92" "3,0.5");
  try {
    load_dataset(d.path.string());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 5);
    EXPECT_NE(std::string(e.what()).find("negative"), std::string::npos);
  }
  write_minimal(d, 48, 5, "4,4,-3,0.5");
  EXPECT_EQ(parse_row(d.path.string()), 5);
}

TEST(LoadDataset, MissingColumnAndHourMismatch) {
  TempDir d("columns");
  write_minimal(d, 24);
  d.write("district.csv", "timestamp,price\n0,0.2\n");
  EXPECT_THROW(load_dataset(d.path.string()), ParseError);
  write_minimal(d, 24, 3, "2,5,1.5,0.5");
  EXPECT_EQ(parse_row(d.path.string()), 3);
  EXPECT_THROW(load_dataset((d.path / "nope").string()), ParseError);
}

TEST(LoadDataset, RoundTripsWrittenDataset) {
  TempDir d("roundtrip");
  SyntheticSpec spec;
  spec.days = 3;
  spec.seed = 4;
  spec.start_index = 24 * 40 + 5;
  const auto inst = generate_synthetic(spec);
  write_dataset(inst, d.path.string());
  EXPECT_EQ(load_dataset(d.path.string()), inst);
}

TEST(Synthetic, NoiselessIsPeriodic) {
  SyntheticSpec spec;
  spec.days = 14;
  spec.load_noise = 0.0;
  spec.solar_noise = 0.0;
  const auto inst = generate_synthetic(spec);
  // Weekdays repeat with period 24 apart from the weekend modulation.
  for (const auto& b : inst.buildings)
    for (std::size_t t = 24; t < 24 * 5; ++t) EXPECT_EQ(b.load[t], b.load[t - 24]);
  for (const auto& b : inst.buildings)
    for (std::size_t t = 24 * 7; t < inst.horizon(); ++t) EXPECT_EQ(b.load[t], b.load[t - 24 * 7]);
}

TEST(Synthetic, DriftScalesMeanLoad) {
  SyntheticSpec spec;
  spec.days = 30;
  spec.load_noise = 0.0;
  spec.drift = {15, 1.2};
  const auto inst = generate_synthetic(spec);
  double before = 0.0, after = 0.0;
  for (const auto& b : inst.buildings) {
    for (std::size_t t = 0; t < 14 * 24; ++t) before += b.load[t];
    for (std::size_t t = 15 * 24; t < 30 * 24; ++t) after += b.load[t];
  }
  const double ratio = (after / 15.0) / (before / 14.0);
  EXPECT_NEAR(ratio, 1.2, 0.012);
}

TEST(Synthetic, SolarZeroAtMidnightAndDeterministic) {
  SyntheticSpec spec;
  spec.seed = 9;
  const auto a = generate_synthetic(spec);
  for (const auto& b : a.buildings)
    for (std::size_t t = 0; t < a.horizon(); t += 24) EXPECT_EQ(b.solar_capacity[t], 0.0);
  EXPECT_EQ(a, generate_synthetic(spec));
  spec.seed = 10;
  EXPECT_NE(a, generate_synthetic(spec));
  EXPECT_TRUE(validate_instance(a).empty());
}

TEST(Synthetic, TariffAndSpecChecks) {
  EXPECT_EQ(tou_price(16), 0.50);
  EXPECT_EQ(tou_price(21), 0.50);
  EXPECT_EQ(tou_price(22), 0.21);
  EXPECT_EQ(tou_price(3), 0.21);
  SyntheticSpec spec;
  spec.days = 1;
  EXPECT_THROW(generate_synthetic(spec), ContractError);
}

TEST(Synthetic, SpecJsonRoundTrip) {
  SyntheticSpec s;
  s.days = 12;
  s.drift = {5, 1.3};
  s.seed = 99;
  const Json j = s;
  const auto back = j.get<SyntheticSpec>();
  EXPECT_EQ(Json(back), j);
}
