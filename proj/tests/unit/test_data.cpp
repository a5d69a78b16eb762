#include <gtest/gtest.h>

#include <json.hpp>

#include "cgp/data.hpp"
#include "support/oracles.hpp"

using namespace cgp;
using nlohmann::json;

namespace {

const std::string kGolden = std::string(CGP_SOURCE_DIR) + "/tests/fixtures/golden/";

Dataset golden() {
  return load_dataset(kGolden + "features.csv", kGolden + "fatalities.csv", kGolden + "policies.csv");
}

std::string write(const std::filesystem::path& dir, const std::string& name, const std::string& text) {
  const auto p = (dir / name).string();
  write_file(p, text);
  return p;
}

}  // namespace

TEST(Data, GoldenFixtureMatchesPythonOracle) {
  const json expected = json::parse(read_file(kGolden + "expected.json"));
  const Dataset ds = golden();
  EXPECT_EQ(ds.feature_names, expected["feature_names"].get<std::vector<std::string>>());
  EXPECT_EQ(ds.indicator_names, expected["indicator_names"].get<std::vector<std::string>>());
  ASSERT_EQ(ds.regions.size(), expected["regions"].size());
  for (std::size_t i = 0; i < ds.regions.size(); ++i) {
    const RegionRecord& r = ds.regions[i];
    const json& e = expected["regions"][i];
    SCOPED_TRACE(r.region_id);
    EXPECT_EQ(r.region_id, e["region_id"].get<std::string>());
    EXPECT_EQ(r.parent_country.value_or(""), e["parent_country"].is_null() ? "" : e["parent_country"].get<std::string>());
    EXPECT_DOUBLE_EQ(r.population, e["population"].get<double>());
    const auto feats = e["features"].get<std::vector<double>>();
    ASSERT_EQ(r.features.size(), feats.size());
    for (std::size_t c = 0; c < feats.size(); ++c) EXPECT_NEAR(r.features[c], feats[c], 1e-12);
    EXPECT_EQ(r.imputed, e["imputed"].get<std::vector<bool>>());
    EXPECT_EQ(r.fatalities, e["fatalities"].get<std::vector<double>>());
    EXPECT_EQ(format_date(r.outbreak_date()), e["outbreak_date"].get<std::string>());
    EXPECT_EQ(r.policy.days, e["policy"].get<std::vector<PolicyVector>>());
    EXPECT_EQ(r.future_policy.days, e["future_policy"].get<std::vector<PolicyVector>>());
    EXPECT_EQ(r.monotonicity_repairs, e["repairs"].get<std::size_t>());
  }
  ASSERT_EQ(ds.report.dropped.size(), 1u);
  EXPECT_EQ(ds.report.dropped[0].first, "DD");
  EXPECT_EQ(ds.report.dropped_feature_columns, std::vector<std::string>{"empty_col"});
}

TEST(Data, SerializeRoundTrips) {
  const Dataset ds = golden();
  const Dataset back = parse_dataset(serialize_dataset(ds));
  EXPECT_EQ(back.regions, ds.regions);
  EXPECT_EQ(back.feature_names, ds.feature_names);
  EXPECT_EQ(serialize_dataset(back), serialize_dataset(ds));
}

TEST(Data, OrphanRegionIsAJoinError) {
  const auto dir = oracle::scratch_dir("orphan");
  const auto f = write(dir, "f.csv", "region_id,x\nA,1\n");
  const auto d = write(dir, "d.csv", "region_id,date,cumulative_deaths\nA,2020-01-01,1\nZ,2020-01-01,1\n");
  const auto p = write(dir, "p.csv", "region_id,date,a\nA,2020-01-01,0\n");
  try {
    load_dataset(f, d, p);
    FAIL() << "expected JoinError";
  } catch (const JoinError& e) {
    EXPECT_NE(std::string(e.what()).find("Z"), std::string::npos);
  }
}

TEST(Data, ParseErrorsCarryFileAndLine) {
  const auto dir = oracle::scratch_dir("parse");
  const auto f = write(dir, "f.csv", "region_id,x\nA,1\n");
  const auto p = write(dir, "p.csv", "region_id,date,a\nA,2020-01-01,0\n");
  const auto bad_date = write(dir, "d1.csv", "region_id,date,cumulative_deaths\nA,2020-13-01,1\n");
  const auto bad_num = write(dir, "d2.csv", "region_id,date,cumulative_deaths\nA,2020-01-01,1\nA,2020-01-02,x\n");
  try {
    load_dataset(f, bad_date, p);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("d1.csv:2"), std::string::npos) << e.what();
  }
  try {
    load_dataset(f, bad_num, p);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("d2.csv:3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_dataset(f, (dir / "missing.csv").string(), p), ParseError);
}

TEST(Data, StringencyIndex) {
  EXPECT_DOUBLE_EQ(stringency_index({0.0, 1.0}), 50.0);
  EXPECT_DOUBLE_EQ(stringency_index({1.0, 1.0}, 120.0), 100.0);
  EXPECT_DOUBLE_EQ(stringency_index({}), 0.0);
}

TEST(Data, TruncateMovesLaterDaysToFuturePolicy) {
  const Dataset ds = golden();
  const RegionRecord& aa = ds.regions[0];
  const auto cut = truncate_region(aa, aa.outbreak_date() + 4, 5);
  ASSERT_TRUE(cut.has_value());
  EXPECT_EQ(cut->fatalities.size(), 5u);
  EXPECT_EQ(cut->policy.days.size(), 5u);
  EXPECT_EQ(cut->future_policy.days.front(), aa.policy.days[5]);
  EXPECT_EQ(cut->future_policy.days.size(), 1u + aa.future_policy.days.size());
  EXPECT_FALSE(truncate_region(aa, aa.outbreak_date() + 3, 5).has_value());
}

TEST(Data, AggregateSumsChildrenOnSharedCalendar) {
  const Dataset ds = golden();
  const RegionRecord nat = aggregate_regions({ds.regions[0], ds.regions[1]}, "X");
  EXPECT_EQ(nat.region_id, "X");
  EXPECT_EQ(nat.outbreak_date(), ds.regions[1].outbreak_date());
  EXPECT_DOUBLE_EQ(nat.population, 3e6);
  // BB starts 2020-03-02, AA on 2020-03-03: day 0 is BB alone.
  EXPECT_DOUBLE_EQ(nat.fatalities[0], 1.0);
  EXPECT_DOUBLE_EQ(nat.fatalities[1], 3.0 + 1.0);
  EXPECT_DOUBLE_EQ(nat.fatalities.back(), 9.0 + 7.0);
}
