#include <algorithm>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "satstack/fixtures.hpp"
#include "satstack/hydro.hpp"
#include "support.hpp"

using namespace satstack;
using namespace satstack::test;

namespace {

RasterGrid binary_from(const std::vector<bool>& on, int rows, int cols) {
  RasterGrid g(lattice(rows, cols));
  for (std::size_t i = 0; i < on.size(); ++i) g[i] = on[i] ? 1.0 : kMissing;
  return g;
}

RasterGrid square_mask(int rows, int cols, int r0, int c0, int h, int w) {
  RasterGrid g(lattice(rows, cols));
  for (int r = r0; r < r0 + h; ++r) {
    for (int c = c0; c < c0 + w; ++c) g.at(r, c) = 1.0;
  }
  return g;
}

}  // namespace

TEST(Components, ExhaustiveFourByFour) {
  for (unsigned bits = 0; bits < (1u << 16); ++bits) {
    std::vector<bool> on(16);
    for (int i = 0; i < 16; ++i) on[static_cast<std::size_t>(i)] = (bits >> i) & 1u;
    int count = 0;
    const auto expect = oracle::flood_fill_labels(on, 4, 4, &count);
    const ComponentLabels got = connected_components(binary_from(on, 4, 4));
    ASSERT_EQ(got.count, count) << bits;
    ASSERT_EQ(got.labels, expect) << bits;
  }
}

TEST(Components, RandomEightByEight) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10000; ++trial) {
    const double p = (trial % 9 + 1) / 10.0;
    std::bernoulli_distribution b(p);
    std::vector<bool> on(64);
    for (std::size_t i = 0; i < 64; ++i) on[i] = b(rng);
    int count = 0;
    const auto expect = oracle::flood_fill_labels(on, 8, 8, &count);
    const ComponentLabels got = connected_components(binary_from(on, 8, 8));
    ASSERT_EQ(got.count, count);
    ASSERT_EQ(got.labels, expect);
    std::size_t total = 0;
    for (std::size_t n : got.cell_counts) total += n;
    ASSERT_EQ(total, static_cast<std::size_t>(std::count(on.begin(), on.end(), true)));
  }
}

TEST(Components, Examples) {
  const ComponentLabels diag = connected_components(grid_of(2, 2, {1, kMissing, kMissing, 1}));
  EXPECT_EQ(diag.count, 1);
  const ComponentLabels split = connected_components(grid_of(3, 2, {1, 1, kMissing, kMissing, 1, 1}));
  EXPECT_EQ(split.count, 2);
  EXPECT_EQ(connected_components(RasterGrid(lattice(3, 3))).count, 0);
  EXPECT_ERRC(connected_components(grid_of(1, 1, {0.5})), Errc::non_binary_mask);
}

TEST(DetectWater, ThresholdIsStrictAndMonotone) {
  EXPECT_EQ(detect_water(grid_of(1, 3, {-0.1, -0.5, -0.2})).count, 0);
  RasterGrid scene(lattice(12, 12), -0.5);
  for (int r = 2; r < 8; ++r) {
    for (int c = 2; c < 8; ++c) scene.at(r, c) = 0.4;
  }
  scene.at(10, 10) = 0.2;
  const ComponentLabels l = detect_water(scene);
  ASSERT_EQ(l.count, 2);
  EXPECT_EQ(l.cell_counts, (std::vector<std::size_t>{36, 1}));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  RasterGrid noisy(lattice(20, 20));
  for (double& v : noisy.values()) v = u(rng);
  std::size_t prev = noisy.size() + 1;
  for (double t = -1.0; t <= 1.0; t += 0.1) {
    const ComponentLabels c = detect_water(noisy, t);
    std::size_t flooded = 0;
    for (std::size_t n : c.cell_counts) flooded += n;
    EXPECT_LE(flooded, prev);
    prev = flooded;
    std::vector<bool> on(noisy.size());
    for (std::size_t i = 0; i < on.size(); ++i) on[i] = noisy[i] > t;
    int count = 0;
    oracle::flood_fill_labels(on, 20, 20, &count);
    EXPECT_EQ(c.count, count);
  }
}

TEST(LargestComponent, Selection) {
  ComponentLabels l;
  l.count = 2;
  l.cell_counts = {120, 3};
  EXPECT_EQ(largest_component(l, 100.0), (std::pair<int, double>{1, 12000.0}));
  l.cell_counts = {3, 120};
  EXPECT_EQ(largest_component(l, 1.0).first, 2);
  l.cell_counts = {5, 5};
  EXPECT_EQ(largest_component(l, 1.0).first, 1);
  l.count = 1;
  l.cell_counts = {7};
  EXPECT_EQ(largest_component(l, 1.0).first, 1);
  EXPECT_ERRC(largest_component(ComponentLabels{}, 1.0), Errc::no_components);
}

TEST(Shoreline, RectanglesAndSingleCell) {
  const auto one = connected_components(square_mask(5, 5, 2, 2, 1, 1));
  EXPECT_EQ(shoreline_cells(one, 1), (std::vector<Cell>{{2, 2}}));
  const auto three = connected_components(square_mask(5, 5, 1, 1, 3, 3));
  const auto s3 = shoreline_cells(three, 1);
  EXPECT_EQ(s3.size(), 8u);
  EXPECT_EQ(std::count(s3.begin(), s3.end(), Cell{2, 2}), 0);
  EXPECT_EQ(shoreline_cells(connected_components(square_mask(14, 14, 2, 2, 10, 10)), 1).size(), 36u);
  for (int h = 2; h <= 7; ++h) {
    for (int w = 2; w <= 7; ++w) {
      const auto l = connected_components(square_mask(10, 10, 1, 2, h, w));
      EXPECT_EQ(shoreline_cells(l, 1).size(), static_cast<std::size_t>(2 * (w + h) - 4));
    }
  }
  // Cells on the grid border count as shoreline.
  EXPECT_EQ(shoreline_cells(connected_components(RasterGrid(lattice(4, 4), 1.0)), 1).size(), 12u);
  EXPECT_ERRC(shoreline_cells(three, 2), Errc::unknown_component);
}

TEST(WaterLevel, MedianAndLevelSet) {
  Dem flat{RasterGrid(lattice(3, 3), 590.0)};
  EXPECT_EQ(water_level(flat, {{0, 0}, {1, 1}}), 590.0);
  Dem d{grid_of(1, 4, {588, 590, 591, kMissing})};
  EXPECT_EQ(water_level(d, {{0, 0}, {0, 1}, {0, 2}, {0, 3}}), 590.0);
  EXPECT_ERRC(water_level(d, {}), Errc::empty_shoreline);
  EXPECT_ERRC(water_level(d, {{0, 3}}), Errc::all_missing_elevation);

  // Shoreline placed on a level set z = 575 returns exactly 575.
  RasterGrid z(lattice(9, 9), 600.0);
  const auto lake = connected_components(square_mask(9, 9, 2, 2, 5, 5));
  for (const Cell& c : shoreline_cells(lake, 1)) z.at(c.row, c.col) = 575.0;
  EXPECT_EQ(water_level(Dem{z}, shoreline_cells(lake, 1)), 575.0);
}

TEST(Dem, IdwAndValidation) {
  const GeoRef g = lattice(10, 10, 0, 10);
  const Dem one = idw_dem({{3, 3, 500}}, g);
  for (double v : one.grid.values()) EXPECT_EQ(v, 500);
  const Dem same = idw_dem({{1, 1, 600}, {8, 2, 600}, {5, 9, 600}}, g);
  for (double v : same.grid.values()) EXPECT_NEAR(v, 600, 1e-9);

  // Inner ring at 600, outer ring at 500: radial profile decreases outward.
  std::vector<IdwPoint> rings;
  for (int k = 0; k < 36; ++k) {
    const double a = k * 10.0 * 3.14159265358979 / 180.0;
    rings.push_back({50 + 5 * std::cos(a), 50 + 5 * std::sin(a), 600});
    rings.push_back({50 + 40 * std::cos(a), 50 + 40 * std::sin(a), 500});
  }
  const Dem radial = idw_dem(rings, lattice(1, 100, 0, 50.5));
  double prev = 1e9;
  for (int c = 55; c < 90; ++c) {
    const double v = radial.grid.at(0, c);
    EXPECT_GE(v, 500);
    EXPECT_LE(v, 600);
    EXPECT_LE(v, prev + 1e-9);
    prev = v;
  }
  EXPECT_NO_THROW(validate_dem(one));
  EXPECT_ERRC(validate_dem(Dem{grid_of(1, 1, {9500})}), Errc::value_out_of_range);
}

TEST(Evaluate, MetricsAndErrors) {
  std::vector<WaterLevelResult> exact{{"LS8", ymd(2018, 1, 1), 570, 570}, {"S2", ymd(2018, 1, 2), 580, 580},
                                      {"S2", ymd(2018, 1, 3), 575, 575}};
  const auto m = evaluate(exact);
  EXPECT_EQ(m.mae, 0);
  EXPECT_NEAR(m.pearson_r, 1, 1e-12);
  EXPECT_EQ(m.pairs, 3u);

  std::vector<WaterLevelResult> errs{{"LS8", ymd(2018, 1, 1), 571, 570}, {"S2", ymd(2018, 1, 2), 583, 580}};
  const auto e = evaluate(errs);
  EXPECT_EQ(e.mae, 2);
  EXPECT_EQ(e.mae_by_sat.at("LS8"), 1);
  EXPECT_EQ(e.mae_by_sat.at("S2"), 3);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(560, 590);
  std::vector<WaterLevelResult> rnd;
  for (int i = 0; i < 30; ++i) rnd.push_back({"X", add_days(ymd(2018, 1, 1), i), u(rng), u(rng)});
  const auto base = evaluate(rnd);
  EXPECT_GE(base.mae, 0);
  EXPECT_LE(std::abs(base.pearson_r), 1);
  for (auto& r : rnd) {
    r.est += 100;
    *r.obs += 100;
  }
  EXPECT_NEAR(evaluate(rnd).mae, base.mae, 1e-9);

  EXPECT_ERRC(evaluate({exact[0]}), Errc::insufficient_pairs);
  std::vector<WaterLevelResult> flat{{"X", ymd(2018, 1, 1), 570, 570}, {"X", ymd(2018, 1, 2), 570, 571}};
  EXPECT_ERRC(evaluate(flat), Errc::insufficient_pairs);
}

TEST(Evaluate, JoinAndCsvRoundTrip) {
  TempDir dir("hydro_csv");
  std::vector<WaterLevelResult> res{{"LS8", ymd(2018, 8, 2), 574.5, std::nullopt},
                                    {"SN2", ymd(2018, 8, 3), 573.25, std::nullopt}};
  join_observations(res, {{ymd(2018, 8, 2), 575.0}});
  ASSERT_TRUE(res[0].obs.has_value());
  EXPECT_EQ(*res[0].obs, 575.0);
  EXPECT_FALSE(res[1].obs.has_value());
  write_results_csv(res, dir / "r.csv");
  const auto back = read_results_csv(dir / "r.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].sat, "LS8");
  EXPECT_EQ(back[0].est, 574.5);
  EXPECT_EQ(back[0].obs, 575.0);
  EXPECT_FALSE(back[1].obs.has_value());

  {
    std::ofstream o(dir / "obs.csv");
    o << "date,level.masl\n2018-08-02,575.1\n2018-08-03,574.9\n";
  }
  const auto obs = read_observations_csv(dir / "obs.csv");
  ASSERT_EQ(obs.size(), 2u);
  EXPECT_EQ(obs[1].date, ymd(2018, 8, 3));
  EXPECT_DOUBLE_EQ(obs[1].level_masl, 574.9);
  {
    std::ofstream o(dir / "bad.csv");
    o << "when,level\n";
  }
  EXPECT_ERRC(read_observations_csv(dir / "bad.csv"), Errc::parse_error);
}

TEST(Reservoir, SyntheticEstimateWithinOneCellSlope) {
  const ReservoirScene s = gen_reservoir(SyntheticReservoir{});
  EXPECT_NEAR(estimate_level(s.ndwi, s.dem), 575.0, 1.0);
  SyntheticReservoir dry;
  dry.level = 400;
  const ReservoirScene d = gen_reservoir(dry);
  for (double v : d.ndwi.values()) EXPECT_EQ(v, -0.5);
  EXPECT_ERRC(estimate_level(d.ndwi, d.dem), Errc::no_components);
}
