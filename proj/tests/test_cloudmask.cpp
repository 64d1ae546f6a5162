#include <algorithm>
#include <random>

#include "satstack/cloudmask.hpp"
#include "satstack/geoproj.hpp"
#include "support.hpp"

using namespace satstack;
using namespace satstack::test;

namespace {

// MOD09GA 1 km state word: bits 0-1 cloud state (00 clear), bit 2 shadow.
bool modis_state_clear(unsigned v) {
  const unsigned cloud_state = v & 0b11u;
  const bool shadow = (v >> 2) & 1u;
  return cloud_state == 0 && !shadow;
}

// Landsat collection-1 pixel_qa: bit 1 clear, bit 5 cloud.
bool landsat_pixel_qa_clear(unsigned v) {
  const bool clear_flag = (v & 0x2u) != 0;
  const bool cloud_flag = (v & 0x20u) != 0;
  return clear_flag && !cloud_flag;
}

RasterGrid mask_with_missing(int rows, int cols, std::size_t n_missing, std::uint64_t seed) {
  RasterGrid g(lattice(rows, cols), 1.0);
  std::vector<std::size_t> idx(g.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  for (std::size_t i = 0; i < n_missing; ++i) g[idx[i]] = kMissing;
  return g;
}

}  // namespace

TEST(DecodeQa, ModisBitTable) {
  RasterGrid qa(lattice(1, 1024));
  for (int v = 0; v < 1024; ++v) qa[static_cast<std::size_t>(v)] = v;
  const RasterGrid m = decode_qa(Mission::modis, qa, QaDecodeRule::defaults(Mission::modis));
  for (unsigned v = 0; v < 1024; ++v) {
    EXPECT_EQ(!is_missing(m[v]), modis_state_clear(v)) << v;
    EXPECT_TRUE(is_missing(m[v]) || m[v] == 1.0);
  }
  EXPECT_EQ(m[0], 1.0);
}

TEST(DecodeQa, LandsatBitTable) {
  RasterGrid qa(lattice(1, 2048));
  for (int v = 0; v < 2048; ++v) qa[static_cast<std::size_t>(v)] = v;
  const RasterGrid m = decode_qa(Mission::landsat8, qa, QaDecodeRule::defaults(Mission::landsat8));
  for (unsigned v = 0; v < 2048; ++v) EXPECT_EQ(!is_missing(m[v]), landsat_pixel_qa_clear(v)) << v;
  // 322 = clear land, 352 = cloud with high confidence.
  EXPECT_FALSE(is_missing(m[322]));
  EXPECT_TRUE(is_missing(m[352]));
}

TEST(DecodeQa, SentinelThresholdAndErrors) {
  const RasterGrid prob = grid_of(1, 4, {0, 50, 100, kMissing});
  const RasterGrid m = decode_qa(Mission::sentinel2, prob, QaDecodeRule::defaults(Mission::sentinel2));
  EXPECT_EQ(m[0], 1.0);
  EXPECT_EQ(m[1], 1.0);
  EXPECT_TRUE(is_missing(m[2]));
  EXPECT_TRUE(is_missing(m[3]));
  EXPECT_ERRC(decode_qa(Mission::modis, grid_of(1, 1, {-1}), QaDecodeRule::defaults(Mission::modis)),
              Errc::negative_qa_value);
}

TEST(DecodeQa, BitSpecParsingAndOverrides) {
  EXPECT_EQ(QaDecodeRule::parse_bits("0-1:0,2:0"), (std::vector<BitCondition>{{0, 1, 0}, {2, 2, 0}}));
  EXPECT_ERRC(QaDecodeRule::parse_bits("0-1"), Errc::parse_error);
  QaRuleSet s = QaRuleSet::defaults();
  s.apply_overrides({{"sentinel2.qa.threshold", "20"}, {"modis.qa.bits", "0-1:0"}});
  EXPECT_FALSE(s.rule(Mission::sentinel2).clear(30));
  EXPECT_TRUE(s.rule(Mission::modis).clear(4));
}

TEST(CloudFraction, Examples) {
  EXPECT_EQ(cloud_fraction(RasterGrid(lattice(4, 4), 1.0)), 0.0);
  EXPECT_EQ(cloud_fraction(mask_with_missing(4, 4, 8, 1)), 0.5);
  EXPECT_EQ(cloud_fraction(RasterGrid(lattice(4, 4))), 1.0);
  EXPECT_ERRC(cloud_fraction(grid_of(1, 2, {1, 0.5})), Errc::non_binary_mask);
}

TEST(CloudFraction, RestrictedToRoi) {
  // Left half clear, right half cloudy.
  RasterGrid g(lattice(4, 4, 0, 4), 1.0);
  for (int r = 0; r < 4; ++r) g.at(r, 2) = g.at(r, 3) = kMissing;
  const CrsSpec utm = g.georef().crs;
  EXPECT_EQ(cloud_fraction(g, Roi::box({0, 0, 2, 4}, utm)), 0.0);
  EXPECT_EQ(cloud_fraction(g, Roi::box({2, 0, 4, 4}, utm)), 1.0);
  EXPECT_EQ(cloud_fraction(g, Roi::box({0, 0, 4, 4}, utm)), 0.5);
  EXPECT_ERRC(cloud_fraction(g, Roi::box({10, 10, 11, 11}, utm)), Errc::empty_intersection);
}

TEST(CloudFraction, InvariantUnderIntegerUpsampling) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const RasterGrid coarse = mask_with_missing(6, 7, seed % 40, seed);
    for (int k : {2, 3}) {
      RasterGrid fine(lattice(6 * k, 7 * k, 0, 0, 1.0 / k));
      for (int r = 0; r < 6 * k; ++r) {
        for (int c = 0; c < 7 * k; ++c) fine.at(r, c) = coarse.at(r / k, c / k);
      }
      EXPECT_DOUBLE_EQ(cloud_fraction(fine), cloud_fraction(coarse));
    }
  }
}

TEST(ClearDates, StrictThreshold) {
  GridStack masks;
  masks.push_back(mask_with_missing(10, 10, 20, 1), ymd(2018, 8, 2), "a");
  masks.push_back(mask_with_missing(10, 10, 40, 2), ymd(2018, 8, 3), "b");
  EXPECT_EQ(clear_dates(masks, 0.30), std::vector<Date>{ymd(2018, 8, 2)});
  EXPECT_TRUE(clear_dates(masks, 0.0).empty());
  EXPECT_EQ(clear_dates(masks, 1.0).size(), 2u);
  // Exactly at the threshold is not clear.
  EXPECT_TRUE(clear_dates(masks, 0.20).empty());
}

TEST(ClearDates, MonotoneInThreshold) {
  GridStack masks;
  for (int i = 0; i < 12; ++i) {
    masks.push_back(mask_with_missing(5, 5, static_cast<std::size_t>(i * 2), static_cast<std::uint64_t>(i)),
                    add_days(ymd(2018, 1, 1), i), "m");
  }
  std::size_t prev = 0;
  for (int step = 0; step <= 20; ++step) {
    const auto d = clear_dates(masks, step / 20.0);
    EXPECT_GE(d.size(), prev);
    prev = d.size();
  }
}

TEST(MaskStack, IdentityUpsamplingAndUnmasked) {
  GridStack idx;
  const GeoRef fine = lattice(4, 4, 0, 4, 0.5);
  std::vector<double> v(16);
  for (int i = 0; i < 16; ++i) v[static_cast<std::size_t>(i)] = 0.1 * i;
  v[5] = kMissing;
  idx.push_back(RasterGrid(fine, v), ymd(2018, 8, 2), "NDVI_2018214");
  idx.push_back(RasterGrid(fine, v), ymd(2018, 8, 3), "NDVI_2018215");

  GridStack masks;
  RasterGrid coarse(lattice(2, 2, 0, 4, 1.0), 1.0);
  coarse.at(0, 1) = kMissing;
  masks.push_back(coarse, ymd(2018, 8, 2), "CLOUD_2018214");

  const MaskStackResult res = mask_stack(idx, masks);
  ASSERT_EQ(res.masked.size(), 2u);
  EXPECT_EQ(res.unmasked, std::vector<std::size_t>{1});
  EXPECT_TRUE(same_cells(res.masked.layer(1), idx.layer(1)));
  const RasterGrid& m = res.masked.layer(0);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      const bool cloudy = r < 2 && c >= 2;
      const double in = idx.layer(0).at(r, c);
      if (cloudy || is_missing(in)) {
        EXPECT_TRUE(is_missing(m.at(r, c))) << r << "," << c;
      } else {
        EXPECT_EQ(m.at(r, c), in);
      }
    }
  }

  GridStack clear;
  clear.push_back(RasterGrid(fine, 1.0), ymd(2018, 8, 2), "c");
  clear.push_back(RasterGrid(fine, 1.0), ymd(2018, 8, 3), "c");
  const MaskStackResult same = mask_stack(idx, clear);
  EXPECT_TRUE(same.unmasked.empty());
  EXPECT_TRUE(same_cells(same.masked.layer(0), idx.layer(0)));
}
