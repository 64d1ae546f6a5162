#include <cmath>
#include <fstream>

#include "png_decode.hpp"
#include "satstack/render.hpp"
#include "support.hpp"

using namespace satstack;
using namespace satstack::test;

namespace {

GridStack ramp_stack(std::size_t n, int rows, int cols, int hole_layer = -1) {
  GridStack s;
  for (std::size_t k = 0; k < n; ++k) {
    RasterGrid g(lattice(rows, cols));
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) g.at(r, c) = (r * cols + c) / double(rows * cols - 1);
    }
    if (static_cast<int>(k) == hole_layer) g.at(rows / 2, cols / 2 + 1) = kMissing;
    s.push_back(std::move(g), ymd(2018, 8, 1 + static_cast<int>(k)), "L" + std::to_string(k));
  }
  return s;
}

}  // namespace

TEST(Ramp, EndpointsAndClamping) {
  EXPECT_EQ(ramp_index(0.0, 0, 1), 0);
  EXPECT_EQ(ramp_index(1.0, 0, 1), 255);
  EXPECT_EQ(ramp_index(-3.0, 0, 1), 0);
  EXPECT_EQ(ramp_index(7.0, 0, 1), 255);
  EXPECT_EQ(ramp_index(0.5, 0, 1), 128);
  EXPECT_EQ(ramp_index(15.0, 10, 20), 128);
  EXPECT_EQ(ramp_color(Palette::gray, 0), (Rgb{0, 0, 0}));
  EXPECT_EQ(ramp_color(Palette::gray, 255), (Rgb{255, 255, 255}));
  EXPECT_EQ(ramp_color(Palette::terrain, 0), ramp_color(Palette::terrain_rev, 255));
  EXPECT_EQ(ramp_color(Palette::terrain, 255), ramp_color(Palette::terrain_rev, 0));
  EXPECT_EQ(ramp_color(Palette::terrain, -5), ramp_color(Palette::terrain, 0));
  EXPECT_EQ(parse_palette("Grey"), Palette::gray);
  EXPECT_ERRC(parse_palette("viridis"), Errc::invalid_argument);
}

TEST(Layout, ColumnsAreCeilSqrt) {
  const GeoRef g = lattice(10, 20);
  for (std::size_t n = 1; n <= 30; ++n) {
    const PanelLayout l = panel_layout(g, n, 160);
    const int expect = static_cast<int>(std::ceil(std::sqrt(double(n))));
    EXPECT_EQ(l.ncol, expect);
    EXPECT_GE(static_cast<std::size_t>(l.ncol * l.nrow), n);
    EXPECT_LT(static_cast<std::size_t>(l.ncol * (l.nrow - 1)), n);
  }
  const PanelLayout l = panel_layout(g, 8, 160);
  EXPECT_EQ(l.ncol, 3);
  EXPECT_EQ(l.nrow, 3);
  EXPECT_EQ(l.scale, 8);
  EXPECT_ERRC(panel_layout(g, 0, 160), Errc::invalid_argument);
}

TEST(Render, PixelsMatchRampAndMissingIsTransparent) {
  const GridStack s = ramp_stack(3, 4, 5, 1);
  ASSERT_TRUE(is_missing(s.layer(1).at(2, 3)));
  RenderOptions o;
  o.palette = Palette::gray;
  o.panel_px = 20;
  const auto bytes = render_panels_png(s, o);
  const DecodedPng img = decode_png(bytes);
  const PanelLayout l = panel_layout(s.georef(), 3, 20);
  ASSERT_EQ(img.width, l.width);
  ASSERT_EQ(img.height, l.height);
  for (std::size_t k = 0; k < 3; ++k) {
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 5; ++c) {
        const auto* p = img.px(l.image_x(k) + c * l.scale + l.scale / 2, l.image_y(k) + r * l.scale + l.scale / 2);
        const double v = s.layer(k).at(r, c);
        if (is_missing(v)) {
          EXPECT_EQ(p[3], 0);
          continue;
        }
        const int expect = static_cast<int>(std::lround(v * 255));
        EXPECT_EQ(p[0], expect);
        EXPECT_EQ(p[3], 255);
      }
    }
  }
  // Margin stays white and opaque.
  EXPECT_EQ(img.px(0, 0)[0], 255);
  EXPECT_EQ(img.px(0, 0)[3], 255);
}

TEST(Render, ConstantLayerIsFlatPanel) {
  GridStack s;
  RasterGrid g(lattice(6, 6), 0.25);
  s.push_back(std::move(g), ymd(2018, 1, 1), "C");
  RenderOptions o;
  const DecodedPng img = decode_png(render_panels_png(s, o));
  const PanelLayout l = panel_layout(s.georef(), 1, o.panel_px);
  const Rgb want = ramp_color(Palette::terrain, ramp_index(0.25, 0, 1));
  for (int y = 0; y < l.image_h; ++y) {
    for (int x = 0; x < l.image_w; ++x) {
      const auto* p = img.px(l.image_x(0) + x, l.image_y(0) + y);
      ASSERT_EQ(p[0], want[0]);
      ASSERT_EQ(p[1], want[1]);
      ASSERT_EQ(p[2], want[2]);
    }
  }
}

TEST(Render, EncodingIsByteStable) {
  const GridStack s = ramp_stack(5, 7, 9);
  RenderOptions o;
  const auto a = render_panels_png(s, o);
  const auto b = render_panels_png(s, o);
  EXPECT_EQ(a, b);
  TempDir dir("render");
  const auto path = render_panels(s, o, dir.path() / "sub" / "p.png");
  std::ifstream f(path, std::ios::binary);
  const std::vector<std::uint8_t> disk((std::istreambuf_iterator<char>(f)), {});
  EXPECT_EQ(disk, a);
  o.lo = 1;
  o.hi = 1;
  EXPECT_ERRC(render_panels_png(s, o), Errc::invalid_argument);
}
