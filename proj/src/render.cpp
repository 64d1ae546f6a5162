#include "satstack/render.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <fstream>

#include "satstack/config.hpp"
#include "satstack/error.hpp"

namespace satstack {

namespace {

constexpr std::string_view kModule = "render";

// 5x7 glyphs, one byte per row, bit 4 = leftmost column.
struct Glyph {
  char ch;
  std::uint8_t rows[7];
};

constexpr Glyph kFont[] = {
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}}, {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}}, {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}}, {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}}, {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}}, {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'A', {0x0E, 0x11, 0x11, 0x11, 0x1F, 0x11, 0x11}}, {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}}, {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}}, {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}}, {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}}, {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}}, {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}}, {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}}, {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}}, {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}}, {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}}, {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}}, {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}}, {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
    {'?', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x00, 0x04}},
};

const Glyph& glyph_for(char c) {
  const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (const Glyph& g : kFont) {
    if (g.ch == u) return g;
  }
  return kFont[std::size(kFont) - 1];
}

constexpr Rgb kTerrainStops[] = {{0, 166, 0}, {230, 230, 0}, {234, 182, 78}, {242, 242, 242}};

void put_pixel(std::vector<std::uint8_t>& rgba, int width, int x, int y, Rgb c, std::uint8_t a) {
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 4;
  rgba[i] = c[0];
  rgba[i + 1] = c[1];
  rgba[i + 2] = c[2];
  rgba[i + 3] = a;
}

void draw_text(std::vector<std::uint8_t>& rgba, int width, int x0, int y0, int max_w, std::string_view text) {
  for (std::size_t k = 0; k < text.size(); ++k) {
    const int gx = x0 + static_cast<int>(k) * 6;
    if (gx + 5 > x0 + max_w) break;
    const Glyph& g = glyph_for(text[k]);
    for (int r = 0; r < 7; ++r) {
      for (int c = 0; c < 5; ++c) {
        if (g.rows[r] & (0x10 >> c)) put_pixel(rgba, width, gx + c, y0 + r, {0, 0, 0}, 255);
      }
    }
  }
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

void png_flush_noop(png_structp) {}

}  // namespace

Palette parse_palette(std::string_view name) {
  const std::string n = to_lower(trim(name));
  if (n == "terrain") return Palette::terrain;
  if (n == "terrain_rev" || n == "terrain-rev") return Palette::terrain_rev;
  if (n == "gray" || n == "grey") return Palette::gray;
  throw Error(kModule, Errc::invalid_argument, "unknown palette '" + std::string(name) + "'");
}

std::string_view to_string(Palette p) {
  switch (p) {
    case Palette::terrain: return "terrain";
    case Palette::terrain_rev: return "terrain_rev";
    case Palette::gray: return "gray";
  }
  return "?";
}

Rgb ramp_color(Palette palette, int index) {
  index = std::clamp(index, 0, 255);
  if (palette == Palette::gray) {
    const auto v = static_cast<std::uint8_t>(index);
    return {v, v, v};
  }
  if (palette == Palette::terrain_rev) index = 255 - index;
  // Piecewise-linear over three equal segments of the 0..255 index range.
  const double t = index / 255.0 * 3.0;
  const int seg = std::min(2, static_cast<int>(t));
  const double f = t - seg;
  Rgb out{};
  for (int ch = 0; ch < 3; ++ch) {
    const double a = kTerrainStops[seg][ch], b = kTerrainStops[seg + 1][ch];
    out[ch] = static_cast<std::uint8_t>(std::lround(a + (b - a) * f));
  }
  return out;
}

int ramp_index(double value, double lo, double hi) {
  const double t = (value - lo) / (hi - lo);
  return std::clamp(static_cast<int>(std::lround(t * 255.0)), 0, 255);
}

int PanelLayout::image_x(std::size_t i) const {
  const int col = static_cast<int>(i % static_cast<std::size_t>(ncol));
  return margin + col * (image_w + margin);
}

int PanelLayout::image_y(std::size_t i) const {
  const int row = static_cast<int>(i / static_cast<std::size_t>(ncol));
  return margin + row * (caption_h + image_h + margin) + caption_h;
}

PanelLayout panel_layout(const GeoRef& georef, std::size_t n_layers, int panel_px) {
  if (n_layers == 0) throw Error(kModule, Errc::invalid_argument, "nothing to render");
  if (panel_px < 1) throw Error(kModule, Errc::invalid_argument, "panel size must be positive");
  PanelLayout l;
  l.ncol = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_layers))));
  l.nrow = static_cast<int>((n_layers + static_cast<std::size_t>(l.ncol) - 1) / static_cast<std::size_t>(l.ncol));
  l.scale = std::max(1, panel_px / std::max(georef.n_rows, georef.n_cols));
  l.image_w = georef.n_cols * l.scale;
  l.image_h = georef.n_rows * l.scale;
  l.width = l.margin + l.ncol * (l.image_w + l.margin);
  l.height = l.margin + l.nrow * (l.caption_h + l.image_h + l.margin);
  return l;
}

std::vector<std::uint8_t> render_rgba(const GridStack& stack, const RenderOptions& options, const PanelLayout& layout) {
  if (!(options.lo < options.hi)) throw Error(kModule, Errc::invalid_argument, "zlim needs lo < hi");
  std::vector<std::uint8_t> rgba(static_cast<std::size_t>(layout.width) * layout.height * 4, 255);
  for (std::size_t i = 0; i < stack.size(); ++i) {
    const RasterGrid& g = stack.layer(i);
    const int x0 = layout.image_x(i), y0 = layout.image_y(i);
    draw_text(rgba, layout.width, x0, y0 - layout.caption_h + 2, layout.image_w, stack.label(i));
    for (int r = 0; r < g.rows(); ++r) {
      for (int c = 0; c < g.cols(); ++c) {
        const double v = g.at(r, c);
        const bool miss = is_missing(v);
        const Rgb color = miss ? Rgb{0, 0, 0} : ramp_color(options.palette, ramp_index(v, options.lo, options.hi));
        for (int dy = 0; dy < layout.scale; ++dy) {
          for (int dx = 0; dx < layout.scale; ++dx) {
            put_pixel(rgba, layout.width, x0 + c * layout.scale + dx, y0 + r * layout.scale + dy, color, miss ? 0 : 255);
          }
        }
      }
    }
  }
  return rgba;
}

std::vector<std::uint8_t> encode_png_rgba(int width, int height, const std::vector<std::uint8_t>& rgba) {
  if (width < 1 || height < 1 || rgba.size() != static_cast<std::size_t>(width) * height * 4) {
    throw Error(kModule, Errc::dimension_mismatch, "RGBA buffer does not match the image size");
  }
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(kModule, Errc::io_failure, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(kModule, Errc::io_failure, "png_create_info_struct failed");
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(rgba.data() + static_cast<std::size_t>(y) * width * 4);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(kModule, Errc::io_failure, "libpng failed while encoding");
  }
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_RGBA,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 9);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_NONE);
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

std::vector<std::uint8_t> render_panels_png(const GridStack& stack, const RenderOptions& options) {
  if (stack.empty()) throw Error(kModule, Errc::invalid_argument, "nothing to render");
  const PanelLayout layout = panel_layout(stack.georef(), stack.size(), options.panel_px);
  return encode_png_rgba(layout.width, layout.height, render_rgba(stack, options, layout));
}

std::filesystem::path render_panels(const GridStack& stack, const RenderOptions& options,
                                    const std::filesystem::path& out) {
  const auto png = render_panels_png(stack, options);
  std::error_code ec;
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path(), ec);
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(kModule, Errc::io_failure, "cannot write " + out.string());
  f.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
  if (!f) throw Error(kModule, Errc::io_failure, "short write to " + out.string());
  return out;
}

}  // namespace satstack
