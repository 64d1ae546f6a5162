#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "satstack/grid.hpp"

namespace satstack {

/// terrain: green -> yellow -> brown -> white; terrain_rev reversed; gray:
/// black -> white.
enum class Palette { terrain, terrain_rev, gray };

Palette parse_palette(std::string_view name);
std::string_view to_string(Palette p);

using Rgb = std::array<std::uint8_t, 3>;

/// Entry 0..255 of the 256-colour ramp.
Rgb ramp_color(Palette palette, int index);

/// Ramp index for a value: linear over [lo, hi], clamped at both ends.
int ramp_index(double value, double lo, double hi);

struct RenderOptions {
  double lo = 0.0;
  double hi = 1.0;
  Palette palette = Palette::terrain;
  /// Longest panel side in pixels (before integer cell scaling).
  int panel_px = 160;
};

/// Row-major grid of panels: ncol = ceil(sqrt(n)). Each panel is a caption
/// strip above the raster image, cells drawn as scale x scale blocks.
struct PanelLayout {
  int ncol = 1;
  int nrow = 1;
  int scale = 1;
  int image_w = 1;
  int image_h = 1;
  int caption_h = 11;
  int margin = 6;
  int width = 1;
  int height = 1;

  /// Top-left pixel of panel i's raster image.
  int image_x(std::size_t i) const;
  int image_y(std::size_t i) const;
};

PanelLayout panel_layout(const GeoRef& georef, std::size_t n_layers, int panel_px);

/// RGBA8 canvas: white background, missing cells fully transparent.
std::vector<std::uint8_t> render_rgba(const GridStack& stack, const RenderOptions& options, const PanelLayout& layout);

/// 8-bit RGBA, non-interlaced, no timestamp chunk.
std::vector<std::uint8_t> encode_png_rgba(int width, int height, const std::vector<std::uint8_t>& rgba);

std::vector<std::uint8_t> render_panels_png(const GridStack& stack, const RenderOptions& options);

/// Writes the PNG; throws Error{io_failure}.
std::filesystem::path render_panels(const GridStack& stack, const RenderOptions& options,
                                    const std::filesystem::path& out);

}  // namespace satstack
