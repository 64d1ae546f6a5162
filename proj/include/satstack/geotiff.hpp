#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "satstack/grid.hpp"

namespace satstack {

// Supported on-disk profile: little-endian classic TIFF, one band, strips,
// uint8/uint16/int16/float32 samples, no compression or deflate. Geo-tags:
// ModelPixelScale (33550), ModelTiepoint (33922), GeoKeyDirectory (34735);
// nodata as the GDAL ASCII tag (42113).

enum class SampleType { uint8, uint16, int16, float32 };
enum class Compression { none, deflate };

struct GeoTiffWriteOptions {
  SampleType sample_type = SampleType::float32;
  Compression compression = Compression::deflate;
  /// Sentinel written for missing cells. Defaults: NaN for float32, the type
  /// maximum for unsigned types, the type minimum for int16.
  std::optional<double> nodata;
};

RasterGrid decode_geotiff(std::span<const std::uint8_t> bytes);
RasterGrid read_geotiff(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_geotiff(const RasterGrid& grid, const GeoTiffWriteOptions& options = {});
void write_geotiff(const RasterGrid& grid, const std::filesystem::path& path, const GeoTiffWriteOptions& options = {});

/// Every .tif/.tiff directly under `dir` (names containing `token` when
/// given), labelled by file stem and dated from it, ordered by (date, label).
/// Throws Error{no_input_files} for an empty selection.
GridStack read_geotiff_stack(const std::filesystem::path& dir, std::string_view token = {});

/// One <label>.tif per layer; returns the written paths in layer order.
std::vector<std::filesystem::path> write_geotiff_stack(const GridStack& stack, const std::filesystem::path& dir,
                                                       const GeoTiffWriteOptions& options = {});

}  // namespace satstack
