#include "satstack/geotiff.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <string>

#include "satstack/error.hpp"

namespace satstack {

namespace {

constexpr std::string_view kModule = "grid-core";

enum Tag : std::uint16_t {
  kImageWidth = 256,
  kImageLength = 257,
  kBitsPerSample = 258,
  kCompression = 259,
  kPhotometric = 262,
  kStripOffsets = 273,
  kSamplesPerPixel = 277,
  kRowsPerStrip = 278,
  kStripByteCounts = 279,
  kPlanarConfig = 284,
  kPredictor = 317,
  kTileWidth = 322,
  kTileLength = 323,
  kTileOffsets = 324,
  kTileByteCounts = 325,
  kSampleFormat = 339,
  kModelPixelScale = 33550,
  kModelTiepoint = 33922,
  kGeoKeyDirectory = 34735,
  kGeoDoubleParams = 34736,
  kGeoAsciiParams = 34737,
  kGdalNodata = 42113,
};

enum FieldType : std::uint16_t {
  kByte = 1,
  kAscii = 2,
  kShort = 3,
  kLong = 4,
  kRational = 5,
  kSByte = 6,
  kUndefined = 7,
  kSShort = 8,
  kSLong = 9,
  kSRational = 10,
  kFloat = 11,
  kDouble = 12,
};

// GeoKey ids.
constexpr std::uint16_t kGTModelType = 1024;
constexpr std::uint16_t kGTRasterType = 1025;
constexpr std::uint16_t kGTCitation = 1026;
constexpr std::uint16_t kGeographicType = 2048;
constexpr std::uint16_t kProjectedCSType = 3072;
constexpr std::uint16_t kPCSCitation = 3073;
constexpr std::uint16_t kUserDefined = 32767;

constexpr const char* kSinusoidalCitation = "MODIS Sinusoidal";

std::size_t type_size(std::uint16_t type) {
  switch (type) {
    case kByte: case kAscii: case kSByte: case kUndefined: return 1;
    case kShort: case kSShort: return 2;
    case kLong: case kSLong: case kFloat: return 4;
    case kRational: case kSRational: case kDouble: return 8;
    default: return 0;
  }
}

[[noreturn]] void malformed(const std::string& what) { throw Error(kModule, Errc::malformed_tiff, what); }
[[noreturn]] void unsupported(const std::string& what) { throw Error(kModule, Errc::unsupported_profile, what); }

// Bounds-checked little-endian reader over the whole file.
class ByteView {
public:
  explicit ByteView(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t size() const { return bytes_.size(); }

  void require(std::size_t offset, std::size_t len, const char* what) const {
    if (offset > bytes_.size() || len > bytes_.size() - offset) malformed(std::string(what) + " beyond end of file");
  }
  std::uint16_t u16(std::size_t off) const {
    require(off, 2, "field");
    return static_cast<std::uint16_t>(bytes_[off] | (bytes_[off + 1] << 8));
  }
  std::uint32_t u32(std::size_t off) const {
    require(off, 4, "field");
    return static_cast<std::uint32_t>(bytes_[off]) | (static_cast<std::uint32_t>(bytes_[off + 1]) << 8) |
           (static_cast<std::uint32_t>(bytes_[off + 2]) << 16) | (static_cast<std::uint32_t>(bytes_[off + 3]) << 24);
  }
  std::uint64_t u64(std::size_t off) const {
    return static_cast<std::uint64_t>(u32(off)) | (static_cast<std::uint64_t>(u32(off + 4)) << 32);
  }
  std::span<const std::uint8_t> slice(std::size_t off, std::size_t len, const char* what) const {
    require(off, len, what);
    return bytes_.subspan(off, len);
  }

private:
  std::span<const std::uint8_t> bytes_;
};

struct Entry {
  std::uint16_t type = 0;
  std::uint32_t count = 0;
  std::size_t data_offset = 0;  // absolute offset of the value bytes
};

class Ifd {
public:
  Ifd(const ByteView& view, std::size_t offset) : view_(view) {
    const std::uint16_t n = view.u16(offset);
    view.require(offset + 2, static_cast<std::size_t>(n) * 12 + 4, "IFD");
    for (std::uint16_t i = 0; i < n; ++i) {
      const std::size_t e = offset + 2 + static_cast<std::size_t>(i) * 12;
      Entry entry;
      const std::uint16_t tag = view.u16(e);
      entry.type = view.u16(e + 2);
      entry.count = view.u32(e + 4);
      const std::size_t tsize = type_size(entry.type);
      if (tsize == 0) continue;  // unknown field types are skipped
      const std::size_t len = tsize * entry.count;
      if (entry.count != 0 && len / entry.count != tsize) malformed("entry size overflow");
      entry.data_offset = len <= 4 ? e + 8 : view.u32(e + 8);
      view.require(entry.data_offset, len, "tag value");
      entries_[tag] = entry;
    }
    // Next-IFD pointer must be present even when unused.
    (void)view.u32(offset + 2 + static_cast<std::size_t>(n) * 12);
  }

  bool has(std::uint16_t tag) const { return entries_.count(tag) != 0; }

  std::vector<std::uint64_t> uints(std::uint16_t tag) const {
    const Entry& e = get(tag);
    std::vector<std::uint64_t> out;
    out.reserve(e.count);
    for (std::uint32_t i = 0; i < e.count; ++i) {
      switch (e.type) {
        case kByte: case kUndefined: out.push_back(view_.slice(e.data_offset + i, 1, "byte")[0]); break;
        case kShort: out.push_back(view_.u16(e.data_offset + 2 * i)); break;
        case kLong: out.push_back(view_.u32(e.data_offset + 4 * i)); break;
        default: malformed("tag " + std::to_string(tag) + " is not an unsigned integer field");
      }
    }
    return out;
  }

  std::uint64_t uint(std::uint16_t tag) const {
    const auto v = uints(tag);
    if (v.empty()) malformed("tag " + std::to_string(tag) + " has no value");
    return v.front();
  }

  std::vector<double> doubles(std::uint16_t tag) const {
    const Entry& e = get(tag);
    if (e.type != kDouble) malformed("tag " + std::to_string(tag) + " is not DOUBLE");
    std::vector<double> out(e.count);
    for (std::uint32_t i = 0; i < e.count; ++i) out[i] = std::bit_cast<double>(view_.u64(e.data_offset + 8 * i));
    return out;
  }

  std::string ascii(std::uint16_t tag) const {
    const Entry& e = get(tag);
    if (e.type != kAscii) malformed("tag " + std::to_string(tag) + " is not ASCII");
    const auto raw = view_.slice(e.data_offset, e.count, "ascii");
    return std::string(raw.begin(), raw.end());
  }

private:
  const Entry& get(std::uint16_t tag) const {
    auto it = entries_.find(tag);
    if (it == entries_.end()) malformed("missing tag " + std::to_string(tag));
    return it->second;
  }

  const ByteView& view_;
  std::map<std::uint16_t, Entry> entries_;
};

std::vector<std::uint8_t> inflate_zlib(std::span<const std::uint8_t> in, std::size_t expected) {
  std::vector<std::uint8_t> out(expected);
  uLongf out_len = static_cast<uLongf>(expected);
  const int rc = uncompress(out.data(), &out_len, in.data(), static_cast<uLong>(in.size()));
  if (rc != Z_OK || out_len != expected) malformed("deflate strip does not decode to the expected size");
  return out;
}

SampleType sample_type_of(std::uint64_t bits, std::uint64_t format) {
  if (format == 1 && bits == 8) return SampleType::uint8;
  if (format == 1 && bits == 16) return SampleType::uint16;
  if (format == 2 && bits == 16) return SampleType::int16;
  if (format == 3 && bits == 32) return SampleType::float32;
  unsupported("sample format " + std::to_string(format) + " with " + std::to_string(bits) + " bits");
}

std::size_t bytes_per_sample(SampleType t) {
  switch (t) {
    case SampleType::uint8: return 1;
    case SampleType::uint16: case SampleType::int16: return 2;
    case SampleType::float32: return 4;
  }
  return 0;
}

double decode_sample(const std::uint8_t* p, SampleType t) {
  switch (t) {
    case SampleType::uint8: return p[0];
    case SampleType::uint16: return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
    case SampleType::int16: return static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0] | (p[1] << 8)));
    case SampleType::float32: {
      const std::uint32_t u = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                              (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
      return static_cast<double>(std::bit_cast<float>(u));
    }
  }
  return kMissing;
}

bool icontains(const std::string& hay, const std::string& needle) {
  auto lower = [](std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  return lower(hay).find(lower(needle)) != std::string::npos;
}

CrsSpec crs_from_geokeys(const Ifd& ifd, bool& pixel_is_point) {
  if (!ifd.has(kGeoKeyDirectory)) throw Error(kModule, Errc::missing_georeferencing, "no GeoKeyDirectoryTag");
  const auto dir = ifd.uints(kGeoKeyDirectory);
  if (dir.size() < 4) malformed("GeoKeyDirectory header truncated");
  const std::size_t n = dir[3];
  if (dir.size() < 4 + 4 * n) malformed("GeoKeyDirectory shorter than its key count");
  const std::string ascii = ifd.has(kGeoAsciiParams) ? ifd.ascii(kGeoAsciiParams) : std::string();

  std::map<std::uint16_t, std::uint64_t> shorts;
  std::string citation;
  for (std::size_t k = 0; k < n; ++k) {
    const auto id = static_cast<std::uint16_t>(dir[4 + 4 * k]);
    const std::uint64_t location = dir[4 + 4 * k + 1];
    const std::uint64_t count = dir[4 + 4 * k + 2];
    const std::uint64_t value = dir[4 + 4 * k + 3];
    if (location == 0) {
      shorts[id] = value;
    } else if (location == kGeoAsciiParams && (id == kPCSCitation || id == kGTCitation)) {
      if (value > ascii.size() || count > ascii.size() - value) malformed("GeoAsciiParams reference out of range");
      citation += ascii.substr(value, count);
    }
  }
  pixel_is_point = shorts.count(kGTRasterType) && shorts[kGTRasterType] == 2;

  if (shorts.count(kProjectedCSType)) {
    const auto code = shorts[kProjectedCSType];
    if (code == kUserDefined) {
      if (icontains(citation, "sinusoidal")) return CrsSpec::sinusoidal();
      throw Error(kModule, Errc::missing_georeferencing, "user-defined projection '" + citation + "'");
    }
    return CrsSpec::from_epsg(static_cast<int>(code));
  }
  if (shorts.count(kGeographicType)) return CrsSpec::from_epsg(static_cast<int>(shorts[kGeographicType]));
  if (icontains(citation, "sinusoidal")) return CrsSpec::sinusoidal();
  throw Error(kModule, Errc::missing_georeferencing, "GeoKeyDirectory names no supported CRS");
}

// ---------------------------------------------------------------------------
// Writer helpers

class ByteWriter {
public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v));
    u8(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    u16(static_cast<std::uint16_t>(v));
    u16(static_cast<std::uint16_t>(v >> 16));
  }
  void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void pad_even() {
    if (buf_.size() % 2) u8(0);
  }
  void patch_u32(std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
  std::size_t size() const { return buf_.size(); }
  std::vector<std::uint8_t>& data() { return buf_; }

private:
  std::vector<std::uint8_t> buf_;
};

struct OutEntry {
  std::uint16_t tag;
  std::uint16_t type;
  std::uint32_t count;
  std::vector<std::uint8_t> payload;
};

OutEntry shorts_entry(std::uint16_t tag, const std::vector<std::uint16_t>& v) {
  OutEntry e{tag, kShort, static_cast<std::uint32_t>(v.size()), {}};
  for (auto x : v) {
    e.payload.push_back(static_cast<std::uint8_t>(x));
    e.payload.push_back(static_cast<std::uint8_t>(x >> 8));
  }
  return e;
}

OutEntry longs_entry(std::uint16_t tag, const std::vector<std::uint32_t>& v) {
  OutEntry e{tag, kLong, static_cast<std::uint32_t>(v.size()), {}};
  for (auto x : v) {
    for (int i = 0; i < 4; ++i) e.payload.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
  }
  return e;
}

OutEntry doubles_entry(std::uint16_t tag, const std::vector<double>& v) {
  OutEntry e{tag, kDouble, static_cast<std::uint32_t>(v.size()), {}};
  for (double d : v) {
    const auto u = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) e.payload.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
  }
  return e;
}

OutEntry ascii_entry(std::uint16_t tag, const std::string& s) {
  OutEntry e{tag, kAscii, static_cast<std::uint32_t>(s.size() + 1), {}};
  e.payload.assign(s.begin(), s.end());
  e.payload.push_back(0);
  return e;
}

double default_nodata(SampleType t) {
  switch (t) {
    case SampleType::uint8: return 255.0;
    case SampleType::uint16: return 65535.0;
    case SampleType::int16: return -32768.0;
    case SampleType::float32: return kMissing;
  }
  return kMissing;
}

std::string format_nodata(double v, SampleType t) {
  if (is_missing(v)) return "nan";
  if (t != SampleType::float32) return std::to_string(static_cast<long long>(v));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void encode_sample(double v, SampleType t, std::uint8_t* out) {
  switch (t) {
    case SampleType::uint8: out[0] = static_cast<std::uint8_t>(v); return;
    case SampleType::uint16: {
      const auto u = static_cast<std::uint16_t>(v);
      out[0] = static_cast<std::uint8_t>(u);
      out[1] = static_cast<std::uint8_t>(u >> 8);
      return;
    }
    case SampleType::int16: {
      const auto u = static_cast<std::uint16_t>(static_cast<std::int16_t>(v));
      out[0] = static_cast<std::uint8_t>(u);
      out[1] = static_cast<std::uint8_t>(u >> 8);
      return;
    }
    case SampleType::float32: {
      const auto u = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      for (int i = 0; i < 4; ++i) out[i] = static_cast<std::uint8_t>(u >> (8 * i));
      return;
    }
  }
}

std::pair<double, double> type_range(SampleType t) {
  switch (t) {
    case SampleType::uint8: return {0.0, 255.0};
    case SampleType::uint16: return {0.0, 65535.0};
    case SampleType::int16: return {-32768.0, 32767.0};
    case SampleType::float32:
      return {-static_cast<double>(std::numeric_limits<float>::max()), static_cast<double>(std::numeric_limits<float>::max())};
  }
  return {0.0, 0.0};
}

}  // namespace

RasterGrid decode_geotiff(std::span<const std::uint8_t> bytes) {
  const ByteView view(bytes);
  view.require(0, 8, "header");
  if (bytes[0] == 'M' && bytes[1] == 'M') unsupported("big-endian TIFF");
  if (bytes[0] != 'I' || bytes[1] != 'I') malformed("not a TIFF byte-order mark");
  const std::uint16_t magic = view.u16(2);
  if (magic == 43) unsupported("BigTIFF");
  if (magic != 42) malformed("bad TIFF magic");
  const Ifd ifd(view, view.u32(4));

  if (ifd.has(kTileWidth) || ifd.has(kTileLength) || ifd.has(kTileOffsets) || ifd.has(kTileByteCounts)) {
    unsupported("tiled TIFF");
  }
  const std::uint64_t width = ifd.uint(kImageWidth);
  const std::uint64_t height = ifd.uint(kImageLength);
  if (width == 0 || height == 0 || width > (1u << 24) || height > (1u << 24)) malformed("implausible image size");
  if (ifd.has(kSamplesPerPixel) && ifd.uint(kSamplesPerPixel) != 1) unsupported("multi-band TIFF");
  if (ifd.has(kPlanarConfig) && ifd.uint(kPlanarConfig) != 1) unsupported("planar configuration");
  if (ifd.has(kPredictor) && ifd.uint(kPredictor) != 1) unsupported("predictor");
  const std::uint64_t compression = ifd.has(kCompression) ? ifd.uint(kCompression) : 1;
  if (compression != 1 && compression != 8 && compression != 32946) {
    unsupported("compression " + std::to_string(compression));
  }
  const std::uint64_t bits = ifd.has(kBitsPerSample) ? ifd.uint(kBitsPerSample) : 1;
  const std::uint64_t format = ifd.has(kSampleFormat) ? ifd.uint(kSampleFormat) : 1;
  const SampleType stype = sample_type_of(bits, format);
  const std::size_t bps = bytes_per_sample(stype);

  const auto offsets = ifd.uints(kStripOffsets);
  const auto counts = ifd.uints(kStripByteCounts);
  std::uint64_t rows_per_strip = ifd.has(kRowsPerStrip) ? ifd.uint(kRowsPerStrip) : height;
  rows_per_strip = std::clamp<std::uint64_t>(rows_per_strip, 1, height);
  const std::uint64_t n_strips = (height + rows_per_strip - 1) / rows_per_strip;
  if (offsets.size() != n_strips || counts.size() != n_strips) malformed("strip count does not match image height");

  const std::size_t row_bytes = static_cast<std::size_t>(width) * bps;
  std::vector<std::uint8_t> raster(row_bytes * static_cast<std::size_t>(height));
  for (std::uint64_t s = 0; s < n_strips; ++s) {
    const std::uint64_t rows = std::min(rows_per_strip, height - s * rows_per_strip);
    const std::size_t expected = row_bytes * static_cast<std::size_t>(rows);
    const auto strip = view.slice(static_cast<std::size_t>(offsets[s]), static_cast<std::size_t>(counts[s]), "strip");
    std::uint8_t* dst = raster.data() + row_bytes * static_cast<std::size_t>(s * rows_per_strip);
    if (compression == 1) {
      if (strip.size() < expected) malformed("uncompressed strip shorter than its rows");
      std::memcpy(dst, strip.data(), expected);
    } else {
      const auto decoded = inflate_zlib(strip, expected);
      std::memcpy(dst, decoded.data(), expected);
    }
  }

  if (!ifd.has(kModelPixelScale) || !ifd.has(kModelTiepoint)) {
    throw Error(kModule, Errc::missing_georeferencing, "no ModelPixelScale/ModelTiepoint");
  }
  const auto scale = ifd.doubles(kModelPixelScale);
  const auto tie = ifd.doubles(kModelTiepoint);
  if (scale.size() < 2 || tie.size() < 6) malformed("short geo-tag");
  bool pixel_is_point = false;
  GeoRef ref;
  ref.crs = crs_from_geokeys(ifd, pixel_is_point);
  ref.n_cols = static_cast<int>(width);
  ref.n_rows = static_cast<int>(height);
  ref.pixel_w = scale[0];
  ref.pixel_h = -scale[1];
  ref.origin_x = tie[3] - tie[0] * scale[0];
  ref.origin_y = tie[4] + tie[1] * scale[1];
  if (pixel_is_point) {
    ref.origin_x -= scale[0] / 2.0;
    ref.origin_y += scale[1] / 2.0;
  }
  try {
    ref.validate();
  } catch (const Error& e) {
    throw Error(kModule, Errc::missing_georeferencing, e.what());
  }

  std::optional<double> nodata;
  if (ifd.has(kGdalNodata)) {
    const std::string text = ifd.ascii(kGdalNodata);
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str()) nodata = v;
  }

  RasterGrid grid(ref);
  auto values = grid.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    double v = decode_sample(raster.data() + i * bps, stype);
    if (nodata && !is_missing(*nodata)) {
      const double nd = stype == SampleType::float32 ? static_cast<double>(static_cast<float>(*nodata)) : *nodata;
      if (v == nd) v = kMissing;
    }
    values[i] = v;
  }
  return grid;
}

RasterGrid read_geotiff(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(kModule, Errc::io_failure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_geotiff(bytes);
  } catch (const Error& e) {
    throw Error(e.module(), e.code(), path.filename().string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_geotiff(const RasterGrid& grid, const GeoTiffWriteOptions& options) {
  const GeoRef& g = grid.georef();
  const SampleType t = options.sample_type;
  const std::size_t bps = bytes_per_sample(t);
  const double nodata = options.nodata.value_or(default_nodata(t));
  const bool emit_nodata = options.nodata.has_value() || grid.missing_count() > 0;
  const auto [lo, hi] = type_range(t);

  // Encode samples.
  std::vector<std::uint8_t> raster(grid.size() * bps);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double v = grid[i];
    if (is_missing(v)) {
      v = nodata;
    } else {
      if (t != SampleType::float32) v = std::nearbyint(v);
      if (v < lo || v > hi) throw Error(kModule, Errc::value_out_of_range, "value " + std::to_string(grid[i]));
      if (emit_nodata && !is_missing(nodata) && v == nodata) {
        throw Error(kModule, Errc::value_out_of_range, "finite value collides with the nodata sentinel");
      }
    }
    encode_sample(v, t, raster.data() + i * bps);
  }

  const std::size_t row_bytes = static_cast<std::size_t>(g.n_cols) * bps;
  const std::size_t rows_per_strip = std::max<std::size_t>(1, 8192 / std::max<std::size_t>(1, row_bytes));
  const std::size_t n_strips = (static_cast<std::size_t>(g.n_rows) + rows_per_strip - 1) / rows_per_strip;

  ByteWriter w;
  w.u8('I');
  w.u8('I');
  w.u16(42);
  w.u32(0);  // IFD offset, patched below

  std::vector<std::uint32_t> strip_offsets, strip_counts;
  for (std::size_t s = 0; s < n_strips; ++s) {
    const std::size_t row0 = s * rows_per_strip;
    const std::size_t rows = std::min(rows_per_strip, static_cast<std::size_t>(g.n_rows) - row0);
    std::span<const std::uint8_t> chunk(raster.data() + row0 * row_bytes, rows * row_bytes);
    std::vector<std::uint8_t> packed;
    if (options.compression == Compression::deflate) {
      uLongf len = compressBound(static_cast<uLong>(chunk.size()));
      packed.resize(len);
      if (compress2(packed.data(), &len, chunk.data(), static_cast<uLong>(chunk.size()), Z_DEFAULT_COMPRESSION) != Z_OK) {
        throw Error(kModule, Errc::io_failure, "deflate failed");
      }
      packed.resize(len);
      chunk = packed;
    }
    w.pad_even();
    strip_offsets.push_back(static_cast<std::uint32_t>(w.size()));
    strip_counts.push_back(static_cast<std::uint32_t>(chunk.size()));
    w.bytes(chunk);
  }

  std::vector<OutEntry> entries;
  entries.push_back(longs_entry(kImageWidth, {static_cast<std::uint32_t>(g.n_cols)}));
  entries.push_back(longs_entry(kImageLength, {static_cast<std::uint32_t>(g.n_rows)}));
  entries.push_back(shorts_entry(kBitsPerSample, {static_cast<std::uint16_t>(bps * 8)}));
  entries.push_back(shorts_entry(kCompression, {static_cast<std::uint16_t>(options.compression == Compression::deflate ? 8 : 1)}));
  entries.push_back(shorts_entry(kPhotometric, {1}));
  entries.push_back(longs_entry(kStripOffsets, strip_offsets));
  entries.push_back(shorts_entry(kSamplesPerPixel, {1}));
  entries.push_back(longs_entry(kRowsPerStrip, {static_cast<std::uint32_t>(rows_per_strip)}));
  entries.push_back(longs_entry(kStripByteCounts, strip_counts));
  entries.push_back(shorts_entry(kPlanarConfig, {1}));
  const std::uint16_t sample_format = t == SampleType::float32 ? 3 : (t == SampleType::int16 ? 2 : 1);
  entries.push_back(shorts_entry(kSampleFormat, {sample_format}));
  entries.push_back(doubles_entry(kModelPixelScale, {g.pixel_w, -g.pixel_h, 0.0}));
  entries.push_back(doubles_entry(kModelTiepoint, {0.0, 0.0, 0.0, g.origin_x, g.origin_y, 0.0}));

  std::vector<std::uint16_t> keys = {1, 1, 0, 0};
  std::string ascii_params;
  auto add_key = [&](std::uint16_t id, std::uint16_t loc, std::uint16_t count, std::uint16_t value) {
    keys.insert(keys.end(), {id, loc, count, value});
    keys[3]++;
  };
  if (g.crs.is_geographic()) {
    add_key(kGTModelType, 0, 1, 2);
    add_key(kGTRasterType, 0, 1, 1);
    add_key(kGeographicType, 0, 1, 4326);
  } else if (auto code = g.crs.epsg()) {
    add_key(kGTModelType, 0, 1, 1);
    add_key(kGTRasterType, 0, 1, 1);
    add_key(kProjectedCSType, 0, 1, static_cast<std::uint16_t>(*code));
  } else {
    ascii_params = std::string(kSinusoidalCitation) + "|";
    add_key(kGTModelType, 0, 1, 1);
    add_key(kGTRasterType, 0, 1, 1);
    add_key(kProjectedCSType, 0, 1, kUserDefined);
    add_key(kPCSCitation, kGeoAsciiParams, static_cast<std::uint16_t>(ascii_params.size()), 0);
  }
  entries.push_back(shorts_entry(kGeoKeyDirectory, keys));
  if (!ascii_params.empty()) entries.push_back(ascii_entry(kGeoAsciiParams, ascii_params));
  if (emit_nodata) entries.push_back(ascii_entry(kGdalNodata, format_nodata(nodata, t)));
  std::sort(entries.begin(), entries.end(), [](const OutEntry& a, const OutEntry& b) { return a.tag < b.tag; });

  // Out-of-line payloads, then the IFD last so any truncation cuts into it.
  std::vector<std::uint32_t> payload_offsets(entries.size(), 0);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].payload.size() <= 4) continue;
    w.pad_even();
    payload_offsets[i] = static_cast<std::uint32_t>(w.size());
    w.bytes(entries[i].payload);
  }
  w.pad_even();
  const auto ifd_offset = static_cast<std::uint32_t>(w.size());
  w.patch_u32(4, ifd_offset);
  w.u16(static_cast<std::uint16_t>(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const OutEntry& e = entries[i];
    w.u16(e.tag);
    w.u16(e.type);
    w.u32(e.count);
    if (e.payload.size() <= 4) {
      std::uint8_t inline_value[4] = {0, 0, 0, 0};
      std::copy(e.payload.begin(), e.payload.end(), inline_value);
      w.bytes(inline_value);
    } else {
      w.u32(payload_offsets[i]);
    }
  }
  w.u32(0);
  return std::move(w.data());
}

void write_geotiff(const RasterGrid& grid, const std::filesystem::path& path, const GeoTiffWriteOptions& options) {
  const auto bytes = encode_geotiff(grid, options);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(kModule, Errc::io_failure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(kModule, Errc::io_failure, "short write to " + path.string());
}

GridStack read_geotiff_stack(const std::filesystem::path& dir, std::string_view token) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(kModule, Errc::io_failure, dir.string() + " is not a directory");
  struct Entry {
    Date date;
    std::string label;
    fs::path path;
  };
  std::vector<Entry> entries;
  for (const auto& de : fs::directory_iterator(dir)) {
    if (!de.is_regular_file()) continue;
    std::string ext = de.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext != ".tif" && ext != ".tiff") continue;
    const std::string stem = de.path().stem().string();
    if (!token.empty() && stem.find(token) == std::string::npos) continue;
    const auto date = capture_date_from_name(stem);
    if (!date) throw Error(kModule, Errc::no_date_token, "no capture date in " + de.path().filename().string());
    entries.push_back({*date, stem, de.path()});
  }
  if (entries.empty()) throw Error(kModule, Errc::no_input_files, "no GeoTIFF files in " + dir.string());
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.date != b.date ? a.date < b.date : a.label < b.label; });
  GridStack stack;
  for (auto& e : entries) stack.push_back(read_geotiff(e.path), e.date, e.label);
  return stack;
}

std::vector<std::filesystem::path> write_geotiff_stack(const GridStack& stack, const std::filesystem::path& dir,
                                                       const GeoTiffWriteOptions& options) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> out;
  for (std::size_t i = 0; i < stack.size(); ++i) {
    out.push_back(dir / (stack.label(i) + ".tif"));
    write_geotiff(stack.layer(i), out.back(), options);
  }
  return out;
}

}  // namespace satstack
