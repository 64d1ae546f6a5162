#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "satstack/crs.hpp"
#include "satstack/date.hpp"

namespace satstack {

/// Missing cells are IEEE quiet NaN in memory.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

/// Affine north-up lattice: cell (r, c) has its center at
/// (origin_x + (c + 0.5) * pixel_w, origin_y + (r + 0.5) * pixel_h).
struct GeoRef {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double pixel_w = 1.0;
  double pixel_h = -1.0;
  int n_cols = 1;
  int n_rows = 1;
  CrsSpec crs;

  std::size_t cell_count() const { return static_cast<std::size_t>(n_cols) * static_cast<std::size_t>(n_rows); }
  Point cell_center(int row, int col) const {
    return {origin_x + (col + 0.5) * pixel_w, origin_y + (row + 0.5) * pixel_h};
  }
  /// Fractional (col, row) lattice coordinates of a map point; cell (r, c)
  /// spans [c, c+1) x [r, r+1).
  Point to_lattice(Point p) const { return {(p.x - origin_x) / pixel_w, (p.y - origin_y) / pixel_h}; }

  double min_x() const { return origin_x; }
  double max_x() const { return origin_x + n_cols * pixel_w; }
  double min_y() const { return pixel_h < 0 ? origin_y + n_rows * pixel_h : origin_y; }
  double max_y() const { return pixel_h < 0 ? origin_y : origin_y + n_rows * pixel_h; }

  /// Throws Error{invalid_argument} when an invariant is violated.
  void validate() const;

  friend bool operator==(const GeoRef&, const GeoRef&) = default;
};

/// One georeferenced band of float64 cells, row-major.
class RasterGrid {
public:
  RasterGrid() = default;
  /// All cells missing.
  explicit RasterGrid(GeoRef georef);
  RasterGrid(GeoRef georef, double fill);
  RasterGrid(GeoRef georef, std::vector<double> values);

  const GeoRef& georef() const { return georef_; }
  int rows() const { return georef_.n_rows; }
  int cols() const { return georef_.n_cols; }
  std::size_t size() const { return values_.size(); }

  double at(int row, int col) const { return values_[index(row, col)]; }
  double& at(int row, int col) { return values_[index(row, col)]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(georef_.n_cols) + static_cast<std::size_t>(col);
  }

  std::size_t missing_count() const;

private:
  GeoRef georef_;
  std::vector<double> values_;
};

/// Layers sharing one GeoRef, each tagged with a capture date and a label.
class GridStack {
public:
  GridStack() = default;
  /// Throws Error{georef_mismatch} for ragged layers and
  /// Error{dimension_mismatch} when the three lists differ in length.
  GridStack(std::vector<RasterGrid> layers, std::vector<Date> dates, std::vector<std::string> labels);
  /// Dates parsed from the labels' YYYYJJJ tokens.
  static GridStack from_labels(std::vector<RasterGrid> layers, std::vector<std::string> labels);

  std::size_t size() const { return layers_.size(); }
  bool empty() const { return layers_.empty(); }
  const GeoRef& georef() const;

  const RasterGrid& layer(std::size_t i) const { return layers_[i]; }
  const Date& date(std::size_t i) const { return dates_[i]; }
  const std::string& label(std::size_t i) const { return labels_[i]; }

  const std::vector<RasterGrid>& layers() const { return layers_; }
  const std::vector<Date>& dates() const { return dates_; }
  const std::vector<std::string>& labels() const { return labels_; }

  void push_back(RasterGrid layer, Date date, std::string label);

private:
  std::vector<RasterGrid> layers_;
  std::vector<Date> dates_;
  std::vector<std::string> labels_;
};

struct BBox {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  bool intersects(const BBox& o) const {
    return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y && o.min_y <= max_y;
  }
  bool contains(Point p) const { return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y; }
};

using Ring = std::vector<Point>;

/// Region of interest: a bounding box or a polygon (outer ring first, holes
/// after), in a stated CRS.
class Roi {
public:
  static Roi box(BBox bbox, CrsSpec crs = CrsSpec::geographic());
  static Roi polygon(std::vector<Ring> rings, CrsSpec crs = CrsSpec::geographic());

  bool is_box() const { return std::holds_alternative<BBox>(shape_); }
  const CrsSpec& crs() const { return crs_; }
  BBox envelope() const;
  const std::vector<Ring>& rings() const { return std::get<std::vector<Ring>>(shape_); }

  /// Even-odd point-in-polygon for polygons, closed-box test for boxes.
  bool contains(Point p) const;

private:
  Roi(std::variant<BBox, std::vector<Ring>> shape, CrsSpec crs) : shape_(std::move(shape)), crs_(crs) {}

  std::variant<BBox, std::vector<Ring>> shape_;
  CrsSpec crs_;
};

/// True when any two non-adjacent edges of the ring intersect.
bool ring_self_intersects(const Ring& ring);

// ---------------------------------------------------------------------------
// Operations

struct MosaicInput {
  RasterGrid grid;
  std::string tile;
  std::string path;
};

/// Union of aligned tiles; each cell takes the first non-missing value after
/// sorting the inputs by (tile, path).
RasterGrid mosaic(std::vector<MosaicInput> inputs, const std::optional<Roi>& roi = std::nullopt);
RasterGrid mosaic(const std::vector<RasterGrid>& grids, const std::optional<Roi>& roi = std::nullopt);

/// Cells whose centers fall inside the ROI envelope (reprojected into the
/// grid CRS).
RasterGrid crop(const RasterGrid& grid, const Roi& roi);

RasterGrid clamp(const RasterGrid& grid, double lo, double hi);

/// Defaults follow the MOD09GA surface-reflectance range.
RasterGrid rescale_reflectance(const RasterGrid& grid, double scale = 1e-4, double valid_lo = -100.0,
                               double valid_hi = 16000.0);

enum class AggFun { mean, median };
enum class CompositeFun { mean, median, max };

/// Block reduction with a fact x fact footprint; trailing partial blocks are
/// reduced over the cells present.
RasterGrid aggregate(const RasterGrid& grid, int fact, AggFun fun);

GridStack composite(const GridStack& stack, int window_days, CompositeFun fun);

/// Elementwise grid * mask.
RasterGrid apply_pixel_mask(const RasterGrid& grid, const RasterGrid& mask);

/// Processed-output naming: <PRODUCT>_<YYYYJJJ>[_<BAND>][_<SAT>].tif
std::string layer_file_name(const std::string& product, const Date& date, const std::string& band = {},
                            const std::string& sat = {});

// Reductions over the finite entries of `values`; NaN when none are finite.
double finite_mean(std::span<const double> values);
double finite_median(std::vector<double> values);

}  // namespace satstack
