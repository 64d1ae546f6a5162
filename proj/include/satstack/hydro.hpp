#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "satstack/grid.hpp"
#include "satstack/interp.hpp"

namespace satstack {

/// Elevation grid in meters above sea level.
struct Dem {
  RasterGrid grid;
};

/// Finite cells must lie in (-500, 9000) m; throws Error{value_out_of_range}.
void validate_dem(const Dem& dem);

struct ComponentLabels {
  GeoRef georef;
  /// 0 = background, components numbered 1..count in row-major first-touch
  /// order.
  std::vector<int> labels;
  int count = 0;
  /// cell_counts[k - 1] is the size of component k.
  std::vector<std::size_t> cell_counts;

  int at(int row, int col) const { return labels[static_cast<std::size_t>(row) * georef.n_cols + col]; }
};

struct Cell {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

Dem idw_dem(const std::vector<IdwPoint>& contours, const GeoRef& target, double power = 2.0);

/// 8-connected labeling of the finite cells of a 1/missing grid.
ComponentLabels connected_components(const RasterGrid& binary);

/// Water where ndwi > threshold (strict).
ComponentLabels detect_water(const RasterGrid& ndwi, double threshold = -0.1);

/// (id, area) of the component with most cells; ties go to the lower id.
std::pair<int, double> largest_component(const ComponentLabels& labels, double cell_area);

/// Cells of component `id` with a 4-neighbour outside it (the grid border
/// counts as outside), row-major.
std::vector<Cell> shoreline_cells(const ComponentLabels& labels, int id);

/// Median DEM elevation over the shoreline, skipping missing elevations.
double water_level(const Dem& dem, const std::vector<Cell>& shoreline);

struct Observation {
  Date date;
  double level_masl = 0.0;
};

struct WaterLevelResult {
  std::string sat;
  Date date;
  double est = 0.0;
  std::optional<double> obs;
};

struct EvaluationMetrics {
  double mae = 0.0;
  std::map<std::string, double> mae_by_sat;
  std::size_t pairs = 0;
  double pearson_r = 0.0;
};

/// Throws Error{insufficient_pairs} with fewer than two paired rows or when a
/// side has zero variance.
EvaluationMetrics evaluate(const std::vector<WaterLevelResult>& results);

/// Fills obs from observations by exact date match.
void join_observations(std::vector<WaterLevelResult>& results, const std::vector<Observation>& observations);

/// Full per-scene pipeline: detect water, pick the main body, sample its
/// shoreline on the DEM.
double estimate_level(const RasterGrid& ndwi, const Dem& dem, double threshold = -0.1);

std::vector<Observation> read_observations_csv(const std::filesystem::path& path);
std::vector<IdwPoint> read_contours_csv(const std::filesystem::path& path);
void write_results_csv(const std::vector<WaterLevelResult>& results, const std::filesystem::path& path);
std::vector<WaterLevelResult> read_results_csv(const std::filesystem::path& path);

}  // namespace satstack
