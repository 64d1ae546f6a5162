#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "satstack/error.hpp"
#include "satstack/grid.hpp"

namespace satstack {

struct ImaParams {
  int n_days = 0;
  int n_years = 0;
  double q_lo = 0.05;
  double q_hi = 0.95;
  int fact = 1;
  AggFun fun = AggFun::mean;
  bool only_na = false;
  /// Layer indices to predict; empty means every layer.
  std::vector<std::size_t> targets;
  /// TPS smoothing; 0 interpolates the aggregated anomalies exactly.
  double lambda = 0.0;
  /// Also average the target itself into its neighborhood mean.
  bool include_target = false;

  /// Throws Error{invalid_argument}.
  void validate(std::size_t stack_size) const;
};

struct ImaTargetReport {
  std::size_t target = 0;
  Date date;
  std::vector<Date> neighborhood;
  std::size_t screened = 0;
  std::size_t knots = 0;
  std::size_t filled = 0;
  /// Set when the target was skipped and left unchanged.
  std::optional<Errc> skipped;
  std::string note;
};

struct ImaReport {
  std::vector<ImaTargetReport> targets;
};

/// Same day of year in `target.year + years_offset`; day 366 clamps to 365.
Date shift_years(const Date& target, int years_offset);

/// Layers within n_days of the target's day of year in any year within
/// n_years, excluding `target_index` itself. Ascending, no duplicates.
std::vector<std::size_t> select_neighborhood(std::span<const Date> dates, std::size_t target_index, int n_days,
                                             int n_years);
/// Date form: the target is the first layer with that date. Throws
/// Error{target_not_found}.
std::vector<std::size_t> select_neighborhood(std::span<const Date> dates, const Date& target, int n_days, int n_years);

/// Per-cell mean ignoring missing values. Throws Error{empty_neighborhood}.
RasterGrid mean_image(const GridStack& stack, std::span<const std::size_t> indices);

/// Linear-interpolation sample quantile (Hyndman-Fan type 7) of sorted data.
double quantile_sorted(std::span<const double> sorted, double q);

struct AnomalyScreen {
  RasterGrid anomaly;
  std::size_t screened = 0;
  double lo = 0.0;
  double hi = 0.0;
};

/// target - mean, with values strictly outside [Q(q_lo), Q(q_hi)] set missing.
AnomalyScreen anomaly_screen(const RasterGrid& target, const RasterGrid& mean_img, double q_lo, double q_hi);

/// Each covariate stack must share the input georef and hold a layer for every
/// target date.
std::pair<GridStack, ImaReport> ima_fill(const GridStack& stack, const ImaParams& params,
                                         const std::vector<GridStack>& covariates = {});

}  // namespace satstack
