#pragma once

#include <array>
#include <span>
#include <vector>

#include "satstack/grid.hpp"

namespace satstack {

/// Thin-plate radial kernel r^2 log r with phi(0) = 0.
double tps_kernel(double r);

/// Per-point covariate vectors; empty when the model has no covariates.
using CovariateRows = std::vector<std::vector<double>>;

/// Fitted thin-plate spline
///   f(p) = a0 + ax*x + ay*y + sum_k beta_k*c_k + sum_i w_i*phi(|p - knot_i|).
///
/// The solve runs on knots centered at their mean and scaled to unit RMS
/// radius (covariate columns standardized likewise); the accessors below
/// report coefficients converted back to caller coordinates.
class TpsModel {
public:
  const std::vector<Point>& knots() const { return knots_; }
  double lambda() const { return lambda_; }
  std::size_t covariate_count() const { return cov_mean_.size(); }

  /// Kernel weights in caller coordinates.
  std::vector<double> weights() const;
  /// (a0, ax, ay) in caller coordinates.
  std::array<double, 3> affine() const;
  std::vector<double> covariate_coefficients() const;

  /// Roughness seminorm w^T K w in caller coordinates.
  double roughness() const;

  double predict(Point p, std::span<const double> covariates = {}) const;

private:
  friend TpsModel tps_fit(std::span<const Point>, std::span<const double>, double, const CovariateRows&);

  std::vector<Point> knots_;
  std::vector<Point> scaled_knots_;
  Point center_{};
  double scale_ = 1.0;
  std::vector<double> cov_mean_;
  std::vector<double> cov_sd_;
  std::vector<double> w_;     // scaled-frame kernel weights
  std::vector<double> poly_;  // scaled-frame [a0, ax, ay, beta...]
  double lambda_ = 0.0;
};

/// Solves [[K + lambda I, P], [P^T, 0]] [w; a] = [z; 0] with
/// P = [1, x, y | covariates]. Throws Error{rank_deficient} for collinear
/// knots or dependent covariates and Error{dimension_mismatch} for
/// inconsistent input lengths.
TpsModel tps_fit(std::span<const Point> knots, std::span<const double> values, double lambda = 0.0,
                 const CovariateRows& covariates = {});

std::vector<double> tps_predict(const TpsModel& model, std::span<const Point> query,
                                const CovariateRows& covariates = {});

struct IdwPoint {
  double x = 0.0;
  double y = 0.0;
  double value = 0.0;
};

struct IdwModel {
  std::vector<IdwPoint> points;
  double power = 2.0;
};

/// Exact hits (distance below 1e-12) return the data value.
double idw_predict(const IdwModel& model, Point query);
std::vector<double> idw_predict(const IdwModel& model, std::span<const Point> query);

}  // namespace satstack
