#include "satstack/interp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "satstack/error.hpp"

namespace satstack {

namespace {

constexpr std::string_view kModule = "interp";
constexpr double kRcondFloor = 1e-13;
constexpr double kRidgeFactor = 1e-12;

double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

double tps_kernel(double r) { return r > 0.0 ? r * r * std::log(r) : 0.0; }

TpsModel tps_fit(std::span<const Point> knots, std::span<const double> values, double lambda,
                 const CovariateRows& covariates) {
  const std::size_t n = knots.size();
  if (values.size() != n) throw Error(kModule, Errc::dimension_mismatch, "knots and values differ in length");
  if (!covariates.empty() && covariates.size() != n) {
    throw Error(kModule, Errc::dimension_mismatch, "covariate rows do not match knot count");
  }
  if (!(lambda >= 0.0)) throw Error(kModule, Errc::invalid_argument, "lambda must be >= 0");
  const std::size_t m = covariates.empty() ? 0 : covariates.front().size();
  for (const auto& row : covariates) {
    if (row.size() != m) throw Error(kModule, Errc::dimension_mismatch, "ragged covariate rows");
  }
  const std::size_t p = 3 + m;
  if (n < p) throw Error(kModule, Errc::rank_deficient, "fewer knots than polynomial terms");

  TpsModel model;
  model.knots_.assign(knots.begin(), knots.end());
  model.lambda_ = lambda;

  // Frame: centroid and RMS radius.
  Point c{0.0, 0.0};
  for (const Point& k : knots) {
    c.x += k.x;
    c.y += k.y;
  }
  c.x /= static_cast<double>(n);
  c.y /= static_cast<double>(n);
  double ss = 0.0;
  for (const Point& k : knots) ss += (k.x - c.x) * (k.x - c.x) + (k.y - c.y) * (k.y - c.y);
  const double s = std::sqrt(ss / static_cast<double>(n));
  if (!(s > 0.0)) throw Error(kModule, Errc::rank_deficient, "all knots coincide");
  model.center_ = c;
  model.scale_ = s;
  model.scaled_knots_.reserve(n);
  for (const Point& k : knots) model.scaled_knots_.push_back({(k.x - c.x) / s, (k.y - c.y) / s});

  model.cov_mean_.assign(m, 0.0);
  model.cov_sd_.assign(m, 1.0);
  for (std::size_t j = 0; j < m; ++j) {
    double mean = 0.0;
    for (const auto& row : covariates) mean += row[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& row : covariates) var += (row[j] - mean) * (row[j] - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    if (!(sd > 0.0)) throw Error(kModule, Errc::rank_deficient, "covariate column is constant");
    model.cov_mean_[j] = mean;
    model.cov_sd_[j] = sd;
  }

  // lambda keeps its meaning in caller coordinates: K scales by 1/s^2.
  const double lambda_scaled = lambda / (s * s);
  const auto dim = static_cast<Eigen::Index>(n + p);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd pmat(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double k = tps_kernel(dist(model.scaled_knots_[i], model.scaled_knots_[j]));
      a(ii, static_cast<Eigen::Index>(j)) = k;
      a(static_cast<Eigen::Index>(j), ii) = k;
    }
    a(ii, ii) = lambda_scaled;
    pmat(ii, 0) = 1.0;
    pmat(ii, 1) = model.scaled_knots_[i].x;
    pmat(ii, 2) = model.scaled_knots_[i].y;
    for (std::size_t j = 0; j < m; ++j) {
      pmat(ii, static_cast<Eigen::Index>(3 + j)) = (covariates[i][j] - model.cov_mean_[j]) / model.cov_sd_[j];
    }
    rhs(ii) = values[i];
  }
  const auto nn = static_cast<Eigen::Index>(n);
  const auto pp = static_cast<Eigen::Index>(p);
  a.block(0, nn, nn, pp) = pmat;
  a.block(nn, 0, pp, nn) = pmat.transpose();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> pqr(pmat);
  pqr.setThreshold(1e-10);
  const bool p_full_rank = pqr.rank() == pp;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  if (!p_full_rank || !(lu.rcond() > kRcondFloor)) {
    // Single retry with a tiny ridge on the kernel block.
    double ridge = 0.0;
    for (Eigen::Index i = 0; i < nn; ++i) ridge += a(i, i);
    ridge /= static_cast<double>(n);
    if (!(ridge > 0.0)) ridge = a.topLeftCorner(nn, nn).cwiseAbs().mean();
    ridge *= kRidgeFactor;
    for (Eigen::Index i = 0; i < nn; ++i) a(i, i) += ridge;
    lu.compute(a);
    if (!p_full_rank || !(lu.rcond() > kRcondFloor)) {
      throw Error(kModule, Errc::rank_deficient, "collinear knots or dependent covariates");
    }
  }
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) throw Error(kModule, Errc::rank_deficient, "non-finite solution");
  model.w_.assign(sol.data(), sol.data() + n);
  model.poly_.assign(sol.data() + n, sol.data() + n + p);
  return model;
}

std::vector<double> TpsModel::weights() const {
  std::vector<double> w(w_.size());
  for (std::size_t i = 0; i < w_.size(); ++i) w[i] = w_[i] / (scale_ * scale_);
  return w;
}

std::array<double, 3> TpsModel::affine() const {
  // phi(r/s) = phi(r)/s^2 - (log s / s^2) r^2; the r^2 part collapses to the
  // constant (log s) * sum_i w'_i |u_i|^2 under the side conditions.
  double quad = 0.0;
  for (std::size_t i = 0; i < w_.size(); ++i) {
    quad += w_[i] * (scaled_knots_[i].x * scaled_knots_[i].x + scaled_knots_[i].y * scaled_knots_[i].y);
  }
  double a0 = poly_[0] - poly_[1] * center_.x / scale_ - poly_[2] * center_.y / scale_ - std::log(scale_) * quad;
  for (std::size_t k = 0; k < cov_mean_.size(); ++k) a0 -= poly_[3 + k] * cov_mean_[k] / cov_sd_[k];
  return {a0, poly_[1] / scale_, poly_[2] / scale_};
}

std::vector<double> TpsModel::covariate_coefficients() const {
  std::vector<double> b(cov_mean_.size());
  for (std::size_t k = 0; k < b.size(); ++k) b[k] = poly_[3 + k] / cov_sd_[k];
  return b;
}

double TpsModel::roughness() const {
  const auto w = weights();
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (i != j) total += w[i] * w[j] * tps_kernel(dist(knots_[i], knots_[j]));
    }
  }
  return total;
}

double TpsModel::predict(Point p, std::span<const double> covariates) const {
  if (covariates.size() != cov_mean_.size()) {
    throw Error(kModule, Errc::dimension_mismatch, "covariate count differs from the fitted model");
  }
  const Point u{(p.x - center_.x) / scale_, (p.y - center_.y) / scale_};
  double f = poly_[0] + poly_[1] * u.x + poly_[2] * u.y;
  for (std::size_t k = 0; k < covariates.size(); ++k) f += poly_[3 + k] * (covariates[k] - cov_mean_[k]) / cov_sd_[k];
  for (std::size_t i = 0; i < w_.size(); ++i) f += w_[i] * tps_kernel(dist(u, scaled_knots_[i]));
  return f;
}

std::vector<double> tps_predict(const TpsModel& model, std::span<const Point> query, const CovariateRows& covariates) {
  const bool has_cov = model.covariate_count() > 0;
  if (has_cov && covariates.size() != query.size()) {
    throw Error(kModule, Errc::dimension_mismatch, "one covariate row per query point is required");
  }
  if (!has_cov && !covariates.empty()) throw Error(kModule, Errc::dimension_mismatch, "model has no covariates");
  std::vector<double> out(query.size());
  for (std::size_t i = 0; i < query.size(); ++i) {
    out[i] = has_cov ? model.predict(query[i], covariates[i]) : model.predict(query[i]);
  }
  return out;
}

double idw_predict(const IdwModel& model, Point query) {
  if (model.points.empty()) throw Error(kModule, Errc::no_points, "IDW model without points");
  if (!(model.power > 0.0)) throw Error(kModule, Errc::invalid_argument, "IDW power must be > 0");
  // Weights relative to the nearest point so far-away queries cannot underflow.
  double d_min = std::numeric_limits<double>::infinity();
  for (const IdwPoint& pt : model.points) {
    const double d = std::hypot(query.x - pt.x, query.y - pt.y);
    if (d < 1e-12) return pt.value;
    d_min = std::min(d_min, d);
  }
  double num = 0.0, den = 0.0;
  for (const IdwPoint& pt : model.points) {
    const double w = std::pow(d_min / std::hypot(query.x - pt.x, query.y - pt.y), model.power);
    num += w * pt.value;
    den += w;
  }
  return num / den;
}

std::vector<double> idw_predict(const IdwModel& model, std::span<const Point> query) {
  std::vector<double> out(query.size());
  for (std::size_t i = 0; i < query.size(); ++i) out[i] = idw_predict(model, query[i]);
  return out;
}

}  // namespace satstack
