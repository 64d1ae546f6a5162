#include "satstack/ima.hpp"

#include <algorithm>
#include <cmath>

#include "satstack/interp.hpp"

namespace satstack {

namespace {

constexpr std::string_view kModule = "ima";

// Map-space centroid of the block (br, bc), clipped to the grid.
Point block_centroid(const GeoRef& g, int br, int bc, int fact) {
  const int r0 = br * fact, r1 = std::min((br + 1) * fact, g.n_rows);
  const int c0 = bc * fact, c1 = std::min((bc + 1) * fact, g.n_cols);
  return {g.origin_x + 0.5 * (c0 + c1) * g.pixel_w, g.origin_y + 0.5 * (r0 + r1) * g.pixel_h};
}

const RasterGrid& covariate_for(const GridStack& cov, const Date& d, std::size_t which) {
  for (std::size_t i = 0; i < cov.size(); ++i) {
    if (cov.date(i) == d) return cov.layer(i);
  }
  throw Error(kModule, Errc::dimension_mismatch,
              "covariate " + std::to_string(which) + " has no layer dated " + format_iso_date(d));
}

}  // namespace

void ImaParams::validate(std::size_t stack_size) const {
  if (n_days < 0 || n_years < 0) throw Error(kModule, Errc::invalid_argument, "n_days and n_years must be >= 0");
  if (!(q_lo >= 0.0 && q_hi <= 1.0 && q_lo < q_hi)) {
    throw Error(kModule, Errc::invalid_argument, "anomaly filter needs 0 <= q_lo < q_hi <= 1");
  }
  if (fact < 1) throw Error(kModule, Errc::invalid_argument, "fact must be >= 1");
  if (!(lambda >= 0.0)) throw Error(kModule, Errc::invalid_argument, "lambda must be >= 0");
  for (std::size_t t : targets) {
    if (t >= stack_size) throw Error(kModule, Errc::invalid_argument, "target index " + std::to_string(t) + " out of range");
  }
}

Date shift_years(const Date& target, int years_offset) {
  const int year = static_cast<int>(target.year()) + years_offset;
  return date_from_doy(year, std::min(day_of_year(target), days_in_year(year)));
}

std::vector<std::size_t> select_neighborhood(std::span<const Date> dates, std::size_t target_index, int n_days,
                                             int n_years) {
  if (target_index >= dates.size()) throw Error(kModule, Errc::target_not_found, "target index out of range");
  if (n_days < 0 || n_years < 0) throw Error(kModule, Errc::invalid_argument, "n_days and n_years must be >= 0");
  std::vector<Date> centers;
  for (int y = -n_years; y <= n_years; ++y) centers.push_back(shift_years(dates[target_index], y));
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < dates.size(); ++j) {
    if (j == target_index) continue;
    for (const Date& c : centers) {
      if (std::abs(days_between(dates[j], c)) <= n_days) {
        out.push_back(j);
        break;
      }
    }
  }
  return out;
}

std::vector<std::size_t> select_neighborhood(std::span<const Date> dates, const Date& target, int n_days, int n_years) {
  const auto it = std::find(dates.begin(), dates.end(), target);
  if (it == dates.end()) throw Error(kModule, Errc::target_not_found, format_iso_date(target) + " is not in the stack");
  return select_neighborhood(dates, static_cast<std::size_t>(it - dates.begin()), n_days, n_years);
}

RasterGrid mean_image(const GridStack& stack, std::span<const std::size_t> indices) {
  if (indices.empty()) throw Error(kModule, Errc::empty_neighborhood, "no neighboring layers");
  for (std::size_t i : indices) {
    if (i >= stack.size()) throw Error(kModule, Errc::invalid_argument, "layer index out of range");
  }
  const GeoRef& g = stack.georef();
  RasterGrid out(g);
  for (std::size_t cell = 0; cell < g.cell_count(); ++cell) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t i : indices) {
      const double v = stack.layer(i)[cell];
      if (!is_missing(v)) {
        sum += v;
        ++n;
      }
    }
    if (n > 0) out[cell] = sum / n;
  }
  return out;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return kMissing;
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

AnomalyScreen anomaly_screen(const RasterGrid& target, const RasterGrid& mean_img, double q_lo, double q_hi) {
  if (!(target.georef() == mean_img.georef())) throw Error(kModule, Errc::georef_mismatch, "target and mean differ");
  if (!(q_lo >= 0.0 && q_hi <= 1.0 && q_lo <= q_hi)) throw Error(kModule, Errc::invalid_argument, "bad anomaly filter");
  AnomalyScreen s{RasterGrid(target.georef()), 0, kMissing, kMissing};
  std::vector<double> finite;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double a = target[i] - mean_img[i];
    s.anomaly[i] = a;
    if (!is_missing(a)) finite.push_back(a);
  }
  if (finite.empty()) return s;
  std::sort(finite.begin(), finite.end());
  s.lo = quantile_sorted(finite, q_lo);
  s.hi = quantile_sorted(finite, q_hi);
  for (double& a : s.anomaly.values()) {
    if (!is_missing(a) && (a < s.lo || a > s.hi)) {
      a = kMissing;
      ++s.screened;
    }
  }
  return s;
}

std::pair<GridStack, ImaReport> ima_fill(const GridStack& stack, const ImaParams& params,
                                         const std::vector<GridStack>& covariates) {
  params.validate(stack.size());
  if (stack.empty()) return {stack, {}};
  const GeoRef& g = stack.georef();
  for (const GridStack& cov : covariates) {
    if (!cov.empty() && !(cov.georef() == g)) throw Error(kModule, Errc::georef_mismatch, "covariate grid differs from stack");
  }

  std::vector<std::size_t> targets = params.targets;
  if (targets.empty()) {
    for (std::size_t i = 0; i < stack.size(); ++i) targets.push_back(i);
  }
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

  std::vector<RasterGrid> layers = stack.layers();
  ImaReport report;
  for (std::size_t t : targets) {
    ImaTargetReport rep;
    rep.target = t;
    rep.date = stack.date(t);

    auto nb = select_neighborhood(stack.dates(), t, params.n_days, params.n_years);
    if (params.include_target) nb.insert(std::lower_bound(nb.begin(), nb.end(), t), t);
    for (std::size_t i : nb) rep.neighborhood.push_back(stack.date(i));
    if (nb.empty()) {
      rep.skipped = Errc::empty_neighborhood;
      rep.note = "no layers within the neighborhood window";
      report.targets.push_back(std::move(rep));
      continue;
    }

    const RasterGrid& target = stack.layer(t);
    const RasterGrid mean = mean_image(stack, nb);
    const AnomalyScreen screen = anomaly_screen(target, mean, params.q_lo, params.q_hi);
    rep.screened = screen.screened;
    const RasterGrid agg = aggregate(screen.anomaly, params.fact, params.fun);

    std::vector<const RasterGrid*> cov_fine;
    std::vector<RasterGrid> cov_agg;
    for (std::size_t k = 0; k < covariates.size(); ++k) {
      cov_fine.push_back(&covariate_for(covariates[k], rep.date, k));
      cov_agg.push_back(aggregate(*cov_fine.back(), params.fact, params.fun));
    }

    std::vector<Point> knots;
    std::vector<double> values;
    CovariateRows knot_cov;
    for (int br = 0; br < agg.rows(); ++br) {
      for (int bc = 0; bc < agg.cols(); ++bc) {
        const double a = agg.at(br, bc);
        if (is_missing(a)) continue;
        std::vector<double> row;
        for (const RasterGrid& c : cov_agg) row.push_back(c.at(br, bc));
        if (std::any_of(row.begin(), row.end(), is_missing)) continue;
        knots.push_back(block_centroid(g, br, bc, params.fact));
        values.push_back(a);
        if (!covariates.empty()) knot_cov.push_back(std::move(row));
      }
    }
    rep.knots = knots.size();
    if (knots.size() < 3) {
      rep.skipped = Errc::insufficient_knots;
      rep.note = std::to_string(knots.size()) + " finite aggregated cells";
      report.targets.push_back(std::move(rep));
      continue;
    }

    TpsModel model;
    try {
      model = tps_fit(knots, values, params.lambda, knot_cov);
    } catch (const Error& e) {
      if (e.code() != Errc::rank_deficient) throw;
      rep.skipped = Errc::rank_deficient;
      rep.note = e.what();
      report.targets.push_back(std::move(rep));
      continue;
    }

    RasterGrid out(g);
    std::vector<double> cov_row(covariates.size());
    for (int r = 0; r < g.n_rows; ++r) {
      for (int c = 0; c < g.n_cols; ++c) {
        const std::size_t i = out.index(r, c);
        if (params.only_na && !is_missing(target[i])) {
          out[i] = target[i];
          continue;
        }
        if (is_missing(mean[i])) continue;
        bool cov_ok = true;
        for (std::size_t k = 0; k < cov_fine.size(); ++k) {
          cov_row[k] = (*cov_fine[k])[i];
          cov_ok = cov_ok && !is_missing(cov_row[k]);
        }
        if (!cov_ok) continue;
        out[i] = model.predict(g.cell_center(r, c), cov_row) + mean[i];
      }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (is_missing(target[i]) && !is_missing(out[i])) ++rep.filled;
    }
    layers[t] = std::move(out);
    report.targets.push_back(std::move(rep));
  }
  return {GridStack(std::move(layers), stack.dates(), stack.labels()), std::move(report)};
}

}  // namespace satstack
