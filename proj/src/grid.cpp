#include "satstack/grid.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "satstack/error.hpp"
#include "satstack/geoproj.hpp"

namespace satstack {

namespace {

constexpr std::string_view kModule = "grid-core";

double cross(Point o, Point a, Point b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

bool on_segment(Point p, Point q, Point r) {
  return std::min(p.x, r.x) <= q.x && q.x <= std::max(p.x, r.x) && std::min(p.y, r.y) <= q.y &&
         q.y <= std::max(p.y, r.y);
}

int orientation(Point a, Point b, Point c) {
  const double v = cross(a, b, c);
  if (v > 0) return 1;
  if (v < 0) return -1;
  return 0;
}

bool segments_intersect(Point p1, Point p2, Point q1, Point q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, q1, p2)) return true;
  if (o2 == 0 && on_segment(p1, q2, p2)) return true;
  if (o3 == 0 && on_segment(q1, p1, q2)) return true;
  if (o4 == 0 && on_segment(q1, p2, q2)) return true;
  return false;
}

void require_same_georef(const RasterGrid& a, const RasterGrid& b, const char* what) {
  if (!(a.georef() == b.georef())) throw Error(kModule, Errc::georef_mismatch, what);
}

}  // namespace

// ---------------------------------------------------------------------------
// GeoRef / RasterGrid / GridStack

void GeoRef::validate() const {
  if (n_cols < 1 || n_rows < 1) throw Error(kModule, Errc::invalid_argument, "grid needs at least one row and column");
  if (!(pixel_w > 0.0) || !std::isfinite(pixel_w)) throw Error(kModule, Errc::invalid_argument, "pixel_w must be > 0");
  if (pixel_h == 0.0 || !std::isfinite(pixel_h)) throw Error(kModule, Errc::invalid_argument, "pixel_h must be non-zero");
  if (!std::isfinite(origin_x) || !std::isfinite(origin_y)) {
    throw Error(kModule, Errc::invalid_argument, "origin must be finite");
  }
}

RasterGrid::RasterGrid(GeoRef georef) : RasterGrid(georef, kMissing) {}

RasterGrid::RasterGrid(GeoRef georef, double fill) : georef_(georef) {
  georef_.validate();
  values_.assign(georef_.cell_count(), fill);
}

RasterGrid::RasterGrid(GeoRef georef, std::vector<double> values) : georef_(georef), values_(std::move(values)) {
  georef_.validate();
  if (values_.size() != georef_.cell_count()) {
    throw Error(kModule, Errc::dimension_mismatch,
                std::to_string(values_.size()) + " values for " + std::to_string(georef_.cell_count()) + " cells");
  }
}

std::size_t RasterGrid::missing_count() const {
  return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(), [](double v) { return is_missing(v); }));
}

GridStack::GridStack(std::vector<RasterGrid> layers, std::vector<Date> dates, std::vector<std::string> labels)
    : layers_(std::move(layers)), dates_(std::move(dates)), labels_(std::move(labels)) {
  if (dates_.size() != layers_.size() || labels_.size() != layers_.size()) {
    throw Error(kModule, Errc::dimension_mismatch, "layers, dates and labels differ in length");
  }
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    if (!(layers_[i].georef() == layers_[0].georef())) {
      throw Error(kModule, Errc::georef_mismatch, "ragged stack at layer '" + labels_[i] + "'");
    }
  }
}

GridStack GridStack::from_labels(std::vector<RasterGrid> layers, std::vector<std::string> labels) {
  std::vector<Date> dates;
  dates.reserve(labels.size());
  for (const auto& l : labels) dates.push_back(parse_layer_date(l));
  return GridStack(std::move(layers), std::move(dates), std::move(labels));
}

const GeoRef& GridStack::georef() const {
  if (layers_.empty()) throw Error(kModule, Errc::invalid_argument, "empty stack has no georef");
  return layers_.front().georef();
}

void GridStack::push_back(RasterGrid layer, Date date, std::string label) {
  if (!layers_.empty() && !(layer.georef() == layers_.front().georef())) {
    throw Error(kModule, Errc::georef_mismatch, "ragged stack at layer '" + label + "'");
  }
  layers_.push_back(std::move(layer));
  dates_.push_back(date);
  labels_.push_back(std::move(label));
}

// ---------------------------------------------------------------------------
// Roi

Roi Roi::box(BBox bbox, CrsSpec crs) {
  if (!(bbox.min_x < bbox.max_x) || !(bbox.min_y < bbox.max_y)) {
    throw Error(kModule, Errc::invalid_bounds, "bbox needs min < max on both axes");
  }
  return Roi(bbox, crs);
}

Roi Roi::polygon(std::vector<Ring> rings, CrsSpec crs) {
  if (rings.empty()) throw Error(kModule, Errc::invalid_argument, "polygon without rings");
  for (auto& ring : rings) {
    if (ring.size() < 4) throw Error(kModule, Errc::invalid_argument, "ring needs at least 4 points (closed)");
    const Point f = ring.front(), l = ring.back();
    if (f.x != l.x || f.y != l.y) throw Error(kModule, Errc::invalid_argument, "ring is not closed");
    if (ring_self_intersects(ring)) throw Error(kModule, Errc::invalid_argument, "ring self-intersects");
  }
  return Roi(std::move(rings), crs);
}

BBox Roi::envelope() const {
  if (const auto* b = std::get_if<BBox>(&shape_)) return *b;
  BBox e{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
         -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& ring : rings()) {
    for (const Point& p : ring) {
      e.min_x = std::min(e.min_x, p.x);
      e.min_y = std::min(e.min_y, p.y);
      e.max_x = std::max(e.max_x, p.x);
      e.max_y = std::max(e.max_y, p.y);
    }
  }
  return e;
}

bool Roi::contains(Point p) const {
  if (const auto* b = std::get_if<BBox>(&shape_)) return b->contains(p);
  bool inside = false;
  for (const auto& ring : rings()) {
    for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
      const Point a = ring[i], b = ring[j];
      if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) inside = !inside;
    }
  }
  return inside;
}

bool ring_self_intersects(const Ring& ring) {
  // Edges sorted by their left x; a sweep over x only compares edges whose
  // x-extents overlap.
  const std::size_t n = ring.size() - 1;  // closed ring: last == first
  if (n < 3) return false;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto lo = [&](std::size_t e) { return std::min(ring[e].x, ring[e + 1].x); };
  auto hi = [&](std::size_t e) { return std::max(ring[e].x, ring[e + 1].x); };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lo(a) < lo(b); });
  std::vector<std::size_t> active;
  for (std::size_t e : order) {
    std::erase_if(active, [&](std::size_t a) { return hi(a) < lo(e); });
    for (std::size_t a : active) {
      const bool adjacent = (a + 1) % n == e || (e + 1) % n == a;
      if (adjacent) {
        // Adjacent edges share one vertex; they only conflict when collinear
        // and folding back over each other.
        const std::size_t first = (a + 1) % n == e ? a : e;
        const Point p = ring[first], q = ring[first + 1], r = ring[(first + 2) % n];
        if (orientation(p, q, r) == 0 && ((q.x - p.x) * (r.x - q.x) + (q.y - p.y) * (r.y - q.y)) < 0) return true;
        continue;
      }
      if (segments_intersect(ring[a], ring[a + 1], ring[e], ring[e + 1])) return true;
    }
    active.push_back(e);
  }
  return false;
}

// ---------------------------------------------------------------------------
// Operations

RasterGrid mosaic(std::vector<MosaicInput> inputs, const std::optional<Roi>& roi) {
  if (inputs.empty()) throw Error(kModule, Errc::invalid_argument, "mosaic of zero grids");
  std::stable_sort(inputs.begin(), inputs.end(), [](const MosaicInput& a, const MosaicInput& b) {
    if (a.tile != b.tile) return a.tile < b.tile;
    return a.path < b.path;
  });

  const GeoRef& ref = inputs.front().grid.georef();
  struct Placement {
    long long col0;
    long long row0;
  };
  std::vector<Placement> place;
  long long min_c = 0, min_r = 0, max_c = ref.n_cols, max_r = ref.n_rows;
  for (const auto& in : inputs) {
    const GeoRef& g = in.grid.georef();
    if (!(g.crs == ref.crs)) throw Error(kModule, Errc::crs_mismatch, in.tile + " " + in.path);
    if (g.pixel_w != ref.pixel_w || g.pixel_h != ref.pixel_h) {
      throw Error(kModule, Errc::lattice_misaligned, "pixel sizes differ for " + in.tile + " " + in.path);
    }
    const double dc = (g.origin_x - ref.origin_x) / ref.pixel_w;
    const double dr = (g.origin_y - ref.origin_y) / ref.pixel_h;
    const double rc = std::round(dc), rr = std::round(dr);
    if (std::abs(dc - rc) > 1e-6 || std::abs(dr - rr) > 1e-6) {
      throw Error(kModule, Errc::lattice_misaligned, "origin offset is not a whole number of cells for " + in.tile);
    }
    const Placement p{static_cast<long long>(rc), static_cast<long long>(rr)};
    place.push_back(p);
    min_c = std::min(min_c, p.col0);
    min_r = std::min(min_r, p.row0);
    max_c = std::max(max_c, p.col0 + g.n_cols);
    max_r = std::max(max_r, p.row0 + g.n_rows);
  }

  GeoRef out_ref = ref;
  out_ref.origin_x = ref.origin_x + static_cast<double>(min_c) * ref.pixel_w;
  out_ref.origin_y = ref.origin_y + static_cast<double>(min_r) * ref.pixel_h;
  out_ref.n_cols = static_cast<int>(max_c - min_c);
  out_ref.n_rows = static_cast<int>(max_r - min_r);
  RasterGrid out(out_ref);

  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const RasterGrid& g = inputs[i].grid;
    const int oc = static_cast<int>(place[i].col0 - min_c);
    const int orow = static_cast<int>(place[i].row0 - min_r);
    for (int r = 0; r < g.rows(); ++r) {
      for (int c = 0; c < g.cols(); ++c) {
        double& dst = out.at(orow + r, oc + c);
        if (is_missing(dst)) dst = g.at(r, c);
      }
    }
  }
  if (roi) return crop(out, *roi);
  return out;
}

RasterGrid mosaic(const std::vector<RasterGrid>& grids, const std::optional<Roi>& roi) {
  std::vector<MosaicInput> inputs;
  inputs.reserve(grids.size());
  for (const auto& g : grids) inputs.push_back({g, {}, {}});
  return mosaic(std::move(inputs), roi);
}

RasterGrid crop(const RasterGrid& grid, const Roi& roi) {
  const GeoRef& g = grid.georef();
  const BBox box = transform_bbox(roi.crs(), g.crs, roi.envelope());

  // Column c is kept when min_x <= x(c) <= max_x, x(c) = ox + (c + 0.5) pw.
  auto index_range = [](double origin, double step, double lo, double hi, int n) {
    double a = (lo - origin) / step - 0.5;
    double b = (hi - origin) / step - 0.5;
    if (a > b) std::swap(a, b);
    const long long first = std::max<long long>(0, static_cast<long long>(std::ceil(a - 1e-9)));
    const long long last = std::min<long long>(n - 1, static_cast<long long>(std::floor(b + 1e-9)));
    return std::pair<long long, long long>{first, last};
  };
  const auto [c0, c1] = index_range(g.origin_x, g.pixel_w, box.min_x, box.max_x, g.n_cols);
  const auto [r0, r1] = index_range(g.origin_y, g.pixel_h, box.min_y, box.max_y, g.n_rows);
  if (c0 > c1 || r0 > r1) throw Error(kModule, Errc::empty_intersection, "ROI does not cover any cell center");

  GeoRef out_ref = g;
  out_ref.origin_x = g.origin_x + static_cast<double>(c0) * g.pixel_w;
  out_ref.origin_y = g.origin_y + static_cast<double>(r0) * g.pixel_h;
  out_ref.n_cols = static_cast<int>(c1 - c0 + 1);
  out_ref.n_rows = static_cast<int>(r1 - r0 + 1);
  RasterGrid out(out_ref);
  for (int r = 0; r < out_ref.n_rows; ++r) {
    for (int c = 0; c < out_ref.n_cols; ++c) out.at(r, c) = grid.at(static_cast<int>(r0) + r, static_cast<int>(c0) + c);
  }
  return out;
}

RasterGrid clamp(const RasterGrid& grid, double lo, double hi) {
  if (!(lo <= hi)) throw Error(kModule, Errc::invalid_bounds, "lo > hi");
  RasterGrid out = grid;
  for (double& v : out.values()) {
    if (!is_missing(v)) v = std::min(std::max(v, lo), hi);
  }
  return out;
}

RasterGrid rescale_reflectance(const RasterGrid& grid, double scale, double valid_lo, double valid_hi) {
  if (!(scale > 0.0)) throw Error(kModule, Errc::invalid_bounds, "scale must be positive");
  RasterGrid out = clamp(grid, valid_lo, valid_hi);
  for (double& v : out.values()) {
    if (!is_missing(v)) v *= scale;
  }
  return out;
}

double finite_mean(std::span<const double> values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    if (is_missing(v)) continue;
    sum += v;
    ++n;
  }
  return n ? sum / static_cast<double>(n) : kMissing;
}

double finite_median(std::vector<double> values) {
  std::erase_if(values, [](double v) { return is_missing(v); });
  if (values.empty()) return kMissing;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

RasterGrid aggregate(const RasterGrid& grid, int fact, AggFun fun) {
  if (fact < 1) throw Error(kModule, Errc::invalid_argument, "aggregation factor must be >= 1");
  if (fact == 1) return grid;
  const GeoRef& g = grid.georef();
  GeoRef out_ref = g;
  out_ref.n_rows = (g.n_rows + fact - 1) / fact;
  out_ref.n_cols = (g.n_cols + fact - 1) / fact;
  out_ref.pixel_w = g.pixel_w * fact;
  out_ref.pixel_h = g.pixel_h * fact;
  RasterGrid out(out_ref);

  std::vector<double> block;
  block.reserve(static_cast<std::size_t>(fact) * static_cast<std::size_t>(fact));
  for (int orow = 0; orow < out_ref.n_rows; ++orow) {
    for (int ocol = 0; ocol < out_ref.n_cols; ++ocol) {
      block.clear();
      const int r_end = std::min(g.n_rows, (orow + 1) * fact);
      const int c_end = std::min(g.n_cols, (ocol + 1) * fact);
      for (int r = orow * fact; r < r_end; ++r) {
        for (int c = ocol * fact; c < c_end; ++c) block.push_back(grid.at(r, c));
      }
      out.at(orow, ocol) = fun == AggFun::mean ? finite_mean(block) : finite_median(block);
    }
  }
  return out;
}

GridStack composite(const GridStack& stack, int window_days, CompositeFun fun) {
  if (stack.empty()) throw Error(kModule, Errc::invalid_argument, "composite of an empty stack");
  if (window_days < 1) throw Error(kModule, Errc::invalid_argument, "window must span at least one day");

  const Date first = *std::min_element(stack.dates().begin(), stack.dates().end(),
                                       [](const Date& a, const Date& b) { return std::chrono::sys_days{a} < std::chrono::sys_days{b}; });
  std::map<int, std::vector<std::size_t>> windows;
  for (std::size_t i = 0; i < stack.size(); ++i) {
    windows[days_between(stack.date(i), first) / window_days].push_back(i);
  }

  GridStack out;
  const GeoRef& ref = stack.georef();
  std::vector<double> cell;
  for (const auto& [w, members] : windows) {
    RasterGrid layer(ref);
    for (std::size_t k = 0; k < ref.cell_count(); ++k) {
      cell.clear();
      for (std::size_t i : members) cell.push_back(stack.layer(i)[k]);
      double v = kMissing;
      switch (fun) {
        case CompositeFun::mean: v = finite_mean(cell); break;
        case CompositeFun::median: v = finite_median(cell); break;
        case CompositeFun::max:
          for (double x : cell) {
            if (!is_missing(x) && (is_missing(v) || x > v)) v = x;
          }
          break;
      }
      layer[k] = v;
    }
    const Date start = add_days(first, w * window_days);
    out.push_back(std::move(layer), start, "COMP_" + format_layer_date(start));
  }
  return out;
}

RasterGrid apply_pixel_mask(const RasterGrid& grid, const RasterGrid& mask) {
  require_same_georef(grid, mask, "mask and grid georefs differ");
  RasterGrid out = grid;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = grid[i] * mask[i];
  return out;
}

std::string layer_file_name(const std::string& product, const Date& date, const std::string& band,
                            const std::string& sat) {
  std::string name = product + "_" + format_layer_date(date);
  if (!band.empty()) name += "_" + band;
  if (!sat.empty()) name += "_" + sat;
  return name + ".tif";
}

}  // namespace satstack
