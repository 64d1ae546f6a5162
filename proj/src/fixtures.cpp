#include "satstack/fixtures.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "satstack/error.hpp"

namespace satstack {

namespace {

constexpr std::string_view kModule = "fixtures";

}  // namespace

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t SplitMix64::below(std::uint64_t n) {
  // Lemire's multiply-shift with rejection keeps the draw unbiased.
  std::uint64_t x = next();
  unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t t = -n % n;
    while (low < t) {
      x = next();
      m = static_cast<unsigned __int128>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

FieldStacks gen_field(const SyntheticField& spec) {
  if (spec.n_rows < 1 || spec.n_cols < 1 || spec.n_dates < 1 || spec.step_days < 1 || !(spec.cell_size > 0.0)) {
    throw Error(kModule, Errc::invalid_argument, "field dimensions must be positive");
  }
  if (!(spec.hole_fraction >= 0.0 && spec.hole_fraction <= 1.0)) {
    throw Error(kModule, Errc::invalid_argument, "hole fraction outside [0,1]");
  }
  if (!(spec.lx > 0.0 && spec.ly > 0.0 && spec.period_days > 0.0)) {
    throw Error(kModule, Errc::invalid_argument, "wavelengths must be positive");
  }
  const GeoRef g{0.0, spec.n_rows * spec.cell_size, spec.cell_size, -spec.cell_size, spec.n_cols, spec.n_rows,
                 CrsSpec::utm(30, true)};
  const std::size_t cells = g.cell_count();
  const auto holes = static_cast<std::size_t>(std::floor(spec.hole_fraction * static_cast<double>(cells)));
  constexpr double two_pi = 2.0 * std::numbers::pi;

  SplitMix64 rng(spec.seed);
  FieldStacks out;
  std::vector<std::size_t> order(cells);
  for (int k = 0; k < spec.n_dates; ++k) {
    const int t = k * spec.step_days;
    const Date d = add_days(spec.start, t);
    const double temporal = spec.c * std::sin(two_pi * t / spec.period_days);
    RasterGrid truth(g);
    for (int r = 0; r < g.n_rows; ++r) {
      for (int c = 0; c < g.n_cols; ++c) {
        const Point p = g.cell_center(r, c);
        truth.at(r, c) = spec.a + spec.b * std::sin(two_pi * p.x / spec.lx) * std::sin(two_pi * p.y / spec.ly) + temporal;
      }
    }
    // Partial Fisher-Yates: the first `holes` slots are a uniform sample.
    RasterGrid holed = truth;
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < holes; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(cells - i));
      std::swap(order[i], order[j]);
      holed[order[i]] = kMissing;
    }
    const std::string label = spec.product + "_" + format_layer_date(d);
    out.truth.push_back(std::move(truth), d, label);
    out.holed.push_back(std::move(holed), d, label);
  }
  return out;
}

ReservoirScene gen_reservoir(const SyntheticReservoir& spec) {
  if (spec.n_rows < 1 || spec.n_cols < 1 || !(spec.cell_size > 0.0) || !(spec.slope_per_cell > 0.0)) {
    throw Error(kModule, Errc::invalid_argument, "reservoir dimensions and slope must be positive");
  }
  const GeoRef g{spec.origin_x, spec.origin_y, spec.cell_size, -spec.cell_size, spec.n_cols, spec.n_rows, spec.crs};
  const double cr = 0.5 * (spec.n_rows - 1), cc = 0.5 * (spec.n_cols - 1);
  ReservoirScene s{Dem{RasterGrid(g)}, RasterGrid(g), spec.level};
  for (int r = 0; r < g.n_rows; ++r) {
    for (int c = 0; c < g.n_cols; ++c) {
      const double z = spec.z_apex + spec.slope_per_cell * std::hypot(r - cr, c - cc);
      s.dem.grid.at(r, c) = z;
      s.ndwi.at(r, c) = z < spec.level ? 0.5 : -0.5;
    }
  }
  return s;
}

}  // namespace satstack
