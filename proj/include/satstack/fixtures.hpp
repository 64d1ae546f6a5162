#pragma once

#include <cstdint>

#include "satstack/grid.hpp"
#include "satstack/hydro.hpp"

namespace satstack {

/// SplitMix64 (Steele, Lea, Flood 2014): state += 0x9E3779B97F4A7C15, then
/// xor-shift-multiply by 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  /// Uniform in [0, 1) from the top 53 bits.
  double uniform();
  /// Uniform integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n);

private:
  std::uint64_t state_;
};

/// f(x, y, t) = A + B sin(2 pi x / Lx) sin(2 pi y / Ly) + C sin(2 pi t / T),
/// with x, y cell-center map coordinates and t days since `start`.
struct SyntheticField {
  int n_rows = 100;
  int n_cols = 100;
  int n_dates = 10;
  int step_days = 1;
  double cell_size = 1.0;
  double a = 0.5;
  double b = 0.3;
  double c = 0.05;
  double lx = 50.0;
  double ly = 50.0;
  double period_days = 40.0;
  double hole_fraction = 0.1;
  std::uint64_t seed = 1;
  Date start = Date{std::chrono::year{2018}, std::chrono::month{8}, std::chrono::day{1}};
  std::string product = "NDVI";
};

struct FieldStacks {
  GridStack truth;
  GridStack holed;
};

/// Each holed layer has exactly floor(hole_fraction * cells) missing cells,
/// drawn without replacement.
FieldStacks gen_field(const SyntheticField& spec);

/// Bowl-shaped basin z = z_apex + slope * (distance in cells from the
/// center); NDWI is +0.5 where z < level and -0.5 elsewhere.
struct SyntheticReservoir {
  int n_rows = 200;
  int n_cols = 200;
  double cell_size = 10.0;
  double z_apex = 500.0;
  double slope_per_cell = 1.0;
  double level = 575.0;
  double origin_x = 600000.0;
  double origin_y = 4750000.0;
  CrsSpec crs = CrsSpec::utm(30, true);
};

struct ReservoirScene {
  Dem dem;
  RasterGrid ndwi;
  double true_level = 0.0;
};

ReservoirScene gen_reservoir(const SyntheticReservoir& spec);

}  // namespace satstack
