#include <cmath>
#include <numbers>
#include <random>

#include "satstack/geoproj.hpp"
#include "support.hpp"

using namespace satstack;
using namespace satstack::test;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double lon_diff(double a, double b) {
  double d = std::fmod(a - b, 360.0);
  if (d > 180) d -= 360;
  if (d < -180) d += 360;
  return std::abs(d);
}

}  // namespace

TEST(Crs, ParseAndEpsg) {
  EXPECT_EQ(CrsSpec::parse("EPSG:4326"), CrsSpec::geographic());
  EXPECT_EQ(CrsSpec::parse("epsg:32630"), CrsSpec::utm(30, true));
  EXPECT_EQ(CrsSpec::parse("EPSG:32733"), CrsSpec::utm(33, false));
  EXPECT_EQ(CrsSpec::parse("modis-sin"), CrsSpec::sinusoidal());
  EXPECT_EQ(CrsSpec::utm(30, true).epsg(), 32630);
  EXPECT_EQ(CrsSpec::sinusoidal().epsg(), std::nullopt);
  EXPECT_ERRC(CrsSpec::parse("EPSG:3857"), Errc::unsupported_crs);
  EXPECT_ERRC(CrsSpec::utm(61, true), Errc::unsupported_crs);
  for (const CrsSpec& c : {CrsSpec::geographic(), CrsSpec::utm(30, true), CrsSpec::utm(1, false), CrsSpec::sinusoidal()}) {
    EXPECT_EQ(CrsSpec::parse(c.to_string()), c);
  }
}

TEST(Sinusoidal, ClosedForm) {
  const CrsSpec sin = CrsSpec::sinusoidal();
  const Point o = forward(sin, 0, 0);
  EXPECT_EQ(o.x, 0);
  EXPECT_EQ(o.y, 0);
  const Point p = forward(sin, 10, 60);
  EXPECT_NEAR(p.x, 6371007.181 * (10 * std::numbers::pi / 180) * 0.5, 1e-6);
  EXPECT_NEAR(p.y, 6371007.181 * (60 * std::numbers::pi / 180), 1e-6);
  const Point g = inverse(sin, 0, 0);
  EXPECT_EQ(g.x, 0);
  EXPECT_EQ(g.y, 0);
}

TEST(Utm, CentralMeridianAndEquator) {
  const CrsSpec z30 = CrsSpec::utm(30, true);
  EXPECT_EQ(utm_central_meridian(30), -3.0);
  EXPECT_EQ(utm_central_meridian(1), -177.0);
  EXPECT_NEAR(forward(z30, -3, 40).x, 500000.0, 1e-9);
  // Meridian arc to 40N on WGS84 is 4429529.03 m; scaled by k0.
  EXPECT_NEAR(forward(z30, -3, 40).y, 4427757.22, 0.01);
  const Point g = inverse(z30, 500000, 0);
  EXPECT_NEAR(g.x, -3.0, 1e-12);
  EXPECT_NEAR(g.y, 0.0, 1e-12);
  EXPECT_NEAR(forward(CrsSpec::utm(30, false), -3, -0.0).y, 10000000.0, 1e-6);
}

TEST(Utm, ScaleFactorOnCentralMeridian) {
  // Along the central meridian a small northward step scales by k0 times the
  // ellipsoid's meridional radius of curvature.
  const CrsSpec z30 = CrsSpec::utm(30, true);
  const double a = kWgs84A, f = 1.0 / kWgs84InvF, e2 = f * (2 - f);
  for (double lat : {0.0, 20.0, 45.0, 70.0}) {
    const double h = 1e-4;
    const double dy = forward(z30, -3, lat + h).y - forward(z30, -3, lat - h).y;
    const double s = std::sin(lat * kDeg);
    const double m_radius = a * (1 - e2) / std::pow(1 - e2 * s * s, 1.5);
    EXPECT_NEAR(dy / (2 * h * kDeg), kUtmK0 * m_radius, 1e-3 * m_radius * 1e-3);
  }
}

TEST(RoundTrip, ThousandLatticePointsPerCrs) {
  struct Case {
    CrsSpec crs;
    double lon0, lon1, lat0, lat1, tol;
  };
  const Case cases[] = {
      {CrsSpec::geographic(), -179.5, 179.5, -89.5, 89.5, 1e-9},
      {CrsSpec::sinusoidal(), -179.5, 179.5, -89.0, 89.0, 1e-9},
      {CrsSpec::utm(30, true), -6.0, 0.0, 0.0, 84.0, 1e-6},
      {CrsSpec::utm(30, false), -6.0, 0.0, -80.0, 0.0, 1e-6},
      {CrsSpec::utm(17, true), -84.0, -78.0, 0.0, 84.0, 1e-6},
  };
  for (const Case& c : cases) {
    double worst = 0;
    for (int i = 0; i < 40; ++i) {
      for (int j = 0; j < 25; ++j) {
        const double lon = c.lon0 + (c.lon1 - c.lon0) * i / 39.0;
        const double lat = c.lat0 + (c.lat1 - c.lat0) * j / 24.0;
        const Point p = forward(c.crs, lon, lat);
        const Point g = inverse(c.crs, p.x, p.y);
        worst = std::max({worst, lon_diff(g.x, lon), std::abs(g.y - lat)});
      }
    }
    EXPECT_LE(worst, c.tol) << c.crs.to_string();
  }
}

TEST(RoundTrip, RandomPointsBetweenCrs) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lon(-5.9, -0.1), lat(1.0, 80.0);
  const CrsSpec z30 = CrsSpec::utm(30, true), sin = CrsSpec::sinusoidal();
  for (int i = 0; i < 100; ++i) {
    const Point g{lon(rng), lat(rng)};
    const Point u = transform(CrsSpec::geographic(), z30, g);
    const Point s = transform(z30, sin, u);
    const Point back = transform(sin, CrsSpec::geographic(), s);
    EXPECT_NEAR(back.x, g.x, 1e-6);
    EXPECT_NEAR(back.y, g.y, 1e-6);
  }
}

TEST(Domain, Errors) {
  EXPECT_ERRC(forward(CrsSpec::sinusoidal(), 0, 91), Errc::latitude_out_of_range);
  EXPECT_ERRC(inverse(CrsSpec::sinusoidal(), 0, 1e8), Errc::out_of_domain);
  EXPECT_ERRC(inverse(CrsSpec::sinusoidal(), 2.1e7, 0), Errc::out_of_domain);
  EXPECT_ERRC(inverse(CrsSpec::utm(30, true), 5e7, 0), Errc::out_of_domain);
}

TEST(TransformBbox, ContainsTransformedCorners) {
  const BBox g{-2.5, 41.91, -0.72, 43.32};
  const BBox u = transform_bbox(CrsSpec::geographic(), CrsSpec::utm(30, true), g);
  for (Point p : {Point{g.min_x, g.min_y}, Point{g.max_x, g.max_y}, Point{g.min_x, g.max_y}, Point{g.max_x, g.min_y}}) {
    EXPECT_TRUE(u.contains(forward(CrsSpec::utm(30, true), p.x, p.y)));
  }
}

TEST(Reproject, IdentityConstantAndCategorical) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> v(30);
  for (double& x : v) x = u(rng) < 0.3 ? kMissing : u(rng);
  const RasterGrid src(lattice(5, 6, 1000, 2000, 10), v);
  EXPECT_TRUE(same_cells(reproject_grid(src, src.georef(), Resample::nearest), src));

  const RasterGrid flat(lattice(20, 20, 1000, 2000, 10), 0.7);
  for (Resample m : {Resample::nearest, Resample::bilinear}) {
    const RasterGrid out = reproject_grid(flat, lattice(13, 7, 1003, 1990, 13), m);
    for (double x : out.values()) {
      if (!is_missing(x)) {
        EXPECT_NEAR(x, 0.7, 1e-12);
      }
    }
    EXPECT_LT(out.missing_count(), out.size());
  }

  std::vector<double> mask(400);
  for (double& x : mask) x = u(rng) < 0.5 ? kMissing : 1.0;
  const RasterGrid mk(lattice(20, 20, 1000, 2000, 10), mask);
  const RasterGrid fine = reproject_grid(mk, lattice(40, 40, 1000, 2000, 5), Resample::nearest);
  for (double x : fine.values()) EXPECT_TRUE(is_missing(x) || x == 1.0);
  for (int r = 0; r < 40; ++r) {
    for (int c = 0; c < 40; ++c) {
      const double a = fine.at(r, c), b = mk.at(r / 2, c / 2);
      EXPECT_EQ(is_missing(a), is_missing(b));
    }
  }

  const RasterGrid outside = reproject_grid(flat, lattice(3, 3, 9000, 9000, 10), Resample::bilinear);
  EXPECT_EQ(outside.missing_count(), 9u);
}

TEST(Reproject, BilinearRenormalizesOverFiniteCorners) {
  const RasterGrid src = grid_of(2, 2, {1, 3, kMissing, 5}, 0, 2);
  // Target cell center at (1, 1): equidistant from all four source centers.
  const RasterGrid out = reproject_grid(src, lattice(1, 1, 0.5, 1.5, 1), Resample::bilinear);
  EXPECT_NEAR(out[0], 3.0, 1e-12);
}
