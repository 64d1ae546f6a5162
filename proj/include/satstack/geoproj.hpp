#pragma once

#include "satstack/crs.hpp"
#include "satstack/grid.hpp"

namespace satstack {

// WGS84 ellipsoid.
inline constexpr double kWgs84A = 6378137.0;
inline constexpr double kWgs84InvF = 298.257223563;
inline constexpr double kUtmK0 = 0.9996;

/// Longitude of the central meridian of a UTM zone, degrees.
double utm_central_meridian(int zone);

/// Geographic (lon, lat) degrees -> projected (x, y). Geographic CRS is the
/// identity after normalizing lon into (-180, 180].
Point forward(const CrsSpec& crs, double lon_deg, double lat_deg);
/// Projected (x, y) -> (lon, lat) degrees, returned as Point{lon, lat}.
Point inverse(const CrsSpec& crs, double x, double y);

/// Map a point between two supported CRSs via geographic coordinates.
Point transform(const CrsSpec& from, const CrsSpec& to, Point p);

/// Envelope of a bbox after reprojection, densified along each edge.
BBox transform_bbox(const CrsSpec& from, const CrsSpec& to, const BBox& box, int samples_per_edge = 21);

enum class Resample { nearest, bilinear };

/// Samples `src` at every target cell center. Outside the source extent the
/// result is missing; bilinear renormalizes over finite corners.
RasterGrid reproject_grid(const RasterGrid& src, const GeoRef& target, Resample method);

}  // namespace satstack
