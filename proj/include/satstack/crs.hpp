#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace satstack {

/// Authalic sphere radius of the MODIS land grid, meters.
inline constexpr double kModisSphereRadius = 6371007.181;

/// The three coordinate reference systems the toolkit reasons about.
struct CrsSpec {
  enum class Kind { geographic_wgs84, utm_wgs84, sinusoidal_modis };

  Kind kind = Kind::geographic_wgs84;
  int zone = 0;       // utm only, 1..60
  bool north = true;  // utm only
  double sphere_radius = kModisSphereRadius;  // sinusoidal only

  static CrsSpec geographic() { return {}; }
  static CrsSpec utm(int zone, bool north);
  static CrsSpec sinusoidal(double radius = kModisSphereRadius);

  /// 4326, 326zz / 327zz; nullopt for the sinusoidal grid.
  std::optional<int> epsg() const;
  static CrsSpec from_epsg(int code);

  /// Accepts "EPSG:<code>" or "MODIS-SIN" (case-insensitive).
  static CrsSpec parse(std::string_view text);
  std::string to_string() const;

  bool is_geographic() const { return kind == Kind::geographic_wgs84; }

  friend bool operator==(const CrsSpec&, const CrsSpec&) = default;
};

}  // namespace satstack
