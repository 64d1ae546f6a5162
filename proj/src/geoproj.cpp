#include "satstack/geoproj.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>

#include "satstack/error.hpp"

namespace satstack {

namespace {

constexpr std::string_view kModule = "geoproj";
constexpr double kDeg = std::numbers::pi / 180.0;

// Krüger series coefficients for the transverse Mercator projection, sixth
// order in the third flattening n (Karney 2011).
struct TmSeries {
  double e = 0.0;          // first eccentricity
  double rectifying = 0.0;  // A, radius of the rectifying sphere
  std::array<double, 6> alpha{};
  std::array<double, 6> beta{};
};

TmSeries make_wgs84_series() {
  const double f = 1.0 / kWgs84InvF;
  const double n = f / (2.0 - f);
  const double n2 = n * n, n3 = n2 * n, n4 = n3 * n, n5 = n4 * n, n6 = n5 * n;
  TmSeries s;
  s.e = std::sqrt(f * (2.0 - f));
  s.rectifying = kWgs84A / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0);
  s.alpha = {
      n / 2 - 2 * n2 / 3 + 5 * n3 / 16 + 41 * n4 / 180 - 127 * n5 / 288 + 7891 * n6 / 37800,
      13 * n2 / 48 - 3 * n3 / 5 + 557 * n4 / 1440 + 281 * n5 / 630 - 1983433 * n6 / 1935360,
      61 * n3 / 240 - 103 * n4 / 140 + 15061 * n5 / 26880 + 167603 * n6 / 181440,
      49561 * n4 / 161280 - 179 * n5 / 168 + 6601661 * n6 / 7257600,
      34729 * n5 / 80640 - 3418889 * n6 / 1995840,
      212378941 * n6 / 319334400,
  };
  s.beta = {
      n / 2 - 2 * n2 / 3 + 37 * n3 / 96 - n4 / 360 - 81 * n5 / 512 + 96199 * n6 / 604800,
      n2 / 48 + n3 / 15 - 437 * n4 / 1440 + 46 * n5 / 105 - 1118711 * n6 / 3870720,
      17 * n3 / 480 - 37 * n4 / 840 - 209 * n5 / 4480 + 5569 * n6 / 90720,
      4397 * n4 / 161280 - 11 * n5 / 504 - 830251 * n6 / 7257600,
      4583 * n5 / 161280 - 108847 * n6 / 3991680,
      20648693 * n6 / 638668800,
  };
  return s;
}

const TmSeries& wgs84() {
  static const TmSeries series = make_wgs84_series();
  return series;
}

double false_northing(const CrsSpec& crs) { return crs.north ? 0.0 : 10000000.0; }

// tan(conformal latitude) from tan(geodetic latitude).
double conformal_tau(double tau, double e) {
  const double sigma = std::sinh(e * std::atanh(e * tau / std::hypot(1.0, tau)));
  return tau * std::hypot(1.0, sigma) - sigma * std::hypot(1.0, tau);
}

// Inverse of conformal_tau by Newton iteration.
double geodetic_tau(double tau_prime, double e) {
  const double e2m = 1.0 - e * e;
  double tau = tau_prime;
  for (int i = 0; i < 10; ++i) {
    const double tp = conformal_tau(tau, e);
    const double delta = (tau_prime - tp) / std::hypot(1.0, tp) * (1.0 + e2m * tau * tau) / (e2m * std::hypot(1.0, tau));
    tau += delta;
    if (std::abs(delta) <= 1e-15 * std::max(1.0, std::abs(tau))) break;
  }
  return tau;
}

Point utm_forward(const CrsSpec& crs, double lon_deg, double lat_deg) {
  const TmSeries& s = wgs84();
  double dlon = lon_deg - utm_central_meridian(crs.zone);
  dlon = std::remainder(dlon, 360.0);
  const double lam = dlon * kDeg;
  const double phi = lat_deg * kDeg;

  double xi_p = 0.0, eta_p = 0.0;
  if (std::abs(lat_deg) == 90.0) {
    xi_p = std::copysign(std::numbers::pi / 2, lat_deg);
    eta_p = 0.0;
  } else {
    const double tau_p = conformal_tau(std::tan(phi), s.e);
    xi_p = std::atan2(tau_p, std::cos(lam));
    eta_p = std::asinh(std::sin(lam) / std::hypot(tau_p, std::cos(lam)));
  }
  double xi = xi_p, eta = eta_p;
  for (int j = 1; j <= 6; ++j) {
    const double a = s.alpha[j - 1];
    xi += a * std::sin(2 * j * xi_p) * std::cosh(2 * j * eta_p);
    eta += a * std::cos(2 * j * xi_p) * std::sinh(2 * j * eta_p);
  }
  return {500000.0 + kUtmK0 * s.rectifying * eta, false_northing(crs) + kUtmK0 * s.rectifying * xi};
}

Point utm_inverse(const CrsSpec& crs, double x, double y) {
  const TmSeries& s = wgs84();
  const double xi = (y - false_northing(crs)) / (kUtmK0 * s.rectifying);
  const double eta = (x - 500000.0) / (kUtmK0 * s.rectifying);
  if (!std::isfinite(xi) || !std::isfinite(eta) || std::abs(xi) > std::numbers::pi / 2 + 1e-12 ||
      std::abs(eta) > 2.0) {
    throw Error(kModule, Errc::out_of_domain, "point outside the UTM domain");
  }
  double xi_p = xi, eta_p = eta;
  for (int j = 1; j <= 6; ++j) {
    const double b = s.beta[j - 1];
    xi_p -= b * std::sin(2 * j * xi) * std::cosh(2 * j * eta);
    eta_p -= b * std::cos(2 * j * xi) * std::sinh(2 * j * eta);
  }
  const double sinh_eta = std::sinh(eta_p);
  const double cos_xi = std::cos(xi_p);
  const double tau_p = std::sin(xi_p) / std::hypot(sinh_eta, cos_xi);
  const double lam = std::atan2(sinh_eta, cos_xi);
  const double lat = std::atan(geodetic_tau(tau_p, s.e)) / kDeg;
  double lon = utm_central_meridian(crs.zone) + lam / kDeg;
  lon = std::remainder(lon, 360.0);
  if (lon == -180.0) lon = 180.0;
  return {lon, lat};
}

double normalize_lon(double lon) {
  double l = std::remainder(lon, 360.0);
  if (l == -180.0) l = 180.0;
  return l;
}

}  // namespace

CrsSpec CrsSpec::utm(int zone, bool north) {
  if (zone < 1 || zone > 60) throw Error(kModule, Errc::unsupported_crs, "UTM zone " + std::to_string(zone));
  CrsSpec c;
  c.kind = Kind::utm_wgs84;
  c.zone = zone;
  c.north = north;
  return c;
}

CrsSpec CrsSpec::sinusoidal(double radius) {
  if (!(radius > 0)) throw Error(kModule, Errc::unsupported_crs, "non-positive sphere radius");
  CrsSpec c;
  c.kind = Kind::sinusoidal_modis;
  c.sphere_radius = radius;
  return c;
}

std::optional<int> CrsSpec::epsg() const {
  switch (kind) {
    case Kind::geographic_wgs84: return 4326;
    case Kind::utm_wgs84: return (north ? 32600 : 32700) + zone;
    case Kind::sinusoidal_modis: return std::nullopt;
  }
  return std::nullopt;
}

CrsSpec CrsSpec::from_epsg(int code) {
  if (code == 4326) return geographic();
  if (code >= 32601 && code <= 32660) return utm(code - 32600, true);
  if (code >= 32701 && code <= 32760) return utm(code - 32700, false);
  throw Error(kModule, Errc::unsupported_crs, "EPSG:" + std::to_string(code));
}

CrsSpec CrsSpec::parse(std::string_view text) {
  std::string t;
  for (char c : text) t += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (t == "MODIS-SIN" || t == "SINUSOIDAL") return sinusoidal();
  if (t.rfind("EPSG:", 0) == 0) {
    const std::string digits = t.substr(5);
    if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      return from_epsg(std::stoi(digits));
    }
  }
  throw Error(kModule, Errc::unsupported_crs, "'" + std::string(text) + "'");
}

std::string CrsSpec::to_string() const {
  if (auto code = epsg()) return "EPSG:" + std::to_string(*code);
  return "MODIS-SIN";
}

double utm_central_meridian(int zone) { return (zone - 1) * 6.0 - 180.0 + 3.0; }

Point forward(const CrsSpec& crs, double lon_deg, double lat_deg) {
  if (!(std::abs(lat_deg) <= 90.0)) {
    throw Error(kModule, Errc::latitude_out_of_range, "latitude " + std::to_string(lat_deg));
  }
  const double lon = normalize_lon(lon_deg);
  switch (crs.kind) {
    case CrsSpec::Kind::geographic_wgs84: return {lon, lat_deg};
    case CrsSpec::Kind::sinusoidal_modis: {
      const double phi = lat_deg * kDeg;
      return {crs.sphere_radius * lon * kDeg * std::cos(phi), crs.sphere_radius * phi};
    }
    case CrsSpec::Kind::utm_wgs84: return utm_forward(crs, lon, lat_deg);
  }
  throw Error(kModule, Errc::unsupported_crs, crs.to_string());
}

Point inverse(const CrsSpec& crs, double x, double y) {
  switch (crs.kind) {
    case CrsSpec::Kind::geographic_wgs84:
      if (!(std::abs(y) <= 90.0) || !std::isfinite(x)) throw Error(kModule, Errc::out_of_domain, "geographic point");
      return {normalize_lon(x), y};
    case CrsSpec::Kind::sinusoidal_modis: {
      const double r = crs.sphere_radius;
      const double phi = y / r;
      if (!std::isfinite(phi) || !std::isfinite(x) || std::abs(phi) > std::numbers::pi / 2 + 1e-12) {
        throw Error(kModule, Errc::out_of_domain, "sinusoidal y beyond the poles");
      }
      const double c = std::cos(phi);
      double lam = 0.0;
      if (c > 1e-15) {
        lam = x / (r * c);
      } else if (std::abs(x) > 1e-6) {
        throw Error(kModule, Errc::out_of_domain, "sinusoidal x at the pole");
      }
      if (std::abs(lam) > std::numbers::pi * (1.0 + 1e-12)) {
        throw Error(kModule, Errc::out_of_domain, "sinusoidal x beyond the antimeridian");
      }
      return {normalize_lon(lam / kDeg), std::clamp(phi / kDeg, -90.0, 90.0)};
    }
    case CrsSpec::Kind::utm_wgs84: return utm_inverse(crs, x, y);
  }
  throw Error(kModule, Errc::unsupported_crs, crs.to_string());
}

Point transform(const CrsSpec& from, const CrsSpec& to, Point p) {
  if (from == to) return p;
  const Point ll = inverse(from, p.x, p.y);
  return forward(to, ll.x, ll.y);
}

BBox transform_bbox(const CrsSpec& from, const CrsSpec& to, const BBox& box, int samples_per_edge) {
  if (from == to) return box;
  BBox out{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  const int n = std::max(2, samples_per_edge);
  auto add = [&](double x, double y) {
    const Point q = transform(from, to, {x, y});
    out.min_x = std::min(out.min_x, q.x);
    out.max_x = std::max(out.max_x, q.x);
    out.min_y = std::min(out.min_y, q.y);
    out.max_y = std::max(out.max_y, q.y);
  };
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    const double x = box.min_x + t * (box.max_x - box.min_x);
    const double y = box.min_y + t * (box.max_y - box.min_y);
    add(x, box.min_y);
    add(x, box.max_y);
    add(box.min_x, y);
    add(box.max_x, y);
  }
  return out;
}

RasterGrid reproject_grid(const RasterGrid& src, const GeoRef& target, Resample method) {
  target.validate();
  const GeoRef& sg = src.georef();
  const bool same_crs = sg.crs == target.crs;
  RasterGrid out(target);

  for (int r = 0; r < target.n_rows; ++r) {
    for (int c = 0; c < target.n_cols; ++c) {
      Point p = target.cell_center(r, c);
      if (!same_crs) {
        try {
          p = transform(target.crs, sg.crs, p);
        } catch (const Error&) {
          continue;  // outside the projection domain: stays missing
        }
      }
      const Point lat = sg.to_lattice(p);
      if (!(lat.x >= 0.0 && lat.x < sg.n_cols && lat.y >= 0.0 && lat.y < sg.n_rows)) continue;

      if (method == Resample::nearest) {
        const int sc = std::min(static_cast<int>(std::floor(lat.x)), sg.n_cols - 1);
        const int sr = std::min(static_cast<int>(std::floor(lat.y)), sg.n_rows - 1);
        out.at(r, c) = src.at(sr, sc);
        continue;
      }

      // Bilinear between the four surrounding cell centers; indices clamp at
      // the lattice edge.
      const double fx = lat.x - 0.5;
      const double fy = lat.y - 0.5;
      const int c0 = static_cast<int>(std::floor(fx));
      const int r0 = static_cast<int>(std::floor(fy));
      const double tx = fx - c0;
      const double ty = fy - r0;
      double acc = 0.0, wsum = 0.0;
      for (int dr = 0; dr <= 1; ++dr) {
        for (int dc = 0; dc <= 1; ++dc) {
          const int rr = std::clamp(r0 + dr, 0, sg.n_rows - 1);
          const int cc = std::clamp(c0 + dc, 0, sg.n_cols - 1);
          const double w = (dc ? tx : 1.0 - tx) * (dr ? ty : 1.0 - ty);
          const double v = src.at(rr, cc);
          if (w <= 0.0 || is_missing(v)) continue;
          acc += w * v;
          wsum += w;
        }
      }
      if (wsum > 0.0) out.at(r, c) = acc / wsum;
    }
  }
  return out;
}

}  // namespace satstack
