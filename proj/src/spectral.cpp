#include "satstack/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "satstack/config.hpp"
#include "satstack/error.hpp"
#include "satstack/geotiff.hpp"

namespace satstack {

namespace {

constexpr std::string_view kModule = "spectral";

void require_same_georef(const RasterGrid& a, const RasterGrid& b) {
  if (!(a.georef() == b.georef())) throw Error(kModule, Errc::georef_mismatch, "index operands differ in georef");
}

template <typename F>
RasterGrid cellwise(const RasterGrid& a, const RasterGrid& b, F f) {
  require_same_georef(a, b);
  RasterGrid out(a.georef());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

double normalized_difference(double p, double q) {
  if (is_missing(p) || is_missing(q)) return kMissing;
  const double den = p + q;
  if (den == 0.0) return kMissing;
  return (p - q) / den;
}

}  // namespace

std::string_view to_string(Mission m) {
  switch (m) {
    case Mission::landsat7: return "landsat7";
    case Mission::landsat8: return "landsat8";
    case Mission::modis: return "modis";
    case Mission::sentinel2: return "sentinel2";
  }
  return "?";
}

Mission parse_mission(std::string_view text) {
  const std::string t = to_lower(trim(text));
  if (t == "landsat7" || t == "ls7") return Mission::landsat7;
  if (t == "landsat8" || t == "ls8") return Mission::landsat8;
  if (t == "modis" || t == "mod") return Mission::modis;
  if (t == "sentinel2" || t == "s2" || t == "sn2") return Mission::sentinel2;
  throw Error(kModule, Errc::invalid_argument, "unknown mission '" + std::string(text) + "'");
}

std::string_view to_string(BandRole r) {
  switch (r) {
    case BandRole::blue: return "blue";
    case BandRole::green: return "green";
    case BandRole::red: return "red";
    case BandRole::nir: return "nir";
    case BandRole::swir1: return "swir1";
    case BandRole::swir2: return "swir2";
    case BandRole::quality: return "quality";
  }
  return "?";
}

BandRole parse_band_role(std::string_view text) {
  const std::string t = to_lower(trim(text));
  for (BandRole r : {BandRole::blue, BandRole::green, BandRole::red, BandRole::nir, BandRole::swir1, BandRole::swir2,
                     BandRole::quality}) {
    if (t == to_string(r)) return r;
  }
  throw Error(kModule, Errc::invalid_argument, "unknown band role '" + std::string(text) + "'");
}

MissionBandMap MissionBandMap::defaults() {
  MissionBandMap m;
  m.set(Mission::landsat7, BandRole::red, "B3");
  m.set(Mission::landsat8, BandRole::red, "B4");
  m.set(Mission::sentinel2, BandRole::red, "B04");
  m.set(Mission::modis, BandRole::red, "B01");
  m.set(Mission::landsat7, BandRole::nir, "B4");
  m.set(Mission::landsat8, BandRole::nir, "B5");
  m.set(Mission::sentinel2, BandRole::nir, "B08");
  m.set(Mission::modis, BandRole::nir, "B02");
  m.set(Mission::landsat7, BandRole::green, "B2");
  m.set(Mission::landsat8, BandRole::green, "B3");
  m.set(Mission::sentinel2, BandRole::green, "B03");
  m.set(Mission::landsat8, BandRole::quality, "pixel_qa");
  m.set(Mission::modis, BandRole::quality, "state");
  m.set(Mission::sentinel2, BandRole::quality, "CLDPRB");
  return m;
}

void MissionBandMap::set(Mission mission, BandRole role, std::string token) {
  if (token.empty()) throw Error(kModule, Errc::invalid_argument, "empty band token");
  tokens_[{mission, role}] = std::move(token);
}

std::optional<std::string> MissionBandMap::find(Mission mission, BandRole role) const {
  const auto it = tokens_.find({mission, role});
  if (it == tokens_.end()) return std::nullopt;
  return it->second;
}

void MissionBandMap::apply_overrides(const std::map<std::string, std::string>& entries) {
  for (const auto& [key, value] : entries) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) throw Error(kModule, Errc::parse_error, "band-map key '" + key + "' is not mission.role");
    const std::string role_part = key.substr(dot + 1);
    // QA-rule keys share the override file.
    if (role_part.rfind("qa.", 0) == 0) continue;
    set(parse_mission(key.substr(0, dot)), parse_band_role(role_part), value);
  }
}

void MissionBandMap::load_overrides(const std::filesystem::path& path) { apply_overrides(read_key_values(path)); }

std::string band_for_role(const MissionBandMap& map, Mission mission, BandRole role) {
  if (auto t = map.find(mission, role)) return *t;
  throw Error(kModule, Errc::unmapped_role,
              "no band token for " + std::string(to_string(mission)) + "." + std::string(to_string(role)));
}

RasterGrid index_ndvi(const RasterGrid& red, const RasterGrid& nir) {
  return cellwise(nir, red, normalized_difference);
}

RasterGrid index_ndwi(const RasterGrid& green, const RasterGrid& nir) {
  return cellwise(green, nir, normalized_difference);
}

RasterGrid index_nbr(const RasterGrid& nir, const RasterGrid& swir2) {
  return cellwise(nir, swir2, normalized_difference);
}

RasterGrid index_evi(const RasterGrid& blue, const RasterGrid& red, const RasterGrid& nir) {
  require_same_georef(blue, red);
  require_same_georef(blue, nir);
  RasterGrid out(blue.georef());
  for (std::size_t i = 0; i < blue.size(); ++i) {
    const double b = blue[i], r = red[i], n = nir[i];
    if (is_missing(b) || is_missing(r) || is_missing(n)) continue;
    const double den = n + 6.0 * r - 7.5 * b + 1.0;
    if (den == 0.0) continue;
    out[i] = 2.5 * (n - r) / den;
  }
  return out;
}

std::string_view to_string(IndexKind k) {
  switch (k) {
    case IndexKind::ndvi: return "NDVI";
    case IndexKind::ndwi: return "NDWI";
    case IndexKind::evi: return "EVI";
    case IndexKind::nbr: return "NBR";
  }
  return "?";
}

IndexKind parse_index_kind(std::string_view text) {
  const std::string t = to_lower(trim(text));
  if (t == "ndvi") return IndexKind::ndvi;
  if (t == "ndwi") return IndexKind::ndwi;
  if (t == "evi") return IndexKind::evi;
  if (t == "nbr") return IndexKind::nbr;
  throw Error(kModule, Errc::invalid_argument, "unknown index '" + std::string(text) + "'");
}

std::vector<BandRole> required_roles(IndexKind k) {
  switch (k) {
    case IndexKind::ndvi: return {BandRole::red, BandRole::nir};
    case IndexKind::ndwi: return {BandRole::green, BandRole::nir};
    case IndexKind::evi: return {BandRole::blue, BandRole::red, BandRole::nir};
    case IndexKind::nbr: return {BandRole::nir, BandRole::swir2};
  }
  return {};
}

bool name_has_token(std::string_view name, std::string_view token) {
  if (token.empty()) return false;
  const std::string n = to_lower(name);
  const std::string t = to_lower(token);
  auto is_delim = [](char c) { return c == '_' || c == '.' || c == '-'; };
  for (std::size_t pos = n.find(t); pos != std::string::npos; pos = n.find(t, pos + 1)) {
    const bool left = pos == 0 || is_delim(n[pos - 1]);
    const std::size_t end = pos + t.size();
    const bool right = end == n.size() || is_delim(n[end]);
    if (left && right) return true;
  }
  return false;
}

IndexReport folder_to_index(const std::filesystem::path& src_dir, IndexKind index, Mission mission,
                            const MissionBandMap& map, const std::optional<std::set<Date>>& dates,
                            const std::filesystem::path& out_dir, const std::string& sat_suffix) {
  namespace fs = std::filesystem;
  std::vector<std::pair<BandRole, std::string>> roles;
  for (BandRole r : required_roles(index)) roles.emplace_back(r, band_for_role(map, mission, r));

  std::error_code ec;
  if (!fs::is_directory(src_dir, ec)) throw Error(kModule, Errc::no_input_files, src_dir.string() + " is not a directory");

  // date -> role -> file
  std::map<Date, std::map<BandRole, fs::path>> by_date;
  std::set<Date> seen;
  for (const auto& entry : fs::recursive_directory_iterator(src_dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = to_lower(entry.path().extension().string());
    if (ext != ".tif" && ext != ".tiff") continue;
    const std::string stem = entry.path().stem().string();
    const auto d = capture_date_from_name(stem);
    if (!d) continue;
    seen.insert(*d);
    for (const auto& [role, token] : roles) {
      if (!name_has_token(stem, token)) continue;
      auto& slot = by_date[*d][role];
      // Deterministic pick when several files match: lexicographically first.
      if (slot.empty() || entry.path() < slot) slot = entry.path();
    }
  }
  if (seen.empty()) throw Error(kModule, Errc::no_input_files, "no dated GeoTIFFs under " + src_dir.string());

  fs::create_directories(out_dir);
  IndexReport report;
  for (const Date& d : seen) {
    if (dates && !dates->contains(d)) continue;
    const auto& files = by_date[d];
    std::string missing;
    for (const auto& [role, token] : roles) {
      if (!files.contains(role)) missing += (missing.empty() ? "" : ",") + token;
    }
    if (!missing.empty()) {
      report.skipped.emplace_back(d, "missing band " + missing);
      continue;
    }
    try {
      auto band = [&](BandRole r) { return read_geotiff(files.at(r)); };
      RasterGrid out;
      switch (index) {
        case IndexKind::ndvi: out = index_ndvi(band(BandRole::red), band(BandRole::nir)); break;
        case IndexKind::ndwi: out = index_ndwi(band(BandRole::green), band(BandRole::nir)); break;
        case IndexKind::evi: out = index_evi(band(BandRole::blue), band(BandRole::red), band(BandRole::nir)); break;
        case IndexKind::nbr: out = index_nbr(band(BandRole::nir), band(BandRole::swir2)); break;
      }
      const fs::path dst = out_dir / layer_file_name(std::string(to_string(index)), d, {}, sat_suffix);
      write_geotiff(out, dst);
      report.written.push_back(dst);
    } catch (const Error& e) {
      report.skipped.emplace_back(d, e.what());
    }
  }
  return report;
}

}  // namespace satstack
