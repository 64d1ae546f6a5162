#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "satstack/grid.hpp"
#include "satstack/spectral.hpp"
#include "satstack/transport.hpp"

namespace satstack {

/// Exit codes of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `satstack` executable; args exclude the program name.
/// Results go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Directory name used under the workspace for a mission, e.g. "Landsat8".
std::string mission_dir_name(Mission mission);

/// Comma-separated numbers; throws Error{usage_error} on junk or a wrong
/// count (expected_count 0 accepts any).
std::vector<double> parse_number_list(std::string_view text, std::size_t expected_count = 0);

/// Polygon, Feature or FeatureCollection (first feature) GeoJSON.
Roi read_geojson_roi(const std::string& text, const CrsSpec& crs = CrsSpec::geographic());

/// Environment first (EARTHDATA_USER/PASS for Landsat and MODIS,
/// SCIHUB_USER/PASS for Sentinel-2), then `earthdata.user` style keys of the
/// workspace config.
std::optional<Credentials> credentials_for(Mission mission, const std::map<std::string, std::string>& config);

}  // namespace satstack
