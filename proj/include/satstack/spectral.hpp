#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "satstack/grid.hpp"

namespace satstack {

enum class Mission { landsat7, landsat8, modis, sentinel2 };

std::string_view to_string(Mission m);
/// Accepts the canonical names plus "ls7", "ls8", "mod", "s2"/"sn2".
Mission parse_mission(std::string_view text);

enum class BandRole { blue, green, red, nir, swir1, swir2, quality };

std::string_view to_string(BandRole r);
BandRole parse_band_role(std::string_view text);

/// Band token per (mission, role). Missions number the same wavelength
/// differently, e.g. red is "B3" on Landsat-7 but "B4" on Landsat-8.
class MissionBandMap {
public:
  static MissionBandMap defaults();

  void set(Mission mission, BandRole role, std::string token);
  std::optional<std::string> find(Mission mission, BandRole role) const;

  /// Applies `mission.role = token` lines.
  void apply_overrides(const std::map<std::string, std::string>& entries);
  void load_overrides(const std::filesystem::path& path);

private:
  std::map<std::pair<Mission, BandRole>, std::string> tokens_;
};

/// Throws Error{unmapped_role} when the pair has no token.
std::string band_for_role(const MissionBandMap& map, Mission mission, BandRole role);

RasterGrid index_ndvi(const RasterGrid& red, const RasterGrid& nir);
RasterGrid index_ndwi(const RasterGrid& green, const RasterGrid& nir);
/// EVI with G = 2.5, C1 = 6, C2 = 7.5, L = 1.
RasterGrid index_evi(const RasterGrid& blue, const RasterGrid& red, const RasterGrid& nir);
RasterGrid index_nbr(const RasterGrid& nir, const RasterGrid& swir2);

enum class IndexKind { ndvi, ndwi, evi, nbr };

std::string_view to_string(IndexKind k);
IndexKind parse_index_kind(std::string_view text);
std::vector<BandRole> required_roles(IndexKind k);

/// True when `token` occurs in `name` delimited by start/end or one of "_.-"
/// (case-insensitive).
bool name_has_token(std::string_view name, std::string_view token);

struct IndexReport {
  std::vector<std::filesystem::path> written;
  /// Dates left out because a required band was missing or unreadable.
  std::vector<std::pair<Date, std::string>> skipped;
};

/// Computes one index file per capture date found in `src_dir`; outputs are
/// named <INDEX>_<YYYYJJJ>[_<SAT>].tif.
IndexReport folder_to_index(const std::filesystem::path& src_dir, IndexKind index, Mission mission,
                            const MissionBandMap& map, const std::optional<std::set<Date>>& dates,
                            const std::filesystem::path& out_dir, const std::string& sat_suffix = {});

}  // namespace satstack
