#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "satstack/grid.hpp"
#include "satstack/spectral.hpp"
#include "satstack/transport.hpp"

namespace satstack {

struct DateRange {
  Date first;
  Date last;

  bool contains(const Date& d) const { return first <= d && d <= last; }
};

using CloudRange = std::pair<double, double>;

struct SceneQuery {
  Mission mission = Mission::modis;
  std::string product;
  DateRange dates;
  Roi roi = Roi::box({-180.0, -90.0, 180.0, 90.0});
  std::optional<CloudRange> cloud_cover;
  std::optional<Credentials> credentials;
  int page_size = 100;
};

struct SceneRecord {
  Mission mission = Mission::modis;
  std::string product;
  std::string granule_id;
  std::string tile_id;
  Date capture_date;
  std::optional<double> cloud_cover_pct;
  std::string download_url;
  std::optional<std::string> browse_url;
  std::optional<std::uint64_t> file_size_bytes;
  /// Outer ring in lon/lat degrees when the archive reports one.
  std::optional<Ring> footprint;

  friend bool operator==(const SceneRecord&, const SceneRecord&) = default;
};

// Service endpoints.
inline constexpr std::string_view kCmrGranulesUrl = "https://cmr.earthdata.nasa.gov/search/granules.atom";
inline constexpr std::string_view kSciHubSearchUrl = "https://scihub.copernicus.eu/dhus/search";
inline constexpr std::string_view kM2mSceneSearchUrl = "https://m2m.cr.usgs.gov/api/api/json/stable/scene-search";
inline constexpr std::string_view kEspaApiUrl = "https://espa.cr.usgs.gov/api/v1";

/// Throws Error{missing_credentials} for Landsat and Sentinel queries without
/// credentials and Error{invalid_query} for inconsistent fields.
RequestDescriptor build_query(const SceneQuery& query);

/// Throws Error{parse_error} for malformed documents and Error{schema_error}
/// when a mandatory field is absent.
std::vector<SceneRecord> parse_search_response(Mission mission, std::string_view body);

/// Inverse of parse_search_response for the mapped fields.
std::string serialize_search_response(Mission mission, const std::vector<SceneRecord>& records);

/// Request for the following page, or nullopt on the last page.
std::optional<RequestDescriptor> next_page(Mission mission, const RequestDescriptor& previous, std::string_view body);

/// Runs build_query and follows next_page until exhausted (bounded by
/// max_pages). HTTP 401/403 raise Error{auth_error}; other failures
/// Error{network_error}.
std::vector<SceneRecord> search(const SceneQuery& query, Transport& transport, int max_pages = 100);

/// Keeps records whose footprint intersects the ROI (records without a
/// footprint are kept), whose cloud cover lies in `cloud` (records lacking
/// cloud cover are dropped when a range is given) and whose date lies in
/// `dates` when given.
std::vector<SceneRecord> filter_records(const std::vector<SceneRecord>& records, const Roi& roi,
                                        const std::optional<CloudRange>& cloud = std::nullopt,
                                        const std::optional<DateRange>& dates = std::nullopt);

/// True when two lon/lat rings overlap or touch.
bool rings_intersect(const Ring& a, const Ring& b);

/// Record list persistence for the CLI.
std::string records_to_json(const std::vector<SceneRecord>& records);
std::vector<SceneRecord> records_from_json(std::string_view text);

// ESPA on-demand level-2 processing.
struct EspaItem {
  std::string name;
  std::string status;
  std::string download_url;
};

RequestDescriptor build_espa_order(const std::vector<SceneRecord>& records, const std::vector<std::string>& products,
                                   const Credentials& credentials);
std::string parse_espa_order(std::string_view body);
RequestDescriptor build_espa_status(const std::string& order_id, const Credentials& credentials);
std::vector<EspaItem> parse_espa_status(std::string_view body, const std::string& order_id);

/// min(30 s * 2^attempt, 15 min).
std::chrono::seconds espa_backoff(int attempt);

/// Polls until every item is complete, sleeping espa_backoff(k) between
/// polls; throws Error{network_error} after max_attempts.
std::vector<EspaItem> poll_espa_order(Transport& transport, const std::string& order_id,
                                      const Credentials& credentials,
                                      const std::function<void(std::chrono::seconds)>& sleep, int max_attempts = 20);

/// Shortest round-trip decimal text, used for query parameters.
std::string format_decimal(double v);

}  // namespace satstack
