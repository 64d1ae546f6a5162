#include "satstack/catalog.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <regex>
#include <sstream>

#include "satstack/config.hpp"
#include "satstack/error.hpp"
#include "satstack/geoproj.hpp"

namespace satstack {

namespace {

constexpr std::string_view kModule = "catalog";
namespace pt = boost::property_tree;
using nlohmann::json;

constexpr double kMiB = 1024.0 * 1024.0;

// ---------------------------------------------------------------------------
// Geometry in lon/lat

Ring roi_ring_lonlat(const Roi& roi) {
  Ring ring;
  if (roi.is_box()) {
    const BBox b = roi.envelope();
    ring = {{b.min_x, b.min_y}, {b.max_x, b.min_y}, {b.max_x, b.max_y}, {b.min_x, b.max_y}, {b.min_x, b.min_y}};
  } else {
    ring = roi.rings().front();
  }
  if (roi.crs().kind != CrsSpec::Kind::geographic_wgs84) {
    for (Point& p : ring) p = inverse(roi.crs(), p.x, p.y);
  }
  return ring;
}

BBox roi_bbox_lonlat(const Roi& roi) {
  if (roi.crs().kind == CrsSpec::Kind::geographic_wgs84) return roi.envelope();
  return transform_bbox(roi.crs(), CrsSpec::geographic(), roi.envelope());
}

bool point_in_ring(const Ring& ring, Point p) {
  bool inside = false;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    const Point a = ring[i], b = ring[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) inside = !inside;
  }
  return inside;
}

double cross(Point o, Point a, Point b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

bool on_segment(Point a, Point b, Point p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_intersect(Point a, Point b, Point c, Point d) {
  const double d1 = cross(c, d, a), d2 = cross(c, d, b), d3 = cross(a, b, c), d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  return (d1 == 0 && on_segment(c, d, a)) || (d2 == 0 && on_segment(c, d, b)) || (d3 == 0 && on_segment(a, b, c)) ||
         (d4 == 0 && on_segment(a, b, d));
}

std::string wkt_polygon(const Ring& ring) {
  std::string s = "POLYGON((";
  for (std::size_t i = 0; i < ring.size(); ++i) {
    if (i) s += ",";
    s += format_decimal(ring[i].x) + " " + format_decimal(ring[i].y);
  }
  return s + "))";
}

std::vector<double> numbers_in(std::string_view text) {
  std::vector<double> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
      double v = 0.0;
      const char* begin = text.data() + i + (c == '+' ? 1 : 0);
      const auto [p, ec] = std::from_chars(begin, text.data() + text.size(), v);
      if (ec == std::errc()) {
        out.push_back(v);
        i = static_cast<std::size_t>(p - text.data());
        continue;
      }
    }
    ++i;
  }
  return out;
}

/// WKT POLYGON / MULTIPOLYGON: first ring, x y order.
std::optional<Ring> parse_wkt_ring(std::string_view wkt) {
  const auto open = wkt.find_first_of('(');
  if (open == std::string_view::npos) return std::nullopt;
  std::size_t start = open;
  while (start < wkt.size() && (wkt[start] == '(' || wkt[start] == ' ')) ++start;
  const auto close = wkt.find(')', start);
  const auto v = numbers_in(wkt.substr(start, close == std::string_view::npos ? std::string_view::npos : close - start));
  if (v.size() < 8 || v.size() % 2) return std::nullopt;
  Ring r;
  for (std::size_t i = 0; i < v.size(); i += 2) r.push_back({v[i], v[i + 1]});
  return r;
}

// ---------------------------------------------------------------------------
// XML helpers

std::string local_name(const std::string& tag) {
  const auto c = tag.find(':');
  return c == std::string::npos ? tag : tag.substr(c + 1);
}

std::string attr(const pt::ptree& node, const std::string& name) {
  if (const auto a = node.get_child_optional("<xmlattr>")) {
    for (const auto& [k, v] : *a) {
      if (local_name(k) == name) return v.data();
    }
  }
  return {};
}

bool has_attr(const pt::ptree& node, const std::string& name) {
  if (const auto a = node.get_child_optional("<xmlattr>")) {
    for (const auto& [k, v] : *a) {
      if (local_name(k) == name) return true;
    }
  }
  return false;
}

std::optional<std::string> child_text(const pt::ptree& node, const std::string& name) {
  for (const auto& [k, v] : node) {
    if (local_name(k) == name) return trim(v.data());
  }
  return std::nullopt;
}

/// DHuS typed element: <str name="tileid">..</str>.
std::optional<std::string> named_text(const pt::ptree& node, const std::string& element, const std::string& name) {
  for (const auto& [k, v] : node) {
    if (local_name(k) == element && attr(v, "name") == name) return trim(v.data());
  }
  return std::nullopt;
}

const pt::ptree& feed_root(const pt::ptree& doc) {
  for (const auto& [k, v] : doc) {
    if (local_name(k) == "feed") return v;
  }
  throw Error(kModule, Errc::schema_error, "document has no <feed> root");
}

pt::ptree parse_xml(std::string_view body) {
  pt::ptree doc;
  std::istringstream in{std::string(body)};
  try {
    pt::read_xml(in, doc, pt::xml_parser::no_comments);
  } catch (const pt::xml_parser_error& e) {
    throw Error(kModule, Errc::parse_error, std::string("XML: ") + e.what());
  }
  return doc;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

Date date_prefix(const std::string& text, const std::string& what) {
  try {
    return parse_iso_date(std::string_view(text).substr(0, 10));
  } catch (const Error&) {
    throw Error(kModule, Errc::schema_error, "bad " + what + " '" + text + "'");
  }
}

double number_field(const std::string& text, const std::string& what) {
  double v = 0.0;
  const std::string t = trim(text);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size()) throw Error(kModule, Errc::schema_error, "bad " + what + " '" + text + "'");
  return v;
}

std::string search_regex(const std::string& text, const std::regex& re, int group = 1) {
  std::smatch m;
  return std::regex_search(text, m, re) ? m[group].str() : std::string();
}

// ---------------------------------------------------------------------------
// MODIS (CMR Atom)

const std::regex kModisTile(R"((h\d{2}v\d{2}))");

std::vector<SceneRecord> parse_cmr(std::string_view body) {
  const pt::ptree doc = parse_xml(body);
  const pt::ptree& feed = feed_root(doc);
  std::vector<SceneRecord> out;
  for (const auto& [k, entry] : feed) {
    if (local_name(k) != "entry") continue;
    SceneRecord r;
    r.mission = Mission::modis;
    auto gid = child_text(entry, "producerGranuleId");
    if (!gid) gid = child_text(entry, "title");
    if (!gid || gid->empty()) throw Error(kModule, Errc::schema_error, "granule entry without id");
    r.granule_id = *gid;
    r.product = r.granule_id.substr(0, r.granule_id.find('.'));
    r.tile_id = search_regex(r.granule_id, kModisTile);
    const auto start = child_text(entry, "start");
    if (!start) throw Error(kModule, Errc::schema_error, r.granule_id + ": no time:start");
    r.capture_date = date_prefix(*start, "time:start");
    for (const auto& [lk, link] : entry) {
      if (local_name(lk) != "link") continue;
      const std::string rel = attr(link, "rel");
      if (rel.ends_with("/data#") && r.download_url.empty()) r.download_url = attr(link, "href");
      if (rel.ends_with("/browse#") && !r.browse_url) r.browse_url = attr(link, "href");
    }
    if (r.download_url.empty()) throw Error(kModule, Errc::schema_error, r.granule_id + ": no data link");
    if (const auto cc = child_text(entry, "cloudCover")) r.cloud_cover_pct = number_field(*cc, "cloudCover");
    if (const auto mb = child_text(entry, "granuleSizeMB")) {
      r.file_size_bytes = static_cast<std::uint64_t>(std::llround(number_field(*mb, "granuleSizeMB") * kMiB));
    }
    if (const auto poly = child_text(entry, "polygon")) {
      const auto v = numbers_in(*poly);
      if (v.size() >= 8 && v.size() % 2 == 0) {
        Ring ring;
        for (std::size_t i = 0; i < v.size(); i += 2) ring.push_back({v[i + 1], v[i]});
        r.footprint = ring;
      }
    } else if (const auto box = child_text(entry, "box")) {
      const auto v = numbers_in(*box);
      if (v.size() == 4) {
        r.footprint = Ring{{v[1], v[0]}, {v[3], v[0]}, {v[3], v[2]}, {v[1], v[2]}, {v[1], v[0]}};
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string serialize_cmr(const std::vector<SceneRecord>& records) {
  std::string s =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<feed xmlns=\"http://www.w3.org/2005/Atom\" xmlns:time=\"http://a9.com/-/opensearch/extensions/time/1.0/\" "
      "xmlns:georss=\"http://www.georss.org/georss/10\" "
      "xmlns:echo=\"https://cmr.earthdata.nasa.gov/search/site/docs/search/api.html#atom\">\n";
  for (const auto& r : records) {
    s += "  <entry>\n";
    s += "    <title>" + xml_escape(r.granule_id) + "</title>\n";
    s += "    <echo:producerGranuleId>" + xml_escape(r.granule_id) + "</echo:producerGranuleId>\n";
    s += "    <time:start>" + format_iso_date(r.capture_date) + "T00:00:00.000Z</time:start>\n";
    if (r.file_size_bytes) {
      s += "    <echo:granuleSizeMB>" + format_decimal(static_cast<double>(*r.file_size_bytes) / kMiB) +
           "</echo:granuleSizeMB>\n";
    }
    if (r.cloud_cover_pct) s += "    <echo:cloudCover>" + format_decimal(*r.cloud_cover_pct) + "</echo:cloudCover>\n";
    s += "    <link href=\"" + xml_escape(r.download_url) + "\" rel=\"http://esipfed.org/ns/fedsearch/1.1/data#\"/>\n";
    if (r.browse_url) {
      s += "    <link href=\"" + xml_escape(*r.browse_url) + "\" rel=\"http://esipfed.org/ns/fedsearch/1.1/browse#\"/>\n";
    }
    if (r.footprint) {
      s += "    <georss:polygon>";
      for (std::size_t i = 0; i < r.footprint->size(); ++i) {
        s += (i ? " " : "") + format_decimal((*r.footprint)[i].y) + " " + format_decimal((*r.footprint)[i].x);
      }
      s += "</georss:polygon>\n";
    }
    s += "  </entry>\n";
  }
  return s + "</feed>\n";
}

// ---------------------------------------------------------------------------
// Sentinel-2 (DHuS OpenSearch)

const std::regex kMgrsTile(R"(_T(\d{2}[A-Z]{3})_)");

std::uint64_t parse_size_text(const std::string& text) {
  const auto v = numbers_in(text);
  if (v.empty()) throw Error(kModule, Errc::schema_error, "bad size '" + text + "'");
  const std::string unit = to_lower(trim(text.substr(text.find_last_of("0123456789") + 1)));
  double mult = 1.0;
  if (unit == "kb") mult = 1024.0;
  else if (unit == "mb") mult = kMiB;
  else if (unit == "gb") mult = kMiB * 1024.0;
  else if (unit == "tb") mult = kMiB * kMiB;
  return static_cast<std::uint64_t>(std::llround(v.front() * mult));
}

std::string s2_product_from_title(const std::string& title) {
  if (title.find("_MSIL2A_") != std::string::npos) return "S2MSI2A";
  if (title.find("_MSIL1C_") != std::string::npos) return "S2MSI1C";
  return {};
}

std::vector<SceneRecord> parse_dhus(std::string_view body) {
  const pt::ptree doc = parse_xml(body);
  const pt::ptree& feed = feed_root(doc);
  std::vector<SceneRecord> out;
  for (const auto& [k, entry] : feed) {
    if (local_name(k) != "entry") continue;
    SceneRecord r;
    r.mission = Mission::sentinel2;
    const auto title = child_text(entry, "title");
    if (!title || title->empty()) throw Error(kModule, Errc::schema_error, "entry without title");
    r.granule_id = *title;
    r.product = named_text(entry, "str", "producttype").value_or(s2_product_from_title(r.granule_id));
    r.tile_id = named_text(entry, "str", "tileid").value_or("");
    if (r.tile_id.empty()) r.tile_id = search_regex(r.granule_id, kMgrsTile);
    const auto begin = named_text(entry, "date", "beginposition");
    if (!begin) throw Error(kModule, Errc::schema_error, r.granule_id + ": no beginposition");
    r.capture_date = date_prefix(*begin, "beginposition");
    for (const auto& [lk, link] : entry) {
      if (local_name(lk) != "link") continue;
      if (!has_attr(link, "rel") && r.download_url.empty()) r.download_url = attr(link, "href");
      if (attr(link, "rel") == "icon" && !r.browse_url) r.browse_url = attr(link, "href");
    }
    if (r.download_url.empty()) throw Error(kModule, Errc::schema_error, r.granule_id + ": no download link");
    if (const auto cc = named_text(entry, "double", "cloudcoverpercentage")) {
      r.cloud_cover_pct = number_field(*cc, "cloudcoverpercentage");
    }
    if (const auto size = named_text(entry, "str", "size")) r.file_size_bytes = parse_size_text(*size);
    if (const auto fp = named_text(entry, "str", "footprint")) r.footprint = parse_wkt_ring(*fp);
    out.push_back(std::move(r));
  }
  return out;
}

std::string serialize_dhus(const std::vector<SceneRecord>& records) {
  std::string s =
      "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n"
      "<feed xmlns:opensearch=\"http://a9.com/-/spec/opensearch/1.1/\" xmlns=\"http://www.w3.org/2005/Atom\">\n";
  s += "  <opensearch:totalResults>" + std::to_string(records.size()) + "</opensearch:totalResults>\n";
  for (const auto& r : records) {
    s += "  <entry>\n";
    s += "    <title>" + xml_escape(r.granule_id) + "</title>\n";
    s += "    <link href=\"" + xml_escape(r.download_url) + "\"/>\n";
    if (r.browse_url) s += "    <link rel=\"icon\" href=\"" + xml_escape(*r.browse_url) + "\"/>\n";
    s += "    <date name=\"beginposition\">" + format_iso_date(r.capture_date) + "T00:00:00.000Z</date>\n";
    if (r.cloud_cover_pct) {
      s += "    <double name=\"cloudcoverpercentage\">" + format_decimal(*r.cloud_cover_pct) + "</double>\n";
    }
    if (r.footprint) s += "    <str name=\"footprint\">" + wkt_polygon(*r.footprint) + "</str>\n";
    if (r.file_size_bytes) s += "    <str name=\"size\">" + std::to_string(*r.file_size_bytes) + " B</str>\n";
    s += "    <str name=\"producttype\">" + xml_escape(r.product) + "</str>\n";
    s += "    <str name=\"tileid\">" + xml_escape(r.tile_id) + "</str>\n";
    s += "  </entry>\n";
  }
  return s + "</feed>\n";
}

// ---------------------------------------------------------------------------
// Landsat (M2M JSON)

std::string landsat_dataset(Mission m) { return m == Mission::landsat7 ? "LANDSAT_ETM_C1" : "LANDSAT_8_C1"; }

std::string ee_download_url(const std::string& dataset, const std::string& entity) {
  return "https://earthexplorer.usgs.gov/download/external/options/" + dataset + "/" + entity + "/INVSVC/";
}

json parse_json(std::string_view body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw Error(kModule, Errc::parse_error, "malformed JSON document");
  return doc;
}

std::string json_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return format_decimal(v.get<double>());
  return {};
}

void check_m2m_error(const json& doc) {
  if (!doc.is_object()) throw Error(kModule, Errc::schema_error, "response is not a JSON object");
  if (doc.contains("errorCode") && !doc["errorCode"].is_null()) {
    const std::string code = json_text(doc["errorCode"]);
    const std::string msg = doc.contains("errorMessage") ? json_text(doc["errorMessage"]) : std::string();
    throw Error(kModule, code.find("AUTH") != std::string::npos ? Errc::auth_error : Errc::schema_error, code + ": " + msg);
  }
}

std::vector<SceneRecord> parse_m2m(Mission mission, std::string_view body) {
  const json doc = parse_json(body);
  check_m2m_error(doc);
  if (!doc.contains("data") || !doc["data"].is_object() || !doc["data"].contains("results") ||
      !doc["data"]["results"].is_array()) {
    throw Error(kModule, Errc::schema_error, "missing data.results array");
  }
  const std::string dataset = landsat_dataset(mission);
  std::vector<SceneRecord> out;
  for (const json& item : doc["data"]["results"]) {
    if (!item.is_object() || !item.contains("entityId")) throw Error(kModule, Errc::schema_error, "result without entityId");
    SceneRecord r;
    r.mission = mission;
    r.product = dataset;
    const std::string entity = json_text(item["entityId"]);
    r.granule_id = item.contains("displayId") ? json_text(item["displayId"]) : entity;
    if (r.granule_id.empty()) r.granule_id = entity;
    // Collection-1 product ids: LXSS_LLLL_PPPRRR_YYYYMMDD_...
    std::istringstream fields(r.granule_id);
    std::string f;
    for (int i = 0; i < 3 && std::getline(fields, f, '_'); ++i) {
      if (i == 2 && f.size() == 6) r.tile_id = f;
    }
    if (r.tile_id.empty() && entity.size() >= 9) r.tile_id = entity.substr(3, 6);
    if (!item.contains("acquisitionDate")) throw Error(kModule, Errc::schema_error, r.granule_id + ": no acquisitionDate");
    r.capture_date = date_prefix(json_text(item["acquisitionDate"]), "acquisitionDate");
    if (item.contains("cloudCover") && !item["cloudCover"].is_null()) {
      r.cloud_cover_pct = number_field(json_text(item["cloudCover"]), "cloudCover");
    }
    r.download_url = ee_download_url(dataset, entity);
    if (item.contains("browse") && item["browse"].is_array() && !item["browse"].empty() &&
        item["browse"][0].contains("browsePath")) {
      r.browse_url = json_text(item["browse"][0]["browsePath"]);
    }
    if (item.contains("filesize") && item["filesize"].is_number()) r.file_size_bytes = item["filesize"].get<std::uint64_t>();
    if (item.contains("spatialBounds") && item["spatialBounds"].contains("coordinates")) {
      const json& rings = item["spatialBounds"]["coordinates"];
      if (rings.is_array() && !rings.empty() && rings[0].is_array()) {
        Ring ring;
        for (const json& p : rings[0]) {
          if (p.is_array() && p.size() >= 2) ring.push_back({p[0].get<double>(), p[1].get<double>()});
        }
        if (ring.size() >= 4) r.footprint = ring;
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string serialize_m2m(const std::vector<SceneRecord>& records) {
  json results = json::array();
  for (const auto& r : records) {
    // The entity id is the second-to-last segment of the download URL.
    std::string entity = r.granule_id;
    if (r.download_url.size() > 1) {
      const auto end = r.download_url.find_last_of('/', r.download_url.size() - 2);
      const auto start = end == std::string::npos ? end : r.download_url.find_last_of('/', end - 1);
      if (start != std::string::npos) entity = r.download_url.substr(start + 1, end - start - 1);
    }
    json item{{"entityId", entity}, {"displayId", r.granule_id}, {"acquisitionDate", format_iso_date(r.capture_date)}};
    item["cloudCover"] = r.cloud_cover_pct ? json(format_decimal(*r.cloud_cover_pct)) : json(nullptr);
    if (r.browse_url) item["browse"] = json::array({json{{"browsePath", *r.browse_url}}});
    if (r.file_size_bytes) item["filesize"] = *r.file_size_bytes;
    if (r.footprint) {
      json ring = json::array();
      for (const Point& p : *r.footprint) ring.push_back({p.x, p.y});
      item["spatialBounds"] = json{{"type", "Polygon"}, {"coordinates", json::array({ring})}};
    }
    results.push_back(std::move(item));
  }
  const auto n = static_cast<int>(records.size());
  json doc{{"data", {{"results", results}, {"recordsReturned", n}, {"totalHits", n}, {"startingNumber", 1}, {"nextRecord", n + 1}}},
           {"errorCode", nullptr}};
  return doc.dump(2) + "\n";
}

json number_json(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) return json(static_cast<long long>(v));
  return json(v);
}

void validate_query(const SceneQuery& q) {
  if (q.product.empty()) throw Error(kModule, Errc::invalid_query, "product is empty");
  if (q.dates.last < q.dates.first) throw Error(kModule, Errc::invalid_query, "date interval is empty");
  if (q.page_size < 1) throw Error(kModule, Errc::invalid_query, "page size must be >= 1");
  if (q.cloud_cover) {
    const auto [lo, hi] = *q.cloud_cover;
    if (!(lo >= 0.0 && lo <= hi && hi <= 100.0)) throw Error(kModule, Errc::invalid_query, "cloud range must satisfy 0 <= lo <= hi <= 100");
  }
  const bool needs_login = q.mission != Mission::modis;
  if (needs_login && (!q.credentials || q.credentials->username.empty())) {
    throw Error(kModule, Errc::missing_credentials, std::string(to_string(q.mission)) + " search requires credentials");
  }
}

void check_status(const HttpResponse& r, const std::string& what) {
  if (r.status == 401 || r.status == 403) throw Error(kModule, Errc::auth_error, what + ": HTTP " + std::to_string(r.status));
  if (!r.ok()) throw Error(kModule, Errc::network_error, what + ": HTTP " + std::to_string(r.status));
}

}  // namespace

std::string format_decimal(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

RequestDescriptor build_query(const SceneQuery& q) {
  validate_query(q);
  RequestDescriptor d;
  d.credentials = q.credentials;
  const BBox bb = roi_bbox_lonlat(q.roi);
  switch (q.mission) {
    case Mission::modis: {
      d.method = "GET";
      d.url = std::string(kCmrGranulesUrl);
      d.params = {
          {"short_name", q.product},
          {"temporal", format_iso_date(q.dates.first) + "T00:00:00Z," + format_iso_date(q.dates.last) + "T23:59:59Z"},
          {"bounding_box", format_decimal(bb.min_x) + "," + format_decimal(bb.min_y) + "," + format_decimal(bb.max_x) +
                               "," + format_decimal(bb.max_y)},
          {"page_size", std::to_string(q.page_size)},
          {"page_num", "1"},
      };
      if (q.cloud_cover) {
        d.params.emplace_back("cloud_cover", format_decimal(q.cloud_cover->first) + "," + format_decimal(q.cloud_cover->second));
      }
      break;
    }
    case Mission::sentinel2: {
      d.method = "GET";
      d.url = std::string(kSciHubSearchUrl);
      d.auth = AuthMode::basic;
      std::string query = "platformname:Sentinel-2 AND producttype:" + q.product + " AND beginposition:[" +
                          format_iso_date(q.dates.first) + "T00:00:00.000Z TO " + format_iso_date(q.dates.last) +
                          "T23:59:59.999Z] AND footprint:\"Intersects(" + wkt_polygon(roi_ring_lonlat(q.roi)) + ")\"";
      if (q.cloud_cover) {
        query += " AND cloudcoverpercentage:[" + format_decimal(q.cloud_cover->first) + " TO " +
                 format_decimal(q.cloud_cover->second) + "]";
      }
      d.params = {{"q", query}, {"rows", std::to_string(q.page_size)}, {"start", "0"}};
      break;
    }
    case Mission::landsat7:
    case Mission::landsat8: {
      d.method = "POST";
      d.url = std::string(kM2mSceneSearchUrl);
      d.auth = AuthMode::token;
      d.headers = {{"Content-Type", "application/json"}};
      json filter{{"acquisitionFilter", {{"start", format_iso_date(q.dates.first)}, {"end", format_iso_date(q.dates.last)}}},
                  {"spatialFilter",
                   {{"filterType", "mbr"},
                    {"lowerLeft", {{"latitude", bb.min_y}, {"longitude", bb.min_x}}},
                    {"upperRight", {{"latitude", bb.max_y}, {"longitude", bb.max_x}}}}}};
      if (q.cloud_cover) {
        filter["cloudCoverFilter"] = {{"min", number_json(q.cloud_cover->first)},
                                      {"max", number_json(q.cloud_cover->second)},
                                      {"includeUnknown", false}};
      }
      json body{{"datasetName", to_lower(q.product)},
                {"maxResults", q.page_size},
                {"startingNumber", 1},
                {"sceneFilter", filter}};
      d.body = body.dump();
      break;
    }
  }
  return d;
}

std::vector<SceneRecord> parse_search_response(Mission mission, std::string_view body) {
  switch (mission) {
    case Mission::modis: return parse_cmr(body);
    case Mission::sentinel2: return parse_dhus(body);
    case Mission::landsat7:
    case Mission::landsat8: return parse_m2m(mission, body);
  }
  return {};
}

std::string serialize_search_response(Mission mission, const std::vector<SceneRecord>& records) {
  switch (mission) {
    case Mission::modis: return serialize_cmr(records);
    case Mission::sentinel2: return serialize_dhus(records);
    case Mission::landsat7:
    case Mission::landsat8: return serialize_m2m(records);
  }
  return {};
}

std::optional<RequestDescriptor> next_page(Mission mission, const RequestDescriptor& previous, std::string_view body) {
  RequestDescriptor next = previous;
  auto int_param = [&](const char* key, int fallback) {
    const auto v = previous.param(key);
    int n = fallback;
    if (v) std::from_chars(v->data(), v->data() + v->size(), n);
    return n;
  };
  switch (mission) {
    case Mission::modis: {
      const pt::ptree doc = parse_xml(body);
      const pt::ptree& feed = feed_root(doc);
      bool has_next = false;
      int entries = 0;
      for (const auto& [k, v] : feed) {
        if (local_name(k) == "entry") ++entries;
        if (local_name(k) == "link" && attr(v, "rel") == "next") has_next = true;
      }
      if (!has_next && entries < int_param("page_size", 10)) return std::nullopt;
      if (entries == 0) return std::nullopt;
      next.set_param("page_num", std::to_string(int_param("page_num", 1) + 1));
      return next;
    }
    case Mission::sentinel2: {
      const pt::ptree doc = parse_xml(body);
      const pt::ptree& feed = feed_root(doc);
      bool has_next = false;
      for (const auto& [k, v] : feed) {
        if (local_name(k) == "link" && attr(v, "rel") == "next") has_next = true;
      }
      if (!has_next) return std::nullopt;
      next.set_param("start", std::to_string(int_param("start", 0) + int_param("rows", 100)));
      return next;
    }
    case Mission::landsat7:
    case Mission::landsat8: {
      const json doc = parse_json(body);
      check_m2m_error(doc);
      if (!doc.contains("data") || !doc["data"].is_object()) return std::nullopt;
      const json& data = doc["data"];
      if (!data.contains("nextRecord") || !data["nextRecord"].is_number_integer()) return std::nullopt;
      const long long nxt = data["nextRecord"].get<long long>();
      const long long total = data.contains("totalHits") && data["totalHits"].is_number() ? data["totalHits"].get<long long>() : 0;
      const long long returned =
          data.contains("recordsReturned") && data["recordsReturned"].is_number() ? data["recordsReturned"].get<long long>() : 0;
      if (returned <= 0 || nxt > total) return std::nullopt;
      json req = parse_json(previous.body);
      req["startingNumber"] = nxt;
      next.body = req.dump();
      return next;
    }
  }
  return std::nullopt;
}

std::vector<SceneRecord> search(const SceneQuery& query, Transport& transport, int max_pages) {
  std::vector<SceneRecord> out;
  std::optional<RequestDescriptor> req = build_query(query);
  for (int page = 0; req && page < max_pages; ++page) {
    const HttpResponse r = transport.send(*req);
    check_status(r, "search " + req->url);
    auto recs = parse_search_response(query.mission, r.body);
    out.insert(out.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
    req = next_page(query.mission, *req, r.body);
  }
  return out;
}

bool rings_intersect(const Ring& a, const Ring& b) {
  if (a.size() < 2 || b.size() < 2) return false;
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    for (std::size_t j = 0; j + 1 < b.size(); ++j) {
      if (segments_intersect(a[i], a[i + 1], b[j], b[j + 1])) return true;
    }
  }
  return point_in_ring(a, b.front()) || point_in_ring(b, a.front());
}

std::vector<SceneRecord> filter_records(const std::vector<SceneRecord>& records, const Roi& roi,
                                        const std::optional<CloudRange>& cloud, const std::optional<DateRange>& dates) {
  const Ring area = roi_ring_lonlat(roi);
  std::vector<SceneRecord> out;
  for (const auto& r : records) {
    if (r.footprint && !rings_intersect(*r.footprint, area)) continue;
    if (cloud) {
      if (!r.cloud_cover_pct) continue;
      if (*r.cloud_cover_pct < cloud->first || *r.cloud_cover_pct > cloud->second) continue;
    }
    if (dates && !dates->contains(r.capture_date)) continue;
    out.push_back(r);
  }
  return out;
}

std::string records_to_json(const std::vector<SceneRecord>& records) {
  json arr = json::array();
  for (const auto& r : records) {
    json o{{"mission", to_string(r.mission)},
           {"product", r.product},
           {"granule_id", r.granule_id},
           {"tile_id", r.tile_id},
           {"capture_date", format_iso_date(r.capture_date)},
           {"download_url", r.download_url}};
    o["cloud_cover_pct"] = r.cloud_cover_pct ? json(*r.cloud_cover_pct) : json(nullptr);
    o["browse_url"] = r.browse_url ? json(*r.browse_url) : json(nullptr);
    o["file_size_bytes"] = r.file_size_bytes ? json(*r.file_size_bytes) : json(nullptr);
    if (r.footprint) {
      json ring = json::array();
      for (const Point& p : *r.footprint) ring.push_back({p.x, p.y});
      o["footprint"] = ring;
    } else {
      o["footprint"] = nullptr;
    }
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

std::vector<SceneRecord> records_from_json(std::string_view text) {
  const json doc = parse_json(text);
  if (!doc.is_array()) throw Error(kModule, Errc::schema_error, "record list must be a JSON array");
  std::vector<SceneRecord> out;
  try {
    for (const json& o : doc) {
      SceneRecord r;
      r.mission = parse_mission(o.at("mission").get<std::string>());
      r.product = o.at("product").get<std::string>();
      r.granule_id = o.at("granule_id").get<std::string>();
      r.tile_id = o.at("tile_id").get<std::string>();
      r.capture_date = parse_iso_date(o.at("capture_date").get<std::string>());
      r.download_url = o.at("download_url").get<std::string>();
      if (o.contains("cloud_cover_pct") && !o["cloud_cover_pct"].is_null()) r.cloud_cover_pct = o["cloud_cover_pct"].get<double>();
      if (o.contains("browse_url") && !o["browse_url"].is_null()) r.browse_url = o["browse_url"].get<std::string>();
      if (o.contains("file_size_bytes") && !o["file_size_bytes"].is_null()) {
        r.file_size_bytes = o["file_size_bytes"].get<std::uint64_t>();
      }
      if (o.contains("footprint") && o["footprint"].is_array()) {
        Ring ring;
        for (const json& p : o["footprint"]) ring.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        r.footprint = ring;
      }
      if (r.download_url.empty()) throw Error(kModule, Errc::schema_error, r.granule_id + ": empty download_url");
      out.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw Error(kModule, Errc::schema_error, e.what());
  }
  return out;
}

RequestDescriptor build_espa_order(const std::vector<SceneRecord>& records, const std::vector<std::string>& products,
                                   const Credentials& credentials) {
  if (records.empty()) throw Error(kModule, Errc::invalid_query, "ESPA order without scenes");
  if (products.empty()) throw Error(kModule, Errc::invalid_query, "ESPA order without products");
  json body{{"format", "gtiff"}};
  for (const auto& r : records) {
    std::string key;
    if (r.mission == Mission::landsat8) key = "olitirs8_collection";
    else if (r.mission == Mission::landsat7) key = "etm7_collection";
    else throw Error(kModule, Errc::invalid_query, "ESPA only processes Landsat scenes");
    body[key]["inputs"].push_back(r.granule_id);
    body[key]["products"] = products;
  }
  RequestDescriptor d;
  d.method = "POST";
  d.url = std::string(kEspaApiUrl) + "/order";
  d.headers = {{"Content-Type", "application/json"}};
  d.auth = AuthMode::basic;
  d.credentials = credentials;
  d.body = body.dump();
  return d;
}

std::string parse_espa_order(std::string_view body) {
  const json doc = parse_json(body);
  if (!doc.is_object() || !doc.contains("orderid") || !doc["orderid"].is_string()) {
    throw Error(kModule, Errc::schema_error, "ESPA response has no orderid");
  }
  return doc["orderid"].get<std::string>();
}

RequestDescriptor build_espa_status(const std::string& order_id, const Credentials& credentials) {
  RequestDescriptor d;
  d.method = "GET";
  d.url = std::string(kEspaApiUrl) + "/item-status/" + order_id;
  d.auth = AuthMode::basic;
  d.credentials = credentials;
  return d;
}

std::vector<EspaItem> parse_espa_status(std::string_view body, const std::string& order_id) {
  const json doc = parse_json(body);
  if (!doc.is_object() || !doc.contains(order_id) || !doc[order_id].is_array()) {
    throw Error(kModule, Errc::schema_error, "ESPA status lacks order " + order_id);
  }
  std::vector<EspaItem> out;
  for (const json& it : doc[order_id]) {
    if (!it.is_object() || !it.contains("name") || !it.contains("status")) {
      throw Error(kModule, Errc::schema_error, "ESPA item without name/status");
    }
    EspaItem e{json_text(it["name"]), json_text(it["status"]), {}};
    if (it.contains("product_dload_url")) e.download_url = json_text(it["product_dload_url"]);
    out.push_back(std::move(e));
  }
  return out;
}

std::chrono::seconds espa_backoff(int attempt) {
  constexpr long long cap = 15 * 60;
  long long s = 30;
  for (int i = 0; i < attempt && s < cap; ++i) s *= 2;
  return std::chrono::seconds(std::min(s, cap));
}

std::vector<EspaItem> poll_espa_order(Transport& transport, const std::string& order_id, const Credentials& credentials,
                                      const std::function<void(std::chrono::seconds)>& sleep, int max_attempts) {
  const RequestDescriptor req = build_espa_status(order_id, credentials);
  for (int k = 0; k < max_attempts; ++k) {
    const HttpResponse r = transport.send(req);
    check_status(r, "ESPA status");
    auto items = parse_espa_status(r.body, order_id);
    const bool done = std::all_of(items.begin(), items.end(), [](const EspaItem& e) {
      return e.status == "complete" || e.status == "unavailable" || e.status == "cancelled";
    });
    if (done) return items;
    if (sleep) sleep(espa_backoff(k));
  }
  throw Error(kModule, Errc::network_error, "ESPA order " + order_id + " not complete after polling");
}

}  // namespace satstack
