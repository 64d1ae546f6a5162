#include "satstack/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <set>
#include <sstream>

#include "satstack/catalog.hpp"
#include "satstack/cloudmask.hpp"
#include "satstack/config.hpp"
#include "satstack/download.hpp"
#include "satstack/error.hpp"
#include "satstack/fixtures.hpp"
#include "satstack/geoproj.hpp"
#include "satstack/geotiff.hpp"
#include "satstack/hydro.hpp"
#include "satstack/ima.hpp"
#include "satstack/render.hpp"

namespace satstack {

namespace {

constexpr std::string_view kModule = "cli";
namespace fs = std::filesystem;
using nlohmann::json;

struct Globals {
  std::string workspace = ".";
  bool live = false;
  std::string fixtures;
  int workers = 3;
  std::string config;
};

struct RoiOpts {
  std::string roi_file;
  std::string bbox;
  std::string crs = "EPSG:4326";
};

void add_roi_options(CLI::App* sc, RoiOpts& o) {
  sc->add_option("--roi", o.roi_file, "GeoJSON polygon file");
  sc->add_option("--bbox", o.bbox, "xmin,ymin,xmax,ymax");
  sc->add_option("--crs", o.crs, "CRS of --bbox / --roi (EPSG:<code> or MODIS-SIN)")->capture_default_str();
}

std::optional<Roi> make_roi(const RoiOpts& o) {
  const CrsSpec crs = CrsSpec::parse(o.crs);
  if (!o.roi_file.empty() && !o.bbox.empty()) throw Error(kModule, Errc::usage_error, "give --roi or --bbox, not both");
  if (!o.roi_file.empty()) return read_geojson_roi(read_text_file(o.roi_file), crs);
  if (!o.bbox.empty()) {
    const auto v = parse_number_list(o.bbox, 4);
    return Roi::box({v[0], v[1], v[2], v[3]}, crs);
  }
  return std::nullopt;
}

struct Session {
  Globals g;
  std::map<std::string, std::string> config;
  std::ostream& out;
  std::ostream& err;

  fs::path ws() const { return fs::path(g.workspace); }

  void load_config() {
    const fs::path p = g.config.empty() ? ws() / "satstack.conf" : fs::path(g.config);
    std::error_code ec;
    if (fs::exists(p, ec)) {
      config = read_key_values(p);
    } else if (!g.config.empty()) {
      throw Error(kModule, Errc::io_failure, "config file " + p.string() + " not found");
    }
    if (auto it = config.find("workers"); it != config.end() && g.workers == 3) g.workers = std::stoi(it->second);
    if (g.workers < 1) throw Error(kModule, Errc::usage_error, "worker count must be >= 1");
  }

  std::unique_ptr<Transport> transport() const {
    if (g.live) return make_live_transport();
    const fs::path root = g.fixtures.empty() ? ws() / "fixtures" : fs::path(g.fixtures);
    std::error_code ec;
    if (!fs::is_directory(root, ec)) return std::make_unique<FixtureTransport>();
    return std::make_unique<FixtureTransport>(root);
  }

  std::map<std::string, std::string> mission_entries() const {
    std::map<std::string, std::string> out_entries;
    for (const auto& [k, v] : config) {
      const auto dot = k.find('.');
      if (dot == std::string::npos) continue;
      try {
        (void)parse_mission(k.substr(0, dot));
        out_entries.emplace(k, v);
      } catch (const Error&) {
      }
    }
    return out_entries;
  }

  MissionBandMap band_map() const {
    MissionBandMap m = MissionBandMap::defaults();
    m.apply_overrides(mission_entries());
    return m;
  }

  QaRuleSet qa_rules() const {
    QaRuleSet q = QaRuleSet::defaults();
    q.apply_overrides(mission_entries());
    return q;
  }
};

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "NA";
  return format_decimal(*v);
}

std::string date_iso(const Date& d) { return format_iso_date(d); }

std::string sat_from_label(const std::string& label) {
  const auto pos = label.find_last_of('_');
  if (pos == std::string::npos || pos + 1 >= label.size()) return {};
  const std::string tail = label.substr(pos + 1);
  const bool all_digits = std::all_of(tail.begin(), tail.end(), [](unsigned char c) { return std::isdigit(c); });
  if (all_digits || std::count(label.begin(), label.end(), '_') < 2) return {};
  return tail;
}

std::vector<fs::path> tif_files(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(kModule, Errc::io_failure, dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& de : fs::recursive_directory_iterator(dir)) {
    if (!de.is_regular_file()) continue;
    const std::string ext = to_lower(de.path().extension().string());
    if (ext == ".tif" || ext == ".tiff") files.push_back(de.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// ---------------------------------------------------------------------------
// search / download

struct SearchOpts {
  std::string mission;
  std::string product;
  std::string from;
  std::string to;
  std::string cloud;
  std::string out;
  RoiOpts roi;
  bool json = false;
  int page_size = 100;
  int max_pages = 100;
};

int cmd_search(Session& s, const SearchOpts& o) {
  SceneQuery q;
  q.mission = parse_mission(o.mission);
  q.product = o.product;
  q.dates = {parse_iso_date(o.from), parse_iso_date(o.to)};
  if (auto roi = make_roi(o.roi)) q.roi = *roi;
  if (!o.cloud.empty()) {
    const auto v = parse_number_list(o.cloud, 2);
    q.cloud_cover = CloudRange{v[0], v[1]};
  }
  q.credentials = credentials_for(q.mission, s.config);
  q.page_size = o.page_size;
  const auto transport = s.transport();
  const auto records = filter_records(search(q, *transport, o.max_pages), q.roi, q.cloud_cover, q.dates);

  const fs::path dir = o.out.empty() ? s.ws() / mission_dir_name(q.mission) / q.product : fs::path(o.out);
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "records.json", std::ios::trunc);
    if (!f) throw Error(kModule, Errc::io_failure, "cannot write " + (dir / "records.json").string());
    f << records_to_json(records) << "\n";
  }
  if (o.json) {
    s.out << records_to_json(records) << "\n";
    s.err << "search: " << records.size() << " records -> " << dir.string() << "\n";
    return kExitOk;
  }
  std::size_t id_w = std::string_view("granule").size(), tile_w = std::string_view("tile").size();
  for (const auto& r : records) {
    id_w = std::max(id_w, r.granule_id.size());
    tile_w = std::max(tile_w, r.tile_id.size());
  }
  const int gw = static_cast<int>(id_w + 2), tw = static_cast<int>(tile_w + 2);
  s.out << std::left << std::setw(gw) << "granule" << std::setw(tw) << "tile" << std::setw(12) << "date" << std::setw(8)
        << "cloud" << "size\n";
  for (const auto& r : records) {
    s.out << std::left << std::setw(gw) << r.granule_id << std::setw(tw) << r.tile_id << std::setw(12)
          << date_iso(r.capture_date) << std::setw(8) << fmt_opt(r.cloud_cover_pct)
          << (r.file_size_bytes ? std::to_string(*r.file_size_bytes) : std::string("NA")) << "\n";
  }
  s.out << "search: " << records.size() << " records -> " << dir.string() << "\n";
  return kExitOk;
}

struct DownloadOpts {
  std::string records;
  std::string out;
  std::string bands;
  bool no_extract = false;
  bool remove_archives = false;
  bool overwrite = false;
};

int cmd_download(Session& s, const DownloadOpts& o) {
  DownloadPlan plan;
  plan.records = records_from_json(read_text_file(o.records));
  if (plan.records.empty()) {
    s.out << "download: nothing to fetch\n";
    return kExitOk;
  }
  const SceneRecord& first = plan.records.front();
  plan.dest_dir = o.out.empty() ? s.ws() / mission_dir_name(first.mission) / first.product : fs::path(o.out);
  plan.extract = !o.no_extract;
  plan.remove_archives = o.remove_archives;
  plan.overwrite = o.overwrite;
  plan.workers = s.g.workers;
  plan.credentials = credentials_for(first.mission, s.config);
  if (!o.bands.empty()) {
    std::stringstream ss(o.bands);
    std::string tok;
    while (std::getline(ss, tok, ',')) plan.band_filter.push_back(trim(tok));
  }
  const auto transport = s.transport();
  const PlanReport report = execute_plan(plan, *transport);
  for (const auto& r : report.records) {
    s.out << r.granule_id << " " << to_string(r.status) << " " << r.bytes << " bytes, " << r.extracted.size()
          << " extracted\n";
    if (!r.message.empty()) s.err << "download: " << r.granule_id << ": " << r.message << "\n";
  }
  s.out << "download: " << report.records.size() << " records, " << report.total_bytes() << " bytes -> "
        << plan.dest_dir.string() << "\n";
  return report.failures() == 0 ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------
// raster stages

struct MosaicOpts {
  std::string in;
  std::string out;
  std::string product = "MOSAIC";
  std::vector<std::string> bands;
  RoiOpts roi;
  bool rescale = false;
};

int cmd_mosaic(Session& s, const MosaicOpts& o) {
  const auto roi = make_roi(o.roi);
  const auto files = tif_files(o.in);
  const std::vector<std::string> bands = o.bands.empty() ? std::vector<std::string>{""} : o.bands;
  const fs::path dir(o.out);
  fs::create_directories(dir);
  std::size_t written = 0;
  for (const auto& band : bands) {
    std::map<Date, std::vector<fs::path>> by_date;
    for (const auto& f : files) {
      const std::string stem = f.stem().string();
      if (!band.empty() && !name_has_token(stem, band)) continue;
      const auto d = capture_date_from_name(stem);
      if (!d) throw Error(kModule, Errc::no_date_token, "no capture date in " + f.filename().string());
      by_date[*d].push_back(f);
    }
    for (const auto& [date, paths] : by_date) {
      std::vector<MosaicInput> inputs;
      for (const auto& p : paths) {
        RasterGrid g = read_geotiff(p);
        if (o.rescale) g = rescale_reflectance(g);
        inputs.push_back({std::move(g), p.stem().string(), p.string()});
      }
      write_geotiff(mosaic(std::move(inputs), roi), dir / layer_file_name(o.product, date, band));
      ++written;
    }
  }
  if (written == 0) throw Error(kModule, Errc::no_input_files, "no matching tiles in " + o.in);
  s.out << "mosaic: " << written << " files -> " << dir.string() << "\n";
  return kExitOk;
}

struct IndexOpts {
  std::string in;
  std::string out;
  std::string index = "NDVI";
  std::string mission;
  std::string sat;
};

int cmd_index(Session& s, const IndexOpts& o) {
  const Mission m = parse_mission(o.mission);
  const IndexKind k = parse_index_kind(o.index);
  const fs::path dir = o.out.empty() ? s.ws() / mission_dir_name(m) / std::string(to_string(k)) : fs::path(o.out);
  const IndexReport rep = folder_to_index(o.in, k, m, s.band_map(), std::nullopt, dir, o.sat);
  for (const auto& [d, why] : rep.skipped) s.err << "index: skipped " << date_iso(d) << ": " << why << "\n";
  s.out << "index: " << rep.written.size() << " files -> " << dir.string() << "\n";
  return rep.written.empty() ? kExitFailure : kExitOk;
}

struct CloudOpts {
  std::string in;
  std::string out;
  std::string mission;
  std::string token;
  std::string index;
  std::string masked_out;
  double threshold = -1.0;
  RoiOpts roi;
};

int cmd_cloudmask(Session& s, const CloudOpts& o) {
  const Mission m = parse_mission(o.mission);
  const auto roi = make_roi(o.roi);
  const QaRuleSet rules = s.qa_rules();
  const GridStack qa = read_geotiff_stack(o.in, o.token);
  const fs::path dir = o.out.empty() ? s.ws() / mission_dir_name(m) / "CloudMask" : fs::path(o.out);
  fs::create_directories(dir);
  GridStack masks;
  for (std::size_t i = 0; i < qa.size(); ++i) {
    RasterGrid mask = decode_qa(m, qa.layer(i), rules.rule(m));
    write_geotiff(mask, dir / layer_file_name("CLOUD", qa.date(i)), {SampleType::uint8, Compression::deflate, {}});
    const double frac = cloud_fraction(mask, roi);
    s.out << date_iso(qa.date(i)) << " cloud " << std::fixed << std::setprecision(4) << frac << std::defaultfloat;
    if (o.threshold >= 0.0) s.out << (frac < o.threshold ? " clear" : " cloudy");
    s.out << "\n";
    masks.push_back(std::move(mask), qa.date(i), "CLOUD_" + format_layer_date(qa.date(i)));
  }
  if (!o.index.empty()) {
    GridStack idx = read_geotiff_stack(o.index);
    if (o.threshold >= 0.0) {
      const auto keep = clear_dates(masks, o.threshold, roi);
      const std::set<Date> keep_set(keep.begin(), keep.end());
      GridStack kept;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if (keep_set.count(idx.date(i))) kept.push_back(idx.layer(i), idx.date(i), idx.label(i));
      }
      idx = std::move(kept);
    }
    const fs::path mdir = o.masked_out.empty() ? dir / "masked" : fs::path(o.masked_out);
    if (!idx.empty()) {
      const MaskStackResult res = mask_stack(idx, masks);
      write_geotiff_stack(res.masked, mdir);
      for (std::size_t i : res.unmasked) s.err << "cloudmask: no mask for " << res.masked.label(i) << "\n";
    }
    s.out << "cloudmask: " << idx.size() << " masked layers -> " << mdir.string() << "\n";
  }
  s.out << "cloudmask: " << masks.size() << " masks -> " << dir.string() << "\n";
  return kExitOk;
}

struct CompositeOpts {
  std::string in;
  std::string out;
  std::string token;
  std::string fun = "mean";
  int window = 8;
};

int cmd_composite(Session& s, const CompositeOpts& o) {
  CompositeFun fun = CompositeFun::mean;
  if (o.fun == "median") {
    fun = CompositeFun::median;
  } else if (o.fun == "max") {
    fun = CompositeFun::max;
  } else if (o.fun != "mean") {
    throw Error(kModule, Errc::usage_error, "--fun must be mean, median or max");
  }
  const GridStack out = composite(read_geotiff_stack(o.in, o.token), o.window, fun);
  write_geotiff_stack(out, o.out);
  s.out << "composite: " << out.size() << " files -> " << o.out << "\n";
  return kExitOk;
}

struct ImaOpts {
  std::string in;
  std::string out;
  std::string token;
  std::string afilter = "0.05,0.95";
  std::string fun = "mean";
  int ndays = 0;
  int nyears = 0;
  int fact = 1;
  double lambda = 0.0;
  bool only_na = false;
  bool include_target = false;
};

int cmd_ima(Session& s, const ImaOpts& o) {
  ImaParams p;
  p.n_days = o.ndays;
  p.n_years = o.nyears;
  const auto q = parse_number_list(o.afilter, 2);
  p.q_lo = q[0];
  p.q_hi = q[1];
  p.fact = o.fact;
  if (o.fun == "median") {
    p.fun = AggFun::median;
  } else if (o.fun != "mean") {
    throw Error(kModule, Errc::usage_error, "--fun must be mean or median");
  }
  p.only_na = o.only_na;
  p.lambda = o.lambda;
  p.include_target = o.include_target;
  const GridStack in = read_geotiff_stack(o.in, o.token);
  const auto [filled, report] = ima_fill(in, p);
  for (const auto& t : report.targets) {
    if (t.skipped) {
      s.err << "ima: " << in.label(t.target) << " left unchanged: " << to_string(*t.skipped)
            << (t.note.empty() ? "" : " (" + t.note + ")") << "\n";
    }
  }
  write_geotiff_stack(filled, o.out);
  s.out << "ima: " << filled.size() << " files -> " << o.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// water level

json results_json(const std::vector<WaterLevelResult>& results) {
  json arr = json::array();
  for (const auto& r : results) {
    arr.push_back({{"sat", r.sat}, {"date", date_iso(r.date)}, {"est", r.est}, {"obs", r.obs ? json(*r.obs) : json()}});
  }
  return arr;
}

struct WaterOpts {
  std::string ndwi;
  std::string token;
  std::string dem;
  std::string contours;
  std::string obs;
  std::string out;
  std::string sat;
  double threshold = -0.1;
  double power = 2.0;
  bool json = false;
};

int cmd_waterlevel(Session& s, const WaterOpts& o) {
  if (o.dem.empty() == o.contours.empty()) throw Error(kModule, Errc::usage_error, "give exactly one of --dem or --contours");
  const GridStack ndwi = read_geotiff_stack(o.ndwi, o.token);
  Dem dem;
  if (!o.dem.empty()) {
    dem.grid = read_geotiff(o.dem);
    if (!(dem.grid.georef() == ndwi.georef())) dem.grid = reproject_grid(dem.grid, ndwi.georef(), Resample::bilinear);
  } else {
    dem = idw_dem(read_contours_csv(o.contours), ndwi.georef(), o.power);
  }
  validate_dem(dem);

  std::vector<WaterLevelResult> results;
  for (std::size_t i = 0; i < ndwi.size(); ++i) {
    try {
      WaterLevelResult r;
      r.sat = o.sat.empty() ? sat_from_label(ndwi.label(i)) : o.sat;
      r.date = ndwi.date(i);
      r.est = estimate_level(ndwi.layer(i), dem, o.threshold);
      results.push_back(std::move(r));
    } catch (const Error& e) {
      s.err << "waterlevel: " << ndwi.label(i) << ": " << e.what() << "\n";
    }
  }
  if (results.empty()) throw Error(kModule, Errc::no_components, "no scene produced a water level");
  if (!o.obs.empty()) join_observations(results, read_observations_csv(o.obs));

  const fs::path out = o.out.empty() ? s.ws() / "waterlevel.csv" : fs::path(o.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_results_csv(results, out);
  const fs::path dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
  if (o.json) {
    s.out << results_json(results).dump(2) << "\n";
    s.err << "waterlevel: " << results.size() << " estimates -> " << dir.string() << "\n";
    return kExitOk;
  }
  for (const auto& r : results) {
    s.out << (r.sat.empty() ? "-" : r.sat) << " " << date_iso(r.date) << " est " << format_decimal(r.est) << " obs "
          << fmt_opt(r.obs) << "\n";
  }
  s.out << "waterlevel: " << results.size() << " estimates -> " << dir.string() << "\n";
  return kExitOk;
}

struct EvalOpts {
  std::string results;
  std::string obs;
  bool json = false;
};

int cmd_evaluate(Session& s, const EvalOpts& o) {
  auto results = read_results_csv(o.results);
  if (!o.obs.empty()) join_observations(results, read_observations_csv(o.obs));
  const EvaluationMetrics m = evaluate(results);
  const std::string dir = fs::path(o.results).has_parent_path() ? fs::path(o.results).parent_path().string() : ".";
  if (o.json) {
    json j = {{"mae", m.mae}, {"pairs", m.pairs}, {"pearson_r", m.pearson_r}, {"mae_by_sat", m.mae_by_sat}};
    s.out << j.dump(2) << "\n";
    s.err << "evaluate: done -> " << dir << "\n";
    return kExitOk;
  }
  s.out << "pairs " << m.pairs << "\nmae " << format_decimal(m.mae) << "\n";
  for (const auto& [sat, v] : m.mae_by_sat) s.out << "mae[" << sat << "] " << format_decimal(v) << "\n";
  s.out << "pearson_r " << format_decimal(m.pearson_r) << "\n";
  s.out << "evaluate: done -> " << dir << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// render / fixtures

struct RenderCliOpts {
  std::string in;
  std::string out;
  std::string token;
  std::string clamp = "0,1";
  std::string palette = "terrain";
  int panel_px = 160;
};

int cmd_render(Session& s, const RenderCliOpts& o) {
  const auto z = parse_number_list(o.clamp, 2);
  RenderOptions ro;
  ro.lo = z[0];
  ro.hi = z[1];
  ro.palette = parse_palette(o.palette);
  ro.panel_px = o.panel_px;
  if (!(ro.lo < ro.hi)) throw Error(kModule, Errc::usage_error, "--clamp needs lo < hi");
  const fs::path out = render_panels(read_geotiff_stack(o.in, o.token), ro, o.out);
  s.out << "render: " << out.string() << " -> " << (out.has_parent_path() ? out.parent_path().string() : ".") << "\n";
  return kExitOk;
}

struct GenOpts {
  std::string kind;
  std::string out;
  SyntheticField field;
  SyntheticReservoir reservoir;
};

int cmd_fixtures_gen(Session& s, const GenOpts& o) {
  const fs::path dir(o.out);
  if (o.kind == "field") {
    const FieldStacks st = gen_field(o.field);
    write_geotiff_stack(st.truth, dir / "truth");
    write_geotiff_stack(st.holed, dir / "holed");
    s.out << "fixtures: field " << o.field.n_rows << "x" << o.field.n_cols << "x" << o.field.n_dates << " -> "
          << dir.string() << "\n";
    return kExitOk;
  }
  const ReservoirScene sc = gen_reservoir(o.reservoir);
  fs::create_directories(dir / "ndwi");
  write_geotiff(sc.dem.grid, dir / "dem.tif");
  const Date d{std::chrono::year{2018}, std::chrono::month{8}, std::chrono::day{2}};
  write_geotiff(sc.ndwi, dir / "ndwi" / layer_file_name("NDWI", d, {}, "SYN"));
  s.out << "fixtures: reservoir level " << format_decimal(sc.true_level) << " -> " << dir.string() << "\n";
  return kExitOk;
}

}  // namespace

std::string mission_dir_name(Mission mission) {
  switch (mission) {
    case Mission::landsat7: return "Landsat7";
    case Mission::landsat8: return "Landsat8";
    case Mission::modis: return "Modis";
    case Mission::sentinel2: return "Sentinel2";
  }
  return "Other";
}

std::vector<double> parse_number_list(std::string_view text, std::size_t expected_count) {
  std::vector<double> out;
  std::string s(text);
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || *end != '\0' || !std::isfinite(v)) {
      throw Error(kModule, Errc::usage_error, "'" + s + "' is not a comma-separated number list");
    }
    out.push_back(v);
  }
  if (expected_count != 0 && out.size() != expected_count) {
    throw Error(kModule, Errc::usage_error,
                "'" + s + "' needs " + std::to_string(expected_count) + " comma-separated numbers");
  }
  return out;
}

Roi read_geojson_roi(const std::string& text, const CrsSpec& crs) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(kModule, Errc::parse_error, std::string("GeoJSON: ") + e.what());
  }
  try {
    json geom = doc;
    if (geom.at("type") == "FeatureCollection") geom = geom.at("features").at(0);
    if (geom.at("type") == "Feature") geom = geom.at("geometry");
    json coords = geom.at("coordinates");
    if (geom.at("type") == "MultiPolygon") {
      coords = coords.at(0);
    } else if (geom.at("type") != "Polygon") {
      throw Error(kModule, Errc::parse_error, "GeoJSON ROI must be a Polygon or MultiPolygon");
    }
    std::vector<Ring> rings;
    for (const auto& ring : coords) {
      Ring r;
      for (const auto& pt : ring) r.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
      rings.push_back(std::move(r));
    }
    return Roi::polygon(std::move(rings), crs);
  } catch (const json::exception& e) {
    throw Error(kModule, Errc::parse_error, std::string("GeoJSON: ") + e.what());
  }
}

std::optional<Credentials> credentials_for(Mission mission, const std::map<std::string, std::string>& config) {
  const std::string prefix = mission == Mission::sentinel2 ? "scihub" : "earthdata";
  const std::string env_prefix = mission == Mission::sentinel2 ? "SCIHUB" : "EARTHDATA";
  const char* u = std::getenv((env_prefix + "_USER").c_str());
  const char* p = std::getenv((env_prefix + "_PASS").c_str());
  if (u && *u) return Credentials{u, p ? p : ""};
  const auto cu = config.find(prefix + ".user");
  if (cu == config.end() || cu->second.empty()) return std::nullopt;
  const auto cp = config.find(prefix + ".pass");
  return Credentials{cu->second, cp == config.end() ? "" : cp->second};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-mission satellite image time-series toolkit", "satstack"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--workspace,-w", g.workspace, "Workspace directory")->capture_default_str();
  app.add_flag("--live", g.live, "Use the network instead of recorded fixtures");
  app.add_option("--fixtures", g.fixtures, "Fixture directory (default <workspace>/fixtures)");
  app.add_option("--workers", g.workers, "Concurrent transfers")->capture_default_str();
  app.add_option("--config", g.config, "Config file (default <workspace>/satstack.conf)");

  SearchOpts so;
  auto* search_cmd = app.add_subcommand("search", "Query a mission archive");
  search_cmd->add_option("--mission", so.mission, "modis, landsat7, landsat8 or sentinel2")->required();
  search_cmd->add_option("--product", so.product, "Product name, e.g. MOD09GA")->required();
  search_cmd->add_option("--from", so.from, "First date YYYY-MM-DD")->required();
  search_cmd->add_option("--to", so.to, "Last date YYYY-MM-DD")->required();
  search_cmd->add_option("--cloud", so.cloud, "Cloud cover range lo,hi (percent)");
  search_cmd->add_option("--out", so.out, "Directory for records.json");
  search_cmd->add_option("--page-size", so.page_size)->capture_default_str();
  search_cmd->add_option("--max-pages", so.max_pages)->capture_default_str();
  search_cmd->add_flag("--json", so.json, "Print records as JSON");
  add_roi_options(search_cmd, so.roi);

  DownloadOpts dl;
  auto* download_cmd = app.add_subcommand("download", "Fetch and unpack the scenes of a records file");
  download_cmd->add_option("--records", dl.records, "records.json written by search")->required();
  download_cmd->add_option("--out", dl.out, "Destination (raw/ and tif/ are created inside)");
  download_cmd->add_option("--bands", dl.bands, "Comma-separated member-name filter, e.g. B01,B02,state");
  download_cmd->add_flag("--no-extract", dl.no_extract);
  download_cmd->add_flag("--remove-archives", dl.remove_archives);
  download_cmd->add_flag("--overwrite", dl.overwrite);

  MosaicOpts mo;
  auto* mosaic_cmd = app.add_subcommand("mosaic", "Merge same-date tiles, optionally cropped to an ROI");
  mosaic_cmd->add_option("--in", mo.in)->required();
  mosaic_cmd->add_option("--out", mo.out)->required();
  mosaic_cmd->add_option("--product", mo.product)->capture_default_str();
  mosaic_cmd->add_option("--band", mo.bands, "Band token (repeatable); one mosaic per band and date");
  mosaic_cmd->add_flag("--rescale", mo.rescale, "Apply the surface-reflectance scale factor");
  add_roi_options(mosaic_cmd, mo.roi);

  IndexOpts io;
  auto* index_cmd = app.add_subcommand("index", "Compute a spectral index per capture date");
  index_cmd->add_option("--in", io.in)->required();
  index_cmd->add_option("--mission", io.mission)->required();
  index_cmd->add_option("--index", io.index, "NDVI, NDWI, EVI or NBR")->capture_default_str();
  index_cmd->add_option("--out", io.out);
  index_cmd->add_option("--sat", io.sat, "Suffix appended to output names");

  CloudOpts co;
  auto* cloud_cmd = app.add_subcommand("cloudmask", "Decode QA layers into clear-sky masks");
  cloud_cmd->add_option("--in", co.in, "Directory of QA GeoTIFFs")->required();
  cloud_cmd->add_option("--mission", co.mission)->required();
  cloud_cmd->add_option("--out", co.out);
  cloud_cmd->add_option("--token", co.token, "Only files whose name contains this");
  cloud_cmd->add_option("--threshold", co.threshold, "Keep dates with cloud fraction below this");
  cloud_cmd->add_option("--index", co.index, "Index layers to mask");
  cloud_cmd->add_option("--masked-out", co.masked_out);
  add_roi_options(cloud_cmd, co.roi);

  CompositeOpts cpo;
  auto* composite_cmd = app.add_subcommand("composite", "Per-pixel temporal composite");
  composite_cmd->add_option("--in", cpo.in)->required();
  composite_cmd->add_option("--out", cpo.out)->required();
  composite_cmd->add_option("--token", cpo.token);
  composite_cmd->add_option("--window", cpo.window, "Window length in days")->capture_default_str();
  composite_cmd->add_option("--fun", cpo.fun, "mean, median or max")->capture_default_str();

  ImaOpts im;
  auto* ima_cmd = app.add_subcommand("ima", "Gap-fill and smooth a time series");
  ima_cmd->add_option("--in", im.in)->required();
  ima_cmd->add_option("--out", im.out)->required();
  ima_cmd->add_option("--token", im.token);
  ima_cmd->add_option("--ndays", im.ndays)->capture_default_str();
  ima_cmd->add_option("--nyears", im.nyears)->capture_default_str();
  ima_cmd->add_option("--afilter", im.afilter, "Anomaly quantiles lo,hi")->capture_default_str();
  ima_cmd->add_option("--fact", im.fact)->capture_default_str();
  ima_cmd->add_option("--fun", im.fun, "mean or median")->capture_default_str();
  ima_cmd->add_option("--lambda", im.lambda)->capture_default_str();
  ima_cmd->add_flag("--only-na", im.only_na, "Keep observed cells, fill only missing ones");
  ima_cmd->add_flag("--include-target", im.include_target);

  WaterOpts wo;
  auto* water_cmd = app.add_subcommand("waterlevel", "Estimate reservoir level per NDWI scene");
  water_cmd->add_option("--ndwi", wo.ndwi)->required();
  water_cmd->add_option("--token", wo.token);
  water_cmd->add_option("--dem", wo.dem, "DEM GeoTIFF");
  water_cmd->add_option("--contours", wo.contours, "x,y,z CSV interpolated with IDW");
  water_cmd->add_option("--power", wo.power, "IDW power")->capture_default_str();
  water_cmd->add_option("--threshold", wo.threshold)->capture_default_str();
  water_cmd->add_option("--obs", wo.obs, "date,level.masl CSV");
  water_cmd->add_option("--sat", wo.sat);
  water_cmd->add_option("--out", wo.out, "Results CSV (default <workspace>/waterlevel.csv)");
  water_cmd->add_flag("--json", wo.json);

  EvalOpts eo;
  auto* eval_cmd = app.add_subcommand("evaluate", "MAE and correlation against observations");
  eval_cmd->add_option("--results", eo.results)->required();
  eval_cmd->add_option("--obs", eo.obs);
  eval_cmd->add_flag("--json", eo.json);

  RenderCliOpts ro;
  auto* render_cmd = app.add_subcommand("render", "Draw a stack as a PNG panel figure");
  render_cmd->add_option("--in", ro.in)->required();
  render_cmd->add_option("--out", ro.out)->required();
  render_cmd->add_option("--token", ro.token);
  render_cmd->add_option("--clamp,--zlim", ro.clamp, "lo,hi")->capture_default_str();
  render_cmd->add_option("--palette", ro.palette, "terrain, terrain_rev or gray")->capture_default_str();
  render_cmd->add_option("--panel-px", ro.panel_px)->capture_default_str();

  GenOpts go;
  auto* fixtures_cmd = app.add_subcommand("fixtures", "Synthetic test data");
  fixtures_cmd->require_subcommand(1);
  auto* gen_cmd = fixtures_cmd->add_subcommand("gen", "Generate a synthetic dataset");
  gen_cmd->add_option("kind", go.kind, "field or reservoir")->required()->check(CLI::IsMember({"field", "reservoir"}));
  gen_cmd->add_option("--out", go.out)->required();
  gen_cmd->add_option("--rows", go.field.n_rows)->capture_default_str();
  gen_cmd->add_option("--cols", go.field.n_cols)->capture_default_str();
  gen_cmd->add_option("--dates", go.field.n_dates)->capture_default_str();
  gen_cmd->add_option("--holes", go.field.hole_fraction)->capture_default_str();
  gen_cmd->add_option("--seed", go.field.seed)->capture_default_str();
  gen_cmd->add_option("--level", go.reservoir.level)->capture_default_str();

  std::vector<std::string> argv_store{"satstack"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Session s{g, {}, out, err};
  try {
    s.load_config();
    if (search_cmd->parsed()) return cmd_search(s, so);
    if (download_cmd->parsed()) return cmd_download(s, dl);
    if (mosaic_cmd->parsed()) return cmd_mosaic(s, mo);
    if (index_cmd->parsed()) return cmd_index(s, io);
    if (cloud_cmd->parsed()) return cmd_cloudmask(s, co);
    if (composite_cmd->parsed()) return cmd_composite(s, cpo);
    if (ima_cmd->parsed()) return cmd_ima(s, im);
    if (water_cmd->parsed()) return cmd_waterlevel(s, wo);
    if (eval_cmd->parsed()) return cmd_evaluate(s, eo);
    if (render_cmd->parsed()) return cmd_render(s, ro);
    if (gen_cmd->parsed()) return cmd_fixtures_gen(s, go);
  } catch (const Error& e) {
    err << "satstack: " << e.what() << "\n";
    return e.code() == Errc::usage_error ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    err << "satstack: " << e.what() << "\n";
    return kExitFailure;
  }
  err << "satstack: no subcommand\n";
  return kExitUsage;
}

}  // namespace satstack
