#include "satstack/hydro.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "satstack/config.hpp"
#include "satstack/error.hpp"

namespace satstack {

namespace {

constexpr std::string_view kModule = "hydro";

struct UnionFind {
  std::vector<int> parent;

  int make() {
    parent.push_back(static_cast<int>(parent.size()));
    return parent.back();
  }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // Keep the older root so provisional order stays first-touch.
    if (b < a) std::swap(a, b);
    parent[b] = a;
  }
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

double parse_number(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw Error(kModule, Errc::parse_error, path.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path, const std::vector<std::string>& header) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) throw Error(kModule, Errc::parse_error, path.string() + ": empty file");
  auto cols = split_csv(line);
  if (cols != header) {
    std::string want;
    for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
    throw Error(kModule, Errc::parse_error, path.string() + ": expected header '" + want + "'");
  }
  std::vector<std::vector<std::string>> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    auto f = split_csv(line);
    if (f.size() != header.size()) {
      throw Error(kModule, Errc::parse_error, path.string() + ":" + std::to_string(n) + ": wrong field count");
    }
    rows.push_back(std::move(f));
  }
  return rows;
}

std::string format_number(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

void validate_dem(const Dem& dem) {
  for (double v : dem.grid.values()) {
    if (!is_missing(v) && !(v > -500.0 && v < 9000.0)) {
      throw Error(kModule, Errc::value_out_of_range, "elevation " + std::to_string(v) + " m outside (-500, 9000)");
    }
  }
}

Dem idw_dem(const std::vector<IdwPoint>& contours, const GeoRef& target, double power) {
  if (contours.empty()) throw Error(kModule, Errc::no_points, "no contour points");
  target.validate();
  const IdwModel model{contours, power};
  RasterGrid g(target);
  for (int r = 0; r < target.n_rows; ++r) {
    for (int c = 0; c < target.n_cols; ++c) g.at(r, c) = idw_predict(model, target.cell_center(r, c));
  }
  return Dem{std::move(g)};
}

ComponentLabels connected_components(const RasterGrid& binary) {
  const GeoRef& g = binary.georef();
  const int rows = g.n_rows, cols = g.n_cols;
  ComponentLabels out;
  out.georef = g;
  out.labels.assign(binary.size(), 0);

  // Two-pass labeling; provisional ids are issued in scan order.
  UnionFind uf;
  std::vector<int> prov(binary.size(), -1);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double v = binary.at(r, c);
      if (is_missing(v)) continue;
      if (v != 1.0) throw Error(kModule, Errc::non_binary_mask, "component input holds values other than 1/missing");
      int here = -1;
      const int nbr[4][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}};
      for (const auto& d : nbr) {
        const int rr = r + d[0], cc = c + d[1];
        if (rr < 0 || cc < 0 || cc >= cols) continue;
        const int p = prov[binary.index(rr, cc)];
        if (p < 0) continue;
        if (here < 0) {
          here = p;
        } else {
          uf.unite(here, p);
        }
      }
      prov[binary.index(r, c)] = here < 0 ? uf.make() : here;
    }
  }

  // Final ids by first touch of each root in row-major order.
  std::vector<int> final_id(uf.parent.size(), 0);
  for (std::size_t i = 0; i < prov.size(); ++i) {
    if (prov[i] < 0) continue;
    const int root = uf.find(prov[i]);
    if (final_id[root] == 0) {
      final_id[root] = ++out.count;
      out.cell_counts.push_back(0);
    }
    out.labels[i] = final_id[root];
    ++out.cell_counts[final_id[root] - 1];
  }
  return out;
}

ComponentLabels detect_water(const RasterGrid& ndwi, double threshold) {
  RasterGrid binary(ndwi.georef());
  for (std::size_t i = 0; i < ndwi.size(); ++i) {
    if (ndwi[i] > threshold) binary[i] = 1.0;
  }
  return connected_components(binary);
}

std::pair<int, double> largest_component(const ComponentLabels& labels, double cell_area) {
  if (labels.count == 0) throw Error(kModule, Errc::no_components, "no water body found");
  int best = 1;
  for (int k = 2; k <= labels.count; ++k) {
    if (labels.cell_counts[k - 1] > labels.cell_counts[best - 1]) best = k;
  }
  return {best, static_cast<double>(labels.cell_counts[best - 1]) * cell_area};
}

std::vector<Cell> shoreline_cells(const ComponentLabels& labels, int id) {
  if (id < 1 || id > labels.count) {
    throw Error(kModule, Errc::unknown_component, "component " + std::to_string(id) + " does not exist");
  }
  const int rows = labels.georef.n_rows, cols = labels.georef.n_cols;
  auto inside = [&](int r, int c) { return r >= 0 && c >= 0 && r < rows && c < cols && labels.at(r, c) == id; };
  std::vector<Cell> out;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (labels.at(r, c) != id) continue;
      if (!inside(r - 1, c) || !inside(r + 1, c) || !inside(r, c - 1) || !inside(r, c + 1)) out.push_back({r, c});
    }
  }
  return out;
}

double water_level(const Dem& dem, const std::vector<Cell>& shoreline) {
  if (shoreline.empty()) throw Error(kModule, Errc::empty_shoreline, "shoreline has no cells");
  std::vector<double> z;
  z.reserve(shoreline.size());
  for (const Cell& c : shoreline) {
    if (c.row < 0 || c.col < 0 || c.row >= dem.grid.rows() || c.col >= dem.grid.cols()) {
      throw Error(kModule, Errc::dimension_mismatch, "shoreline cell outside the DEM");
    }
    const double v = dem.grid.at(c.row, c.col);
    if (!is_missing(v)) z.push_back(v);
  }
  if (z.empty()) throw Error(kModule, Errc::all_missing_elevation, "DEM is missing at every shoreline cell");
  return finite_median(std::move(z));
}

double estimate_level(const RasterGrid& ndwi, const Dem& dem, double threshold) {
  if (!(ndwi.georef() == dem.grid.georef())) throw Error(kModule, Errc::georef_mismatch, "NDWI and DEM grids differ");
  const ComponentLabels labels = detect_water(ndwi, threshold);
  const double area = std::abs(dem.grid.georef().pixel_w * dem.grid.georef().pixel_h);
  const int id = largest_component(labels, area).first;
  return water_level(dem, shoreline_cells(labels, id));
}

EvaluationMetrics evaluate(const std::vector<WaterLevelResult>& results) {
  EvaluationMetrics m;
  std::vector<double> obs, est;
  std::map<std::string, std::pair<double, std::size_t>> by_sat;
  for (const auto& r : results) {
    if (!r.obs || !std::isfinite(*r.obs) || !std::isfinite(r.est)) continue;
    obs.push_back(*r.obs);
    est.push_back(r.est);
    auto& [sum, n] = by_sat[r.sat];
    sum += std::abs(*r.obs - r.est);
    ++n;
  }
  m.pairs = obs.size();
  if (m.pairs < 2) throw Error(kModule, Errc::insufficient_pairs, "need at least two paired rows");
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) abs_sum += std::abs(obs[i] - est[i]);
  m.mae = abs_sum / static_cast<double>(m.pairs);
  for (const auto& [sat, acc] : by_sat) m.mae_by_sat[sat] = acc.first / static_cast<double>(acc.second);

  const double n = static_cast<double>(m.pairs);
  const double mo = std::accumulate(obs.begin(), obs.end(), 0.0) / n;
  const double me = std::accumulate(est.begin(), est.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    sxy += (obs[i] - mo) * (est[i] - me);
    sxx += (obs[i] - mo) * (obs[i] - mo);
    syy += (est[i] - me) * (est[i] - me);
  }
  if (!(sxx > 0.0 && syy > 0.0)) {
    throw Error(kModule, Errc::insufficient_pairs, "correlation undefined for constant series");
  }
  m.pearson_r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  return m;
}

void join_observations(std::vector<WaterLevelResult>& results, const std::vector<Observation>& observations) {
  std::map<Date, double> by_date;
  for (const auto& o : observations) by_date[o.date] = o.level_masl;
  for (auto& r : results) {
    const auto it = by_date.find(r.date);
    if (it != by_date.end()) {
      r.obs = it->second;
    } else {
      r.obs.reset();
    }
  }
}

std::vector<Observation> read_observations_csv(const std::filesystem::path& path) {
  std::vector<Observation> out;
  std::size_t line = 1;
  for (const auto& f : read_csv(path, {"date", "level.masl"})) {
    ++line;
    Observation o{parse_iso_date(f[0]), parse_number(f[1], path, line)};
    for (const auto& prev : out) {
      if (prev.date == o.date) throw Error(kModule, Errc::parse_error, path.string() + ": duplicate date " + f[0]);
    }
    out.push_back(o);
  }
  return out;
}

std::vector<IdwPoint> read_contours_csv(const std::filesystem::path& path) {
  std::vector<IdwPoint> out;
  std::size_t line = 1;
  for (const auto& f : read_csv(path, {"x", "y", "z"})) {
    ++line;
    out.push_back({parse_number(f[0], path, line), parse_number(f[1], path, line), parse_number(f[2], path, line)});
  }
  return out;
}

void write_results_csv(const std::vector<WaterLevelResult>& results, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(kModule, Errc::io_failure, "cannot write " + path.string());
  out << "sat,date,obs,est\n";
  for (const auto& r : results) {
    out << r.sat << ',' << format_iso_date(r.date) << ',' << (r.obs ? format_number(*r.obs) : "NA") << ','
        << format_number(r.est) << '\n';
  }
  if (!out) throw Error(kModule, Errc::io_failure, "short write to " + path.string());
}

std::vector<WaterLevelResult> read_results_csv(const std::filesystem::path& path) {
  std::vector<WaterLevelResult> out;
  std::size_t line = 1;
  for (const auto& f : read_csv(path, {"sat", "date", "obs", "est"})) {
    ++line;
    WaterLevelResult r;
    r.sat = f[0];
    r.date = parse_iso_date(f[1]);
    if (!f[2].empty() && f[2] != "NA") r.obs = parse_number(f[2], path, line);
    r.est = parse_number(f[3], path, line);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace satstack
