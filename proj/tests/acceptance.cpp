// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fail.
// `acceptance --write-golden <png>` regenerates the panel golden file.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "png_decode.hpp"
#include "satstack/archive.hpp"
#include "satstack/catalog.hpp"
#include "satstack/cloudmask.hpp"
#include "satstack/config.hpp"
#include "satstack/download.hpp"
#include "satstack/fixtures.hpp"
#include "satstack/geoproj.hpp"
#include "satstack/geotiff.hpp"
#include "satstack/hydro.hpp"
#include "satstack/ima.hpp"
#include "satstack/interp.hpp"
#include "satstack/render.hpp"

using namespace satstack;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string failure;
  std::ostringstream detail;

  void require(bool ok, const std::string& why) {
    if (!ok && pass) {
      pass = false;
      failure = why;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

GeoRef lattice(int rows, int cols) {
  GeoRef g;
  g.origin_x = 0;
  g.origin_y = rows;
  g.pixel_w = 1;
  g.pixel_h = -1;
  g.n_rows = rows;
  g.n_cols = cols;
  g.crs = CrsSpec::utm(30, true);
  return g;
}

Date ymd(int y, unsigned m, unsigned d) { return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}}; }

// Holes with no observed neighbor within n_days have no mean image and must
// stay missing; every other hole must be filled.
std::size_t expected_unfillable(const GridStack& holed, std::size_t k, int n_days) {
  const auto day = [&](std::size_t i) { return std::chrono::sys_days(holed.date(i)).time_since_epoch().count(); };
  std::size_t n = 0;
  for (std::size_t i = 0; i < holed.layer(k).size(); ++i) {
    if (!is_missing(holed.layer(k)[i])) continue;
    bool any = false;
    for (std::size_t j = 0; j < holed.size() && !any; ++j) {
      if (j != k && std::abs(day(j) - day(k)) <= n_days) any = !is_missing(holed.layer(j)[i]);
    }
    n += !any;
  }
  return n;
}

// 1. Synthetic reservoir water level.
void reservoir(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const ReservoirScene s = gen_reservoir(SyntheticReservoir{});
  const ComponentLabels labels = detect_water(s.ndwi, -0.1);
  const auto [id, area] = largest_component(labels, std::abs(s.ndwi.georef().pixel_w * s.ndwi.georef().pixel_h));
  const double level = water_level(s.dem, shoreline_cells(labels, id));
  const double secs = seconds_since(t0);
  o.detail << "level " << fmt(level) << " vs " << fmt(s.true_level) << ", area " << fmt(area) << " m2, " << fmt(secs)
           << " s";
  o.require(std::abs(level - s.true_level) <= 1.0, "level off by " + fmt(level - s.true_level));
  o.require(secs < 5.0, "took " + fmt(secs) + " s");
}

// 2. Constant field is reproduced exactly.
void ima_constant(Outcome& o) {
  SyntheticField f;
  f.n_rows = 50;
  f.n_cols = 50;
  f.n_dates = 9;
  f.a = 0.42;
  f.b = 0;
  f.c = 0;
  f.hole_fraction = 0.2;
  const FieldStacks st = gen_field(f);
  ImaParams p;
  p.n_days = 2;
  p.n_years = 0;
  p.q_lo = 0.05;
  p.q_hi = 0.95;
  p.fact = 2;
  const auto t0 = std::chrono::steady_clock::now();
  const auto [filled, rep] = ima_fill(st.holed, p);
  const double secs = seconds_since(t0);
  double worst = 0;
  std::size_t filled_holes = 0, holes = 0, unfillable = 0;
  for (std::size_t k = 0; k < filled.size(); ++k) {
    unfillable += expected_unfillable(st.holed, k, p.n_days);
    for (std::size_t i = 0; i < filled.layer(k).size(); ++i) {
      const double v = filled.layer(k)[i];
      if (is_missing(st.holed.layer(k)[i])) {
        ++holes;
        filled_holes += !is_missing(v);
      }
      if (!is_missing(v)) worst = std::max(worst, std::abs(v - 0.42));
    }
  }
  o.detail << "max |err| " << fmt(worst) << ", " << filled_holes << "/" << holes << " holes filled ("
           << unfillable << " without neighbors), " << fmt(secs) << " s";
  o.require(worst <= 1e-9, "max error " + fmt(worst));
  o.require(holes - filled_holes == unfillable, "unfilled holes beyond those without neighbors");
  o.require(secs < 10.0, "took " + fmt(secs) + " s");
}

// 3. Smooth synthetic field recovery.
void ima_recovery(Outcome& o) {
  const FieldStacks st = gen_field(SyntheticField{});
  ImaParams p;
  p.n_days = 3;
  p.n_years = 0;
  p.fact = 4;
  p.fun = AggFun::mean;
  const auto t0 = std::chrono::steady_clock::now();
  const auto [filled, rep] = ima_fill(st.holed, p);
  const double secs = seconds_since(t0);
  double sse = 0;
  std::size_t n = 0, unfilled = 0, unfillable = 0;
  for (std::size_t k = 0; k < filled.size(); ++k) {
    unfillable += expected_unfillable(st.holed, k, p.n_days);
    for (std::size_t i = 0; i < filled.layer(k).size(); ++i) {
      if (!is_missing(st.holed.layer(k)[i])) continue;
      const double v = filled.layer(k)[i];
      if (is_missing(v)) {
        ++unfilled;
        continue;
      }
      const double e = v - st.truth.layer(k)[i];
      sse += e * e;
      ++n;
    }
  }
  const double rmse = n ? std::sqrt(sse / static_cast<double>(n)) : INFINITY;
  o.detail << "RMSE " << fmt(rmse) << " over " << n << " filled holes (" << unfilled << " without neighbors), "
           << fmt(secs) << " s";
  o.require(unfilled == unfillable, std::to_string(unfilled) + " holes left missing, expected " +
                                        std::to_string(unfillable));
  o.require(rmse < 0.015, "RMSE " + fmt(rmse));
  o.require(secs < 60.0, "took " + fmt(secs) + " s");
}

// 4. TPS against the extended-precision dense solve.
void tps(Outcome& o) {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(0, 1000), noise(-0.1, 0.1);
  double worst_w = 0, worst_a = 0, worst_pred = 0, worst_plane = 0, worst_knot = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 20 + static_cast<std::size_t>(rng() % 181);
    std::vector<Point> knots;
    std::vector<double> z, plane;
    for (std::size_t i = 0; i < n; ++i) {
      const Point k{u(rng), u(rng)};
      knots.push_back(k);
      z.push_back(std::sin(k.x / 200) + std::cos(k.y / 300) + noise(rng));
      plane.push_back(2 + 3 * k.x - k.y);
    }
    const auto [zlo, zhi] = std::minmax_element(z.begin(), z.end());
    for (double lambda : {0.0, 1e-3}) {
      const TpsModel m = tps_fit(knots, z, lambda);
      const oracle::TpsFit ref = oracle::tps_fit(knots, z, lambda);
      const auto w = m.weights();
      double wscale = 0;
      for (auto x : ref.w) wscale = std::max(wscale, static_cast<double>(std::abs(x)));
      for (std::size_t i = 0; i < n; ++i) worst_w = std::max(worst_w, std::abs(w[i] - static_cast<double>(ref.w[i])) / wscale);
      const auto a = m.affine();
      const double ra[3] = {static_cast<double>(ref.a0), static_cast<double>(ref.ax), static_cast<double>(ref.ay)};
      for (int j = 0; j < 3; ++j) {
        // Slopes are compared on the scale of their effect across the domain.
        const double scale = j == 0 ? std::max(1.0, std::abs(ra[0])) : std::max(1e-3, std::abs(ra[j]));
        worst_a = std::max(worst_a, std::abs(a[static_cast<std::size_t>(j)] - ra[j]) / scale);
      }
      for (int q = 0; q < 100; ++q) {
        const Point pt{u(rng), u(rng)};
        const double want = static_cast<double>(ref.predict(pt));
        worst_pred = std::max(worst_pred, std::abs(m.predict(pt) - want) / std::max(1.0, std::abs(want)));
      }
      if (lambda == 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
          worst_knot = std::max(worst_knot, std::abs(m.predict(knots[i]) - z[i]) / (*zhi - *zlo));
        }
      }
      const TpsModel pm = tps_fit(knots, plane, lambda);
      const auto pa = pm.affine();
      worst_plane = std::max({worst_plane, std::abs(pa[0] - 2) / 3000, std::abs(pa[1] - 3), std::abs(pa[2] + 1)});
    }
  }
  o.detail << "weights " << fmt(worst_w) << ", affine " << fmt(worst_a) << ", predictions " << fmt(worst_pred)
           << ", plane " << fmt(worst_plane) << ", knots " << fmt(worst_knot);
  o.require(worst_w <= 1e-8, "weight mismatch " + fmt(worst_w));
  o.require(worst_a <= 1e-8, "affine mismatch " + fmt(worst_a));
  o.require(worst_pred <= 1e-8, "prediction mismatch " + fmt(worst_pred));
  o.require(worst_plane <= 1e-9, "plane not reproduced " + fmt(worst_plane));
  o.require(worst_knot <= 1e-8, "knot residual " + fmt(worst_knot));
}

// 5. IDW identities.
void idw(Outcome& o) {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(-100, 100);
  IdwModel m;
  for (int i = 0; i < 40; ++i) m.points.push_back({u(rng), u(rng), u(rng)});
  bool hits = true;
  for (const auto& p : m.points) hits = hits && idw_predict(m, {p.x, p.y}) == p.value;
  double lo = 1e300, hi = -1e300;
  for (const auto& p : m.points) {
    lo = std::min(lo, p.value);
    hi = std::max(hi, p.value);
  }
  std::size_t outside = 0;
  for (int i = 0; i < 10000; ++i) {
    const double v = idw_predict(m, {u(rng) * 3, u(rng) * 3});
    outside += v < lo || v > hi;
  }
  const IdwModel pair{{{0, 0, 10}, {2, 0, 20}}, 2.0};
  const double mid = idw_predict(pair, {1, 0});
  o.detail << "exact hits " << (hits ? "ok" : "bad") << ", " << outside << " of 10000 outside hull, midpoint "
           << fmt(mid);
  o.require(hits, "exact hit mismatch");
  o.require(outside == 0, "convex bound violated");
  o.require(mid == 15.0, "midpoint " + fmt(mid));
}

// 6. Projection round-trips and the sinusoidal closed form.
void projection(Outcome& o) {
  struct Case {
    CrsSpec crs;
    double lon0, lon1, lat0, lat1, tol;
  };
  const Case cases[] = {
      {CrsSpec::geographic(), -179.5, 179.5, -89.5, 89.5, 1e-9},
      {CrsSpec::sinusoidal(), -179.5, 179.5, -89.0, 89.0, 1e-9},
      {CrsSpec::utm(30, true), -6.0, 0.0, 0.0, 84.0, 1e-6},
      {CrsSpec::utm(30, false), -6.0, 0.0, -80.0, 0.0, 1e-6},
  };
  for (const Case& c : cases) {
    double worst = 0;
    for (int i = 0; i < 40; ++i) {
      for (int j = 0; j < 25; ++j) {
        const double lon = c.lon0 + (c.lon1 - c.lon0) * i / 39.0;
        const double lat = c.lat0 + (c.lat1 - c.lat0) * j / 24.0;
        const Point p = forward(c.crs, lon, lat);
        const Point g = inverse(c.crs, p.x, p.y);
        worst = std::max({worst, std::abs(g.x - lon), std::abs(g.y - lat)});
      }
    }
    o.detail << c.crs.to_string() << " " << fmt(worst) << "; ";
    o.require(worst <= c.tol, c.crs.to_string() + " round-trip error " + fmt(worst));
  }
  const double r = 6371007.181, d2r = std::numbers::pi / 180;
  const Point s = forward(CrsSpec::sinusoidal(), 10, 60);
  const double ex = r * 10 * d2r * std::cos(60 * d2r), ey = r * 60 * d2r;
  o.detail << "sinusoidal (10,60) dx " << fmt(s.x - ex) << " dy " << fmt(s.y - ey);
  o.require(std::abs(s.x - ex) <= 1e-6 && std::abs(s.y - ey) <= 1e-6, "sinusoidal closed form");
}

// 7. Connected components against flood fill.
RasterGrid binary_from(const std::vector<bool>& on, int rows, int cols) {
  RasterGrid g(lattice(rows, cols));
  for (std::size_t i = 0; i < on.size(); ++i) g[i] = on[i] ? 1.0 : kMissing;
  return g;
}

void components(Outcome& o) {
  std::size_t bad = 0;
  for (unsigned bits = 0; bits < (1u << 16); ++bits) {
    std::vector<bool> on(16);
    for (int i = 0; i < 16; ++i) on[static_cast<std::size_t>(i)] = (bits >> i) & 1u;
    int count = 0;
    const auto want = oracle::flood_fill_labels(on, 4, 4, &count);
    const ComponentLabels got = connected_components(binary_from(on, 4, 4));
    bad += got.count != count || got.labels != want;
  }
  std::mt19937_64 rng(808);
  std::size_t bad_random = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    std::bernoulli_distribution b((trial % 9 + 1) / 10.0);
    std::vector<bool> on(64);
    for (std::size_t i = 0; i < 64; ++i) on[i] = b(rng);
    int count = 0;
    const auto want = oracle::flood_fill_labels(on, 8, 8, &count);
    const ComponentLabels got = connected_components(binary_from(on, 8, 8));
    bad_random += got.count != count || got.labels != want;
  }
  o.detail << "4x4 mismatches " << bad << "/65536, 8x8 mismatches " << bad_random << "/10000";
  o.require(bad == 0 && bad_random == 0, "label disagreement");
}

// 8. GeoTIFF round-trip and truncation fuzz.
void geotiff(Outcome& o) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::vector<std::uint8_t>> encoded;
  std::size_t cases = 0;
  for (SampleType t : {SampleType::uint8, SampleType::uint16, SampleType::int16, SampleType::float32}) {
    for (Compression c : {Compression::none, Compression::deflate}) {
      for (int variant = 0; variant < 2; ++variant) {
        GeoRef g = lattice(19, 13);
        g.origin_x = 612345.5;
        g.origin_y = 4761234.25;
        g.pixel_w = 30;
        g.pixel_h = -30;
        if (variant) {
          g.crs = CrsSpec::sinusoidal();
          g.origin_x = -1111950.5197665233;
          g.origin_y = 5559752.598833;
          g.pixel_w = 463.312716528;
          g.pixel_h = -463.312716528;
        }
        RasterGrid in(g);
        for (double& v : in.values()) {
          if (u(rng) < 0.1) continue;
          switch (t) {
            case SampleType::uint8: v = static_cast<double>(rng() % 255); break;
            case SampleType::uint16: v = static_cast<double>(rng() % 65535); break;
            case SampleType::int16: v = static_cast<double>(static_cast<int>(rng() % 65535) - 32767); break;
            case SampleType::float32: v = (u(rng) - 0.5) * 2e4; break;
          }
        }
        GeoTiffWriteOptions opt;
        opt.sample_type = t;
        opt.compression = c;
        const auto bytes = encode_geotiff(in, opt);
        encoded.push_back(bytes);
        const RasterGrid out = decode_geotiff(bytes);
        const GeoRef& og = out.georef();
        o.require(std::abs(og.origin_x - g.origin_x) <= 1e-9 && std::abs(og.origin_y - g.origin_y) <= 1e-9 &&
                      std::abs(og.pixel_w - g.pixel_w) <= 1e-9 && std::abs(og.pixel_h - g.pixel_h) <= 1e-9 &&
                      og.n_rows == g.n_rows && og.n_cols == g.n_cols && og.crs == g.crs,
                  "georef drift");
        for (std::size_t i = 0; i < in.size(); ++i) {
          const double want =
              t == SampleType::float32 && !is_missing(in[i]) ? static_cast<double>(static_cast<float>(in[i])) : in[i];
          const bool same = is_missing(want) ? is_missing(out[i]) : out[i] == want;
          o.require(same, "value mismatch at cell " + std::to_string(i));
        }
        const RasterGrid again = decode_geotiff(encode_geotiff(out, opt));
        for (std::size_t i = 0; i < out.size(); ++i) {
          o.require(is_missing(out[i]) ? is_missing(again[i]) : again[i] == out[i], "second round-trip not exact");
        }
        ++cases;
      }
    }
  }
  std::size_t malformed = 0, other = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto& f = encoded[static_cast<std::size_t>(i) % encoded.size()];
    const std::size_t len = static_cast<std::size_t>(rng() % f.size());
    try {
      (void)decode_geotiff(std::span<const std::uint8_t>(f.data(), len));
      ++other;
    } catch (const Error& e) {
      (e.code() == Errc::malformed_tiff ? malformed : other)++;
    } catch (...) {
      ++other;
    }
  }
  o.detail << cases << " round-trip cases; fuzz " << malformed << "/1000 malformed-tiff";
  o.require(malformed == 1000, std::to_string(other) + " truncations not reported as malformed-tiff");
}

// 9. Catalog golden requests, parsing and band-filtered extraction.
void catalog(Outcome& o) {
  const fs::path fx = SATSTACK_FIXTURE_DIR;
  const Roi navarre = Roi::box({-2.5, 41.91, -0.72, 43.32});
  const DateRange week{ymd(2018, 8, 2), ymd(2018, 8, 9)};
  SceneQuery mq{};
  mq.mission = Mission::modis;
  mq.product = "MOD09GA";
  mq.dates = week;
  mq.roi = navarre;
  SceneQuery sq = mq;
  sq.mission = Mission::sentinel2;
  sq.product = "S2MSI2A";
  sq.cloud_cover = CloudRange{0, 80};
  sq.credentials = Credentials{"user", "secret"};
  SceneQuery lq = sq;
  lq.mission = Mission::landsat8;
  lq.product = "LANDSAT_8_C1";
  lq.credentials = Credentials{"user", "token-value"};
  int golden = 0;
  golden += build_query(mq).canonical() == read_text_file(fx / "modis/cmr_mod09ga.req");
  golden += build_query(sq).canonical() == read_text_file(fx / "sentinel2/scihub_feed_p1.req");
  golden += build_query(lq).canonical() == read_text_file(fx / "landsat8/m2m_scene_search.req");
  o.require(golden == 3, "golden request mismatch");

  auto tiles = [](const std::vector<SceneRecord>& rs) {
    std::vector<std::string> t;
    for (const auto& r : rs) t.push_back(r.tile_id);
    return t;
  };
  const auto modis = parse_search_response(Mission::modis, read_text_file(fx / "modis/cmr_mod09ga.resp"));
  const auto s2 = parse_search_response(Mission::sentinel2, read_text_file(fx / "sentinel2/scihub_feed_p1.resp"));
  const auto l8 = parse_search_response(Mission::landsat8, read_text_file(fx / "landsat8/m2m_scene_search.resp"));
  const auto mt = tiles(modis), st = tiles(s2);
  o.require(modis.size() == 8 && std::all_of(mt.begin(), mt.end(), [](auto& t) { return t == "h17v04"; }),
            "MODIS records");
  o.require(s2.size() == 8 && std::set<std::string>(st.begin(), st.end()) ==
                                  std::set<std::string>{"30TWN", "30TXN", "30TWM", "30TXM"},
            "Sentinel-2 records");
  o.require(tiles(l8) == std::vector<std::string>{"199030", "199031", "200030", "200031"}, "Landsat 8 records");

  const fs::path dir = fs::temp_directory_path() / ("satstack_accept_" + std::to_string(std::random_device{}()));
  std::size_t extracted = 0, on_disk = 0;
  {
    auto bytes = [](const std::string& s) { return std::vector<std::uint8_t>(s.begin(), s.end()); };
    const std::string stem = "LC08_L1TP_199030_20180802_20180814_01_T1_";
    const std::vector<ArchiveMember> members{{stem + "B01.TIF", bytes("b1")},
                                             {stem + "B02.TIF", bytes("b2")},
                                             {stem + "B03.TIF", bytes("b3")},
                                             {stem + "state.TIF", bytes("qa")}};
    const auto tgz = gzip_compress(write_tar(members));
    const std::string url = "https://example.test/LC08_L1TP_199030_20180802_20180814_01_T1.tar.gz";
    FixtureTransport t;
    t.add_url(url, HttpResponse{200, {}, std::string(tgz.begin(), tgz.end())});
    SceneRecord rec;
    rec.mission = Mission::landsat8;
    rec.granule_id = "LC08_L1TP_199030_20180802_20180814_01_T1";
    rec.download_url = url;
    rec.capture_date = ymd(2018, 8, 2);
    DownloadPlan plan;
    plan.records = {rec};
    plan.dest_dir = dir;
    plan.band_filter = {"B01", "B02", "state"};
    const PlanReport rep = execute_plan(plan, t);
    extracted = rep.records.empty() ? 0 : rep.records[0].extracted.size();
    for (const auto& e : fs::directory_iterator(dir / "tif")) on_disk += e.is_regular_file();
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  o.detail << golden << "/3 golden requests; records MODIS " << modis.size() << ", S2 " << s2.size() << ", L8 "
           << l8.size() << "; band filter extracted " << extracted;
  o.require(extracted == 3 && on_disk == 3, "band filter extracted " + std::to_string(extracted));
}

// 10. Cloud fraction threshold.
void cloud(Outcome& o) {
  auto mask_with = [](int cloudy) {
    RasterGrid m(lattice(20, 20), 1.0);
    for (int i = 0; i < cloudy; ++i) m[static_cast<std::size_t>(i * 7 % 400)] = kMissing;
    return m;
  };
  GridStack masks;
  masks.push_back(mask_with(100), ymd(2018, 8, 2), "A");
  masks.push_back(mask_with(140), ymd(2018, 8, 3), "B");
  masks.push_back(mask_with(120), ymd(2018, 8, 4), "C");
  masks.push_back(mask_with(0), ymd(2018, 8, 5), "D");
  const double f[4] = {cloud_fraction(masks.layer(0)), cloud_fraction(masks.layer(1)), cloud_fraction(masks.layer(2)),
                       cloud_fraction(masks.layer(3))};
  const auto keep = clear_dates(masks, 0.30);
  o.detail << "fractions " << fmt(f[0]) << " " << fmt(f[1]) << " " << fmt(f[2]) << " " << fmt(f[3]) << "; "
           << keep.size() << " clear at 0.30";
  o.require(f[0] == 0.25 && f[1] == 0.35 && f[2] == 0.30 && f[3] == 0.0, "fraction not exact");
  o.require(keep == std::vector<Date>{ymd(2018, 8, 2), ymd(2018, 8, 5)}, "wrong clear dates");
}

// 11. NDVI panel figure.
GridStack panel_stack() {
  SyntheticField f;
  f.n_rows = 40;
  f.n_cols = 40;
  f.n_dates = 8;
  f.step_days = 2;
  f.hole_fraction = 0.05;
  f.seed = 11;
  return gen_field(f).holed;
}

void panels(Outcome& o) {
  const GridStack s = panel_stack();
  RenderOptions ro;
  ro.lo = 0;
  ro.hi = 1;
  const auto png = render_panels_png(s, ro);
  const auto again = render_panels_png(s, ro);
  o.require(png == again, "encoding not byte-stable");
  const fs::path golden = fs::path(SATSTACK_GOLDEN_DIR) / "ndvi_panels.png";
  std::ifstream gf(golden, std::ios::binary);
  const std::vector<std::uint8_t> want((std::istreambuf_iterator<char>(gf)), {});
  o.require(!want.empty(), "golden file missing");
  o.require(png == want, "differs from golden");

  const test::DecodedPng img = test::decode_png(png);
  const PanelLayout l = panel_layout(s.georef(), s.size(), ro.panel_px);
  o.require(l.ncol == 3 && l.nrow == 3, "layout");
  o.require(img.width == l.width && img.height == l.height, "image size");
  std::size_t bad = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    for (int r = 0; r < 40; ++r) {
      for (int c = 0; c < 40; ++c) {
        const auto* p = img.px(l.image_x(k) + c * l.scale, l.image_y(k) + r * l.scale);
        const double v = s.layer(k).at(r, c);
        if (is_missing(v)) {
          bad += p[3] != 0;
          continue;
        }
        const int idx = std::clamp(static_cast<int>(std::lround(v * 255)), 0, 255);
        const Rgb want_rgb = ramp_color(Palette::terrain, idx);
        bad += p[0] != want_rgb[0] || p[1] != want_rgb[1] || p[2] != want_rgb[2] || p[3] != 255;
      }
    }
  }
  o.detail << img.width << "x" << img.height << " px, " << l.ncol << "x" << l.nrow << " panels, " << png.size()
           << " bytes, " << bad << " pixel mismatches";
  o.require(bad == 0, std::to_string(bad) + " pixel mismatches");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc == 3 && std::string(argv[1]) == "--write-golden") {
    RenderOptions ro;
    render_panels(panel_stack(), ro, argv[2]);
    std::printf("wrote %s\n", argv[2]);
    return 0;
  }
  const std::pair<const char*, std::function<void(Outcome&)>> criteria[] = {
      {"reservoir water level", reservoir},     {"IMA constant field", ima_constant},
      {"IMA synthetic recovery", ima_recovery}, {"TPS oracle equivalence", tps},
      {"IDW properties", idw},                  {"projection round-trips", projection},
      {"connected components", components},    {"GeoTIFF round-trip", geotiff},
      {"catalog golden tests", catalog},        {"cloud thresholding", cloud},
      {"index panels", panels},
  };
  int failed = 0, n = 0;
  for (const auto& [name, fn] : criteria) {
    ++n;
    Outcome o;
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    failed += !o.pass;
    std::string line = o.detail.str();
    if (!o.pass) line += (line.empty() ? "" : " | ") + o.failure;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", n, name, line.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
