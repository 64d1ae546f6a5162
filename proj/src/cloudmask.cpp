#include "satstack/cloudmask.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "satstack/config.hpp"
#include "satstack/error.hpp"
#include "satstack/geoproj.hpp"

namespace satstack {

namespace {

constexpr std::string_view kModule = "cloudmask";

int parse_int(std::string_view s, std::string_view what) {
  const std::string t = trim(s);
  int v = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size()) {
    throw Error(kModule, Errc::parse_error, "bad " + std::string(what) + " '" + t + "'");
  }
  return v;
}

}  // namespace

QaDecodeRule QaDecodeRule::bits(std::vector<BitCondition> conditions) {
  for (const auto& c : conditions) {
    if (c.first < 0 || c.last > 15 || c.first > c.last) {
      throw Error(kModule, Errc::invalid_argument, "bit range outside 0-15");
    }
    if (c.value >= (1u << (c.last - c.first + 1))) {
      throw Error(kModule, Errc::invalid_argument, "required value does not fit its bit range");
    }
  }
  return QaDecodeRule{std::move(conditions)};
}

QaDecodeRule QaDecodeRule::threshold(double percent) {
  if (!(percent >= 0.0 && percent <= 100.0)) throw Error(kModule, Errc::invalid_argument, "threshold outside [0,100]");
  return QaDecodeRule{percent};
}

QaDecodeRule QaDecodeRule::defaults(Mission mission) {
  switch (mission) {
    case Mission::modis: return bits({{0, 1, 0}, {2, 2, 0}});
    case Mission::landsat7:
    case Mission::landsat8: return bits({{1, 1, 1}, {5, 5, 0}});
    case Mission::sentinel2: return threshold(50.0);
  }
  throw Error(kModule, Errc::invalid_argument, "no default rule");
}

std::vector<BitCondition> QaDecodeRule::parse_bits(std::string_view spec) {
  std::vector<BitCondition> out;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const auto comma = spec.find(',', pos);
    const std::string item = trim(spec.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    pos = comma == std::string_view::npos ? spec.size() + 1 : comma + 1;
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw Error(kModule, Errc::parse_error, "bit condition '" + item + "' lacks ':'");
    const std::string range = item.substr(0, colon);
    BitCondition c;
    if (const auto dash = range.find('-'); dash != std::string::npos) {
      c.first = parse_int(std::string_view(range).substr(0, dash), "bit");
      c.last = parse_int(std::string_view(range).substr(dash + 1), "bit");
    } else {
      c.first = c.last = parse_int(range, "bit");
    }
    c.value = static_cast<unsigned>(parse_int(std::string_view(item).substr(colon + 1), "bit value"));
    out.push_back(c);
  }
  if (out.empty()) throw Error(kModule, Errc::parse_error, "empty bit spec");
  bits(out);  // range validation
  return out;
}

bool QaDecodeRule::clear(double qa) const {
  if (const double* t = std::get_if<double>(&rule)) return qa <= *t;
  const auto word = static_cast<std::uint32_t>(qa);
  for (const BitCondition& c : std::get<std::vector<BitCondition>>(rule)) {
    const std::uint32_t mask = (1u << (c.last - c.first + 1)) - 1u;
    if (((word >> c.first) & mask) != c.value) return false;
  }
  return true;
}

QaRuleSet QaRuleSet::defaults() {
  QaRuleSet s;
  for (Mission m : {Mission::landsat7, Mission::landsat8, Mission::modis, Mission::sentinel2}) {
    s.set(m, QaDecodeRule::defaults(m));
  }
  return s;
}

void QaRuleSet::apply_overrides(const std::map<std::string, std::string>& entries) {
  for (const auto& [key, value] : entries) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) continue;
    const std::string rest = key.substr(dot + 1);
    if (rest == "qa.bits") {
      set(parse_mission(key.substr(0, dot)), QaDecodeRule::bits(QaDecodeRule::parse_bits(value)));
    } else if (rest == "qa.threshold") {
      char* end = nullptr;
      const double pct = std::strtod(value.c_str(), &end);
      if (end == value.c_str() || *end != '\0') throw Error(kModule, Errc::parse_error, "bad threshold '" + value + "'");
      set(parse_mission(key.substr(0, dot)), QaDecodeRule::threshold(pct));
    }
  }
}

void QaRuleSet::load_overrides(const std::filesystem::path& path) { apply_overrides(read_key_values(path)); }

RasterGrid decode_qa(Mission mission, const RasterGrid& qa, const QaDecodeRule& rule) {
  (void)mission;
  RasterGrid out(qa.georef());
  for (std::size_t i = 0; i < qa.size(); ++i) {
    const double v = qa[i];
    if (is_missing(v)) continue;
    if (v < 0.0) throw Error(kModule, Errc::negative_qa_value, "QA value " + std::to_string(v) + " is negative");
    if (!rule.is_threshold() && v != std::floor(v)) {
      throw Error(kModule, Errc::invalid_argument, "bitfield QA value is not an integer");
    }
    if (rule.clear(v)) out[i] = 1.0;
  }
  return out;
}

double cloud_fraction(const RasterGrid& mask, const std::optional<Roi>& roi) {
  std::size_t total = 0, missing = 0;
  const GeoRef& g = mask.georef();
  for (int r = 0; r < g.n_rows; ++r) {
    for (int c = 0; c < g.n_cols; ++c) {
      const double v = mask.at(r, c);
      if (!is_missing(v) && v != 1.0) throw Error(kModule, Errc::non_binary_mask, "mask holds values other than 1/missing");
      if (roi) {
        const Point p = transform(g.crs, roi->crs(), g.cell_center(r, c));
        if (!roi->contains(p)) continue;
      }
      ++total;
      if (is_missing(v)) ++missing;
    }
  }
  if (total == 0) throw Error(kModule, Errc::empty_intersection, "ROI covers no mask cell");
  return static_cast<double>(missing) / static_cast<double>(total);
}

std::vector<Date> clear_dates(const GridStack& masks, double threshold, const std::optional<Roi>& roi) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error(kModule, Errc::invalid_argument, "threshold outside [0,1]");
  std::vector<Date> out;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (cloud_fraction(masks.layer(i), roi) < threshold) out.push_back(masks.date(i));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

MaskStackResult mask_stack(const GridStack& indices, const GridStack& masks) {
  MaskStackResult result;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& dates = masks.dates();
    const auto it = std::find(dates.begin(), dates.end(), indices.date(i));
    if (it == dates.end()) {
      result.masked.push_back(indices.layer(i), indices.date(i), indices.label(i));
      result.unmasked.push_back(i);
      continue;
    }
    const RasterGrid& m = masks.layer(static_cast<std::size_t>(it - dates.begin()));
    const RasterGrid& layer = indices.layer(i);
    const RasterGrid aligned =
        m.georef() == layer.georef() ? m : reproject_grid(m, layer.georef(), Resample::nearest);
    result.masked.push_back(apply_pixel_mask(layer, aligned), indices.date(i), indices.label(i));
  }
  return result;
}

}  // namespace satstack
