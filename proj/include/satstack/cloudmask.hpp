#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "satstack/grid.hpp"
#include "satstack/spectral.hpp"

namespace satstack {

/// Bits [first, last] of the QA word must equal `value`.
struct BitCondition {
  int first = 0;
  int last = 0;
  unsigned value = 0;

  friend bool operator==(const BitCondition&, const BitCondition&) = default;
};

/// Clear-sky rule: every bit condition holds, or the cloud probability is at
/// most the threshold (percent).
struct QaDecodeRule {
  std::variant<std::vector<BitCondition>, double> rule;

  static QaDecodeRule bits(std::vector<BitCondition> conditions);
  static QaDecodeRule threshold(double percent);
  static QaDecodeRule defaults(Mission mission);

  /// "0-1:0,2:0" style bit spec; single bits may omit the range.
  static std::vector<BitCondition> parse_bits(std::string_view spec);

  bool is_threshold() const { return std::holds_alternative<double>(rule); }
  bool clear(double qa) const;
};

/// Per-mission rules with `mission.qa.bits` / `mission.qa.threshold`
/// overrides.
class QaRuleSet {
public:
  static QaRuleSet defaults();
  const QaDecodeRule& rule(Mission mission) const { return rules_.at(mission); }
  void set(Mission mission, QaDecodeRule rule) { rules_.insert_or_assign(mission, std::move(rule)); }
  void apply_overrides(const std::map<std::string, std::string>& entries);
  void load_overrides(const std::filesystem::path& path);

private:
  std::map<Mission, QaDecodeRule> rules_;
};

/// 1 where clear, missing otherwise (missing QA stays missing). Throws
/// Error{negative_qa_value}.
RasterGrid decode_qa(Mission mission, const RasterGrid& qa, const QaDecodeRule& rule);

/// Share of missing cells, restricted to cells whose centers fall in `roi`.
/// Throws Error{non_binary_mask} for values other than 1/missing.
double cloud_fraction(const RasterGrid& mask, const std::optional<Roi>& roi = std::nullopt);

/// Dates of layers with cloud fraction strictly below `threshold`, ascending.
std::vector<Date> clear_dates(const GridStack& masks, double threshold,
                              const std::optional<Roi>& roi = std::nullopt);

struct MaskStackResult {
  GridStack masked;
  /// Layers without a mask for their date, passed through unchanged.
  std::vector<std::size_t> unmasked;
};

/// Pairs layers with masks by capture date; masks on a different lattice are
/// resampled with nearest neighbour onto the index georef.
MaskStackResult mask_stack(const GridStack& indices, const GridStack& masks);

}  // namespace satstack
