#include "satstack/error.hpp"

namespace satstack {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::unsupported_profile: return "unsupported-profile";
    case Errc::malformed_tiff: return "malformed-tiff";
    case Errc::missing_georeferencing: return "missing-georeferencing";
    case Errc::io_failure: return "io-failure";
    case Errc::crs_mismatch: return "crs-mismatch";
    case Errc::lattice_misaligned: return "lattice-misaligned";
    case Errc::empty_intersection: return "empty-intersection";
    case Errc::invalid_bounds: return "invalid-bounds";
    case Errc::no_date_token: return "no-date-token";
    case Errc::day_out_of_range: return "day-out-of-range";
    case Errc::georef_mismatch: return "georef-mismatch";
    case Errc::value_out_of_range: return "value-out-of-range";
    case Errc::latitude_out_of_range: return "latitude-out-of-range";
    case Errc::out_of_domain: return "out-of-domain";
    case Errc::unsupported_crs: return "unsupported-crs";
    case Errc::missing_credentials: return "missing-credentials";
    case Errc::invalid_query: return "invalid-query";
    case Errc::parse_error: return "parse-error";
    case Errc::schema_error: return "schema-error";
    case Errc::network_error: return "network-error";
    case Errc::auth_error: return "auth-error";
    case Errc::checksum_mismatch: return "checksum-mismatch";
    case Errc::no_browse_url: return "no-browse-url";
    case Errc::unmapped_role: return "unmapped-role";
    case Errc::no_input_files: return "no-input-files";
    case Errc::negative_qa_value: return "negative-qa-value";
    case Errc::non_binary_mask: return "non-binary-mask";
    case Errc::rank_deficient: return "rank-deficient";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::target_not_found: return "target-not-found";
    case Errc::empty_neighborhood: return "empty-neighborhood";
    case Errc::insufficient_knots: return "insufficient-knots";
    case Errc::no_points: return "no-points";
    case Errc::no_components: return "no-components";
    case Errc::unknown_component: return "unknown-component";
    case Errc::empty_shoreline: return "empty-shoreline";
    case Errc::all_missing_elevation: return "all-missing-elevation";
    case Errc::insufficient_pairs: return "insufficient-pairs";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::usage_error: return "usage-error";
  }
  return "unknown";
}

Error::Error(std::string_view module, Errc code, const std::string& detail)
    : std::runtime_error(std::string(module) + ": " + std::string(to_string(code)) +
                         (detail.empty() ? std::string() : ": " + detail)),
      module_(module),
      code_(code) {}

}  // namespace satstack
