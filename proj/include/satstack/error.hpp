#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace satstack {

enum class Errc {
  // grid-core
  unsupported_profile,
  malformed_tiff,
  missing_georeferencing,
  io_failure,
  crs_mismatch,
  lattice_misaligned,
  empty_intersection,
  invalid_bounds,
  no_date_token,
  day_out_of_range,
  georef_mismatch,
  value_out_of_range,
  // geoproj
  latitude_out_of_range,
  out_of_domain,
  unsupported_crs,
  // catalog
  missing_credentials,
  invalid_query,
  parse_error,
  schema_error,
  network_error,
  auth_error,
  checksum_mismatch,
  no_browse_url,
  // spectral
  unmapped_role,
  no_input_files,
  // cloudmask
  negative_qa_value,
  non_binary_mask,
  // interp
  rank_deficient,
  dimension_mismatch,
  // ima
  target_not_found,
  empty_neighborhood,
  insufficient_knots,
  // hydro
  no_points,
  no_components,
  unknown_component,
  empty_shoreline,
  all_missing_elevation,
  insufficient_pairs,
  // shared
  invalid_argument,
  usage_error,
};

std::string_view to_string(Errc code) noexcept;

/// Exception carrying a machine-checkable code and the module that raised it.
/// what() renders as "<module>: <code>: <detail>".
class Error : public std::runtime_error {
public:
  Error(std::string_view module, Errc code, const std::string& detail);

  Errc code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }

private:
  std::string module_;
  Errc code_;
};

}  // namespace satstack
