#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "satstack/catalog.hpp"
#include "satstack/transport.hpp"

namespace satstack {

struct DownloadPlan {
  std::vector<SceneRecord> records;
  std::filesystem::path dest_dir;
  bool extract = true;
  /// Members whose names contain any of these tokens are extracted; empty
  /// extracts everything.
  std::vector<std::string> band_filter;
  bool remove_archives = false;
  bool overwrite = false;
  int workers = 3;
  std::optional<Credentials> credentials;
};

enum class RecordStatus { downloaded, skipped_existing, network_error, auth_error, checksum_mismatch };

std::string_view to_string(RecordStatus s);

struct RecordOutcome {
  std::string granule_id;
  RecordStatus status = RecordStatus::downloaded;
  std::uint64_t bytes = 0;
  std::filesystem::path archive;
  std::vector<std::filesystem::path> extracted;
  std::string message;
};

struct PlanReport {
  /// Same order as DownloadPlan::records.
  std::vector<RecordOutcome> records;

  std::uint64_t total_bytes() const;
  std::size_t failures() const;
};

/// Archive file name used under dest_dir/raw for a record.
std::string archive_name(const SceneRecord& record);

/// Fetches every record to dest_dir/raw with up to `workers` concurrent
/// transfers and unpacks matching members to dest_dir/tif. Per-record
/// failures are reported, never thrown.
PlanReport execute_plan(const DownloadPlan& plan, Transport& transport);

/// Saves the browse image unchanged; throws Error{no_browse_url} or
/// Error{network_error}.
std::filesystem::path fetch_browse(const SceneRecord& record, Transport& transport, const std::filesystem::path& dest_dir,
                                   const std::optional<Credentials>& credentials = std::nullopt);

}  // namespace satstack
