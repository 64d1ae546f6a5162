#include "satstack/download.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "satstack/archive.hpp"
#include "satstack/config.hpp"
#include "satstack/error.hpp"

namespace satstack {

namespace {

constexpr std::string_view kModule = "catalog";
namespace fs = std::filesystem;

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
  fs::path tmp = path;
  tmp += ".part";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(kModule, Errc::io_failure, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(kModule, Errc::io_failure, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  const std::string s = read_text_file(path);
  return {s.begin(), s.end()};
}

std::string basename_of(const std::string& member) {
  const auto slash = member.find_last_of("/\\");
  return slash == std::string::npos ? member : member.substr(slash + 1);
}

bool matches_filter(const std::string& name, const std::vector<std::string>& filter) {
  if (filter.empty()) return true;
  return std::any_of(filter.begin(), filter.end(),
                     [&](const std::string& t) { return !t.empty() && name.find(t) != std::string::npos; });
}

fs::path manifest_path(const fs::path& archive) {
  fs::path m = archive;
  m += ".extracted";
  return m;
}

std::optional<std::vector<fs::path>> read_manifest(const fs::path& manifest, const fs::path& tif_dir) {
  std::error_code ec;
  if (!fs::exists(manifest, ec)) return std::nullopt;
  std::vector<fs::path> out;
  std::istringstream in(read_text_file(manifest));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const fs::path p = tif_dir / line;
    if (!fs::exists(p, ec)) return std::nullopt;
    out.push_back(p);
  }
  return out;
}

void extract(const DownloadPlan& plan, const fs::path& archive, std::span<const std::uint8_t> bytes, RecordOutcome& out) {
  if (detect_archive(bytes) == ArchiveKind::none) {
    out.message = "not an archive; kept as downloaded";
    return;
  }
  std::string gz_name = archive.filename().string();
  if (gz_name.ends_with(".gz")) gz_name.resize(gz_name.size() - 3);
  const auto members = read_archive(bytes, gz_name);
  const fs::path tif_dir = plan.dest_dir / "tif";
  fs::create_directories(tif_dir);
  std::string manifest;
  for (const auto& m : members) {
    const std::string name = basename_of(m.name);
    if (name.empty() || !matches_filter(name, plan.band_filter)) continue;
    const fs::path dst = tif_dir / name;
    std::error_code ec;
    if (plan.overwrite || !fs::exists(dst, ec)) write_file(dst, m.data);
    out.extracted.push_back(dst);
    manifest += name + "\n";
  }
  const std::vector<std::uint8_t> mbytes(manifest.begin(), manifest.end());
  write_file(manifest_path(archive), mbytes);
  if (plan.remove_archives) fs::remove(archive);
}

RecordOutcome process(const DownloadPlan& plan, const SceneRecord& rec, Transport& transport) {
  RecordOutcome out;
  out.granule_id = rec.granule_id;
  const fs::path raw_dir = plan.dest_dir / "raw";
  out.archive = raw_dir / archive_name(rec);
  try {
    fs::create_directories(raw_dir);
    std::error_code ec;
    if (!plan.overwrite) {
      if (fs::exists(out.archive, ec)) {
        out.status = RecordStatus::skipped_existing;
        if (plan.extract) {
          if (auto done = read_manifest(manifest_path(out.archive), plan.dest_dir / "tif")) {
            out.extracted = *done;
            if (plan.remove_archives) fs::remove(out.archive);
          } else {
            extract(plan, out.archive, read_bytes(out.archive), out);
          }
        }
        return out;
      }
      if (auto done = read_manifest(manifest_path(out.archive), plan.dest_dir / "tif")) {
        out.status = RecordStatus::skipped_existing;
        out.extracted = *done;
        return out;
      }
    }

    RequestDescriptor req;
    req.method = "GET";
    req.url = rec.download_url;
    if (plan.credentials) {
      req.auth = AuthMode::basic;
      req.credentials = plan.credentials;
    }
    const HttpResponse r = transport.send(req);
    if (r.status == 401 || r.status == 403) {
      out.status = RecordStatus::auth_error;
      out.message = "HTTP " + std::to_string(r.status);
      return out;
    }
    if (!r.ok()) {
      out.status = RecordStatus::network_error;
      out.message = "HTTP " + std::to_string(r.status);
      return out;
    }
    const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(r.body.data()), r.body.size());
    out.bytes = bytes.size();
    if (plan.extract) {
      try {
        // Verify before anything lands on disk.
        if (detect_archive(bytes) != ArchiveKind::none) (void)read_archive(bytes);
      } catch (const Error& e) {
        out.status = RecordStatus::checksum_mismatch;
        out.message = e.what();
        return out;
      }
    }
    write_file(out.archive, bytes);
    out.status = RecordStatus::downloaded;
    if (plan.extract) extract(plan, out.archive, bytes, out);
  } catch (const Error& e) {
    out.status = e.code() == Errc::checksum_mismatch ? RecordStatus::checksum_mismatch
                 : e.code() == Errc::auth_error      ? RecordStatus::auth_error
                                                     : RecordStatus::network_error;
    out.message = e.what();
  } catch (const fs::filesystem_error& e) {
    out.status = RecordStatus::network_error;
    out.message = e.what();
  }
  return out;
}

}  // namespace

std::string_view to_string(RecordStatus s) {
  switch (s) {
    case RecordStatus::downloaded: return "downloaded";
    case RecordStatus::skipped_existing: return "skipped-existing";
    case RecordStatus::network_error: return "network-error";
    case RecordStatus::auth_error: return "auth-error";
    case RecordStatus::checksum_mismatch: return "checksum-mismatch";
  }
  return "?";
}

std::uint64_t PlanReport::total_bytes() const {
  std::uint64_t n = 0;
  for (const auto& r : records) n += r.bytes;
  return n;
}

std::size_t PlanReport::failures() const {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const RecordOutcome& r) {
    return r.status != RecordStatus::downloaded && r.status != RecordStatus::skipped_existing;
  }));
}

std::string archive_name(const SceneRecord& record) {
  std::string url = record.download_url;
  url = url.substr(0, url.find_first_of("?#"));
  while (!url.empty() && url.back() == '/') url.pop_back();
  std::string seg = url.substr(url.find_last_of('/') + 1);
  const bool usable = !seg.empty() && seg.find('.') != std::string::npos && seg.find_first_of("$()'") == std::string::npos;
  if (usable) return seg;
  std::string ext = ".tar.gz";
  if (record.mission == Mission::sentinel2) ext = ".zip";
  if (record.mission == Mission::modis) ext = ".hdf";
  std::string base = record.granule_id;
  std::replace_if(base.begin(), base.end(), [](char c) { return c == '/' || c == '\\' || c == ':'; }, '_');
  return base + ext;
}

PlanReport execute_plan(const DownloadPlan& plan, Transport& transport) {
  if (plan.workers < 1) throw Error(kModule, Errc::invalid_argument, "worker count must be >= 1");
  for (const auto& t : plan.band_filter) {
    if (t.empty()) throw Error(kModule, Errc::invalid_argument, "band filter tokens must be non-empty");
  }
  PlanReport report;
  report.records.resize(plan.records.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < plan.records.size(); i = next++) {
      report.records[i] = process(plan, plan.records[i], transport);
    }
  };
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(plan.workers), plan.records.size());
  std::vector<std::jthread> pool;
  for (std::size_t k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  return report;
}

fs::path fetch_browse(const SceneRecord& record, Transport& transport, const fs::path& dest_dir,
                      const std::optional<Credentials>& credentials) {
  if (!record.browse_url || record.browse_url->empty()) {
    throw Error(kModule, Errc::no_browse_url, record.granule_id + " has no browse image");
  }
  RequestDescriptor req;
  req.url = *record.browse_url;
  if (credentials) {
    req.auth = AuthMode::basic;
    req.credentials = credentials;
  }
  const HttpResponse r = transport.send(req);
  if (!r.ok()) throw Error(kModule, Errc::network_error, "browse fetch failed with HTTP " + std::to_string(r.status));
  std::string url = record.browse_url->substr(0, record.browse_url->find_first_of("?#"));
  std::string name = url.substr(url.find_last_of('/') + 1);
  if (name.empty() || name.find('.') == std::string::npos || name.find_first_of("$()'") != std::string::npos) {
    const bool png = r.body.size() >= 4 && r.body.compare(0, 4, "\x89PNG") == 0;
    name = record.granule_id + "_browse" + (png ? ".png" : ".jpg");
  }
  fs::create_directories(dest_dir);
  const fs::path dst = dest_dir / name;
  write_file(dst, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(r.body.data()), r.body.size()));
  return dst;
}

}  // namespace satstack
