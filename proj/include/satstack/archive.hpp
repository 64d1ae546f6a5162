#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace satstack {

struct ArchiveMember {
  std::string name;
  std::vector<std::uint8_t> data;
};

enum class ArchiveKind { none, gzip, tar, tar_gz, zip };

/// Sniffs magic bytes; a gzip stream is reported as tar_gz when its payload
/// starts with a ustar header.
ArchiveKind detect_archive(std::span<const std::uint8_t> bytes);

// All readers throw Error{checksum_mismatch} on CRC/header-sum failures and
// Error{parse_error} on structural damage.
std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> bytes);

/// Regular files only; GNU long names and pax `path` records are honored.
std::vector<ArchiveMember> read_tar(std::span<const std::uint8_t> bytes);
/// ustar with zeroed mtime/uid/gid so output is reproducible; names over
/// 100 bytes get a GNU long-name record.
std::vector<std::uint8_t> write_tar(const std::vector<ArchiveMember>& members);

/// Stored and deflated entries; no ZIP64.
std::vector<ArchiveMember> read_zip(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_zip(const std::vector<ArchiveMember>& members);

/// Members of a tar, tar.gz or zip; a bare gzip yields one member named
/// `gz_name` (the archive name without ".gz").
std::vector<ArchiveMember> read_archive(std::span<const std::uint8_t> bytes, std::string_view gz_name = "data");

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

}  // namespace satstack
