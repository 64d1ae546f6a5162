#include "satstack/archive.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>

#include "satstack/error.hpp"

namespace satstack {

namespace {

constexpr std::string_view kModule = "catalog";

std::uint32_t le16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8;
}
std::uint32_t le32(std::span<const std::uint8_t> b, std::size_t at) {
  return le16(b, at) | le16(b, at + 2) << 16;
}
void put16(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  put16(out, v & 0xFFFF);
  put16(out, v >> 16);
}

void need(std::span<const std::uint8_t> b, std::size_t at, std::size_t len, const char* what) {
  if (at > b.size() || len > b.size() - at) throw Error(kModule, Errc::parse_error, std::string("truncated ") + what);
}

// window_bits: 16+15 for gzip (may hold several members), -15 for raw deflate.
std::vector<std::uint8_t> inflate_stream(std::span<const std::uint8_t> in, int window_bits, std::size_t* consumed,
                                         std::size_t size_hint) {
  z_stream zs{};
  if (inflateInit2(&zs, window_bits) != Z_OK) throw Error(kModule, Errc::parse_error, "inflateInit failed");
  std::vector<std::uint8_t> out;
  out.reserve(size_hint ? size_hint : in.size() * 3);
  std::uint8_t buf[65536];
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  while (true) {
    zs.next_out = buf;
    zs.avail_out = sizeof buf;
    rc = inflate(&zs, Z_NO_FLUSH);
    out.insert(out.end(), buf, buf + (sizeof buf - zs.avail_out));
    if (rc == Z_STREAM_END) break;
    if (rc == Z_OK) continue;
    const std::string msg = zs.msg ? zs.msg : "inflate error";
    inflateEnd(&zs);
    if (msg == "incorrect data check" || msg == "incorrect length check") throw Error(kModule, Errc::checksum_mismatch, msg);
    if (rc == Z_BUF_ERROR) throw Error(kModule, Errc::parse_error, "truncated compressed stream");
    throw Error(kModule, Errc::parse_error, msg);
  }
  if (consumed) *consumed = in.size() - zs.avail_in;
  inflateEnd(&zs);
  return out;
}

std::vector<std::uint8_t> deflate_stream(std::span<const std::uint8_t> in, int window_bits) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, window_bits, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error(kModule, Errc::io_failure, "deflateInit failed");
  }
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(in.size())) + 32);
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  const std::size_t produced = zs.total_out;
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(kModule, Errc::io_failure, "deflate failed");
  out.resize(produced);
  return out;
}

std::uint64_t parse_octal(std::span<const std::uint8_t> field) {
  std::uint64_t v = 0;
  std::size_t i = 0;
  while (i < field.size() && (field[i] == ' ' || field[i] == 0)) ++i;
  for (; i < field.size() && field[i] >= '0' && field[i] <= '7'; ++i) v = v * 8 + (field[i] - '0');
  for (; i < field.size(); ++i) {
    if (field[i] != ' ' && field[i] != 0) throw Error(kModule, Errc::parse_error, "bad octal field in tar header");
  }
  return v;
}

std::string c_string(std::span<const std::uint8_t> field) {
  const auto end = std::find(field.begin(), field.end(), std::uint8_t{0});
  return std::string(field.begin(), end);
}

void put_octal(std::uint8_t* field, std::size_t width, std::uint64_t v) {
  // width - 1 digits plus NUL.
  std::memset(field, '0', width - 1);
  field[width - 1] = 0;
  for (std::size_t i = width - 1; i-- > 0 && v;) {
    field[i] = static_cast<std::uint8_t>('0' + (v & 7));
    v >>= 3;
  }
}

}  // namespace

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

ArchiveKind detect_archive(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 4 && bytes[0] == 'P' && bytes[1] == 'K' && bytes[2] == 3 && bytes[3] == 4) return ArchiveKind::zip;
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) {
    // Peek at the first block of the payload.
    try {
      const auto head = gunzip(bytes);
      if (head.size() >= 512 && std::memcmp(head.data() + 257, "ustar", 5) == 0) return ArchiveKind::tar_gz;
    } catch (const Error&) {
    }
    return ArchiveKind::gzip;
  }
  if (bytes.size() >= 512 && std::memcmp(bytes.data() + 257, "ustar", 5) == 0) return ArchiveKind::tar;
  return ArchiveKind::none;
}

std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 18 || bytes[0] != 0x1f || bytes[1] != 0x8b) throw Error(kModule, Errc::parse_error, "not a gzip stream");
  std::vector<std::uint8_t> out;
  std::size_t pos = 0;
  // Concatenated members decode to the concatenation of their payloads.
  while (pos < bytes.size()) {
    if (bytes.size() - pos < 2 || bytes[pos] != 0x1f || bytes[pos + 1] != 0x8b) break;
    std::size_t used = 0;
    const auto part = inflate_stream(bytes.subspan(pos), 16 + 15, &used, 0);
    out.insert(out.end(), part.begin(), part.end());
    pos += used;
  }
  return out;
}

std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> bytes) {
  auto out = deflate_stream(bytes, 16 + 15);
  // Zero the mtime and fix the OS byte for reproducible output.
  if (out.size() >= 10) {
    std::fill(out.begin() + 4, out.begin() + 8, std::uint8_t{0});
    out[9] = 3;
  }
  return out;
}

std::vector<ArchiveMember> read_tar(std::span<const std::uint8_t> bytes) {
  std::vector<ArchiveMember> out;
  std::size_t pos = 0;
  std::string pending_name;
  while (pos < bytes.size()) {
    need(bytes, pos, 512, "tar header");
    const auto h = bytes.subspan(pos, 512);
    if (std::all_of(h.begin(), h.end(), [](std::uint8_t b) { return b == 0; })) break;

    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < 512; ++i) sum += (i >= 148 && i < 156) ? ' ' : h[i];
    if (sum != parse_octal(h.subspan(148, 8))) throw Error(kModule, Errc::checksum_mismatch, "tar header checksum");

    const std::uint64_t size = parse_octal(h.subspan(124, 12));
    const char type = static_cast<char>(h[156]);
    pos += 512;
    need(bytes, pos, size, "tar member");
    const auto body = bytes.subspan(pos, size);
    pos += (size + 511) / 512 * 512;

    if (type == 'L') {
      pending_name = c_string(body);
      continue;
    }
    if (type == 'x') {
      // pax records: "<len> key=value\n"
      std::string recs(body.begin(), body.end());
      std::size_t p = 0;
      while (p < recs.size()) {
        const auto sp = recs.find(' ', p);
        if (sp == std::string::npos) break;
        std::size_t len = 0;
        for (std::size_t i = p; i < sp; ++i) {
          if (recs[i] < '0' || recs[i] > '9') throw Error(kModule, Errc::parse_error, "bad pax record length");
          len = len * 10 + static_cast<std::size_t>(recs[i] - '0');
        }
        if (len <= sp - p + 1 || p + len > recs.size()) throw Error(kModule, Errc::parse_error, "bad pax record");
        const std::string kv = recs.substr(sp + 1, p + len - sp - 2);
        if (kv.rfind("path=", 0) == 0) pending_name = kv.substr(5);
        p += len;
      }
      continue;
    }
    if (type != '0' && type != '\0') {
      pending_name.clear();
      continue;
    }
    std::string name = pending_name;
    pending_name.clear();
    if (name.empty()) {
      name = c_string(h.subspan(0, 100));
      if (std::memcmp(h.data() + 257, "ustar", 5) == 0) {
        const std::string prefix = c_string(h.subspan(345, 155));
        if (!prefix.empty()) name = prefix + "/" + name;
      }
    }
    out.push_back({std::move(name), std::vector<std::uint8_t>(body.begin(), body.end())});
  }
  return out;
}

namespace {

void append_tar_entry(std::vector<std::uint8_t>& out, std::string_view name, char type,
                      std::span<const std::uint8_t> data) {
  std::uint8_t h[512] = {};
  std::memcpy(h, name.data(), std::min<std::size_t>(name.size(), 100));
  put_octal(h + 100, 8, 0644);
  put_octal(h + 108, 8, 0);
  put_octal(h + 116, 8, 0);
  put_octal(h + 124, 12, data.size());
  put_octal(h + 136, 12, 0);
  h[156] = static_cast<std::uint8_t>(type);
  std::memcpy(h + 257, "ustar", 6);
  h[263] = '0';
  h[264] = '0';
  std::memset(h + 148, ' ', 8);
  std::uint64_t sum = 0;
  for (std::uint8_t b : h) sum += b;
  put_octal(h + 148, 7, sum);
  h[155] = ' ';
  out.insert(out.end(), h, h + 512);
  out.insert(out.end(), data.begin(), data.end());
  out.resize((out.size() + 511) / 512 * 512, 0);
}

}  // namespace

std::vector<std::uint8_t> write_tar(const std::vector<ArchiveMember>& members) {
  std::vector<std::uint8_t> out;
  for (const auto& m : members) {
    if (m.name.empty()) throw Error(kModule, Errc::invalid_argument, "tar member without a name");
    if (m.name.size() > 100) {
      // GNU long-name record: the NUL-terminated name precedes the member.
      std::vector<std::uint8_t> longname(m.name.begin(), m.name.end());
      longname.push_back(0);
      append_tar_entry(out, "././@LongLink", 'L', longname);
    }
    append_tar_entry(out, m.name, '0', m.data);
  }
  out.resize(out.size() + 1024, 0);
  return out;
}

std::vector<ArchiveMember> read_zip(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 22) throw Error(kModule, Errc::parse_error, "zip too short");
  std::size_t eocd = std::string::npos;
  const std::size_t lowest = bytes.size() > 22 + 65535 ? bytes.size() - 22 - 65535 : 0;
  for (std::size_t p = bytes.size() - 22 + 1; p-- > lowest;) {
    if (le32(bytes, p) == 0x06054b50) {
      eocd = p;
      break;
    }
  }
  if (eocd == std::string::npos) throw Error(kModule, Errc::parse_error, "zip end-of-directory record not found");
  const std::uint32_t entries = le16(bytes, eocd + 10);
  std::size_t cd = le32(bytes, eocd + 16);
  if (entries == 0xFFFF || cd == 0xFFFFFFFF) throw Error(kModule, Errc::parse_error, "ZIP64 archives are not supported");

  std::vector<ArchiveMember> out;
  for (std::uint32_t e = 0; e < entries; ++e) {
    need(bytes, cd, 46, "zip central directory");
    if (le32(bytes, cd) != 0x02014b50) throw Error(kModule, Errc::parse_error, "bad central directory signature");
    const std::uint32_t method = le16(bytes, cd + 10);
    const std::uint32_t crc = le32(bytes, cd + 16);
    const std::size_t csize = le32(bytes, cd + 20);
    const std::size_t usize = le32(bytes, cd + 24);
    const std::size_t nlen = le16(bytes, cd + 28);
    const std::size_t xlen = le16(bytes, cd + 30);
    const std::size_t clen = le16(bytes, cd + 32);
    const std::size_t local = le32(bytes, cd + 42);
    need(bytes, cd + 46, nlen, "zip entry name");
    std::string name(bytes.begin() + static_cast<std::ptrdiff_t>(cd + 46),
                     bytes.begin() + static_cast<std::ptrdiff_t>(cd + 46 + nlen));
    cd += 46 + nlen + xlen + clen;
    if (!name.empty() && name.back() == '/') continue;

    need(bytes, local, 30, "zip local header");
    if (le32(bytes, local) != 0x04034b50) throw Error(kModule, Errc::parse_error, "bad local header signature");
    const std::size_t data_at = local + 30 + le16(bytes, local + 26) + le16(bytes, local + 28);
    need(bytes, data_at, csize, "zip entry data");
    const auto raw = bytes.subspan(data_at, csize);
    std::vector<std::uint8_t> data;
    if (method == 0) {
      data.assign(raw.begin(), raw.end());
    } else if (method == 8) {
      data = inflate_stream(raw, -15, nullptr, usize);
    } else {
      throw Error(kModule, Errc::parse_error, "zip compression method " + std::to_string(method) + " unsupported");
    }
    if (data.size() != usize || crc32_of(data) != crc) {
      throw Error(kModule, Errc::checksum_mismatch, "CRC mismatch in zip entry " + name);
    }
    out.push_back({std::move(name), std::move(data)});
  }
  return out;
}

std::vector<std::uint8_t> write_zip(const std::vector<ArchiveMember>& members) {
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> central;
  for (const auto& m : members) {
    const auto packed = deflate_stream(m.data, -15);
    const bool store = packed.size() >= m.data.size();
    const auto& payload = store ? m.data : packed;
    const std::uint32_t crc = crc32_of(m.data);
    const auto offset = static_cast<std::uint32_t>(out.size());
    const auto method = static_cast<std::uint32_t>(store ? 0 : 8);

    put32(out, 0x04034b50);
    put16(out, 20);
    put16(out, 0);
    put16(out, method);
    put16(out, 0);
    put16(out, 0x21);  // 1980-01-01
    put32(out, crc);
    put32(out, static_cast<std::uint32_t>(payload.size()));
    put32(out, static_cast<std::uint32_t>(m.data.size()));
    put16(out, static_cast<std::uint32_t>(m.name.size()));
    put16(out, 0);
    out.insert(out.end(), m.name.begin(), m.name.end());
    out.insert(out.end(), payload.begin(), payload.end());

    put32(central, 0x02014b50);
    put16(central, 20);
    put16(central, 20);
    put16(central, 0);
    put16(central, method);
    put16(central, 0);
    put16(central, 0x21);
    put32(central, crc);
    put32(central, static_cast<std::uint32_t>(payload.size()));
    put32(central, static_cast<std::uint32_t>(m.data.size()));
    put16(central, static_cast<std::uint32_t>(m.name.size()));
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put32(central, 0);
    put32(central, offset);
    central.insert(central.end(), m.name.begin(), m.name.end());
  }
  const auto cd_offset = static_cast<std::uint32_t>(out.size());
  out.insert(out.end(), central.begin(), central.end());
  put32(out, 0x06054b50);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint32_t>(members.size()));
  put16(out, static_cast<std::uint32_t>(members.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, cd_offset);
  put16(out, 0);
  return out;
}

std::vector<ArchiveMember> read_archive(std::span<const std::uint8_t> bytes, std::string_view gz_name) {
  if (bytes.size() >= 4 && bytes[0] == 'P' && bytes[1] == 'K' && bytes[2] == 3 && bytes[3] == 4) return read_zip(bytes);
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) {
    auto payload = gunzip(bytes);
    if (payload.size() >= 512 && std::memcmp(payload.data() + 257, "ustar", 5) == 0) return read_tar(payload);
    return {{std::string(gz_name), std::move(payload)}};
  }
  if (bytes.size() >= 512 && std::memcmp(bytes.data() + 257, "ustar", 5) == 0) return read_tar(bytes);
  throw Error(kModule, Errc::parse_error, "unrecognized archive format");
}

}  // namespace satstack
