#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace satstack {

struct Credentials {
  std::string username;
  std::string password;
};

enum class AuthMode { none, basic, token };

std::string_view to_string(AuthMode m);

using KeyValues = std::vector<std::pair<std::string, std::string>>;

struct RequestDescriptor {
  std::string method = "GET";
  std::string url;
  KeyValues params;
  KeyValues headers;
  std::string body;
  AuthMode auth = AuthMode::none;
  /// Never part of canonical().
  std::optional<Credentials> credentials;

  /// Stable text dump used for golden files and fixture lookup:
  ///   METHOD <m>\nURL <u>\nPARAM k=v (sorted)\nHEADER k: v (sorted)\nAUTH <mode>\n[BODY <body>\n]
  std::string canonical() const;
  /// url plus the percent-encoded query string in parameter order.
  std::string full_url() const;
  std::optional<std::string> param(std::string_view key) const;
  void set_param(const std::string& key, std::string value);
};

std::string percent_encode(std::string_view s);

struct HttpResponse {
  int status = 0;
  KeyValues headers;
  std::string body;

  bool ok() const { return status >= 200 && status < 300; }
};

/// Sends one request. Implementations throw Error{network_error} when no
/// HTTP response could be obtained at all.
class Transport {
public:
  virtual ~Transport() = default;
  virtual HttpResponse send(const RequestDescriptor& request) = 0;
};

/// Serves recorded responses. Requests are matched on their canonical dump,
/// then on "GET <url>" alone; anything else yields 404.
class FixtureTransport : public Transport {
public:
  FixtureTransport() = default;
  /// Loads every <name>.req / <name>.resp pair (optional <name>.status)
  /// below `root`.
  explicit FixtureTransport(const std::filesystem::path& root);

  void add(const RequestDescriptor& request, HttpResponse response);
  void add_url(const std::string& url, HttpResponse response);

  HttpResponse send(const RequestDescriptor& request) override;

  std::size_t request_count() const { return requests_.load(); }
  std::uint64_t bytes_served() const { return bytes_.load(); }

private:
  std::mutex mutex_;
  std::map<std::string, HttpResponse> by_canonical_;
  std::map<std::string, HttpResponse> by_url_;
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::uint64_t> bytes_{0};
};

/// Network-backed transport; throws Error{unsupported_profile} when the
/// library was built without live transport support.
std::unique_ptr<Transport> make_live_transport();

}  // namespace satstack
