#include "satstack/config.hpp"
#include "satstack/error.hpp"
#include "satstack/transport.hpp"

#ifdef SATSTACK_LIVE_TRANSPORT

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

namespace satstack {

namespace {

constexpr std::string_view kModule = "catalog";

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string target;  // /path?query
};

UrlParts split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(kModule, Errc::invalid_query, "URL without scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class LiveTransport : public Transport {
public:
  HttpResponse send(const RequestDescriptor& request) override {
    const UrlParts parts = split_url(request.full_url());
    httplib::Client client(parts.origin);
    client.set_follow_location(true);
    client.set_connection_timeout(30);
    client.set_read_timeout(300);

    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);
    if (request.auth != AuthMode::none) {
      if (!request.credentials) throw Error(kModule, Errc::missing_credentials, "request needs credentials");
      if (request.auth == AuthMode::basic) {
        client.set_basic_auth(request.credentials->username, request.credentials->password);
      } else {
        headers.emplace("X-Auth-Token", token_for(request));
      }
    }

    httplib::Result res = request.method == "POST"
                              ? client.Post(parts.target, headers, request.body, content_type(request))
                              : client.Get(parts.target, headers);
    if (!res) throw Error(kModule, Errc::network_error, httplib::to_string(res.error()) + " for " + parts.origin);
    HttpResponse out{res->status, {}, res->body};
    for (const auto& [k, v] : res->headers) out.headers.emplace_back(k, v);
    return out;
  }

private:
  static std::string content_type(const RequestDescriptor& r) {
    for (const auto& [k, v] : r.headers) {
      if (to_lower(k) == "content-type") return v;
    }
    return "application/json";
  }

  // Token services take a login call at the sibling "login" endpoint.
  std::string token_for(const RequestDescriptor& request) {
    const std::string base = request.url.substr(0, request.url.rfind('/') + 1);
    const std::string key = base + "\n" + request.credentials->username;
    std::lock_guard lock(token_mutex_);
    if (auto it = tokens_.find(key); it != tokens_.end()) return it->second;
    RequestDescriptor login;
    login.method = "POST";
    login.url = base + "login";
    login.headers = {{"Content-Type", "application/json"}};
    login.body = nlohmann::json{{"username", request.credentials->username},
                                {"password", request.credentials->password}}.dump();
    const HttpResponse r = send(login);
    if (r.status == 401 || r.status == 403) throw Error(kModule, Errc::auth_error, "login rejected");
    if (!r.ok()) throw Error(kModule, Errc::network_error, "login failed with HTTP " + std::to_string(r.status));
    const auto doc = nlohmann::json::parse(r.body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("data") || !doc["data"].is_string()) {
      throw Error(kModule, Errc::auth_error, "login response carries no token");
    }
    return tokens_[key] = doc["data"].get<std::string>();
  }

  std::mutex token_mutex_;
  std::map<std::string, std::string> tokens_;
};

}  // namespace

std::unique_ptr<Transport> make_live_transport() { return std::make_unique<LiveTransport>(); }

}  // namespace satstack

#else

namespace satstack {

std::unique_ptr<Transport> make_live_transport() {
  throw Error("catalog", Errc::unsupported_profile, "built without live transport support");
}

}  // namespace satstack

#endif
