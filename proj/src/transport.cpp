#include "satstack/transport.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "satstack/config.hpp"
#include "satstack/error.hpp"

namespace satstack {

namespace {

constexpr std::string_view kModule = "catalog";

std::string url_key(const std::string& method, const std::string& url) { return method + " " + url; }

}  // namespace

std::string_view to_string(AuthMode m) {
  switch (m) {
    case AuthMode::none: return "none";
    case AuthMode::basic: return "basic";
    case AuthMode::token: return "token";
  }
  return "?";
}

std::string percent_encode(std::string_view s) {
  static constexpr char hex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 15];
    }
  }
  return out;
}

std::string RequestDescriptor::canonical() const {
  std::string out = "METHOD " + method + "\nURL " + url + "\n";
  KeyValues p = params;
  std::stable_sort(p.begin(), p.end());
  for (const auto& [k, v] : p) out += "PARAM " + k + "=" + v + "\n";
  KeyValues h = headers;
  std::stable_sort(h.begin(), h.end());
  for (const auto& [k, v] : h) out += "HEADER " + k + ": " + v + "\n";
  out += "AUTH " + std::string(to_string(auth)) + "\n";
  if (!body.empty()) out += "BODY " + body + "\n";
  return out;
}

std::string RequestDescriptor::full_url() const {
  std::string out = url;
  char sep = url.find('?') == std::string::npos ? '?' : '&';
  for (const auto& [k, v] : params) {
    out += sep;
    out += percent_encode(k) + "=" + percent_encode(v);
    sep = '&';
  }
  return out;
}

std::optional<std::string> RequestDescriptor::param(std::string_view key) const {
  for (const auto& [k, v] : params) {
    if (k == key) return v;
  }
  return std::nullopt;
}

void RequestDescriptor::set_param(const std::string& key, std::string value) {
  for (auto& [k, v] : params) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  params.emplace_back(key, std::move(value));
}

FixtureTransport::FixtureTransport(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw Error(kModule, Errc::io_failure, "fixture directory " + root.string() + " missing");
  std::vector<fs::path> reqs;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().extension() == ".req") reqs.push_back(e.path());
  }
  std::sort(reqs.begin(), reqs.end());
  for (const auto& req : reqs) {
    fs::path resp = req;
    resp.replace_extension(".resp");
    if (!fs::exists(resp)) throw Error(kModule, Errc::io_failure, "fixture " + req.string() + " has no .resp");
    HttpResponse r{200, {}, read_text_file(resp)};
    fs::path status = req;
    status.replace_extension(".status");
    if (fs::exists(status)) {
      const std::string s = trim(read_text_file(status));
      const auto [p, e] = std::from_chars(s.data(), s.data() + s.size(), r.status);
      if (e != std::errc() || p != s.data() + s.size()) throw Error(kModule, Errc::parse_error, "bad status in " + status.string());
    }
    std::string key = read_text_file(req);
    if (key.empty() || key.back() != '\n') key += '\n';
    // A bare "GET <url>" line registers a URL-only fixture.
    if (key.rfind("GET ", 0) == 0 && key.find('\n') == key.size() - 1) {
      by_url_[trim(key)] = std::move(r);
    } else {
      by_canonical_[key] = std::move(r);
    }
  }
}

void FixtureTransport::add(const RequestDescriptor& request, HttpResponse response) {
  std::lock_guard lock(mutex_);
  by_canonical_[request.canonical()] = std::move(response);
}

void FixtureTransport::add_url(const std::string& url, HttpResponse response) {
  std::lock_guard lock(mutex_);
  by_url_[url_key("GET", url)] = std::move(response);
}

HttpResponse FixtureTransport::send(const RequestDescriptor& request) {
  ++requests_;
  HttpResponse r{404, {}, "no fixture for request"};
  {
    std::lock_guard lock(mutex_);
    if (auto it = by_canonical_.find(request.canonical()); it != by_canonical_.end()) {
      r = it->second;
    } else if (auto jt = by_url_.find(url_key(request.method, request.full_url())); jt != by_url_.end()) {
      r = jt->second;
    } else {
      return r;
    }
  }
  bytes_ += r.body.size();
  return r;
}

}  // namespace satstack
