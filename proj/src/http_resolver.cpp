#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "carto/error.hpp"
#include "carto/url.hpp"

namespace carto {

namespace {

std::string origin(const Url& url) {
  std::string out = url.scheme + "://" + url.host;
  if (url.port) out += ":" + std::to_string(*url.port);
  return out;
}

std::string absolute_location(const Url& base, const std::string& location) {
  if (location.find("://") != std::string::npos) return location;
  if (location.starts_with("//")) return base.scheme + ":" + location;
  if (location.starts_with("/")) return origin(base) + location;
  const auto slash = base.path.rfind('/');
  const std::string dir = slash == std::string::npos ? "/" : base.path.substr(0, slash + 1);
  return origin(base) + dir + location;
}

}  // namespace

HttpRedirectSource::HttpRedirectSource(int timeout_seconds)
    : timeout_seconds_(timeout_seconds) {}

std::optional<std::string> HttpRedirectSource::next_hop(const std::string& url) {
  const auto parsed = parse_url(url);
  if (!parsed) throw Error(ErrorCode::Io, "malformed url " + url);
  httplib::Client client(origin(*parsed));
  client.set_follow_location(false);
  client.set_connection_timeout(timeout_seconds_);
  client.set_read_timeout(timeout_seconds_);
  std::string target = parsed->path.empty() ? "/" : parsed->path;
  if (parsed->has_query) target += "?" + parsed->query;

  auto res = client.Head(target);
  if (res && (res->status == 405 || res->status == 403 || res->status == 501)) {
    res = client.Get(target);
  }
  if (!res) {
    throw Error(ErrorCode::Io, url + ": " + httplib::to_string(res.error()));
  }
  if (res->status >= 300 && res->status < 400 && res->has_header("Location")) {
    return absolute_location(*parsed, res->get_header_value("Location"));
  }
  return std::nullopt;
}

}  // namespace carto
