#include "carto/url.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "carto/error.hpp"
#include "carto/io.hpp"

namespace carto {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool valid_host(std::string_view host) {
  if (host.empty()) return false;
  if (host.front() == '[') return host.back() == ']';
  return std::all_of(host.begin(), host.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '.' || c == '-' || c == '_';
  });
}

std::optional<int> default_port(std::string_view scheme) {
  if (scheme == "http") return 80;
  if (scheme == "https") return 443;
  return std::nullopt;
}

bool is_tracking(std::string_view name, const CanonicalizationOptions& options) {
  const auto key = lower(name);
  for (const auto& p : options.tracking_params) {
    if (key == lower(p)) return true;
  }
  for (const auto& p : options.tracking_prefixes) {
    if (key.starts_with(lower(p))) return true;
  }
  return false;
}

}  // namespace

std::string Url::to_string() const {
  std::string out = scheme + "://" + host;
  if (port) out += ":" + std::to_string(*port);
  out += path;
  if (has_query) out += "?" + query;
  if (has_fragment) out += "#" + fragment;
  return out;
}

std::optional<Url> parse_url(std::string_view text) {
  const auto trimmed = io::trim(text);
  std::string_view s = trimmed;
  if (s.empty() || s.find_first_of(" \t\r\n") != std::string_view::npos) {
    return std::nullopt;
  }
  Url url;
  const auto sep = s.find("://");
  if (sep != std::string_view::npos) {
    const auto scheme = s.substr(0, sep);
    if (scheme.empty() || !std::all_of(scheme.begin(), scheme.end(), [](unsigned char c) {
          return std::isalpha(c) || c == '+' || c == '-' || c == '.';
        })) {
      return std::nullopt;
    }
    url.scheme = lower(scheme);
    s.remove_prefix(sep + 3);
  } else {
    url.scheme = "http";
  }
  const auto auth_end = s.find_first_of("/?#");
  auto authority = s.substr(0, auth_end);
  s.remove_prefix(auth_end == std::string_view::npos ? s.size() : auth_end);
  if (const auto at = authority.rfind('@'); at != std::string_view::npos) {
    authority.remove_prefix(at + 1);
  }
  const auto colon = authority.rfind(':');
  if (colon != std::string_view::npos && authority.find(']', colon) == std::string_view::npos) {
    const auto port_text = authority.substr(colon + 1);
    authority = authority.substr(0, colon);
    if (!port_text.empty()) {
      if (!std::all_of(port_text.begin(), port_text.end(),
                       [](unsigned char c) { return std::isdigit(c); }) ||
          port_text.size() > 5) {
        return std::nullopt;
      }
      url.port = std::stoi(std::string(port_text));
    }
  }
  url.host = lower(authority);
  while (!url.host.empty() && url.host.back() == '.') url.host.pop_back();
  if (!valid_host(url.host) || url.host.find('.') == std::string::npos) {
    if (url.host != "localhost") return std::nullopt;
  }

  const auto hash = s.find('#');
  if (hash != std::string_view::npos) {
    url.has_fragment = true;
    url.fragment = std::string(s.substr(hash + 1));
    s = s.substr(0, hash);
  }
  const auto q = s.find('?');
  if (q != std::string_view::npos) {
    url.has_query = true;
    url.query = std::string(s.substr(q + 1));
    s = s.substr(0, q);
  }
  url.path = std::string(s);
  return url;
}

std::string canonicalize_url(std::string_view text,
                             const CanonicalizationOptions& options) {
  auto parsed = parse_url(text);
  if (!parsed) return std::string(text);
  Url url = std::move(*parsed);
  if (url.port && url.port == default_port(url.scheme)) url.port.reset();
  if (url.path.empty()) url.path = "/";
  while (url.path.size() > 1 && url.path.back() == '/') url.path.pop_back();

  if (url.has_query) {
    std::string kept;
    std::string_view rest = url.query;
    while (!rest.empty()) {
      const auto amp = rest.find('&');
      const auto param = rest.substr(0, amp);
      rest.remove_prefix(amp == std::string_view::npos ? rest.size() : amp + 1);
      if (param.empty()) continue;
      const auto name = param.substr(0, param.find('='));
      if (is_tracking(name, options)) continue;
      if (!kept.empty()) kept.push_back('&');
      kept.append(param);
    }
    url.query = kept;
    url.has_query = !kept.empty();
  }
  if (options.strip_fragment) {
    url.has_fragment = false;
    url.fragment.clear();
  }
  return url.to_string();
}

std::vector<Outlet> load_outlets(const std::filesystem::path& path) {
  io::CsvReader reader(path);
  std::vector<std::string> f;
  std::vector<Outlet> out;
  bool first = true;
  while (reader.next(f)) {
    if (first && !f.empty() && f[0] == "outlet") {
      first = false;
      continue;
    }
    first = false;
    if (f.size() != 2 || f[0].empty() || f[1].empty()) {
      throw Error(ErrorCode::Parse, path.string() + ":" +
                                        std::to_string(reader.line_number()) +
                                        ": expected outlet,domain");
    }
    out.push_back({f[0], lower(f[1])});
  }
  return out;
}

std::optional<std::string> match_outlet(std::string_view url,
                                        std::span<const Outlet> outlets) {
  const auto parsed = parse_url(url);
  if (!parsed) {
    spdlog::warn("malformed url '{}' matches no outlet", url);
    return std::nullopt;
  }
  const std::string& host = parsed->host;
  const Outlet* best = nullptr;
  for (const auto& o : outlets) {
    const bool exact = host == o.domain;
    const bool sub = host.size() > o.domain.size() && host.ends_with(o.domain) &&
                     host[host.size() - o.domain.size() - 1] == '.';
    if ((exact || sub) && (best == nullptr || o.domain.size() > best->domain.size())) {
      best = &o;
    }
  }
  if (best == nullptr) return std::nullopt;
  return best->label;
}

namespace {

std::string redirect_key(std::string_view url) {
  CanonicalizationOptions keep_all;
  keep_all.tracking_params.clear();
  keep_all.tracking_prefixes.clear();
  auto canonical = canonicalize_url(url, keep_all);
  const auto sep = canonical.find("://");
  return sep == std::string::npos ? canonical : canonical.substr(sep + 3);
}

}  // namespace

StaticRedirectMap::StaticRedirectMap(const std::filesystem::path& csv) {
  io::CsvReader reader(csv);
  std::vector<std::string> f;
  bool first = true;
  while (reader.next(f)) {
    if (first && !f.empty() && f[0] == "short") {
      first = false;
      continue;
    }
    first = false;
    if (f.size() != 2 || f[0].empty() || f[1].empty()) {
      throw Error(ErrorCode::Parse, csv.string() + ":" +
                                        std::to_string(reader.line_number()) +
                                        ": expected short,long");
    }
    add(f[0], f[1]);
  }
}

void StaticRedirectMap::add(std::string_view from, std::string_view to) {
  table_[redirect_key(from)] = std::string(to);
}

std::optional<std::string> StaticRedirectMap::next_hop(const std::string& url) {
  const auto it = table_.find(redirect_key(url));
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

UrlResolver::UrlResolver(std::shared_ptr<RedirectSource> source,
                         ResolverOptions options)
    : source_(std::move(source)), options_(std::move(options)) {
  if (!source_) throw Error(ErrorCode::InvalidArgument, "resolver needs a source");
}

ResolveResult UrlResolver::resolve(const std::string& raw) {
  {
    std::shared_lock lock(mutex_);
    if (const auto it = cache_.find(raw); it != cache_.end()) return it->second;
  }
  auto result = resolve_uncached(raw);
  std::unique_lock lock(mutex_);
  return cache_.try_emplace(raw, std::move(result)).first->second;
}

ResolveResult UrlResolver::resolve_uncached(const std::string& raw) {
  ResolveResult result;
  std::string current = raw;
  try {
    for (;;) {
      auto next = source_->next_hop(current);
      if (!next) {
        result.resolved = true;
        result.url = canonicalize_url(current, options_.canonicalization);
        return result;
      }
      if (++result.hops > options_.max_hops) {
        result.error = "hop limit exceeded";
        break;
      }
      current = std::move(*next);
    }
  } catch (const Error& e) {
    result.error = e.what();
  }
  result.resolved = false;
  result.url = canonicalize_url(raw, options_.canonicalization);
  return result;
}

std::vector<ResolveResult> UrlResolver::resolve_all(std::span<const std::string> raws) {
  std::vector<std::string> distinct(raws.begin(), raws.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  const std::size_t workers =
      std::max<std::size_t>(1, std::min(options_.max_in_flight, distinct.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < distinct.size(); i = next++) resolve(distinct[i]);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
  }

  std::vector<ResolveResult> out;
  out.reserve(raws.size());
  std::shared_lock lock(mutex_);
  for (const auto& raw : raws) out.push_back(cache_.at(raw));
  return out;
}

std::size_t UrlResolver::cache_size() const {
  std::shared_lock lock(mutex_);
  return cache_.size();
}

}  // namespace carto
