#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace carto {

struct Url {
  std::string scheme;
  std::string host;
  std::optional<int> port;
  std::string path;
  std::string query;
  std::string fragment;
  bool has_query = false;
  bool has_fragment = false;

  std::string to_string() const;
};

/// Parses absolute http(s) URLs. A missing scheme ("bit.ly/abc") is read as
/// http. Returns nullopt for anything without a usable host.
std::optional<Url> parse_url(std::string_view text);

struct CanonicalizationOptions {
  /// Query parameters dropped by exact (case-insensitive) name.
  std::vector<std::string> tracking_params{"fbclid", "gclid", "dclid", "msclkid",
                                           "igshid", "mc_cid", "mc_eid",
                                           "ref_src", "wt_mc", "wt_zmc"};
  /// Query parameters dropped by name prefix.
  std::vector<std::string> tracking_prefixes{"utm_"};
  bool strip_fragment = true;
};

/// Lowercases scheme and host, drops default ports and tracking parameters,
/// removes the fragment and a trailing slash on non-root paths. Idempotent.
/// Unparseable input is returned unchanged.
std::string canonicalize_url(std::string_view url,
                             const CanonicalizationOptions& options = {});

struct Outlet {
  std::string label;
  std::string domain;
};

/// Reads `outlet,domain`.
std::vector<Outlet> load_outlets(const std::filesystem::path& path);

/// Longest outlet domain equal to the host or a parent domain of it.
std::optional<std::string> match_outlet(std::string_view url,
                                        std::span<const Outlet> outlets);

/// One redirect hop. Returns the Location target, or nullopt when `url` is
/// final. Throws carto::Error(Io) on transport failure.
class RedirectSource {
 public:
  virtual ~RedirectSource() = default;
  virtual std::optional<std::string> next_hop(const std::string& url) = 0;
};

/// Offline redirect table read from `short,long` rows. Lookups ignore the
/// scheme and host case.
class StaticRedirectMap final : public RedirectSource {
 public:
  StaticRedirectMap() = default;
  explicit StaticRedirectMap(const std::filesystem::path& csv);

  void add(std::string_view from, std::string_view to);
  std::size_t size() const noexcept { return table_.size(); }
  std::optional<std::string> next_hop(const std::string& url) override;

 private:
  std::unordered_map<std::string, std::string> table_;
};

/// Live resolver issuing HEAD requests (GET when HEAD is refused).
class HttpRedirectSource final : public RedirectSource {
 public:
  explicit HttpRedirectSource(int timeout_seconds = 10);
  std::optional<std::string> next_hop(const std::string& url) override;

 private:
  int timeout_seconds_;
};

struct ResolveResult {
  std::string url;  // canonical resolved url, or canonical raw url on failure
  bool resolved = false;
  int hops = 0;
  std::string error;
};

struct ResolverOptions {
  int max_hops = 5;
  std::size_t max_in_flight = 8;
  CanonicalizationOptions canonicalization;
};

/// Follows redirects with a bounded hop count and caches results by raw url.
/// Safe for concurrent use.
class UrlResolver {
 public:
  UrlResolver(std::shared_ptr<RedirectSource> source, ResolverOptions options = {});

  ResolveResult resolve(const std::string& raw);
  /// Resolves distinct urls with at most `max_in_flight` concurrent lookups.
  std::vector<ResolveResult> resolve_all(std::span<const std::string> raws);

  std::size_t cache_size() const;
  const ResolverOptions& options() const noexcept { return options_; }

 private:
  ResolveResult resolve_uncached(const std::string& raw);

  std::shared_ptr<RedirectSource> source_;
  ResolverOptions options_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, ResolveResult> cache_;
};

}  // namespace carto
