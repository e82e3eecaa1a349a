#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "carto/error.hpp"
#include "carto/pipeline.hpp"

namespace fs = std::filesystem;
using namespace carto;

namespace {

int report_error(std::string_view code, const std::string& message, int status) {
  nlohmann::ordered_json j;
  j["error"] = {{"code", code}, {"message", message}};
  std::cerr << j.dump() << '\n';
  return status;
}

// `NAME=A,B` declares a union of survey parties pooled under NAME.
std::vector<PartyUnion> parse_unions(const std::vector<std::string>& specs) {
  std::vector<PartyUnion> out;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
      throw Error(ErrorCode::InvalidArgument, "union must look like NAME=A,B: " + s);
    }
    PartyUnion u{s.substr(0, eq), {}};
    std::string rest = s.substr(eq + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      const auto comma = rest.find(',', pos);
      const auto end = comma == std::string::npos ? rest.size() : comma;
      if (end > pos) u.members.push_back(rest.substr(pos, end - pos));
      pos = end + 1;
    }
    out.push_back(std::move(u));
  }
  return out;
}

kernels::Exec exec_of(bool serial) { return serial ? kernels::Exec::Serial : kernels::Exec::Parallel; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"carto: political space embedding and news-share cartography"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML or INI file; sections name subcommands");
  std::uint64_t seed = 42;
  fs::path out_dir = "out";
  std::string log_level = "info";
  bool serial = false;
  app.add_option("--seed", seed, "Seed for the solver start vector and synthetic data")
      ->capture_default_str();
  app.add_option("--out-dir", out_dir, "Root output directory; each stage writes a subdirectory")
      ->capture_default_str();
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->capture_default_str();
  app.add_flag("--serial", serial, "Use the serial reference kernels");

  // embed
  pipeline::EmbedParams ep;
  auto* embed = app.add_subcommand("embed", "Load the follow graph, run CA and screen dimensions");
  embed->add_option("--edges", ep.edges, "user<TAB>item edge list")->required();
  embed->add_option("--meta", ep.meta, "item_id,party,follower_count CSV")->required();
  embed->add_option("--dims", ep.n_dims, "Number of CA dimensions")->capture_default_str();
  embed->add_option("--min-follow", ep.min_follow, "Drop users following fewer items")
      ->capture_default_str();
  embed->add_option("--popularity-threshold", ep.popularity_threshold)->capture_default_str();
  embed->add_option("--variance-threshold", ep.variance_threshold)->capture_default_str();
  embed->add_option("--tol", ep.ca.tol, "Solver tolerance")->capture_default_str();
  embed->add_option("--max-restarts", ep.ca.max_restarts)->capture_default_str();
  bool lenient = false;
  embed->add_flag("--lenient", lenient, "Skip malformed input lines instead of failing");

  // align
  pipeline::AlignParams ap;
  std::optional<fs::path> embed_dir;
  std::vector<std::string> unions;
  bool no_refine = false;
  auto* align = app.add_subcommand("align", "Rotate the selected plane onto survey issue scores");
  align->add_option("--embed-dir", embed_dir, "Output of embed (default OUT/embed)");
  align->add_option("--meta", ap.meta, "item_id,party,follower_count CSV")->required();
  align->add_option("--party-scores", ap.party_scores, "party,issue,score,scale_min,scale_max CSV")
      ->required();
  align->add_option("--x-issue", ap.x_issue)->capture_default_str();
  align->add_option("--y-issues", ap.y_issues, "Candidate y issues (default: all others)")
      ->delimiter(',');
  align->add_option("--cutoff", ap.cutoff, "Minimum best correlation sum")->capture_default_str();
  align->add_option("--window", ap.window_deg, "Arc that selected optima must fit, degrees")
      ->capture_default_str();
  align->add_option("--step", ap.step_deg, "Scan step, degrees")->capture_default_str();
  align->add_flag("--no-refine", no_refine, "Skip golden-section refinement");
  align->add_option("--union", unions, "Pool parties: NAME=A,B (repeatable)");
  align->add_option("--split", ap.split, "Union names to keep split")->delimiter(',');

  // map
  pipeline::MapParams mp;
  std::optional<fs::path> align_dir;
  std::optional<std::int64_t> window_begin, window_end;
  auto* map = app.add_subcommand("map", "Resolve share URLs and place shares in the space");
  map->add_option("--align-dir", align_dir, "Output of align (default OUT/align)");
  map->add_option("--shares", mp.shares, "Share events, JSON lines")->required();
  map->add_option("--outlets", mp.outlets, "outlet,domain CSV")->required();
  map->add_option("--redirects", mp.redirects, "Offline short,long redirect table");
  map->add_flag("--online", mp.online, "Follow redirects over HTTP");
  map->add_option("--blocklist", mp.blocklist, "Account ids excluded from coverage");
  map->add_option("--window-begin", window_begin, "First timestamp of the collection window");
  map->add_option("--window-end", window_end, "Last timestamp of the collection window");
  map->add_option("--max-hops", mp.max_hops)->capture_default_str();
  map->add_option("--max-in-flight", mp.max_in_flight)->capture_default_str();
  map->add_option("--http-timeout", mp.http_timeout_s, "Seconds")->capture_default_str();

  // topics
  pipeline::TopicsParams tp;
  std::optional<fs::path> map_dir;
  auto* topics = app.add_subcommand("topics", "Tag shares with main topics and metatopics");
  topics->add_option("--map-dir", map_dir, "Output of map (default OUT/map)");
  topics->add_option("--doc-topics", tp.doc_topics, "doc_id,topic,prob CSV")->required();
  topics->add_option("--metatopics", tp.metatopic_map, "topic,metatopic CSV")->required();
  topics->add_option("--story-docs", tp.story_docs, "story_id,doc_id CSV")->required();
  topics->add_option("--threshold", tp.threshold, "Main topic threshold")->capture_default_str();

  // density
  pipeline::DensityParams dp;
  std::optional<fs::path> density_align, shares_dir;
  std::vector<double> bandwidth;
  std::string estimator = "kde";
  auto* density = app.add_subcommand("density", "Density grids and figures");
  density->add_option("--align-dir", density_align, "Output of align (default OUT/align)");
  density->add_option("--shares-dir", shares_dir,
                      "Output of topics or map (default OUT/topics, else OUT/map)");
  density->add_option("--nx", dp.nx)->capture_default_str();
  density->add_option("--ny", dp.ny)->capture_default_str();
  density->add_option("--bandwidth", bandwidth, "hx,hy (default: Scott's rule)")
      ->delimiter(',')
      ->expected(2);
  density->add_option("--estimator", estimator, "kde or histogram")->capture_default_str();
  density->add_option("--outlets", dp.outlets, "Outlets to plot (default: most shared)")
      ->delimiter(',');
  density->add_option("--max-outlets", dp.max_outlets)->capture_default_str();
  density->add_option("--metatopics", dp.metatopics, "Metatopic panels (default: two most frequent)")
      ->delimiter(',');
  density->add_option("--topic", dp.topic, "Topic for the topic-versus-metatopic figure");

  // synth
  pipeline::SynthParams sp;
  std::size_t n_users = 20000, n_items = 120;
  auto* synth = app.add_subcommand("synth", "Write a synthetic input world");
  synth->add_option("--users", n_users)->capture_default_str();
  synth->add_option("--items", n_items)->capture_default_str();
  synth->add_option("--events", sp.world.n_events)->capture_default_str();
  synth->add_option("--outlets", sp.world.n_outlets)->capture_default_str();
  synth->add_option("--popularity-scale", sp.world.network.popularity_scale)->capture_default_str();
  synth->add_option("--casual-fraction", sp.world.network.casual_fraction)->capture_default_str();
  synth->add_option("--distance-exponent", sp.world.network.distance_exponent)
      ->capture_default_str();
  synth->add_option("--topics", sp.world.n_topics)->capture_default_str();
  synth->add_option("--metatopics", sp.world.n_metatopics)->capture_default_str();

  // pipeline
  pipeline::FullRunParams fp;
  auto* all = app.add_subcommand("pipeline", "Run every stage on a synthetic world directory");
  all->add_option("--world", fp.world_dir, "Directory written by synth")->required();
  all->add_option("--dims", fp.n_dims)->capture_default_str();
  all->add_option("--min-follow", fp.min_follow)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what(), 2);
  }

  try {
    const auto level = spdlog::level::from_str(log_level);
    spdlog::set_level(level);
    spdlog::set_default_logger(spdlog::default_logger());
    const auto exec = exec_of(serial);

    if (*embed) {
      ep.out_dir = out_dir / "embed";
      ep.strict = !lenient;
      ep.ca.seed = seed;
      ep.ca.exec = exec;
      pipeline::run_embed(ep);
    } else if (*align) {
      ap.embed_dir = embed_dir.value_or(out_dir / "embed");
      ap.out_dir = out_dir / "align";
      ap.refine = !no_refine;
      ap.unions = parse_unions(unions);
      pipeline::run_align(ap);
    } else if (*map) {
      mp.align_dir = align_dir.value_or(out_dir / "align");
      mp.out_dir = out_dir / "map";
      if (window_begin) mp.window.begin = *window_begin;
      if (window_end) mp.window.end = *window_end;
      pipeline::run_map(mp);
    } else if (*topics) {
      tp.map_dir = map_dir.value_or(out_dir / "map");
      tp.out_dir = out_dir / "topics";
      pipeline::run_topics(tp);
    } else if (*density) {
      dp.align_dir = density_align.value_or(out_dir / "align");
      if (shares_dir) {
        dp.shares_dir = *shares_dir;
      } else {
        dp.shares_dir = fs::exists(out_dir / "topics" / "tagged_shares.csv") ? out_dir / "topics"
                                                                             : out_dir / "map";
      }
      dp.out_dir = out_dir / "density";
      if (!bandwidth.empty()) dp.bandwidth = Eigen::Vector2d(bandwidth[0], bandwidth[1]);
      dp.estimator = estimator_from_string(estimator);
      dp.exec = exec;
      pipeline::run_density(dp);
    } else if (*synth) {
      auto& net = sp.world.network;
      const auto keep = net;
      net = SyntheticConfig::six_party(n_users, n_items);
      net.popularity_scale = keep.popularity_scale;
      net.casual_fraction = keep.casual_fraction;
      net.distance_exponent = keep.distance_exponent;
      net.seed = seed;
      net.exec = exec;
      sp.world.seed = seed;
      sp.out_dir = out_dir / "world";
      pipeline::run_synth(sp);
    } else if (*all) {
      fp.out_dir = out_dir;
      fp.exec = exec;
      fp.seed = seed;
      pipeline::run_all(fp);
    }
  } catch (const Error& e) {
    return report_error(to_string(e.code()), e.what(), 1);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 1);
  }
  return 0;
}
