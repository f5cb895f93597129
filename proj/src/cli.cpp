#include "fstress/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "fstress/data_ingest.hpp"
#include "fstress/error.hpp"
#include "fstress/logo.hpp"
#include "fstress/regression.hpp"
#include "fstress/seeding.hpp"
#include "fstress/stress.hpp"
#include "text_util.hpp"

#ifndef FSTRESS_VERSION
#define FSTRESS_VERSION "0.0.0"
#endif

namespace fstress::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using detail::format_double;

std::string_view version() { return FSTRESS_VERSION; }

namespace {

// Stream purposes for seeds derived from the master seed.
constexpr std::uint64_t kStatesStream = 1;
constexpr std::uint64_t kSearchStream = 2;
constexpr std::uint64_t kProfileStream = 3;

std::string_view to_string(IccConfig::Init init) { return init == IccConfig::Init::random ? "random" : "contiguous"; }

void check_keys(const json& doc, const json& reference, const std::string& prefix) {
  if (!doc.is_object()) throw ValidationError("config: '" + prefix + "' must be an object");
  for (const auto& [key, value] : doc.items()) {
    const auto it = reference.find(key);
    if (it == reference.end()) throw ValidationError("config: unknown key '" + prefix + key + "'");
    if (it->is_object()) check_keys(value, *it, prefix + key + ".");
  }
}

template <class T>
T get_value(const json& doc, const char* pointer) {
  try {
    return doc.at(json::json_pointer(pointer)).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("config: bad value at ") + pointer);
  }
}

std::string hex(const unsigned char* data, unsigned int n) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * n);
  for (unsigned int i = 0; i < n; ++i) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 15]);
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing input: cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes artifacts under the output directory and keeps the manifest.
class ArtifactWriter {
 public:
  ArtifactWriter(fs::path dir, json meta) : dir_(std::move(dir)), meta_(std::move(meta)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw ValidationError("output directory not writable: " + dir_.string());
    header_ = "# fstress " + meta_["version"].get<std::string>() + " command=" + meta_["command"].get<std::string>() +
              " config_hash=" + meta_["config_hash"].get<std::string>() +
              " seed=" + std::to_string(meta_["seed"].get<std::uint64_t>()) + " modules=";
    bool first = true;
    for (const auto& [name, ver] : meta_["modules"].items()) {
      header_ += (first ? "" : ";") + name + ":" + ver.get<std::string>();
      first = false;
    }
    header_ += '\n';
  }

  void csv(const std::string& rel, const std::string& body) { write(rel, header_ + body); }

  void json_doc(const std::string& rel, json doc) {
    doc["meta"] = meta_;
    write(rel, doc.dump(2) + "\n");
  }

  void add_input(const std::string& role, const fs::path& path) {
    inputs_.push_back({{"role", role}, {"path", path.string()}, {"sha256", sha256_hex(read_file(path))}});
  }

  void manifest(const std::string& error) {
    json doc;
    doc["status"] = error.empty() ? "complete" : "partial";
    if (!error.empty()) doc["error"] = error;
    doc["inputs"] = inputs_;
    doc["files"] = files_;
    doc["meta"] = meta_;
    const std::string text = doc.dump(2) + "\n";
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    out << text;
    if (!out) throw DataError("cannot write " + (dir_ / "manifest.json").string());
  }

  const fs::path& dir() const { return dir_; }

 private:
  void write(const std::string& rel, const std::string& bytes) {
    const fs::path path = dir_ / rel;
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    out << bytes;
    out.close();
    if (!out) throw DataError("cannot write " + path.string());
    files_.push_back({{"path", rel}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
  }

  fs::path dir_;
  json meta_;
  std::string header_;
  json files_ = json::array();
  json inputs_ = json::array();
};

// One analysis window: the full sample or the days of one market state.
struct Period {
  std::string name;
  std::vector<int> days;
  ReturnsMatrix returns;  // standardized over the window
  FilteringNetwork net;
  CliqueTree tree;
  SparsePrecisionModel model;
  CentralityVector cent;
  std::optional<SectorLinkStats> links;
};

class Session {
 public:
  Session(const RunConfig& cfg, ArtifactWriter& out) : cfg_(cfg), out_(out) {}

  const RunConfig& cfg() const { return cfg_; }
  ArtifactWriter& out() { return out_; }

  void load() {
    if (table_) return;
    if (!cfg_.synth.empty() && !cfg_.prices.empty()) throw ValidationError("give either --prices or --synth, not both");
    if (!cfg_.synth.empty()) {
      out_.add_input("synth", cfg_.synth);
      synth_ = load_synth_config(cfg_.synth);
      raw_table_ = synth_generate(*synth_, synth_->seed);
      truth_ = synth_regime_labels(*synth_);
    } else if (!cfg_.prices.empty()) {
      out_.add_input("prices", cfg_.prices);
      IngestConfig ic;
      ic.layout = cfg_.layout == "long" ? IngestConfig::Layout::long_format : IngestConfig::Layout::wide;
      ic.delimiter = cfg_.delimiter[0];
      raw_table_ = load_price_table(cfg_.prices, ic);
    } else {
      throw ValidationError("no input: pass --prices or --synth");
    }
    table_ = filter_full_history(*raw_table_);
    if (!cfg_.sectors.empty()) {
      out_.add_input("sectors", cfg_.sectors);
      sectors_ = load_sector_map(cfg_.sectors, table_->tickers);
    } else if (synth_) {
      sectors_ = synth_sector_map(*synth_, table_->tickers);
    }
    returns_ = compute_log_returns(*table_);
  }

  const PriceTable& raw_table() { return load(), *raw_table_; }
  const PriceTable& table() { return load(), *table_; }
  const ReturnsMatrix& returns() { return load(), *returns_; }
  const std::optional<SynthConfig>& synth() { return load(), synth_; }
  const std::vector<int>& truth() { return load(), truth_; }
  const SectorMap* sectors() { return load(), sectors_ ? &*sectors_ : nullptr; }

  const SectorMap& require_sectors(const char* stage) {
    if (!sectors()) throw ValidationError(std::string(stage) + " needs a sector map: pass --sectors");
    return *sectors_;
  }

  std::string sector_of(int node) {
    const SectorMap* s = sectors();
    return s ? s->labels[static_cast<std::size_t>(node)] : std::string();
  }

  TmfgOptions tmfg_options() const { return {cfg_.gain, cfg_.seed_candidates}; }

  const Period& full() {
    if (!full_) {
      full_.emplace();
      full_->name = "full";
      full_->days.resize(static_cast<std::size_t>(returns().num_days()));
      for (std::size_t t = 0; t < full_->days.size(); ++t) full_->days[t] = static_cast<int>(t);
      fit_period(*full_, standardize(returns()), nullptr);
    }
    return *full_;
  }

  const MultiRestartResult& states() {
    if (!states_) {
      IccConfig icc = cfg_.icc;
      icc.seed = derive_seed(cfg_.seed, kStatesStream);
      const auto& std_returns = full().returns;
      TreeBuilder builder;
      if (icc.reuse_global_network) {
        auto shared = std::make_shared<CliqueTree>(full().tree);
        builder = [shared](const ReturnsMatrix&) { return *shared; };
      } else {
        builder = tmfg_tree_builder(tmfg_options());
      }
      states_ = multi_restart_cluster(std_returns, builder, icc);
    }
    return *states_;
  }

  const std::vector<Period>& periods() {
    if (!periods_) {
      periods_.emplace();
      periods_->push_back(full());
      if (cfg_.per_state) {
        const auto& best = states().best;
        for (int k = 0; k < best.states; ++k) {
          Period per;
          per.name = "state" + std::to_string(k + 1);
          per.days = best.state_days(k);
          const ReturnsMatrix days = returns().select_days(per.days);
          fit_period(per, standardize(days), cfg_.icc.reuse_global_network ? &full() : nullptr);
          periods_->push_back(std::move(per));
        }
      }
    }
    return *periods_;
  }

 private:
  void fit_period(Period& per, ReturnsMatrix std_returns, const Period* shared_network) {
    per.returns = std::move(std_returns);
    if (shared_network) {
      per.net = shared_network->net;
      per.tree = shared_network->tree;
    } else {
      per.net = build_tmfg(correlation_matrix(per.returns), tmfg_options());
      per.tree = clique_forest(per.net);
    }
    per.model = estimate_precision(per.returns, per.tree);
    per.model.id = per.name;
    per.cent = centrality(per.net, cfg_.centrality);
    if (sectors()) per.links = sector_link_stats(per.net, *sectors_, per.cent);
  }

  const RunConfig& cfg_;
  ArtifactWriter& out_;
  std::optional<PriceTable> raw_table_;
  std::optional<PriceTable> table_;
  std::optional<ReturnsMatrix> returns_;
  std::optional<SynthConfig> synth_;
  std::vector<int> truth_;
  std::optional<SectorMap> sectors_;
  std::optional<Period> full_;
  std::optional<MultiRestartResult> states_;
  std::optional<std::vector<Period>> periods_;
};

// Stages ----------------------------------------------------------------------

void stage_ingest(Session& s) {
  const auto& table = s.table();
  const auto& raw = s.raw_table();
  s.out().csv("prices.csv", price_table_csv(table));
  json doc;
  doc["dates"] = table.num_dates();
  doc["first_date"] = format_date(table.dates.front());
  doc["last_date"] = format_date(table.dates.back());
  doc["tickers_loaded"] = raw.num_tickers();
  doc["tickers_kept"] = table.num_tickers();
  json dropped = json::array();
  for (const auto& t : raw.tickers) {
    if (std::find(table.tickers.begin(), table.tickers.end(), t) == table.tickers.end()) dropped.push_back(t);
  }
  doc["dropped"] = dropped;
  const auto& r = s.returns();
  json moments = json::array();
  for (Eigen::Index j = 0; j < r.num_assets(); ++j) {
    moments.push_back({{"ticker", r.tickers[static_cast<std::size_t>(j)]}, {"mean", r.means[j]}, {"stddev", r.stddevs[j]}});
  }
  doc["return_moments"] = moments;
  if (const SectorMap* sec = s.sectors()) {
    s.out().csv("sectors.csv", sector_map_csv(*sec));
    json counts = json::array();
    for (const auto& [label, n] : sec->counts) counts.push_back({{"sector", label}, {"count", n}});
    doc["sector_counts"] = counts;
  }
  if (s.synth()) {
    doc["synthetic_seed"] = s.synth()->seed;
    std::ostringstream regimes;
    regimes << "date,regime\n";
    for (std::size_t t = 0; t < s.truth().size(); ++t) {
      regimes << format_date(r.dates[t]) << ',' << s.truth()[t] + 1 << '\n';
    }
    s.out().csv("regimes.csv", regimes.str());
  }
  s.out().json_doc("ingest.json", doc);
}

std::string centrality_csv(Session& s, const Period& per) {
  std::ostringstream out;
  out << "node,ticker,sector,degree,centrality\n";
  const auto adj = per.net.adjacency();
  for (int i = 0; i < per.net.p; ++i) {
    out << i << ',' << per.returns.tickers[static_cast<std::size_t>(i)] << ',' << s.sector_of(i) << ','
        << adj[static_cast<std::size_t>(i)].size() << ',' << format_double(per.cent.scores[static_cast<std::size_t>(i)])
        << '\n';
  }
  return out.str();
}

std::string sector_links_csv(const SectorLinkStats& stats) {
  std::ostringstream out;
  out << "sector,size,internal_links,incident_links,internal_fraction,mean_centrality,log_mean_centrality\n";
  for (const auto& r : stats.rows) {
    out << r.sector << ',' << r.size << ',' << r.internal_links << ',' << r.incident_links << ','
        << format_double(r.internal_fraction) << ',' << format_double(r.mean_centrality) << ','
        << format_double(r.log_mean_centrality) << '\n';
  }
  return out.str();
}

void stage_network(Session& s) {
  const auto& per = s.full();
  std::vector<std::string> labels = per.returns.tickers;
  FilteringNetwork named = per.net;
  named.labels = labels;
  s.out().csv("network/edges.csv", edge_list_csv(named));
  s.out().json_doc("network/clique_tree.json", json::parse(clique_tree_json(per.tree)));
  s.out().json_doc("network/model.json", json::parse(model_json(per.model)));
  s.out().csv("network/centrality.csv", centrality_csv(s, per));
  if (per.links) s.out().csv("network/sector_links.csv", sector_links_csv(*per.links));
  json doc;
  doc["p"] = per.net.p;
  doc["edges"] = per.net.edges.size();
  doc["gain"] = to_string(per.net.gain);
  doc["retained_weight"] = per.net.retained_weight;
  doc["seed_clique"] = per.net.seed;
  doc["centrality"] = to_string(per.cent.kind);
  doc["log_det_precision"] = per.model.log_det();
  doc["ridge_used"] = per.model.ridge_used();
  if (per.links) doc["warnings"] = per.links->warnings;
  s.out().json_doc("network/summary.json", doc);
}

void stage_states(Session& s) {
  const auto& res = s.states();
  const auto& best = res.best;
  const auto& dates = s.returns().dates;
  s.out().csv("states/partition.csv", partition_csv(best, dates));

  // Price-with-state series: equal-weight log index level of the universe.
  const auto& table = s.table();
  std::ostringstream series;
  series << "date,state,log_level\n";
  for (std::size_t t = 0; t < best.labels.size(); ++t) {
    const Eigen::Index row = static_cast<Eigen::Index>(t) + 1;
    const double level = (table.prices.row(row).array() / table.prices.row(0).array()).log().mean();
    series << format_date(dates[t]) << ',' << best.labels[t] + 1 << ',' << format_double(level) << '\n';
  }
  s.out().csv("states/state_series.csv", series.str());

  json doc;
  doc["states"] = best.states;
  doc["gamma"] = best.gamma;
  doc["total_likelihood"] = best.total_likelihood;
  doc["iterations"] = best.iterations;
  doc["converged"] = best.converged;
  doc["switches"] = count_switches(best.labels);
  doc["mean_segment_length"] = best.mean_segment_length();
  json days = json::array();
  for (int k = 0; k < best.states; ++k) days.push_back(best.state_days(k).size());
  doc["days_per_state"] = days;
  doc["best_restart"] = res.best_restart;
  json restarts = json::array();
  for (const auto& r : res.restarts) {
    restarts.push_back({{"seed", r.seed},
                        {"total_likelihood", r.total_likelihood},
                        {"iterations", r.iterations},
                        {"converged", r.converged}});
  }
  doc["restarts"] = restarts;
  json agreement = json::array();
  for (Eigen::Index i = 0; i < res.agreement.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < res.agreement.cols(); ++j) row.push_back(res.agreement(i, j));
    agreement.push_back(row);
  }
  doc["restart_agreement_ari"] = agreement;
  json trace = json::array();
  for (const auto& it : best.trace) {
    trace.push_back({{"total_likelihood", it.total_likelihood},
                     {"changed_days", it.changed_days},
                     {"reseeded", it.reseeded}});
  }
  doc["trace"] = trace;
  doc["events"] = best.events;
  if (!s.truth().empty()) {
    const auto& truth = s.truth();
    const int kt = *std::max_element(truth.begin(), truth.end()) + 1;
    if (std::max(kt, best.states) <= 8) doc["planted_regime_accuracy"] = matched_accuracy(best.labels, truth);
    doc["planted_regime_ari"] = adjusted_rand_index(best.labels, truth);
  }
  s.out().json_doc("states/states.json", doc);
}

std::string node_profile_csv(Session& s, const Period& per, const std::vector<NodeScore>& scores) {
  std::ostringstream out;
  out << "node,ticker,sector,centrality,impact,response\n";
  for (const auto& n : scores) {
    out << n.node << ',' << per.returns.tickers[static_cast<std::size_t>(n.node)] << ',' << s.sector_of(n.node) << ','
        << format_double(n.centrality) << ',' << format_double(n.impact) << ',' << format_double(n.response) << '\n';
  }
  return out.str();
}

std::string sector_profile_csv(const SectorProfile& prof) {
  std::ostringstream out;
  out << "sector,size,internal_fraction,mean_centrality,log_centrality,impact,response\n";
  for (const auto& r : prof.rows) {
    out << r.sector << ',' << r.size << ',' << format_double(r.internal_fraction) << ','
        << format_double(r.mean_centrality) << ',' << format_double(r.log_centrality) << ',' << format_double(r.impact)
        << ',' << format_double(r.response) << '\n';
  }
  return out.str();
}

void stage_stress(Session& s) {
  const auto& periods = s.periods();
  for (std::size_t k = 0; k < periods.size(); ++k) {
    const auto& per = periods[k];
    const std::string dir = "stress/" + per.name + "/";
    for (int size : s.cfg().profile_sizes) {
      if (size >= per.model.size()) {
        throw ValidationError("profile size " + std::to_string(size) + " must be below the universe size " +
                              std::to_string(per.model.size()));
      }
    }
    s.out().csv(dir + "node_profile.csv", node_profile_csv(s, per, single_node_scan(per.model, per.cent)));
    const auto groups = random_group_profile(per.model, per.cent, s.cfg().profile_sizes, s.cfg().profile_trials,
                                             derive_seed(derive_seed(s.cfg().seed, kProfileStream), k));
    s.out().csv(dir + "group_profile.csv", group_profile_csv(groups));
    s.out().csv(dir + "group_bins.csv", group_bins_csv(groups));
    if (per.links) {
      const auto prof = sector_profile(per.model, *per.links);
      s.out().csv(dir + "sector_profile.csv", sector_profile_csv(prof));
      std::vector<ImpactReport> reports;
      for (const auto& row : prof.rows) {
        reports.push_back(impact(per.model, row.members));
        reports.push_back(response(per.model, row.members));
      }
      s.out().csv(dir + "sector_reports.csv", impact_reports_csv(reports, per.returns.tickers, s.cfg().seed));
    }
  }
}

void stage_regress(Session& s) {
  s.require_sectors("regress");
  json periods = json::array();
  for (const auto& per : s.periods()) {
    const auto prof = sector_profile(per.model, *per.links);
    const auto [imp, resp] = sector_regression(prof);
    periods.push_back({{"period", per.name},
                       {"sectors", prof.rows.size()},
                       {"excluded", prof.excluded},
                       {"impact", json::parse(regression_json(imp))},
                       {"response", json::parse(regression_json(resp))}});
  }
  s.out().json_doc("regressions.json", {{"periods", periods}});
}

void stage_group_search(Session& s) {
  const auto& periods = s.periods();
  json out = json::array();
  for (std::size_t k = 0; k < periods.size(); ++k) {
    const auto& per = periods[k];
    const auto res = greedy_max_impact_group(per.model, s.cfg().group_size,
                                             derive_seed(derive_seed(s.cfg().seed, kSearchStream), k),
                                             s.cfg().search_restarts);
    const auto& tickers = per.returns.tickers;
    json members = json::array();
    for (int node : res.group) {
      members.push_back({{"node", node}, {"ticker", tickers[static_cast<std::size_t>(node)]}, {"sector", s.sector_of(node)}});
    }
    json restarts = json::array();
    for (const auto& r : res.restarts) {
      json names = json::array();
      for (int node : r.group) names.push_back(tickers[static_cast<std::size_t>(node)]);
      restarts.push_back({{"seed", r.seed}, {"impact", r.impact}, {"iterations", r.iterations}, {"members", names}});
    }
    json history = json::array();
    for (const auto& sw : res.history) {
      history.push_back({{"removed", tickers[static_cast<std::size_t>(sw.removed)]},
                         {"added", tickers[static_cast<std::size_t>(sw.added)]},
                         {"impact", sw.impact}});
    }
    out.push_back({{"period", per.name},
                   {"days", per.days.size()},
                   {"n", s.cfg().group_size},
                   {"impact", res.impact},
                   {"response", response(per.model, res.group).value},
                   {"members", members},
                   {"best_restart", res.best_restart},
                   {"iterations", res.iterations},
                   {"restarts", restarts},
                   {"history", history}});
  }
  s.out().json_doc("group_search.json", {{"periods", out}});
}

// Flags -----------------------------------------------------------------------

enum class FlagKind { text, integer, unsigned_integer, real, integer_list, boolean };

struct FlagSpec {
  const char* name;
  const char* pointer;
  FlagKind kind;
  const char* help;
};

constexpr FlagSpec kFlags[] = {
    {"--prices", "/prices", FlagKind::text, "Price table CSV"},
    {"--sectors", "/sectors", FlagKind::text, "Sector map CSV (ticker,sector)"},
    {"--synth", "/synth", FlagKind::text, "Synthetic data config JSON, instead of --prices"},
    {"--layout", "/layout", FlagKind::text, "Price table layout: wide or long"},
    {"--delimiter", "/delimiter", FlagKind::text, "Field delimiter"},
    {"--out-dir", "/out_dir", FlagKind::text, "Output directory"},
    {"--centrality", "/centrality", FlagKind::text, "degree, eigenvector or betweenness"},
    {"--gain", "/gain", FlagKind::text, "TMFG edge gain: raw, absolute or squared"},
    {"--seed-candidates", "/seed_candidates", FlagKind::integer, "TMFG seed cliques tried"},
    {"--seed", "/seed", FlagKind::unsigned_integer, "Master seed"},
    {"--states", "/icc/states", FlagKind::integer, "Number of market states"},
    {"--gamma", "/icc/gamma", FlagKind::real, "State switching penalty"},
    {"--max-iterations", "/icc/max_iterations", FlagKind::integer, "Clustering iterations per restart"},
    {"--icc-restarts", "/icc/restarts", FlagKind::integer, "Clustering restarts"},
    {"--min-days", "/icc/min_days", FlagKind::integer, "Minimum days per state (0: automatic)"},
    {"--init", "/icc/init", FlagKind::text, "Clustering start: random or contiguous"},
    {"--reuse-global-network", "/icc/reuse_global_network", FlagKind::boolean, "Share the full-sample network"},
    {"--group-size", "/group_search/n", FlagKind::integer, "Size of the searched group"},
    {"--search-restarts", "/group_search/restarts", FlagKind::integer, "Group search restarts"},
    {"--profile-sizes", "/profile/sizes", FlagKind::integer_list, "Random group sizes, comma separated"},
    {"--profile-trials", "/profile/trials", FlagKind::integer, "Random groups per size"},
    {"--per-state", "/per_state", FlagKind::boolean, "Repeat analyses for every market state"},
    {"--emit-edges", "/emit/edges", FlagKind::boolean, "Write network artifacts"},
    {"--emit-profiles", "/emit/profiles", FlagKind::boolean, "Write stress profiles"},
    {"--emit-partitions", "/emit/partitions", FlagKind::boolean, "Write market state artifacts"},
    {"--emit-regressions", "/emit/regressions", FlagKind::boolean, "Write sector regressions"},
    {"--emit-group-search", "/emit/group_search", FlagKind::boolean, "Write group search results"},
};

struct FlagValues {
  std::string config;
  std::deque<std::string> text;
  std::deque<bool> flags;  // deque keeps references stable
  std::vector<std::pair<const FlagSpec*, CLI::Option*>> options;
  std::vector<std::pair<const FlagSpec*, std::size_t>> slots;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON run configuration; flags override it");
    for (const auto& flag : kFlags) {
      if (flag.kind == FlagKind::boolean) {
        flags.push_back(false);
        const std::string base = std::string(flag.name).substr(2);
        auto* opt = app->add_flag("--" + base + ",!--no-" + base, flags.back(), flag.help);
        slots.emplace_back(&flag, flags.size() - 1);
        options.emplace_back(&flag, opt);
      } else {
        text.emplace_back();
        auto* opt = app->add_option(flag.name, text.back(), flag.help);
        slots.emplace_back(&flag, text.size() - 1);
        options.emplace_back(&flag, opt);
      }
    }
  }

  json patch() const {
    json doc = json::object();
    for (std::size_t i = 0; i < options.size(); ++i) {
      const auto* flag = options[i].first;
      if (options[i].second->count() == 0) continue;
      const std::size_t slot = slots[i].second;
      const json::json_pointer ptr(flag->pointer);
      const std::string& value = flag->kind == FlagKind::boolean ? std::string() : text[slot];
      const auto bad = [&] { return ValidationError(std::string("invalid value for ") + flag->name + ": '" + value + "'"); };
      switch (flag->kind) {
        case FlagKind::text:
          doc[ptr] = value;
          break;
        case FlagKind::integer:
        case FlagKind::unsigned_integer: {
          std::uint64_t u = 0;
          std::int64_t v = 0;
          const char* end = value.data() + value.size();
          const bool ok = flag->kind == FlagKind::integer ? std::from_chars(value.data(), end, v).ptr == end
                                                          : std::from_chars(value.data(), end, u).ptr == end;
          if (!ok || value.empty()) throw bad();
          if (flag->kind == FlagKind::integer) {
            doc[ptr] = v;
          } else {
            doc[ptr] = u;
          }
          break;
        }
        case FlagKind::real: {
          const auto v = detail::parse_double(value);
          if (!v) throw bad();
          doc[ptr] = *v;
          break;
        }
        case FlagKind::integer_list: {
          json list = json::array();
          for (const auto& item : detail::split_record(value, ',')) {
            int v = 0;
            const auto t = detail::trim(item);
            if (t.empty() || std::from_chars(t.data(), t.data() + t.size(), v).ptr != t.data() + t.size()) throw bad();
            list.push_back(v);
          }
          doc[ptr] = list;
          break;
        }
        case FlagKind::boolean:
          doc[ptr] = flags[slot];
          break;
      }
    }
    return doc;
  }
};

json load_config_file(const std::string& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config " + path + " must hold a JSON object");
  // Input paths in a config file are relative to the file.
  const fs::path base = fs::path(path).parent_path();
  for (const char* key : {"prices", "sectors", "synth"}) {
    if (doc.contains(key) && doc[key].is_string()) {
      const fs::path p = doc[key].get<std::string>();
      if (!p.empty() && p.is_relative()) doc[key] = (base / p).lexically_normal().string();
    }
  }
  return doc;
}

using Stage = void (*)(Session&);

struct Command {
  const char* name;
  const char* help;
  std::vector<Stage> stages;
};

std::vector<Stage> pipeline_stages(const RunConfig& cfg) {
  std::vector<Stage> stages{stage_ingest};
  if (cfg.emit.edges) stages.push_back(stage_network);
  if (cfg.emit.partitions) stages.push_back(stage_states);
  if (cfg.emit.profiles) stages.push_back(stage_stress);
  if (cfg.emit.regressions) stages.push_back(stage_regress);
  if (cfg.emit.group_search) stages.push_back(stage_group_search);
  return stages;
}

int execute(const std::string& command, const RunConfig& cfg, const std::vector<Stage>& stages) {
  json meta;
  meta["tool"] = "fstress";
  meta["version"] = std::string(version());
  meta["command"] = command;
  meta["config_hash"] = config_hash(cfg);
  meta["seed"] = cfg.seed;
  json modules = json::object();
  for (const char* m : {"data_ingest", "tmfg", "logo", "stress", "icc", "regression", "cli"}) {
    modules[m] = std::string(version());
  }
  meta["modules"] = modules;
  ArtifactWriter out(cfg.out_dir, meta);
  out.json_doc("config.json", config_to_json(cfg));
  Session session(cfg, out);
  try {
    for (Stage stage : stages) stage(session);
  } catch (const std::exception& e) {
    out.manifest(e.what());
    throw;
  }
  out.manifest("");
  return kExitOk;
}

}  // namespace

json default_config_json() {
  const RunConfig d;
  json j = config_to_json(d);
  j["out_dir"] = "";
  return j;
}

RunConfig config_from_json(const json& doc) {
  const json defaults = default_config_json();
  check_keys(doc, defaults, "");
  json eff = defaults;
  eff.merge_patch(doc);

  RunConfig cfg;
  cfg.prices = get_value<std::string>(eff, "/prices");
  cfg.sectors = get_value<std::string>(eff, "/sectors");
  cfg.synth = get_value<std::string>(eff, "/synth");
  cfg.layout = get_value<std::string>(eff, "/layout");
  if (cfg.layout != "wide" && cfg.layout != "long") throw ValidationError("layout must be 'wide' or 'long'");
  cfg.delimiter = get_value<std::string>(eff, "/delimiter");
  if (cfg.delimiter.size() != 1) throw ValidationError("delimiter must be a single character");
  cfg.out_dir = get_value<std::string>(eff, "/out_dir");
  if (cfg.out_dir.empty()) {
    const char* env = std::getenv(kOutDirEnv);
    cfg.out_dir = env && *env ? env : "fstress_out";
  }
  cfg.centrality = parse_centrality_kind(get_value<std::string>(eff, "/centrality"));
  cfg.gain = parse_gain_kind(get_value<std::string>(eff, "/gain"));
  cfg.seed_candidates = get_value<int>(eff, "/seed_candidates");
  if (cfg.seed_candidates < 1) throw ValidationError("seed_candidates must be at least 1");
  cfg.seed = get_value<std::uint64_t>(eff, "/seed");

  cfg.icc.states = get_value<int>(eff, "/icc/states");
  cfg.icc.gamma = get_value<double>(eff, "/icc/gamma");
  cfg.icc.max_iterations = get_value<int>(eff, "/icc/max_iterations");
  cfg.icc.restarts = get_value<int>(eff, "/icc/restarts");
  cfg.icc.min_days = get_value<int>(eff, "/icc/min_days");
  const auto init = get_value<std::string>(eff, "/icc/init");
  if (init == "random") {
    cfg.icc.init = IccConfig::Init::random;
  } else if (init == "contiguous") {
    cfg.icc.init = IccConfig::Init::contiguous;
  } else {
    throw ValidationError("icc.init must be 'random' or 'contiguous'");
  }
  cfg.icc.reuse_global_network = get_value<bool>(eff, "/icc/reuse_global_network");
  if (cfg.icc.states < 1) throw ValidationError("icc.states must be at least 1");
  if (!(cfg.icc.gamma >= 0.0) || !std::isfinite(cfg.icc.gamma)) throw ValidationError("icc.gamma must be finite and >= 0");
  if (cfg.icc.max_iterations < 1 || cfg.icc.restarts < 1) {
    throw ValidationError("icc.max_iterations and icc.restarts must be at least 1");
  }
  if (cfg.icc.min_days < 0) throw ValidationError("icc.min_days must be >= 0");

  cfg.group_size = get_value<int>(eff, "/group_search/n");
  cfg.search_restarts = get_value<int>(eff, "/group_search/restarts");
  if (cfg.group_size < 1) throw ValidationError("group_search.n must be at least 1");
  if (cfg.search_restarts < 1) throw ValidationError("group_search.restarts must be at least 1");
  cfg.profile_sizes = get_value<std::vector<int>>(eff, "/profile/sizes");
  cfg.profile_trials = get_value<int>(eff, "/profile/trials");
  for (int s : cfg.profile_sizes) {
    if (s < 1) throw ValidationError("profile sizes must be at least 1");
  }
  if (cfg.profile_trials < 1) throw ValidationError("profile.trials must be at least 1");
  cfg.per_state = get_value<bool>(eff, "/per_state");
  cfg.emit.edges = get_value<bool>(eff, "/emit/edges");
  cfg.emit.profiles = get_value<bool>(eff, "/emit/profiles");
  cfg.emit.partitions = get_value<bool>(eff, "/emit/partitions");
  cfg.emit.regressions = get_value<bool>(eff, "/emit/regressions");
  cfg.emit.group_search = get_value<bool>(eff, "/emit/group_search");
  return cfg;
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["prices"] = cfg.prices;
  j["sectors"] = cfg.sectors;
  j["synth"] = cfg.synth;
  j["layout"] = cfg.layout;
  j["delimiter"] = cfg.delimiter;
  j["centrality"] = to_string(cfg.centrality);
  j["gain"] = to_string(cfg.gain);
  j["seed_candidates"] = cfg.seed_candidates;
  j["seed"] = cfg.seed;
  j["icc"] = {{"states", cfg.icc.states},
              {"gamma", cfg.icc.gamma},
              {"max_iterations", cfg.icc.max_iterations},
              {"restarts", cfg.icc.restarts},
              {"min_days", cfg.icc.min_days},
              {"init", to_string(cfg.icc.init)},
              {"reuse_global_network", cfg.icc.reuse_global_network}};
  j["group_search"] = {{"n", cfg.group_size}, {"restarts", cfg.search_restarts}};
  j["profile"] = {{"sizes", cfg.profile_sizes}, {"trials", cfg.profile_trials}};
  j["per_state"] = cfg.per_state;
  j["emit"] = {{"edges", cfg.emit.edges},
               {"profiles", cfg.emit.profiles},
               {"partitions", cfg.emit.partitions},
               {"regressions", cfg.emit.regressions},
               {"group_search", cfg.emit.group_search}};
  return j;
}

std::string config_hash(const RunConfig& cfg) { return sha256_hex(config_to_json(cfg).dump()); }

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  return hex(md, len);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return kExitValidation;
  if (dynamic_cast<const DataError*>(&e)) return kExitData;
  if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
  return kExitFailure;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Stress propagation analysis for equity return panels"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  const std::vector<Command> commands{
      {"ingest", "Load, filter and summarize prices and sectors", {stage_ingest}},
      {"network", "Build the filtering network, clique tree and sparse model", {stage_network}},
      {"states", "Cluster days into market states", {stage_states}},
      {"stress", "Impact and response profiles for nodes, random groups and sectors", {stage_stress}},
      {"group-search", "Search the most impactful group of stocks", {stage_group_search}},
      {"regress", "Regress sector impact and response on network features", {stage_regress}},
      {"pipeline", "Run every stage selected by the emit flags", {}},
  };
  std::deque<FlagValues> values;
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    values.emplace_back().attach(sub);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    for (std::size_t i = 0; i < commands.size(); ++i) {
      if (!subs[i]->parsed()) continue;
      json doc = values[i].config.empty() ? json::object() : load_config_file(values[i].config);
      doc.merge_patch(values[i].patch());
      const RunConfig cfg = config_from_json(doc);
      const auto stages = commands[i].stages.empty() ? pipeline_stages(cfg) : commands[i].stages;
      return execute(commands[i].name, cfg, stages);
    }
  } catch (const std::exception& e) {
    std::cerr << "fstress: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitValidation;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"fstress"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace fstress::cli
