#include "fstress/data_ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "fstress/error.hpp"
#include "text_util.hpp"

namespace fstress {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using json = nlohmann::json;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read file: " + path.string());
  return in;
}

std::string location(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

// Cell value: nullopt when missing or unparseable. Throws on non-positive prices.
std::optional<double> parse_price_cell(std::string_view cell, const std::filesystem::path& path,
                                       std::size_t line, std::string_view ticker) {
  const auto value = detail::parse_double(cell);
  if (!value || !std::isfinite(*value)) return std::nullopt;
  if (*value <= 0.0) {
    throw DataError("non-positive price " + std::string(detail::trim(cell)) + " at " +
                    location(path, line) + " ticker " + std::string(ticker));
  }
  return value;
}

struct RawRow {
  Date date;
  std::vector<double> prices;  // NaN marks missing
};

PriceTable assemble(std::vector<std::string> tickers, std::vector<RawRow> rows) {
  std::sort(rows.begin(), rows.end(),
            [](const RawRow& a, const RawRow& b) { return a.date < b.date; });
  PriceTable table;
  table.tickers = std::move(tickers);
  const auto T = static_cast<Index>(rows.size());
  const auto p = static_cast<Index>(table.tickers.size());
  table.prices.resize(T, p);
  table.missing.resize(T, p);
  for (Index t = 0; t < T; ++t) {
    table.dates.push_back(rows[t].date);
    for (Index j = 0; j < p; ++j) {
      const double v = rows[t].prices[j];
      table.prices(t, j) = v;
      table.missing(t, j) = std::isnan(v);
    }
  }
  return table;
}

PriceTable load_wide(const std::filesystem::path& path, const IngestConfig& config) {
  auto in = open_input(path);
  const auto lines = detail::read_lines(in);
  if (lines.empty()) throw DataError("empty price file: " + path.string());

  const auto header = detail::split_record(lines[0], config.delimiter);
  if (header.size() < 2 || header[0] != config.date_column) {
    throw DataError("price file header must start with '" + config.date_column +
                    "' followed by tickers: " + path.string());
  }
  std::vector<std::string> tickers(header.begin() + 1, header.end());
  std::unordered_set<std::string> seen_tickers;
  for (const auto& t : tickers) {
    if (t.empty()) throw DataError("empty ticker name in header of " + path.string());
    if (!seen_tickers.insert(t).second) throw DataError("duplicate ticker column '" + t + "'");
  }

  std::vector<RawRow> rows;
  std::set<Date> seen_dates;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (detail::trim(lines[ln]).empty()) continue;
    const auto fields = detail::split_record(lines[ln], config.delimiter);
    if (fields.size() != header.size()) {
      throw DataError("expected " + std::to_string(header.size()) + " fields, found " +
                      std::to_string(fields.size()) + " at " + location(path, ln + 1));
    }
    RawRow row{parse_date(fields[0]), {}};
    if (!seen_dates.insert(row.date).second) {
      throw DataError("duplicate date " + fields[0] + " at " + location(path, ln + 1));
    }
    row.prices.reserve(tickers.size());
    for (std::size_t j = 0; j < tickers.size(); ++j) {
      const auto v = parse_price_cell(fields[j + 1], path, ln + 1, tickers[j]);
      row.prices.push_back(v.value_or(std::numeric_limits<double>::quiet_NaN()));
    }
    rows.push_back(std::move(row));
  }
  return assemble(std::move(tickers), std::move(rows));
}

PriceTable load_long(const std::filesystem::path& path, const IngestConfig& config) {
  auto in = open_input(path);
  const auto lines = detail::read_lines(in);
  if (lines.empty()) throw DataError("empty price file: " + path.string());

  const auto header = detail::split_record(lines[0], config.delimiter);
  const auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("missing column '" + name + "' in " + path.string());
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t date_col = column(config.date_column);
  const std::size_t ticker_col = column(config.ticker_column);
  const std::size_t price_col = column(config.price_column);

  std::vector<std::string> tickers;
  std::unordered_map<std::string, std::size_t> ticker_index;
  std::map<Date, std::unordered_map<std::size_t, double>> cells;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (detail::trim(lines[ln]).empty()) continue;
    const auto fields = detail::split_record(lines[ln], config.delimiter);
    if (fields.size() != header.size()) {
      throw DataError("expected " + std::to_string(header.size()) + " fields at " +
                      location(path, ln + 1));
    }
    const Date d = parse_date(fields[date_col]);
    const std::string& ticker = fields[ticker_col];
    auto [it, inserted] = ticker_index.try_emplace(ticker, tickers.size());
    if (inserted) tickers.push_back(ticker);
    const auto v = parse_price_cell(fields[price_col], path, ln + 1, ticker);
    auto& day = cells[d];
    if (!day.try_emplace(it->second, v.value_or(std::numeric_limits<double>::quiet_NaN())).second) {
      throw DataError("duplicate cell for date " + fields[date_col] + " ticker " + ticker + " at " +
                      location(path, ln + 1));
    }
  }
  std::vector<RawRow> rows;
  for (const auto& [d, day] : cells) {
    RawRow row{d, std::vector<double>(tickers.size(), std::numeric_limits<double>::quiet_NaN())};
    for (const auto& [j, v] : day) row.prices[j] = v;
    rows.push_back(std::move(row));
  }
  return assemble(std::move(tickers), std::move(rows));
}

std::vector<double> json_doubles(const json& j) {
  if (j.is_number()) return {j.get<double>()};
  return j.get<std::vector<double>>();
}

CovarianceSpec covariance_from_json(const json& j) {
  CovarianceSpec shape;
  const std::string kind = j.value("kind", std::string("identity"));
  if (kind == "identity") {
    shape.kind = CovarianceSpec::Kind::identity;
  } else if (kind == "block") {
    shape.kind = CovarianceSpec::Kind::block;
    shape.blocks = j.at("blocks").get<std::vector<int>>();
    shape.within = json_doubles(j.at("within"));
    shape.between = j.value("between", 0.0);
  } else if (kind == "factor") {
    shape.kind = CovarianceSpec::Kind::factor;
    shape.blocks = j.at("blocks").get<std::vector<int>>();
    shape.beta = json_doubles(j.at("beta"));
    shape.sector_loading = json_doubles(j.at("sector_loading"));
  } else if (kind == "dense") {
    shape.kind = CovarianceSpec::Kind::dense;
    const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
    shape.matrix.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) throw ValidationError("dense covariance must be square");
      for (std::size_t k = 0; k < rows.size(); ++k) {
        shape.matrix(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
      }
    }
  } else {
    throw ValidationError("unknown covariance kind '" + kind + "'");
  }
  return shape;
}

// Value for block b from a per-block list, or the broadcast single value.
double per_block(const std::vector<double>& values, std::size_t b, const char* name) {
  if (values.size() == 1) return values[0];
  if (b >= values.size()) {
    throw ValidationError(std::string("covariance field '") + name + "' needs one value per block");
  }
  return values[b];
}

std::vector<int> block_of_nodes(const std::vector<int>& blocks, int p) {
  std::vector<int> owner;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b] <= 0) throw ValidationError("covariance block sizes must be positive");
    owner.insert(owner.end(), static_cast<std::size_t>(blocks[b]), static_cast<int>(b));
  }
  if (static_cast<int>(owner.size()) != p) {
    throw ValidationError("covariance block sizes sum to " + std::to_string(owner.size()) +
                          ", expected p = " + std::to_string(p));
  }
  return owner;
}

void validate_synth(const SynthConfig& config) {
  if (config.p < 4) throw ValidationError("synthetic data needs p >= 4, got " + std::to_string(config.p));
  if (config.T < 2) throw ValidationError("synthetic data needs T >= 2, got " + std::to_string(config.T));
  if (config.segments.empty()) throw ValidationError("synthetic config declares no segments");
  long total = 0;
  for (const auto& s : config.segments) {
    if (s.length <= 0) throw ValidationError("segment lengths must be positive");
    total += s.length;
  }
  if (total != config.T - 1) {
    throw ValidationError("segment lengths sum to " + std::to_string(total) + ", expected T - 1 = " +
                          std::to_string(config.T - 1));
  }
  if (!config.sectors.empty()) {
    long n = 0;
    for (const auto& [label, size] : config.sectors) n += size;
    if (n != config.p) throw ValidationError("sector sizes must sum to p");
  }
}

std::vector<std::string> synth_tickers(const SynthConfig& config) {
  const int width = std::max(3, static_cast<int>(std::to_string(config.p).size()));
  std::vector<std::string> out;
  for (int i = 0; i < config.p; ++i) {
    std::string num = std::to_string(i + 1);
    out.push_back(config.ticker_prefix + std::string(width - num.size(), '0') + num);
  }
  return out;
}

}  // namespace

Date parse_date(std::string_view text) {
  text = detail::trim(text);
  const auto bad = [&] { return DataError("invalid ISO-8601 date '" + std::string(text) + "'"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  const auto num = [&](std::size_t pos, std::size_t len, auto& out) {
    const auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
    if (ec != std::errc{} || ptr != text.data() + pos + len) throw bad();
  };
  num(0, 4, y);
  num(5, 2, m);
  num(8, 2, d);
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw bad();
  return Date{ymd};
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

PriceTable load_price_table(const std::filesystem::path& path, const IngestConfig& config) {
  return config.layout == IngestConfig::Layout::wide ? load_wide(path, config) : load_long(path, config);
}

std::string price_table_csv(const PriceTable& table) {
  std::ostringstream out;
  out << "date";
  for (const auto& t : table.tickers) out << ',' << t;
  out << '\n';
  for (std::size_t t = 0; t < table.dates.size(); ++t) {
    out << format_date(table.dates[t]);
    for (Index j = 0; j < table.prices.cols(); ++j) {
      out << ',';
      if (!table.missing(static_cast<Index>(t), j)) {
        out << detail::format_double(table.prices(static_cast<Index>(t), j));
      }
    }
    out << '\n';
  }
  return out.str();
}

void write_price_table(const std::filesystem::path& path, const PriceTable& table) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path.string());
  out << price_table_csv(table);
}

PriceTable filter_full_history(const PriceTable& table) {
  std::vector<Index> keep;
  for (Index j = 0; j < static_cast<Index>(table.tickers.size()); ++j) {
    if (table.missing.rows() == 0 || !table.missing.col(j).any()) keep.push_back(j);
  }
  if (keep.size() < 4) {
    throw DataError("only " + std::to_string(keep.size()) +
                    " tickers have a complete history; at least 4 are required");
  }
  PriceTable out;
  out.dates = table.dates;
  out.prices.resize(table.prices.rows(), static_cast<Index>(keep.size()));
  out.missing = BoolMatrix::Constant(table.prices.rows(), static_cast<Index>(keep.size()), false);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.tickers.push_back(table.tickers[keep[k]]);
    out.prices.col(static_cast<Index>(k)) = table.prices.col(keep[k]);
  }
  return out;
}

const std::string& SectorMap::label_of(std::string_view ticker) const {
  for (std::size_t i = 0; i < tickers.size(); ++i) {
    if (tickers[i] == ticker) return labels[i];
  }
  throw ValidationError("ticker '" + std::string(ticker) + "' not in sector map");
}

std::map<std::string, std::vector<int>> SectorMap::members() const {
  std::map<std::string, std::vector<int>> out;
  for (std::size_t i = 0; i < labels.size(); ++i) out[labels[i]].push_back(static_cast<int>(i));
  return out;
}

SectorMap make_sector_map(std::vector<std::string> tickers, std::vector<std::string> labels) {
  if (tickers.size() != labels.size()) throw ValidationError("sector map: ticker/label length mismatch");
  SectorMap map;
  std::map<std::string, int> counts;
  for (auto& label : labels) {
    if (label == kMissingSectorMarker || label.empty()) label = std::string(kFundsSector);
    ++counts[label];
  }
  map.tickers = std::move(tickers);
  map.labels = std::move(labels);
  map.counts.assign(counts.begin(), counts.end());
  std::stable_sort(map.counts.begin(), map.counts.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return map;
}

SectorMap load_sector_map(const std::filesystem::path& path, const std::vector<std::string>& universe) {
  auto in = open_input(path);
  const auto lines = detail::read_lines(in);
  if (lines.empty()) throw DataError("empty sector file: " + path.string());
  const auto header = detail::split_record(lines[0], ',');
  if (header.size() < 2 || header[0] != "ticker" || header[1] != "sector") {
    throw DataError("sector file header must be 'ticker,sector': " + path.string());
  }
  std::unordered_map<std::string, std::string> label_of;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (detail::trim(lines[ln]).empty()) continue;
    const auto fields = detail::split_record(lines[ln], ',');
    if (fields.size() < 2) throw DataError("malformed sector record at " + location(path, ln + 1));
    if (!label_of.try_emplace(fields[0], fields[1]).second) {
      throw DataError("duplicate ticker '" + fields[0] + "' at " + location(path, ln + 1));
    }
  }
  std::vector<std::string> labels;
  std::vector<std::string> absent;
  for (const auto& t : universe) {
    const auto it = label_of.find(t);
    if (it == label_of.end()) {
      absent.push_back(t);
    } else {
      labels.push_back(it->second);
    }
  }
  if (!absent.empty()) {
    std::string names;
    for (const auto& a : absent) names += (names.empty() ? "" : ", ") + a;
    throw DataError("tickers missing from sector file " + path.string() + ": " + names);
  }
  return make_sector_map(universe, std::move(labels));
}

std::string sector_map_csv(const SectorMap& sectors) {
  std::ostringstream out;
  out << "ticker,sector\n";
  for (std::size_t i = 0; i < sectors.tickers.size(); ++i) out << sectors.tickers[i] << ',' << sectors.labels[i] << '\n';
  return out.str();
}

void write_sector_map(const std::filesystem::path& path, const SectorMap& sectors) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path.string());
  out << sector_map_csv(sectors);
}

std::pair<VectorXd, VectorXd> column_moments(const MatrixXd& values) {
  const Index n = values.rows();
  VectorXd mean = VectorXd::Zero(values.cols());
  VectorXd sd = VectorXd::Zero(values.cols());
  if (n == 0) return {mean, sd};
  mean = values.colwise().mean().transpose();
  if (n > 1) {
    const MatrixXd centered = values.rowwise() - mean.transpose();
    sd = (centered.colwise().squaredNorm().transpose() / static_cast<double>(n - 1)).cwiseSqrt();
  }
  return {mean, sd};
}

ReturnsMatrix ReturnsMatrix::select_days(const std::vector<int>& days) const {
  ReturnsMatrix out;
  out.tickers = tickers;
  out.values.resize(static_cast<Index>(days.size()), values.cols());
  for (std::size_t k = 0; k < days.size(); ++k) {
    out.dates.push_back(dates.at(static_cast<std::size_t>(days[k])));
    out.values.row(static_cast<Index>(k)) = values.row(days[k]);
  }
  out.standardized = false;
  std::tie(out.means, out.stddevs) = column_moments(out.values);
  return out;
}

ReturnsMatrix compute_log_returns(const PriceTable& table) {
  if (table.has_missing()) {
    throw DataError("price table has missing cells; run filter_full_history first");
  }
  if (table.dates.size() < 2) throw DataError("need at least two dates to compute returns");
  const Index T = table.prices.rows() - 1;
  ReturnsMatrix r;
  r.tickers = table.tickers;
  r.dates.assign(table.dates.begin() + 1, table.dates.end());
  r.values.resize(T, table.prices.cols());
  for (Index j = 0; j < table.prices.cols(); ++j) {
    for (Index t = 0; t < T; ++t) r.values(t, j) = std::log(table.prices(t + 1, j) / table.prices(t, j));
  }
  std::tie(r.means, r.stddevs) = column_moments(r.values);
  return r;
}

ReturnsMatrix standardize(const ReturnsMatrix& returns) {
  if (returns.num_days() < 2) throw ValidationError("standardize needs at least two days");
  const auto [mean, sd] = column_moments(returns.values);
  for (Index j = 0; j < sd.size(); ++j) {
    if (!(sd[j] > 0.0)) {
      throw DataError("zero-variance return column for ticker '" + returns.tickers[j] + "'");
    }
  }
  ReturnsMatrix out = returns;
  out.values = (returns.values.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
  out.standardized = true;
  if (!returns.standardized) {
    out.means = mean;
    out.stddevs = sd;
  }
  return out;
}

// Synthetic data ---------------------------------------------------------------

SynthConfig synth_config_from_json(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("synthetic config is not valid JSON: ") + e.what());
  }
  try {
    SynthConfig c;
    c.p = j.at("p").get<int>();
    c.T = j.at("T").get<int>();
    c.seed = j.value("seed", std::uint64_t{0});
    c.ticker_prefix = j.value("ticker_prefix", std::string("S"));
    if (j.contains("start_date")) c.start_date = parse_date(j.at("start_date").get<std::string>());
    for (const auto& s : j.at("segments")) {
      SynthSegment seg;
      seg.length = s.at("length").get<int>();
      if (s.contains("mean")) seg.mean = json_doubles(s.at("mean"));
      seg.volatility = s.value("volatility", 0.01);
      if (s.contains("covariance")) seg.covariance = covariance_from_json(s.at("covariance"));
      c.segments.push_back(std::move(seg));
    }
    if (j.contains("sectors")) {
      for (const auto& s : j.at("sectors")) {
        c.sectors.emplace_back(s.at("label").get<std::string>(), s.at("size").get<int>());
      }
    }
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed synthetic config: ") + e.what());
  }
}

SynthConfig load_synth_config(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return synth_config_from_json(ss.str());
}

MatrixXd segment_covariance(const SynthSegment& segment, int p) {
  const auto& shape = segment.covariance;
  MatrixXd corr = MatrixXd::Identity(p, p);
  switch (shape.kind) {
    case CovarianceSpec::Kind::identity:
      break;
    case CovarianceSpec::Kind::block: {
      const auto owner = block_of_nodes(shape.blocks, p);
      for (int i = 0; i < p; ++i) {
        for (int k = 0; k < p; ++k) {
          if (i == k) continue;
          corr(i, k) = owner[i] == owner[k]
                           ? per_block(shape.within, static_cast<std::size_t>(owner[i]), "within")
                           : shape.between;
        }
      }
      break;
    }
    case CovarianceSpec::Kind::factor: {
      const auto owner = block_of_nodes(shape.blocks, p);
      for (int i = 0; i < p; ++i) {
        const auto bi = static_cast<std::size_t>(owner[i]);
        for (int k = 0; k < p; ++k) {
          if (i == k) continue;
          const auto bk = static_cast<std::size_t>(owner[k]);
          double c = per_block(shape.beta, bi, "beta") * per_block(shape.beta, bk, "beta");
          if (bi == bk) c += std::pow(per_block(shape.sector_loading, bi, "sector_loading"), 2);
          corr(i, k) = c;
        }
      }
      break;
    }
    case CovarianceSpec::Kind::dense:
      if (shape.matrix.rows() != p || shape.matrix.cols() != p) {
        throw ValidationError("dense covariance must be p x p");
      }
      corr = shape.matrix;
      break;
  }
  if (!corr.isApprox(corr.transpose(), 1e-12)) throw ValidationError("requested covariance is not symmetric");
  const MatrixXd cov = segment.volatility * segment.volatility * corr;
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw ValidationError("requested covariance is not positive definite");
  }
  return cov;
}

PriceTable synth_generate(const SynthConfig& config, std::uint64_t seed) {
  validate_synth(config);
  const int p = config.p;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  PriceTable table;
  table.tickers = synth_tickers(config);
  table.prices.resize(config.T, p);
  table.missing = BoolMatrix::Constant(config.T, p, false);
  table.prices.row(0).setConstant(100.0);

  Date d = config.start_date;
  while (std::chrono::weekday{d}.iso_encoding() > 5) d += std::chrono::days{1};
  table.dates.push_back(d);

  VectorXd log_level = VectorXd::Constant(p, std::log(100.0));
  Index row = 1;
  for (const auto& seg : config.segments) {
    const MatrixXd chol = Eigen::LLT<MatrixXd>(segment_covariance(seg, p)).matrixL();
    VectorXd mean = VectorXd::Zero(p);
    if (seg.mean.size() == 1) {
      mean.setConstant(seg.mean[0]);
    } else if (!seg.mean.empty()) {
      if (static_cast<int>(seg.mean.size()) != p) throw ValidationError("segment mean needs 1 or p values");
      mean = Eigen::Map<const VectorXd>(seg.mean.data(), p);
    }
    VectorXd z(p);
    for (int t = 0; t < seg.length; ++t) {
      for (int i = 0; i < p; ++i) z[i] = normal(rng);
      log_level += mean + chol * z;
      table.prices.row(row) = log_level.array().exp().transpose();
      do {
        d += std::chrono::days{1};
      } while (std::chrono::weekday{d}.iso_encoding() > 5);
      table.dates.push_back(d);
      ++row;
    }
  }
  return table;
}

std::vector<int> synth_regime_labels(const SynthConfig& config) {
  std::vector<int> labels;
  for (std::size_t s = 0; s < config.segments.size(); ++s) {
    labels.insert(labels.end(), static_cast<std::size_t>(config.segments[s].length), static_cast<int>(s));
  }
  return labels;
}

SectorMap synth_sector_map(const SynthConfig& config, const std::vector<std::string>& tickers) {
  std::vector<std::string> labels;
  if (!config.sectors.empty()) {
    for (const auto& [label, size] : config.sectors) labels.insert(labels.end(), static_cast<std::size_t>(size), label);
  } else if (!config.segments.empty() && !config.segments[0].covariance.blocks.empty()) {
    const auto& blocks = config.segments[0].covariance.blocks;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      char name[32];
      std::snprintf(name, sizeof(name), "Sector%02zu", b + 1);
      labels.insert(labels.end(), static_cast<std::size_t>(blocks[b]), name);
    }
  } else {
    labels.assign(tickers.size(), "Market");
  }
  if (labels.size() != tickers.size()) throw ValidationError("sector layout does not cover the ticker list");
  return make_sector_map(tickers, std::move(labels));
}

}  // namespace fstress
