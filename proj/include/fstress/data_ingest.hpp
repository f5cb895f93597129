#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace fstress {

using Date = std::chrono::sys_days;

/// Parses a strict ISO-8601 calendar date (YYYY-MM-DD). Throws DataError.
Date parse_date(std::string_view text);
std::string format_date(Date d);

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Dated close prices, one column per ticker.
///
/// Invariants: dates strictly increasing, tickers unique, and prices finite and
/// positive wherever `missing` is false. Missing cells hold NaN.
struct PriceTable {
  std::vector<Date> dates;
  std::vector<std::string> tickers;
  Eigen::MatrixXd prices;  // T x p
  BoolMatrix missing;      // T x p

  std::size_t num_dates() const { return dates.size(); }
  std::size_t num_tickers() const { return tickers.size(); }
  bool has_missing() const { return missing.size() > 0 && missing.any(); }
};

struct IngestConfig {
  enum class Layout { wide, long_format };
  Layout layout = Layout::wide;
  char delimiter = ',';
  std::string date_column = "date";
  // Used by the long layout only.
  std::string ticker_column = "ticker";
  std::string price_column = "price";
};

PriceTable load_price_table(const std::filesystem::path& path, const IngestConfig& config = {});
std::string price_table_csv(const PriceTable& table);
void write_price_table(const std::filesystem::path& path, const PriceTable& table);

/// Keeps only tickers with a complete history. Requires at least 4 survivors.
PriceTable filter_full_history(const PriceTable& table);

inline constexpr std::string_view kMissingSectorMarker = "N/A";
inline constexpr std::string_view kFundsSector = "Funds";

/// Sector label for every ticker of a universe, aligned with `tickers`.
struct SectorMap {
  std::vector<std::string> tickers;
  std::vector<std::string> labels;
  // (label, count), ordered by decreasing count then label.
  std::vector<std::pair<std::string, int>> counts;

  const std::string& label_of(std::string_view ticker) const;
  /// Node indices grouped by label, in universe order. Labels sorted.
  std::map<std::string, std::vector<int>> members() const;
};

SectorMap make_sector_map(std::vector<std::string> tickers, std::vector<std::string> labels);
SectorMap load_sector_map(const std::filesystem::path& path, const std::vector<std::string>& universe);
std::string sector_map_csv(const SectorMap& sectors);
void write_sector_map(const std::filesystem::path& path, const SectorMap& sectors);

/// T x p daily log-returns. `means`/`stddevs` always describe the raw,
/// unstandardized sample (stddev with denominator T-1).
struct ReturnsMatrix {
  std::vector<Date> dates;
  std::vector<std::string> tickers;
  Eigen::MatrixXd values;
  bool standardized = false;
  Eigen::VectorXd means;
  Eigen::VectorXd stddevs;

  Eigen::Index num_days() const { return values.rows(); }
  Eigen::Index num_assets() const { return values.cols(); }
  /// Rows selected by index, as a new matrix. Moments are recomputed from the rows.
  ReturnsMatrix select_days(const std::vector<int>& days) const;
};

/// Column sample means and stddevs (denominator n-1; 0 when n < 2).
std::pair<Eigen::VectorXd, Eigen::VectorXd> column_moments(const Eigen::MatrixXd& values);

ReturnsMatrix compute_log_returns(const PriceTable& table);

/// Rescales every column to mean 0 and stddev 1. Applying it to an already
/// standardized matrix renormalizes and keeps the original raw moments.
ReturnsMatrix standardize(const ReturnsMatrix& returns);

// Synthetic data --------------------------------------------------------------

/// Correlation structure of one regime.
///
///  identity : unit matrix
///  block    : blocks of sizes `blocks`; within-block correlation `within[b]`
///             (one value broadcasts) and `between` across blocks
///  factor   : one market factor plus one factor per block; corr(i, j) =
///             beta[bi] * beta[bj] + [bi == bj] * sector_loading[bi]^2
///  dense    : explicit correlation/covariance matrix in `matrix`
struct CovarianceSpec {
  enum class Kind { identity, block, factor, dense };
  Kind kind = Kind::identity;
  std::vector<int> blocks;
  std::vector<double> within;
  double between = 0.0;
  std::vector<double> beta;
  std::vector<double> sector_loading;
  Eigen::MatrixXd matrix;
};

struct SynthSegment {
  int length = 0;              // number of return rows
  std::vector<double> mean;    // empty, one value, or p values (daily log-return units)
  double volatility = 0.01;    // daily stddev multiplying the correlation matrix
  CovarianceSpec covariance;
};

struct SynthConfig {
  int p = 0;
  int T = 0;  // number of price dates; segment lengths sum to T - 1
  std::vector<SynthSegment> segments;
  std::uint64_t seed = 0;
  std::string ticker_prefix = "S";
  Date start_date = parse_date("2005-01-03");
  // Optional (label, size) sector layout covering all p tickers.
  std::vector<std::pair<std::string, int>> sectors;
};

SynthConfig synth_config_from_json(std::string_view json_text);
SynthConfig load_synth_config(const std::filesystem::path& path);

/// Raw covariance (volatility^2 * correlation) requested by a segment. Throws
/// ValidationError when it is not positive definite.
Eigen::MatrixXd segment_covariance(const SynthSegment& segment, int p);

/// Deterministic in (config, seed): prices start at 100 and follow the
/// exponentiated cumulative sum of Gaussian returns drawn per segment.
/// Dates are consecutive weekdays from `start_date`.
PriceTable synth_generate(const SynthConfig& config, std::uint64_t seed);

/// Segment index of every return row (length T - 1).
std::vector<int> synth_regime_labels(const SynthConfig& config);

/// Sector map for a generated table: the configured layout, else one sector
/// per covariance block of the first segment, else a single sector.
SectorMap synth_sector_map(const SynthConfig& config, const std::vector<std::string>& tickers);

}  // namespace fstress
