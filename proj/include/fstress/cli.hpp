#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fstress/icc.hpp"
#include "fstress/tmfg.hpp"

namespace fstress::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

/// Default output directory when neither the config nor a flag sets one.
inline constexpr const char* kOutDirEnv = "FSTRESS_OUT_DIR";

std::string_view version();

struct EmitFlags {
  bool edges = true;
  bool profiles = true;
  bool partitions = true;
  bool regressions = true;
  bool group_search = true;
};

struct RunConfig {
  // Inputs: a price table (plus optional sector map) or a synthetic data config.
  std::string prices;
  std::string sectors;
  std::string synth;
  std::string layout = "wide";
  std::string delimiter = ",";
  std::filesystem::path out_dir;

  CentralityKind centrality = CentralityKind::eigenvector;
  GainKind gain = GainKind::squared;
  int seed_candidates = 5;
  std::uint64_t seed = 0;
  IccConfig icc;
  int group_size = 10;
  int search_restarts = 10;
  std::vector<int> profile_sizes{1, 2, 5, 10};
  int profile_trials = 100;
  // Repeat the stress, regression and group-search stages for every market state.
  bool per_state = true;
  EmitFlags emit;
};

/// Every recognised key with its default value.
nlohmann::json default_config_json();

/// Parses a config document over the defaults and validates it. Unknown keys
/// raise ValidationError.
RunConfig config_from_json(const nlohmann::json& doc);

/// Canonical form of the configuration, without the output directory.
nlohmann::json config_to_json(const RunConfig& cfg);

/// SHA-256 of the canonical configuration.
std::string config_hash(const RunConfig& cfg);

std::string sha256_hex(std::string_view bytes);

/// Exit status for an exception escaping a command.
int exit_code_for(const std::exception& e);

/// Entry point of the `fstress` executable.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace fstress::cli
