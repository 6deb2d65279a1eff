#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "qdent/cascade.hpp"
#include "qdent/errors.hpp"
#include "qdent/eventsim.hpp"
#include "qdent/tomography.hpp"

namespace qdent::cli {

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitIo = 3, kExitCompute = 4 };

/// Bad configuration value or flag; the message names the offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  std::uint64_t seed = 1;

  cascade::CascadeParams cascade = cascade::CascadeParams::defaults();
  double window_width = 25.0;                // µeV
  std::optional<double> window_center;       // default: mean exciton energy
  double quad_tolerance = 1e-9;

  std::vector<double> w_grid;                // empty → default_w_grid()
  unsigned threads = 1;

  std::vector<tomography::Setting> settings = tomography::default_settings();
  std::int64_t n_per_setting = 100000;
  int resamples = 200;
  std::optional<polstate::CascadeForm> truth;  // overrides the filtered cascade state in tomo-sim

  eventsim::RateModelParams rate;
  double duration_ns = 5.2e7;
  eventsim::HistogramConfig histogram;
  bool export_timetags = false;

  std::string out_dir = "qdent_out";

  cascade::SpectralWindow window() const;
};

std::vector<double> default_w_grid();

/// Parses a config document; unknown keys and wrong types raise ConfigError
/// with the dotted field path.
RunConfig config_from_json(const nlohmann::json& doc);

/// Resolved configuration, as echoed in every report.
nlohmann::json config_to_json(const RunConfig& cfg);

/// Reads and parses a config file (ConfigError on syntax, IoError on access).
RunConfig load_config_file(const std::string& path);

/// Comma-separated list of numbers, e.g. "10,25,200".
std::vector<double> parse_number_list(const std::string& text, const char* what);

nlohmann::json matrix_to_json(const polstate::Matrix4& m);

/// Subcommands. Each writes its files under cfg.out_dir and returns the report.
nlohmann::json cmd_gamma_curve(const RunConfig& cfg);
nlohmann::json cmd_tomo_sim(const RunConfig& cfg);
nlohmann::json cmd_hbt_sim(const RunConfig& cfg);
nlohmann::json cmd_reconstruct(const RunConfig& cfg, const std::string& records_csv);

/// Full command-line entry point; returns the process exit code.
int run(int argc, char** argv);

}  // namespace qdent::cli
