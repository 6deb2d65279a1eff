#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "qdent/cli.hpp"
#include "qdent/rng.hpp"

namespace qdent::cli {

using nlohmann::json;

namespace {

// Sub-stream ids under the run seed.
constexpr std::uint64_t kSeedCounts = 10;
constexpr std::uint64_t kSeedBootstrap = 11;
constexpr std::uint64_t kSeedHbtCo = 20;
constexpr std::uint64_t kSeedHbtCross1 = 21;
constexpr std::uint64_t kSeedHbtCross2 = 22;

std::filesystem::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  const std::filesystem::path p(dir);
  std::filesystem::create_directories(p, ec);
  if (ec || !std::filesystem::is_directory(p)) throw IoError("cannot create output directory '" + dir + "'");
  return p;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

json report_header(const char* command, const RunConfig& cfg) {
  return {{"schema_version", kSchemaVersion}, {"command", command}, {"config", config_to_json(cfg)}};
}

json complex_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

json records_json(std::span<const tomography::MeasurementRecord> records) {
  json out = json::array();
  for (const auto& r : records)
    out.push_back({{"setting", tomography::to_string(r.setting)}, {"counts", r.counts}, {"weight", r.duration_weight}});
  return out;
}

json state_summary(const polstate::TwoQubitDensityMatrix& rho) {
  const auto fit = polstate::fit_cascade_form(rho);
  return {{"rho", matrix_to_json(rho.matrix())},
          {"cascade_form",
           {{"a2", fit.form.a2}, {"b2", fit.form.b2}, {"gamma", complex_json(fit.form.gamma)},
            {"gamma_abs", std::abs(fit.form.gamma)}, {"residual", fit.residual}}},
          {"bell_value_cascade", polstate::bell_value_cascade(fit.form)},
          {"bell_value_general", polstate::bell_value_general(rho)},
          {"ppt_min_eigenvalue", polstate::ppt_min_eigenvalue(rho)}};
}

json reconstruction_json(const tomography::TomographyResult& res) {
  json j = state_summary(res.rho);
  j["std_gamma_re"] = res.std_gamma_re;
  j["std_gamma_im"] = res.std_gamma_im;
  j["significance_sigmas"] = std::isfinite(res.significance_sigmas) ? json(res.significance_sigmas) : json(nullptr);
  j["log_likelihood"] = res.log_likelihood;
  j["intensity"] = res.intensity;
  j["iterations"] = res.iterations;
  return j;
}

void validate_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw ConfigError("w-grid: empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || !std::isfinite(grid[i]))
      throw ConfigError("w-grid[" + std::to_string(i) + "]: widths must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw ConfigError("w-grid: widths must be strictly increasing");
  }
}

}  // namespace

json cmd_gamma_curve(const RunConfig& cfg) {
  const std::vector<double> grid = cfg.w_grid.empty() ? default_w_grid() : cfg.w_grid;
  validate_grid(grid);
  const auto dir = prepare_out_dir(cfg.out_dir);
  const auto points = cascade::sweep_gamma_vs_window(cfg.cascade, grid, cfg.quad_tolerance, cfg.threads);

  const double delta = std::abs(cfg.cascade.detuning());
  std::string csv = "w_ueV,gamma_abs_numeric,gamma_abs_analytic,detection_prob\n";
  json rows = json::array();
  for (const auto& pt : points) {
    std::string analytic;
    json analytic_json = nullptr;
    if (pt.width < delta) {
      const double a = cascade::gamma_prime_analytic(pt.width, delta);
      analytic = format_number(a);
      analytic_json = a;
    }
    csv += format_number(pt.width) + "," + format_number(pt.gamma_abs) + "," + analytic + "," +
           format_number(pt.detection_probability) + "\n";
    rows.push_back({{"w_ueV", pt.width},
                    {"gamma_abs_numeric", pt.gamma_abs},
                    {"gamma_abs_analytic", analytic_json},
                    {"detection_prob", pt.detection_probability}});
  }
  write_file(dir / "gamma_curve.csv", csv);

  json report = report_header("gamma-curve", cfg);
  report["curve"] = rows;
  report["files"] = {"gamma_curve.csv"};
  write_file(dir / "report.json", report.dump(2) + "\n");
  return report;
}

json cmd_tomo_sim(const RunConfig& cfg) {
  const auto dir = prepare_out_dir(cfg.out_dir);
  const polstate::TwoQubitDensityMatrix truth =
      cfg.truth ? polstate::from_cascade_form(*cfg.truth)
                : cascade::filtered_density_matrix(cfg.cascade, cfg.window(), cfg.quad_tolerance);
  const auto records = tomography::simulate_counts(truth, cfg.settings, cfg.n_per_setting, derive_seed(cfg.seed, kSeedCounts));
  const auto result =
      tomography::reconstruct(records, cfg.resamples, derive_seed(cfg.seed, kSeedBootstrap), cfg.threads);

  write_file(dir / "records.csv", tomography::records_to_csv(records));
  json report = report_header("tomo-sim", cfg);
  report["truth"] = state_summary(truth);
  report["records"] = records_json(records);
  report["reconstruction"] = reconstruction_json(result);
  report["files"] = {"records.csv"};
  write_file(dir / "report.json", report.dump(2) + "\n");
  return report;
}

json cmd_reconstruct(const RunConfig& cfg, const std::string& records_csv) {
  const std::string text = read_file(records_csv);
  std::vector<tomography::MeasurementRecord> records;
  try {
    records = tomography::records_from_csv(text);
  } catch (const InvalidArgument& e) {
    throw ConfigError(records_csv + ": " + e.what());
  }
  const auto dir = prepare_out_dir(cfg.out_dir);
  const auto result =
      tomography::reconstruct(records, cfg.resamples, derive_seed(cfg.seed, kSeedBootstrap), cfg.threads);
  json report = report_header("reconstruct", cfg);
  report["records"] = records_json(records);
  report["reconstruction"] = reconstruction_json(result);
  write_file(dir / "report.json", report.dump(2) + "\n");
  return report;
}

json cmd_hbt_sim(const RunConfig& cfg) {
  using tomography::Polarizer;
  const auto dir = prepare_out_dir(cfg.out_dir);
  const auto rho = cascade::filtered_density_matrix(cfg.cascade, cfg.window(), cfg.quad_tolerance);

  auto run = [&](tomography::Setting s, std::uint64_t stream) {
    const eventsim::TimetagSource source{cfg.cascade, rho, s};
    return eventsim::generate_timetags(cfg.rate, cfg.duration_ns, derive_seed(cfg.seed, stream), source);
  };
  const auto co_stream = run({Polarizer::H, Polarizer::H}, kSeedHbtCo);
  const auto cross1_stream = run({Polarizer::H, Polarizer::V}, kSeedHbtCross1);
  const auto cross2_stream = run({Polarizer::V, Polarizer::H}, kSeedHbtCross2);
  const auto co = eventsim::correlate(co_stream, cfg.histogram);
  const auto cross1 = eventsim::correlate(cross1_stream, cfg.histogram);
  const auto cross2 = eventsim::correlate(cross2_stream, cfg.histogram);
  const auto reduced = eventsim::reduced_correlation(co, cross1, cross2);

  write_file(dir / "hist_co.csv", eventsim::histogram_to_csv(co));
  write_file(dir / "hist_cross1.csv", eventsim::histogram_to_csv(cross1));
  write_file(dir / "hist_cross2.csv", eventsim::histogram_to_csv(cross2));
  write_file(dir / "hist_reduced.csv", eventsim::histogram_to_csv(reduced));
  json files = {"hist_co.csv", "hist_cross1.csv", "hist_cross2.csv", "hist_reduced.csv"};
  if (cfg.export_timetags) {
    write_file(dir / "timetags_co.csv", eventsim::timetags_to_csv(co_stream));
    files.push_back("timetags_co.csv");
  }

  const auto net = eventsim::integrate(reduced, 0.0, reduced.range);
  json lifetime;
  try {
    const auto fit = eventsim::extract_lifetime(reduced);
    lifetime = {{"status", "ok"},
                {"t_x_ns", fit.lifetime},
                {"t_x_std_ns", fit.lifetime_std},
                {"amplitude", fit.amplitude},
                {"offset", fit.offset},
                {"bins_used", fit.bins_used}};
  } catch (const FitFailed& e) {
    lifetime = {{"status", "fit_failed"}, {"message", e.what()}};
  }

  json report = report_header("hbt-sim", cfg);
  report["pairs"] = {{"co", co_stream.pairs.size()}, {"cross1", cross1_stream.pairs.size()},
                     {"cross2", cross2_stream.pairs.size()}};
  report["coincidences"] = {{"co", co.total}, {"cross1", cross1.total}, {"cross2", cross2.total}};
  report["net_cascade_coincidences"] = {{"value", net.value}, {"error", net.error}};
  report["lifetime_fit"] = lifetime;
  report["files"] = files;
  write_file(dir / "report.json", report.dump(2) + "\n");
  return report;
}

namespace {

void print_error(const char* kind, int code, const std::string& message) {
  json err = {{"error", kind}, {"exit_code", code}, {"message", message}};
  std::cerr << err.dump() << "\n";
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Quantum-dot cascade entanglement: spectral erasure, tomography and HBT simulation", "qdent"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string w_grid;
  std::optional<std::int64_t> n_per_setting;
  std::optional<int> resamples;
  std::optional<unsigned> threads;
  std::string records_csv;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON configuration file");
    sub->add_option("--seed", seed, "top-level random seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads for sweeps and bootstrap");
  };
  CLI::App* gamma = app.add_subcommand("gamma-curve", "|gamma'| and detection probability versus window width");
  add_common(gamma);
  gamma->add_option("--w-grid", w_grid, "comma-separated window widths in ueV");
  CLI::App* tomo = app.add_subcommand("tomo-sim", "simulate tomography counts and reconstruct the state");
  add_common(tomo);
  tomo->add_option("--n-per-setting", n_per_setting, "expected pairs per analyzer setting");
  tomo->add_option("--resamples", resamples, "bootstrap resamples");
  CLI::App* hbt = app.add_subcommand("hbt-sim", "simulate co-/cross-polarized correlation histograms");
  add_common(hbt);
  CLI::App* rec = app.add_subcommand("reconstruct", "reconstruct a state from a records CSV");
  add_common(rec);
  rec->add_option("records", records_csv, "CSV with header arm1,arm2,counts,weight")->required();
  rec->add_option("--resamples", resamples, "bootstrap resamples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("ConfigError", kExitConfig, e.what());
    return kExitConfig;
  }

  try {
    RunConfig cfg = config_path.empty() ? config_from_json(json::object()) : load_config_file(config_path);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (threads) {
      if (*threads < 1 || *threads > 256) throw ConfigError("--threads: must be in 1..256");
      cfg.threads = *threads;
    }
    if (!w_grid.empty()) cfg.w_grid = parse_number_list(w_grid, "--w-grid");
    if (n_per_setting) {
      if (*n_per_setting <= 0) throw ConfigError("--n-per-setting: must be positive");
      cfg.n_per_setting = *n_per_setting;
    }
    if (resamples) cfg.resamples = *resamples;
    if ((*tomo || *rec) && cfg.resamples < 100) throw ConfigError("resamples: must be at least 100");

    json report;
    if (*gamma) report = cmd_gamma_curve(cfg);
    if (*tomo) report = cmd_tomo_sim(cfg);
    if (*hbt) report = cmd_hbt_sim(cfg);
    if (*rec) report = cmd_reconstruct(cfg, records_csv);
    std::cout << "wrote " << (std::filesystem::path(cfg.out_dir) / "report.json").string() << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    print_error("ConfigError", kExitConfig, e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    print_error("IoError", kExitIo, e.what());
    return kExitIo;
  } catch (const SingularDesign& e) {
    print_error("SingularDesign", kExitCompute, e.what());
    return kExitCompute;
  } catch (const NonConvergence& e) {
    print_error("NonConvergence", kExitCompute, e.what());
    return kExitCompute;
  } catch (const Error& e) {
    print_error("ComputationError", kExitCompute, e.what());
    return kExitCompute;
  } catch (const std::exception& e) {
    print_error("InternalError", kExitCompute, e.what());
    return kExitCompute;
  }
}

}  // namespace qdent::cli
