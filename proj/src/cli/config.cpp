#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "qdent/cli.hpp"

namespace qdent::cli {

using nlohmann::json;

namespace {

class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(label() + "expected an object");
  }

  ~Reader() = default;

  /// Rejects keys that were never looked up.
  void finish() const {
    for (const auto& [key, _] : obj_.items())
      if (!seen_.count(key)) throw ConfigError(field(key) + ": unknown key");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key) && !obj_.at(key).is_null();
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_number()) throw ConfigError(field(key) + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(field(key) + ": must be finite");
    return d;
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    return static_cast<std::uint64_t>(integer(key, 0));
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
    }
    throw ConfigError(field(key) + ": expected an integer");
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_boolean()) throw ConfigError(field(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_string()) throw ConfigError(field(key) + ": expected a string");
    return v.get<std::string>();
  }

  std::complex<double> complex(const std::string& key, std::complex<double> fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
      return {v[0].get<double>(), v[1].get<double>()};
    throw ConfigError(field(key) + ": expected a number or [re, im]");
  }

  std::vector<double> numbers(const std::string& key) {
    std::vector<double> out;
    if (!has(key)) return out;
    const json& v = obj_.at(key);
    if (!v.is_array()) throw ConfigError(field(key) + ": expected an array of numbers");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(field(key) + "[" + std::to_string(i) + "]: expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  const json* child(const std::string& key) {
    if (!has(key)) return nullptr;
    return &obj_.at(key);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string label() const { return path_.empty() ? "config: " : path_ + ": "; }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

json complex_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

}  // namespace

cascade::SpectralWindow RunConfig::window() const {
  return {window_center.value_or(cascade.mean_exciton_energy()), window_width};
}

std::vector<double> default_w_grid() {
  return {0.5, 1,  2,  5,  10, 15, 20,  22,  24,  25,  26,  27,  28,
          30,  35, 40, 50, 75, 100, 150, 200, 300, 500, 1000, 2700};
}

RunConfig config_from_json(const json& doc) {
  RunConfig cfg;
  Reader root(doc, "");
  cfg.seed = root.seed("seed", cfg.seed);
  const std::int64_t threads = root.integer("threads", cfg.threads);
  if (threads < 1 || threads > 256) throw ConfigError("threads: must be in 1..256");
  cfg.threads = static_cast<unsigned>(threads);
  cfg.out_dir = root.string("out", cfg.out_dir);

  if (const json* c = root.child("cascade")) {
    Reader r(*c, "cascade");
    const double delta = r.number("detuning_ueV", cfg.cascade.detuning());
    const double center = r.number("center_ueV", cfg.cascade.mean_exciton_energy());
    cfg.cascade.exciton_energy_h = center + 0.5 * delta;
    cfg.cascade.exciton_energy_v = center - 0.5 * delta;
    cfg.cascade.width_h = r.number("width_h_ueV", cfg.cascade.width_h);
    cfg.cascade.width_v = r.number("width_v_ueV", cfg.cascade.width_v);
    cfg.cascade.biexciton_width = r.number("biexciton_width_ueV", 2.0 * cfg.cascade.width_h);
    cfg.cascade.biexciton_energy = r.number("biexciton_energy_ueV", cfg.cascade.biexciton_energy);
    cfg.cascade.alpha = r.complex("alpha", cfg.cascade.alpha);
    cfg.cascade.beta = r.complex("beta", cfg.cascade.beta);
    cfg.cascade.phase_h = r.number("phase_h_rad", cfg.cascade.phase_h);
    cfg.cascade.phase_v = r.number("phase_v_rad", cfg.cascade.phase_v);
    cfg.cascade.dot_overlap = r.complex("dot_overlap", cfg.cascade.dot_overlap);
    r.finish();
  }
  try {
    cfg.cascade.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("cascade: ") + e.what());
  }

  if (const json* w = root.child("window")) {
    Reader r(*w, "window");
    cfg.window_width = r.number("width_ueV", cfg.window_width);
    if (r.has("center_ueV")) cfg.window_center = r.number("center_ueV", 0.0);
    r.finish();
  }
  if (!(cfg.window_width > 0.0)) throw ConfigError("window.width_ueV: must be positive");

  if (const json* q = root.child("quadrature")) {
    Reader r(*q, "quadrature");
    cfg.quad_tolerance = r.number("tolerance", cfg.quad_tolerance);
    r.finish();
  }
  if (!(cfg.quad_tolerance > 0.0 && cfg.quad_tolerance < 1.0)) throw ConfigError("quadrature.tolerance: must be in (0, 1)");

  if (const json* g = root.child("gamma_curve")) {
    Reader r(*g, "gamma_curve");
    cfg.w_grid = r.numbers("w_grid_ueV");
    r.finish();
  }

  if (const json* t = root.child("tomography")) {
    Reader r(*t, "tomography");
    if (const json* s = r.child("settings")) {
      if (!s->is_array()) throw ConfigError("tomography.settings: expected an array of strings like \"HD\"");
      cfg.settings.clear();
      for (std::size_t i = 0; i < s->size(); ++i) {
        const json& e = (*s)[i];
        const std::string where = "tomography.settings[" + std::to_string(i) + "]";
        if (!e.is_string() || e.get<std::string>().size() != 2) throw ConfigError(where + ": expected two letters");
        const std::string txt = e.get<std::string>();
        try {
          cfg.settings.push_back({tomography::parse_polarizer(txt.substr(0, 1)), tomography::parse_polarizer(txt.substr(1, 1))});
        } catch (const InvalidArgument& ex) {
          throw ConfigError(where + ": " + ex.what());
        }
      }
    }
    cfg.n_per_setting = r.integer("n_per_setting", cfg.n_per_setting);
    cfg.resamples = static_cast<int>(r.integer("resamples", cfg.resamples));
    if (const json* tr = r.child("truth")) {
      Reader tt(*tr, "tomography.truth");
      polstate::CascadeForm f;
      f.a2 = tt.number("a2", 0.5);
      f.b2 = tt.number("b2", 1.0 - f.a2);
      f.gamma = tt.complex("gamma", {0.0, 0.0});
      tt.finish();
      try {
        f.validate();
      } catch (const InvalidForm& e) {
        throw ConfigError(std::string("tomography.truth: ") + e.what());
      }
      cfg.truth = f;
    }
    r.finish();
  }

  if (const json* e = root.child("eventsim")) {
    Reader r(*e, "eventsim");
    cfg.rate.pump_rate = r.number("pump_rate_per_ns", cfg.rate.pump_rate);
    cfg.rate.t_xx = r.number("t_xx_ns", cfg.rate.t_xx);
    cfg.rate.t_x = r.number("t_x_ns", cfg.rate.t_x);
    cfg.rate.background_rate = r.number("background_rate_per_ns", cfg.rate.background_rate);
    cfg.rate.exclusive_cascades = r.boolean("exclusive_cascades", cfg.rate.exclusive_cascades);
    cfg.duration_ns = r.number("duration_ns", cfg.duration_ns);
    cfg.histogram.bin_width = r.number("bin_width_ns", cfg.histogram.bin_width);
    cfg.histogram.range = r.number("range_ns", cfg.histogram.range);
    cfg.histogram.search_window = r.number("search_window_ns", 2.0 * cfg.histogram.range);
    cfg.export_timetags = r.boolean("export_timetags", cfg.export_timetags);
    r.finish();
  }
  try {
    cfg.rate.validate();
    cfg.histogram.validate();
  } catch (const InvalidArgument& ex) {
    throw ConfigError(std::string("eventsim: ") + ex.what());
  }
  if (!(cfg.duration_ns >= 0.0)) throw ConfigError("eventsim.duration_ns: must be non-negative");
  root.finish();
  return cfg;
}

json config_to_json(const RunConfig& cfg) {
  const auto& c = cfg.cascade;
  json settings = json::array();
  for (const auto& s : cfg.settings) settings.push_back(tomography::to_string(s));
  const auto w = cfg.window();
  json j = {
      {"seed", cfg.seed},
      {"threads", cfg.threads},
      {"out", cfg.out_dir},
      {"cascade",
       {{"detuning_ueV", c.detuning()},
        {"center_ueV", c.mean_exciton_energy()},
        {"width_h_ueV", c.width_h},
        {"width_v_ueV", c.width_v},
        {"biexciton_width_ueV", c.biexciton_width},
        {"biexciton_energy_ueV", c.biexciton_energy},
        {"alpha", complex_json(c.alpha)},
        {"beta", complex_json(c.beta)},
        {"phase_h_rad", c.phase_h},
        {"phase_v_rad", c.phase_v},
        {"dot_overlap", complex_json(c.dot_overlap)}}},
      {"window", {{"width_ueV", w.width}, {"center_ueV", w.center}}},
      {"quadrature", {{"tolerance", cfg.quad_tolerance}}},
      {"gamma_curve", {{"w_grid_ueV", cfg.w_grid.empty() ? default_w_grid() : cfg.w_grid}}},
      {"tomography",
       {{"settings", settings}, {"n_per_setting", cfg.n_per_setting}, {"resamples", cfg.resamples}}},
      {"eventsim",
       {{"pump_rate_per_ns", cfg.rate.pump_rate},
        {"t_xx_ns", cfg.rate.t_xx},
        {"t_x_ns", cfg.rate.t_x},
        {"background_rate_per_ns", cfg.rate.background_rate},
        {"exclusive_cascades", cfg.rate.exclusive_cascades},
        {"duration_ns", cfg.duration_ns},
        {"bin_width_ns", cfg.histogram.bin_width},
        {"range_ns", cfg.histogram.range},
        {"search_window_ns", cfg.histogram.search_window},
        {"export_timetags", cfg.export_timetags}}},
  };
  if (cfg.truth) {
    j["tomography"]["truth"] = {{"a2", cfg.truth->a2}, {"b2", cfg.truth->b2}, {"gamma", complex_json(cfg.truth->gamma)}};
  } else {
    j["tomography"]["truth"] = nullptr;
  }
  return j;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  json doc;
  try {
    doc = json::parse(ss.str(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(doc);
}

std::vector<double> parse_number_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ConfigError(std::string(what) + ": '" + item + "' is not a number");
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (used != item.size()) throw ConfigError(std::string(what) + ": '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(std::string(what) + ": empty list");
  return out;
}

json matrix_to_json(const polstate::Matrix4& m) {
  json rows = json::array();
  for (int i = 0; i < 4; ++i) {
    json row = json::array();
    for (int j = 0; j < 4; ++j) row.push_back(complex_json(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace qdent::cli
