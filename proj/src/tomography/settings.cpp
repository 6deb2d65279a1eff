#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/SVD>

#include "qdent/errors.hpp"
#include "qdent/rng.hpp"
#include "qdent/tomography.hpp"

namespace qdent::tomography {

char polarizer_symbol(Polarizer p) noexcept {
  constexpr char symbols[] = {'H', 'V', 'D', 'A', 'R', 'L'};
  return symbols[static_cast<int>(p)];
}

Polarizer parse_polarizer(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.size() == 1) {
    switch (std::toupper(static_cast<unsigned char>(s[0]))) {
      case 'H':
        return Polarizer::H;
      case 'V':
        return Polarizer::V;
      case 'D':
        return Polarizer::D;
      case 'A':
        return Polarizer::A;
      case 'R':
        return Polarizer::R;
      case 'L':
        return Polarizer::L;
    }
  }
  throw InvalidArgument("unknown polarizer '" + std::string(s) + "' (expected one of H V D A R L)");
}

Eigen::Vector2cd jones_vector(Polarizer p) {
  const double r = 1.0 / std::sqrt(2.0);
  const std::complex<double> i(0.0, 1.0);
  switch (p) {
    case Polarizer::H:
      return {1.0, 0.0};
    case Polarizer::V:
      return {0.0, 1.0};
    case Polarizer::D:
      return {r, r};
    case Polarizer::A:
      return {r, -r};
    case Polarizer::R:
      return {r, -i * r};
    case Polarizer::L:
      return {r, i * r};
  }
  throw InvalidArgument("bad polarizer");
}

std::string to_string(const Setting& s) { return {polarizer_symbol(s.arm1), polarizer_symbol(s.arm2)}; }

std::vector<Setting> default_settings() {
  constexpr Polarizer basis[] = {Polarizer::H, Polarizer::V, Polarizer::D, Polarizer::R};
  std::vector<Setting> out;
  for (Polarizer a : basis)
    for (Polarizer b : basis) out.push_back({a, b});
  return out;
}

Matrix4 projector(const Setting& s) {
  const Eigen::Vector2cd u = jones_vector(s.arm1);
  const Eigen::Vector2cd v = jones_vector(s.arm2);
  polstate::Vector4 psi;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) psi(2 * i + j) = u(i) * v(j);
  return psi * psi.adjoint();
}

double expected_rate(const TwoQubitDensityMatrix& rho, const Setting& s) {
  return (projector(s) * rho.matrix()).trace().real();
}

namespace detail {

// Row k: Tr(P_k B_m) for the Hermitian basis B_m = σ_a ⊗ σ_b / 2, m = 4a + b.
Eigen::MatrixXd design_matrix(std::span<const Setting> settings) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(settings.size()), 16);
  for (std::size_t k = 0; k < settings.size(); ++k) {
    const Matrix4 p = projector(settings[k]);
    for (int m = 0; m < 16; ++m)
      a(static_cast<Eigen::Index>(k), m) = 0.5 * (p * polstate::pauli_product(m / 4, m % 4)).trace().real();
  }
  return a;
}

}  // namespace detail

int design_rank(std::span<const Setting> settings) {
  if (settings.empty()) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(detail::design_matrix(settings));
  svd.setThreshold(1e-10);
  return static_cast<int>(svd.rank());
}

void MeasurementRecord::validate() const {
  if (!std::isfinite(counts) || !std::isfinite(duration_weight))
    throw InvalidArgument("record " + to_string(setting) + " has non-finite fields");
  if (!(duration_weight > 0.0)) throw InvalidArgument("record " + to_string(setting) + " has non-positive weight");
  if (!(counts > -5.0 * std::sqrt(std::abs(counts) + 1.0))) {
    std::ostringstream os;
    os << "record " << to_string(setting) << " has implausibly negative counts " << counts;
    throw InvalidArgument(os.str());
  }
}

std::vector<MeasurementRecord> simulate_counts(const TwoQubitDensityMatrix& rho, std::span<const Setting> settings,
                                               std::int64_t n_per_setting, std::uint64_t seed) {
  if (n_per_setting <= 0) throw InvalidArgument("n_per_setting must be positive");
  std::vector<MeasurementRecord> out;
  out.reserve(settings.size());
  for (std::size_t k = 0; k < settings.size(); ++k) {
    Rng rng(derive_seed(seed, k));
    const double rate = std::max(0.0, expected_rate(rho, settings[k]));
    const double mean = static_cast<double>(n_per_setting) * rate;
    out.push_back({settings[k], static_cast<double>(rng.poisson(mean)), 1.0});
  }
  return out;
}

Matrix4 linear_inversion(std::span<const MeasurementRecord> records) {
  std::vector<Setting> settings;
  Eigen::VectorXd y(static_cast<Eigen::Index>(records.size()));
  for (std::size_t k = 0; k < records.size(); ++k) {
    records[k].validate();
    settings.push_back(records[k].setting);
    y(static_cast<Eigen::Index>(k)) = records[k].counts / records[k].duration_weight;
  }
  if (settings.empty()) throw SingularDesign("no measurement records", 0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(detail::design_matrix(settings), Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  const int rank = static_cast<int>(svd.rank());
  if (rank < 16) {
    std::ostringstream os;
    os << "tomography settings span only " << rank << " of 16 operator dimensions";
    throw SingularDesign(os.str(), rank);
  }
  const Eigen::VectorXd x = svd.solve(y);
  Matrix4 m = Matrix4::Zero();
  for (int i = 0; i < 16; ++i) m += 0.5 * x(i) * polstate::pauli_product(i / 4, i % 4);
  m = 0.5 * (m + m.adjoint());
  const double tr = m.trace().real();
  if (!(tr > 0.0)) throw InvalidArgument("linear inversion produced a non-positive trace; counts carry no signal");
  return m / tr;
}

std::string records_to_csv(std::span<const MeasurementRecord> records) {
  std::string out = "arm1,arm2,counts,weight\n";
  char buf[64];
  for (const auto& r : records) {
    out += polarizer_symbol(r.setting.arm1);
    out += ',';
    out += polarizer_symbol(r.setting.arm2);
    out += ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.counts);
    out += buf;
    out += ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.duration_weight);
    out += buf;
    out += '\n';
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

double parse_number(std::string_view s, int line, const char* field) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    std::ostringstream os;
    os << "line " << line << ": field '" << field << "' is not a number: '" << s << "'";
    throw InvalidArgument(os.str());
  }
  return v;
}

}  // namespace

std::vector<MeasurementRecord> records_from_csv(std::string_view text) {
  std::vector<MeasurementRecord> out;
  int line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (!header_seen) {
      if (fields.size() != 4 || fields[0] != "arm1" || fields[1] != "arm2" || fields[2] != "counts" ||
          fields[3] != "weight") {
        std::ostringstream os;
        os << "line " << line_no << ": expected header 'arm1,arm2,counts,weight'";
        throw InvalidArgument(os.str());
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 4) {
      std::ostringstream os;
      os << "line " << line_no << ": expected 4 fields, found " << fields.size();
      throw InvalidArgument(os.str());
    }
    MeasurementRecord r;
    try {
      r.setting = {parse_polarizer(fields[0]), parse_polarizer(fields[1])};
      r.counts = parse_number(fields[2], line_no, "counts");
      r.duration_weight = parse_number(fields[3], line_no, "weight");
      r.validate();
    } catch (const InvalidArgument& e) {
      const std::string what = e.what();
      if (what.rfind("line ", 0) == 0) throw;
      throw InvalidArgument("line " + std::to_string(line_no) + ": " + what);
    }
    out.push_back(r);
  }
  if (!header_seen) throw InvalidArgument("records file is empty (header required)");
  return out;
}

}  // namespace qdent::tomography
