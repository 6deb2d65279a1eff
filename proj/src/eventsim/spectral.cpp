#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "qdent/errors.hpp"
#include "qdent/eventsim.hpp"
#include "qdent/kernels.hpp"
#include "qdent/rng.hpp"

namespace qdent::eventsim {

std::vector<EnergyPair> sample_pair_energies(const CascadeParams& p, std::size_t n, std::uint64_t seed) {
  p.validate();
  if (n == 0) throw InvalidArgument("sample count must be positive");
  // Path weights follow the window normalization: |α|²·2π/Γ_H against |β|²·2π/Γ_V.
  const double wh = std::norm(p.alpha) / p.width_h;
  const double wv = std::norm(p.beta) / p.width_v;
  const double prob_h = wh / (wh + wv);

  Rng rng(seed);
  std::vector<EnergyPair> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Path path = rng.uniform() < prob_h ? Path::H : Path::V;
    const double e_x = path == Path::H ? rng.cauchy(p.exciton_energy_h, 0.5 * p.width_h)
                                       : rng.cauchy(p.exciton_energy_v, 0.5 * p.width_v);
    const double total = rng.cauchy(p.biexciton_energy, 0.5 * p.biexciton_width);
    out.push_back({total - e_x, e_x, path});
  }
  return out;
}

WindowSelection apply_window(std::span<const EnergyPair> pairs, const SpectralWindow& w) {
  if (!(w.width >= 0.0)) throw DomainError("window width must be non-negative");
  WindowSelection sel;
  if (pairs.empty()) return sel;
  // A zero-width window is empty by definition, even for a sample that lands on its center.
  if (w.width > 0.0) {
    for (const auto& pr : pairs)
      if (w.contains(pr.e_x)) sel.accepted.push_back(pr);
  }
  sel.acceptance_fraction = static_cast<double>(sel.accepted.size()) / static_cast<double>(pairs.size());
  return sel;
}

double acceptance_fraction(std::span<const double> e_x, const SpectralWindow& w) {
  if (!(w.width >= 0.0)) throw DomainError("window width must be non-negative");
  if (e_x.empty() || w.width == 0.0) return 0.0;
  return static_cast<double>(kernels::count_in_window(e_x, w.lo(), w.hi())) / static_cast<double>(e_x.size());
}

double doublet_peak_splitting(std::span<const double> values, double lo, double hi, double bin_width) {
  if (!(hi > lo) || !(bin_width > 0.0)) throw InvalidArgument("bad histogram range");
  const auto nbins = static_cast<std::size_t>(std::ceil((hi - lo) / bin_width));
  if (nbins < 6) throw InvalidArgument("histogram needs at least 6 bins");
  std::vector<double> hist(nbins, 0.0);
  for (double v : values) {
    if (!(v >= lo && v < hi)) continue;
    const auto b = std::min(nbins - 1, static_cast<std::size_t>((v - lo) / bin_width));
    hist[b] += 1.0;
  }
  auto peak = [&](std::size_t first, std::size_t last) {
    std::size_t best = first;
    for (std::size_t i = first; i < last; ++i)
      if (hist[i] > hist[best]) best = i;
    if (hist[best] <= 0.0) throw FitFailed("doublet histogram half is empty");
    double offset = 0.0;
    if (best > 0 && best + 1 < nbins) {
      const double ym = hist[best - 1], y0 = hist[best], yp = hist[best + 1];
      const double curvature = ym - 2.0 * y0 + yp;
      if (curvature < 0.0) offset = 0.5 * (ym - yp) / curvature;
    }
    return lo + (static_cast<double>(best) + 0.5 + offset) * bin_width;
  };
  const std::size_t half = nbins / 2;
  return peak(half, nbins) - peak(0, half);
}

bool arm1_passes(Outcome o) noexcept { return o == Outcome::PassPass || o == Outcome::PassBlock; }
bool arm2_passes(Outcome o) noexcept { return o == Outcome::PassPass || o == Outcome::BlockPass; }

namespace {

std::array<double, 4> outcome_probabilities(const polstate::TwoQubitDensityMatrix& rho, const Setting& s) {
  const Eigen::Vector2cd u = tomography::jones_vector(s.arm1);
  const Eigen::Vector2cd v = tomography::jones_vector(s.arm2);
  const Eigen::Matrix2cd p1 = u * u.adjoint();
  const Eigen::Matrix2cd p2 = v * v.adjoint();
  const Eigen::Matrix2cd q1 = Eigen::Matrix2cd::Identity() - p1;
  const Eigen::Matrix2cd q2 = Eigen::Matrix2cd::Identity() - p2;
  auto joint = [&](const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    polstate::Matrix4 k;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int m = 0; m < 2; ++m)
          for (int n = 0; n < 2; ++n) k(2 * i + m, 2 * j + n) = a(i, j) * b(m, n);
    return std::max(0.0, (k * rho.matrix()).trace().real());
  };
  return {joint(p1, p2), joint(p1, q2), joint(q1, p2), joint(q1, q2)};
}

}  // namespace

std::vector<Outcome> sample_polarization(std::size_t n_pairs, const polstate::TwoQubitDensityMatrix& rho,
                                         const Setting& s, std::uint64_t seed) {
  const auto prob = outcome_probabilities(rho, s);
  const double total = prob[0] + prob[1] + prob[2] + prob[3];
  const double c0 = prob[0] / total;
  const double c1 = c0 + prob[1] / total;
  const double c2 = c1 + prob[2] / total;
  Rng rng(seed);
  std::vector<Outcome> out(n_pairs);
  for (auto& o : out) {
    const double u = rng.uniform();
    o = u < c0 ? Outcome::PassPass : u < c1 ? Outcome::PassBlock : u < c2 ? Outcome::BlockPass : Outcome::BlockBlock;
  }
  return out;
}

std::vector<tomography::MeasurementRecord> sample_tomography_records(const polstate::TwoQubitDensityMatrix& rho,
                                                                     std::span<const Setting> settings,
                                                                     std::size_t n_pairs, std::uint64_t seed) {
  std::vector<tomography::MeasurementRecord> out;
  for (std::size_t k = 0; k < settings.size(); ++k) {
    const auto outcomes = sample_polarization(n_pairs, rho, settings[k], derive_seed(seed, k));
    const auto passes = std::count(outcomes.begin(), outcomes.end(), Outcome::PassPass);
    out.push_back({settings[k], static_cast<double>(passes), 1.0});
  }
  return out;
}

}  // namespace qdent::eventsim
