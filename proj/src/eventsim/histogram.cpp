#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include "qdent/errors.hpp"
#include "qdent/eventsim.hpp"

namespace qdent::eventsim {

void HistogramConfig::validate() const {
  if (!(bin_width > 0.0) || !(range > 0.0) || !std::isfinite(bin_width) || !std::isfinite(range))
    throw InvalidArgument("histogram bin width and range must be positive");
  if (!(search_window >= range)) throw InvalidArgument("search window must cover the histogram range");
  if (range / bin_width > 1e7) throw InvalidArgument("histogram would have more than 1e7 bins");
}

double CorrelationHistogram::sum() const { return std::accumulate(counts.begin(), counts.end(), 0.0); }

CorrelationHistogram correlate(const EventStream& stream, const HistogramConfig& config) {
  config.validate();
  std::vector<double> arm1, arm2;
  for (const auto& p : stream.pairs) {
    if (arm1_passes(p.outcome)) arm1.push_back(p.t_xx);
    if (arm2_passes(p.outcome)) arm2.push_back(p.t_x);
  }
  for (const auto& b : stream.background) (b.arm == 1 ? arm1 : arm2).push_back(b.t);
  std::sort(arm1.begin(), arm1.end());
  std::sort(arm2.begin(), arm2.end());

  CorrelationHistogram h;
  h.bin_width = config.bin_width;
  h.range = config.range;
  const auto nbins = static_cast<std::size_t>(std::llround(2.0 * config.range / config.bin_width));
  h.counts.assign(nbins, 0.0);

  std::size_t first = 0;
  for (double t1 : arm1) {
    while (first < arm2.size() && arm2[first] < t1 - config.search_window) ++first;
    for (std::size_t j = first; j < arm2.size() && arm2[j] <= t1 + config.search_window; ++j) {
      const double tau = arm2[j] - t1;
      h.total += 1.0;
      const double pos = (tau + config.range) / config.bin_width;
      if (pos >= 0.0 && pos < static_cast<double>(nbins)) {
        h.counts[static_cast<std::size_t>(pos)] += 1.0;
      } else {
        h.out_of_range += 1.0;
      }
    }
  }
  h.variance = h.counts;
  return h;
}

CorrelationHistogram reduced_correlation(const CorrelationHistogram& co, const CorrelationHistogram& cross1,
                                         const CorrelationHistogram& cross2) {
  auto same = [](const CorrelationHistogram& a, const CorrelationHistogram& b) {
    return a.bins() == b.bins() && std::abs(a.bin_width - b.bin_width) <= 1e-12 * a.bin_width &&
           std::abs(a.range - b.range) <= 1e-12 * a.range;
  };
  if (!same(co, cross1) || !same(co, cross2)) throw BinMismatch("correlation histograms have different binning");
  CorrelationHistogram out = co;
  out.is_signed = true;
  for (std::size_t i = 0; i < co.bins(); ++i) {
    out.counts[i] = co.counts[i] - 0.5 * (cross1.counts[i] + cross2.counts[i]);
    out.variance[i] = co.variance[i] + 0.25 * (cross1.variance[i] + cross2.variance[i]);
  }
  out.total = co.total - 0.5 * (cross1.total + cross2.total);
  out.out_of_range = co.out_of_range - 0.5 * (cross1.out_of_range + cross2.out_of_range);
  return out;
}

NetCoincidences integrate(const CorrelationHistogram& h, double tau_lo, double tau_hi) {
  NetCoincidences n;
  double var = 0.0;
  for (std::size_t i = 0; i < h.bins(); ++i) {
    const double tau = h.tau_center(i);
    if (tau > tau_lo && tau <= tau_hi) {
      n.value += h.counts[i];
      var += h.variance[i];
    }
  }
  n.error = std::sqrt(var);
  return n;
}

LifetimeFit extract_lifetime(const CorrelationHistogram& h) {
  std::vector<double> tau, y, w;
  for (std::size_t i = 0; i < h.bins(); ++i) {
    const double t = h.tau_center(i);
    if (t <= h.bin_width) continue;  // zero-delay bin and the one straddling it
    tau.push_back(t);
    y.push_back(h.counts[i]);
    w.push_back(1.0 / std::max(h.variance.empty() ? h.counts[i] : h.variance[i], 1.0));
  }
  const std::size_t n = tau.size();
  if (n < 5) throw FitFailed("too few positive-delay bins for a lifetime fit");

  struct Linear {
    double amplitude, offset, chi2;
  };
  auto solve_linear = [&](double lifetime) {
    double see = 0, se1 = 0, s11 = 0, sey = 0, s1y = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = std::exp(-tau[i] / lifetime);
      see += w[i] * e * e;
      se1 += w[i] * e;
      s11 += w[i];
      sey += w[i] * e * y[i];
      s1y += w[i] * y[i];
    }
    const double det = see * s11 - se1 * se1;
    Linear lin{0.0, s1y / s11, 0.0};
    if (det > 1e-300 * see * s11) {
      lin.amplitude = (sey * s11 - se1 * s1y) / det;
      lin.offset = (see * s1y - se1 * sey) / det;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - lin.amplitude * std::exp(-tau[i] / lifetime) - lin.offset;
      lin.chi2 += w[i] * r * r;
    }
    return lin;
  };

  const double log_lo = std::log(0.5 * h.bin_width);
  const double log_hi = std::log(4.0 * h.range);
  const auto best = boost::math::tools::brent_find_minima(
      [&](double log_t) { return solve_linear(std::exp(log_t)).chi2; }, log_lo, log_hi, 40);
  const double lifetime = std::exp(best.first);
  const Linear lin = solve_linear(lifetime);
  if (best.first - log_lo < 1e-3 || log_hi - best.first < 1e-3 || !(lin.amplitude > 0.0))
    throw FitFailed("no decaying component on the positive-delay side");

  // Covariance of (A, T, B) from the weighted Jacobian, inflated by the reduced χ² when above 1.
  Eigen::Matrix3d fisher = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::exp(-tau[i] / lifetime);
    const Eigen::Vector3d j(e, lin.amplitude * tau[i] * e / (lifetime * lifetime), 1.0);
    fisher += w[i] * j * j.transpose();
  }
  const Eigen::Matrix3d cov = fisher.inverse() * std::max(1.0, lin.chi2 / static_cast<double>(n - 3));
  const double amp_std = std::sqrt(std::max(cov(0, 0), 0.0));
  if (!(lin.amplitude > 3.0 * amp_std)) throw FitFailed("decaying component is not significant");

  LifetimeFit fit;
  fit.lifetime = lifetime;
  fit.lifetime_std = std::sqrt(std::max(cov(1, 1), 0.0));
  fit.amplitude = lin.amplitude;
  fit.offset = lin.offset;
  fit.bins_used = static_cast<int>(n);
  return fit;
}

std::string histogram_to_csv(const CorrelationHistogram& h) {
  std::string out = "tau_ns,counts\n";
  char buf[80];
  for (std::size_t i = 0; i < h.bins(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g,%.17g\n", h.tau_center(i), h.counts[i]);
    out += buf;
  }
  return out;
}

}  // namespace qdent::eventsim
