#include "likelihood.hpp"

#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>

#include "qdent/errors.hpp"

namespace qdent::tomography {
namespace detail {

double deviance(double counts, double lambda, double* d_lambda) {
  if (counts >= kPoissonThreshold) {
    if (!(lambda > 0.0)) {
      if (d_lambda) *d_lambda = -std::numeric_limits<double>::infinity();
      return std::numeric_limits<double>::infinity();
    }
    const double delta = (lambda - counts) / counts;
    if (d_lambda) *d_lambda = 1.0 - counts / lambda;
    // c·ln(c/λ) − (c − λ), written to stay accurate when λ ≈ c
    return -counts * (std::log1p(delta) - delta);
  }
  const double lam = std::max(lambda, 0.0);
  const double var = lam + 1.0;
  const double r = counts - lam;
  if (d_lambda) *d_lambda = -r / var - 0.5 * r * r / (var * var);
  return 0.5 * r * r / var;
}

std::vector<Term> make_terms(std::span<const MeasurementRecord> records) {
  std::vector<Term> terms;
  terms.reserve(records.size());
  for (const auto& r : records) {
    r.validate();
    terms.push_back({r.counts, r.duration_weight, projector(r.setting)});
  }
  return terms;
}

}  // namespace detail

double log_likelihood(std::span<const MeasurementRecord> records, const Matrix4& rho, double intensity) {
  double total = 0.0;
  for (const auto& t : detail::make_terms(records)) {
    const double lambda = intensity * t.weight * (t.proj * rho).trace().real();
    total -= detail::deviance(t.counts, lambda, nullptr);
  }
  return total;
}

double profile_log_likelihood(std::span<const MeasurementRecord> records, const Matrix4& rho) {
  const auto terms = detail::make_terms(records);
  double positive = 0.0;
  double expected = 0.0;
  for (const auto& t : terms) {
    positive += std::max(t.counts, 0.0);
    expected += t.weight * std::max((t.proj * rho).trace().real(), 0.0);
  }
  const double guess = (positive > 0.0 && expected > 0.0) ? positive / expected : 1.0;
  auto negative_ll = [&](double log_scale) {
    const double intensity = guess * std::exp(log_scale);
    double d = 0.0;
    for (const auto& t : terms) d += detail::deviance(t.counts, intensity * t.weight * (t.proj * rho).trace().real(), nullptr);
    return d;
  };
  const auto best = boost::math::tools::brent_find_minima(negative_ll, -5.0, 5.0, 52);
  return -best.second;
}

}  // namespace qdent::tomography
