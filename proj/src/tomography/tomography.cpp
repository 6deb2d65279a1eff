#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include <Eigen/Cholesky>

#include "likelihood.hpp"
#include "qdent/errors.hpp"
#include "qdent/optimize.hpp"
#include "qdent/rng.hpp"
#include "qdent/tomography.hpp"

namespace qdent::tomography {
namespace {

constexpr int kParams = 16;

// θ layout: four real diagonal entries, then (Re, Im) of L(a, b) for a > b in
// row-major order.
Matrix4 unpack_lower(const Eigen::VectorXd& theta) {
  Matrix4 l = Matrix4::Zero();
  for (int a = 0; a < 4; ++a) l(a, a) = theta(a);
  int k = 4;
  for (int a = 1; a < 4; ++a)
    for (int b = 0; b < a; ++b, k += 2) l(a, b) = {theta(k), theta(k + 1)};
  return l;
}

Eigen::VectorXd pack_lower(const Matrix4& l) {
  Eigen::VectorXd theta(kParams);
  for (int a = 0; a < 4; ++a) theta(a) = l(a, a).real();
  int k = 4;
  for (int a = 1; a < 4; ++a)
    for (int b = 0; b < a; ++b, k += 2) {
      theta(k) = l(a, b).real();
      theta(k + 1) = l(a, b).imag();
    }
  return theta;
}

Matrix4 initial_state(std::span<const MeasurementRecord> records, const std::optional<Matrix4>& init) {
  Matrix4 rho;
  if (init) {
    rho = polstate::project_to_physical(*init).matrix();
  } else {
    try {
      rho = polstate::project_to_physical(linear_inversion(records)).matrix();
    } catch (const InvalidArgument&) {
      rho = TwoQubitDensityMatrix::maximally_mixed().matrix();
    } catch (const InvalidDensityMatrix&) {
      rho = TwoQubitDensityMatrix::maximally_mixed().matrix();
    }
  }
  // Step off the boundary so the Cholesky factor exists and every direction
  // has a nonzero gradient at the start.
  constexpr double mix = 1e-3;
  return (1.0 - mix) * rho + mix * 0.25 * Matrix4::Identity();
}

double gamma_significance(std::complex<double> gamma, double var_re, double var_im, double cov) {
  const double mag = std::abs(gamma);
  if (mag == 0.0) return 0.0;
  const double ur = gamma.real() / mag;
  const double ui = gamma.imag() / mag;
  const double var = ur * ur * var_re + 2.0 * ur * ui * cov + ui * ui * var_im;
  if (!(var > 0.0)) return std::numeric_limits<double>::infinity();
  return mag / std::sqrt(var);
}

}  // namespace

TomographyResult mle_reconstruct(std::span<const MeasurementRecord> records, const std::optional<Matrix4>& init,
                                 const MleOptions& options) {
  const auto terms = detail::make_terms(records);
  {
    std::vector<Setting> settings;
    for (const auto& r : records) settings.push_back(r.setting);
    const int rank = design_rank(settings);
    if (rank < 16) {
      std::ostringstream os;
      os << "tomography settings span only " << rank << " of 16 operator dimensions";
      throw SingularDesign(os.str(), rank);
    }
  }

  const Matrix4 rho0 = initial_state(records, init);
  double positive = 0.0;
  double expected = 0.0;
  double norm = 0.0;
  for (const auto& t : terms) {
    positive += std::max(t.counts, 0.0);
    expected += t.weight * (t.proj * rho0).trace().real();
    norm += std::max(std::abs(t.counts), 1.0);
  }
  if (!(positive > 0.0)) throw InvalidArgument("records contain no positive counts");
  // λ_k = scale · w_k · Tr(P_k L L†); with this scale the starting factor has unit trace.
  const double scale = positive / expected;

  const optimize::Objective objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    const Matrix4 l = unpack_lower(theta);
    const Matrix4 x = l * l.adjoint();
    Matrix4 q = Matrix4::Zero();
    double total = 0.0;
    for (const auto& t : terms) {
      const double coef = scale * t.weight;
      double d_lambda = 0.0;
      total += detail::deviance(t.counts, coef * (t.proj * x).trace().real(), &d_lambda);
      q += (d_lambda * coef) * t.proj;
    }
    // ∂Tr(P L L†)/∂Re L_ab = 2 Re (P L)_ab, and likewise for Im.
    const Matrix4 g = 2.0 * q * l / norm;
    for (int a = 0; a < 4; ++a) grad(a) = g(a, a).real();
    int k = 4;
    for (int a = 1; a < 4; ++a)
      for (int b = 0; b < a; ++b, k += 2) {
        grad(k) = g(a, b).real();
        grad(k + 1) = g(a, b).imag();
      }
    return total / norm;
  };

  const Eigen::LLT<Matrix4> llt(rho0);
  const optimize::BfgsResult opt =
      optimize::minimize_bfgs(objective, pack_lower(llt.matrixL()), {options.gradient_tolerance, options.max_iterations});
  if (!opt.converged()) {
    std::ostringstream os;
    os << "maximum-likelihood reconstruction did not converge: " << optimize::to_string(opt.status) << " after "
       << opt.iterations << " iterations, gradient norm " << opt.gradient_norm << " (tolerance "
       << options.gradient_tolerance << ")";
    throw NonConvergence(os.str());
  }

  const Matrix4 l = unpack_lower(opt.x);
  Matrix4 x = l * l.adjoint();
  x = 0.5 * (x + x.adjoint());
  const double tr = x.trace().real();

  TomographyResult res;
  res.rho = TwoQubitDensityMatrix::from_matrix(x / tr);
  res.cascade_fit = polstate::fit_cascade_form(res.rho);
  res.log_likelihood = -opt.value * norm;
  res.intensity = scale * tr;
  res.iterations = opt.iterations;
  res.gradient_norm = opt.gradient_norm;
  return res;
}

BootstrapSummary bootstrap_uncertainty(std::span<const MeasurementRecord> records, const TomographyResult& point,
                                       int n_resamples, std::uint64_t seed, unsigned threads,
                                       const MleOptions& options) {
  if (n_resamples < 100) throw InvalidArgument("bootstrap needs at least 100 resamples");
  const std::vector<MeasurementRecord> base(records.begin(), records.end());
  const Matrix4 init = point.rho.matrix();

  std::vector<std::complex<double>> gammas(static_cast<std::size_t>(n_resamples));
  std::vector<char> ok(static_cast<std::size_t>(n_resamples), 0);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < n_resamples; r = next++) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
      std::vector<MeasurementRecord> sample = base;
      for (auto& rec : sample) {
        if (rec.counts >= 0.0) {
          rec.counts = static_cast<double>(rng.poisson(rec.counts));
        } else {
          rec.counts += std::sqrt(std::abs(rec.counts) + 1.0) * rng.normal();
        }
      }
      try {
        const TomographyResult fit = mle_reconstruct(sample, init, options);
        gammas[static_cast<std::size_t>(r)] = fit.cascade_fit.form.gamma;
        ok[static_cast<std::size_t>(r)] = 1;
      } catch (const NonConvergence&) {
      } catch (const InvalidArgument&) {
        // a resample can be pushed outside the accepted record range
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_resamples)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  BootstrapSummary out;
  out.resamples = n_resamples;
  // Sums run in index order so the result does not depend on scheduling.
  double sum_re = 0.0, sum_im = 0.0;
  int good = 0;
  for (int r = 0; r < n_resamples; ++r) {
    if (!ok[static_cast<std::size_t>(r)]) continue;
    sum_re += gammas[static_cast<std::size_t>(r)].real();
    sum_im += gammas[static_cast<std::size_t>(r)].imag();
    ++good;
  }
  out.diverged = n_resamples - good;
  if (out.diverged * 20 > n_resamples) {
    std::ostringstream os;
    os << "bootstrap: " << out.diverged << " of " << n_resamples << " resamples failed to converge";
    throw NonConvergence(os.str());
  }
  const double mean_re = sum_re / good;
  const double mean_im = sum_im / good;
  double var_re = 0.0, var_im = 0.0, cov = 0.0;
  for (int r = 0; r < n_resamples; ++r) {
    if (!ok[static_cast<std::size_t>(r)]) continue;
    const double dr = gammas[static_cast<std::size_t>(r)].real() - mean_re;
    const double di = gammas[static_cast<std::size_t>(r)].imag() - mean_im;
    var_re += dr * dr;
    var_im += di * di;
    cov += dr * di;
  }
  var_re /= good - 1;
  var_im /= good - 1;
  cov /= good - 1;
  out.std_gamma_re = std::sqrt(var_re);
  out.std_gamma_im = std::sqrt(var_im);
  out.significance_sigmas = gamma_significance(point.cascade_fit.form.gamma, var_re, var_im, cov);
  return out;
}

TomographyResult reconstruct(std::span<const MeasurementRecord> records, int n_resamples, std::uint64_t seed,
                             unsigned threads, const MleOptions& options) {
  TomographyResult res = mle_reconstruct(records, std::nullopt, options);
  const BootstrapSummary bs = bootstrap_uncertainty(records, res, n_resamples, seed, threads, options);
  res.std_gamma_re = bs.std_gamma_re;
  res.std_gamma_im = bs.std_gamma_im;
  res.significance_sigmas = bs.significance_sigmas;
  return res;
}

}  // namespace qdent::tomography
