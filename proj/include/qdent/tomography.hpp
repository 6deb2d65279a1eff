#pragma once

// Two-photon polarization tomography: analyzer settings, Born-rule rates,
// synthetic coincidence counts, linear inversion and positivity-constrained
// maximum-likelihood reconstruction with bootstrap error bars.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qdent/polstate.hpp"

namespace qdent::tomography {

using polstate::Matrix4;
using polstate::TwoQubitDensityMatrix;

/// Analyzer state passed by a polarizer. D/A are ±45° linear,
/// R = (H − iV)/√2 and L = (H + iV)/√2.
enum class Polarizer { H, V, D, A, R, L };

char polarizer_symbol(Polarizer p) noexcept;
/// Accepts a single letter, case-insensitive; throws InvalidArgument otherwise.
Polarizer parse_polarizer(std::string_view s);
Eigen::Vector2cd jones_vector(Polarizer p);

struct Setting {
  Polarizer arm1 = Polarizer::H;
  Polarizer arm2 = Polarizer::H;
  friend bool operator==(const Setting&, const Setting&) = default;
};

std::string to_string(const Setting& s);

/// All 16 pairs from {H, V, D, R} per arm, arm 1 varying slowest.
std::vector<Setting> default_settings();

/// Rank-1 projector |s1⟩⟨s1| ⊗ |s2⟩⟨s2|.
Matrix4 projector(const Setting& s);

/// Born-rule coincidence probability Tr(P ρ).
double expected_rate(const TwoQubitDensityMatrix& rho, const Setting& s);

/// Rank of the real design matrix mapping Hermitian 4×4 operators to the
/// settings' projector expectations (16 means informationally complete).
int design_rank(std::span<const Setting> settings);

struct MeasurementRecord {
  Setting setting;
  double counts = 0.0;  // net coincidences; may be fractional or slightly negative
  double duration_weight = 1.0;

  /// Throws InvalidArgument for weight ≤ 0, non-finite values, or counts
  /// below −5·sqrt(|counts| + 1).
  void validate() const;
};

/// Poisson(n · Tr(P_k ρ)) counts per setting. Setting k draws from stream
/// derive_seed(seed, k), so a record depends only on its own index.
std::vector<MeasurementRecord> simulate_counts(const TwoQubitDensityMatrix& rho, std::span<const Setting> settings,
                                               std::int64_t n_per_setting, std::uint64_t seed);

/// Least-squares solution of Tr(P_k X) = counts_k / weight_k over Hermitian X,
/// trace-normalized. Not necessarily positive. Throws SingularDesign.
Matrix4 linear_inversion(std::span<const MeasurementRecord> records);

/// Per-record log-likelihood relative to the saturated model (≤ 0). Records
/// with at least kPoissonThreshold counts use the Poisson deviance; smaller or
/// negative net counts use a Gaussian with variance λ + 1.
inline constexpr double kPoissonThreshold = 10.0;
double log_likelihood(std::span<const MeasurementRecord> records, const Matrix4& rho, double intensity);

/// log_likelihood maximized over the overall intensity for fixed ρ.
double profile_log_likelihood(std::span<const MeasurementRecord> records, const Matrix4& rho);

struct MleOptions {
  double gradient_tolerance = 1e-9;
  int max_iterations = 10000;
};

struct TomographyResult {
  TwoQubitDensityMatrix rho = TwoQubitDensityMatrix::maximally_mixed();
  polstate::CascadeFit cascade_fit;
  double std_gamma_re = 0.0;
  double std_gamma_im = 0.0;
  double significance_sigmas = 0.0;
  double log_likelihood = 0.0;
  double intensity = 0.0;  // fitted expected counts per unit weight at unit rate
  int iterations = 0;
  double gradient_norm = 0.0;
};

/// Maximum-likelihood state with ρ = L L† / Tr(L L†), L lower triangular
/// (16 real parameters, which also carry the intensity). Starts from `init`
/// or from the eigenvalue-clipped linear inversion. Leaves the bootstrap
/// fields at zero. Throws NonConvergence or SingularDesign.
TomographyResult mle_reconstruct(std::span<const MeasurementRecord> records,
                                 const std::optional<Matrix4>& init = std::nullopt, const MleOptions& options = {});

struct BootstrapSummary {
  double std_gamma_re = 0.0;
  double std_gamma_im = 0.0;
  double significance_sigmas = 0.0;
  int resamples = 0;
  int diverged = 0;
};

/// Resamples every record around its observed count (Poisson for c ≥ 0,
/// Gaussian with variance |c| + 1 below zero), refits, and reports the spread
/// of the fitted γ. Significance is |γ̂| over the standard deviation of the
/// resampled γ projected on the direction of γ̂. Resample r draws from
/// derive_seed(seed, r). Throws NonConvergence when more than 5% diverge.
BootstrapSummary bootstrap_uncertainty(std::span<const MeasurementRecord> records, const TomographyResult& point,
                                       int n_resamples, std::uint64_t seed, unsigned threads = 1,
                                       const MleOptions& options = {});

/// mle_reconstruct followed by bootstrap_uncertainty, merged into one result.
TomographyResult reconstruct(std::span<const MeasurementRecord> records, int n_resamples, std::uint64_t seed,
                             unsigned threads = 1, const MleOptions& options = {});

/// CSV with header `arm1,arm2,counts,weight`; counts and weights are written
/// with round-trip precision.
std::string records_to_csv(std::span<const MeasurementRecord> records);

/// Parses records_to_csv output. Errors name the 1-based line.
std::vector<MeasurementRecord> records_from_csv(std::string_view text);

}  // namespace qdent::tomography
