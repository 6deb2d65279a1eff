#pragma once

// Monte Carlo photon-pair events for the cascade: photon energies drawn from
// the two-photon spectrum, polarization outcomes from a density matrix, and
// time tags under continuous excitation for coincidence histograms.
//
// Times are in ns, energies in µeV. Times and energies are sampled
// independently; the temporal data only carries ordering and lifetimes.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qdent/cascade.hpp"
#include "qdent/polstate.hpp"
#include "qdent/tomography.hpp"

namespace qdent::eventsim {

using cascade::CascadeParams;
using cascade::Path;
using cascade::SpectralWindow;
using tomography::Setting;

struct EnergyPair {
  double e_xx;  // first (biexciton) photon
  double e_x;   // second (exciton) photon
  Path path;
};

/// Exact draws from |α A_H|² + |β A_V|²: the path is chosen with its total
/// weight, e_x is Lorentzian about E_path with FWHM Γ_path, and the pair sum
/// e_xx + e_x is Lorentzian about E_u with FWHM Γ_u.
std::vector<EnergyPair> sample_pair_energies(const CascadeParams& p, std::size_t n, std::uint64_t seed);

struct WindowSelection {
  std::vector<EnergyPair> accepted;
  double acceptance_fraction = 0.0;
};

/// Keeps the pairs whose second photon falls inside the window.
WindowSelection apply_window(std::span<const EnergyPair> pairs, const SpectralWindow& w);

/// Fraction of values inside the window (SIMD counted).
double acceptance_fraction(std::span<const double> e_x, const SpectralWindow& w);

/// Separation of the two peaks of a doublet: values in [lo, hi) are binned,
/// the maximum of each half is located and refined by a three-bin parabola.
double doublet_peak_splitting(std::span<const double> values, double lo, double hi, double bin_width);

/// Joint analyzer result for one pair: arm 1 sees the first photon, arm 2 the second.
enum class Outcome : std::uint8_t { PassPass, PassBlock, BlockPass, BlockBlock };

bool arm1_passes(Outcome o) noexcept;
bool arm2_passes(Outcome o) noexcept;

/// One Born-rule outcome per pair for the analyzer pair `s`.
std::vector<Outcome> sample_polarization(std::size_t n_pairs, const polstate::TwoQubitDensityMatrix& rho,
                                         const Setting& s, std::uint64_t seed);

/// Tomography input built from event-level sampling: for setting k, n_pairs
/// outcomes are drawn from stream derive_seed(seed, k) and the PassPass count
/// becomes the record's counts.
std::vector<tomography::MeasurementRecord> sample_tomography_records(const polstate::TwoQubitDensityMatrix& rho,
                                                                     std::span<const Setting> settings,
                                                                     std::size_t n_pairs, std::uint64_t seed);

struct RateModelParams {
  double pump_rate = 0.02;  // cascade initiations per ns
  double t_xx = 0.4;        // biexciton lifetime, ns
  double t_x = 0.8;         // exciton lifetime, ns
  double background_rate = 0.0;  // uncorrelated singles per ns per arm
  bool exclusive_cascades = true;  // pump events during an active cascade are dropped

  void validate() const;
};

struct PairEvent {
  double t_xx;
  double t_x;
  double e_xx;
  double e_x;
  Outcome outcome;
};

struct BackgroundEvent {
  int arm;  // 1 or 2
  double t;
};

struct EventStream {
  std::vector<PairEvent> pairs;
  std::vector<BackgroundEvent> background;
  double duration = 0.0;
  Setting analyzers;
};

struct TimetagSource {
  CascadeParams cascade = CascadeParams::defaults();
  polstate::TwoQubitDensityMatrix rho = polstate::TwoQubitDensityMatrix::maximally_mixed();
  Setting analyzers;
};

/// Cascades start as a Poisson process at pump_rate; each gives
/// t_xx = t0 + Exp(T_XX) and t_x = t_xx + Exp(T_X). With exclusive_cascades,
/// pump events arriving before the previous t_x are discarded.
EventStream generate_timetags(const RateModelParams& rate, double duration, std::uint64_t seed,
                              const TimetagSource& source = {});

/// CSV `arm,t_ns,energy_ueV,pol` of detected photons sorted by time; background
/// singles have an empty energy field.
std::string timetags_to_csv(const EventStream& stream);

struct HistogramConfig {
  double bin_width = 0.05;  // ns
  double range = 10.0;      // bins cover [−range, range)
  double search_window = 20.0;  // coincidences with |τ| ≤ search_window are counted in `total`

  void validate() const;
};

struct CorrelationHistogram {
  double bin_width = 0.0;
  double range = 0.0;
  std::vector<double> counts;
  std::vector<double> variance;
  double total = 0.0;
  double out_of_range = 0.0;
  bool is_signed = false;

  std::size_t bins() const noexcept { return counts.size(); }
  double tau_center(std::size_t i) const noexcept {
    return -range + (static_cast<double>(i) + 0.5) * bin_width;
  }
  double sum() const;
};

/// Start-stop coincidences τ = t(arm 2) − t(arm 1) between all arm-1 (first
/// photon) and arm-2 (second photon) detections. Positive τ means the exciton
/// photon arrived after the biexciton photon.
CorrelationHistogram correlate(const EventStream& stream, const HistogramConfig& config);

/// co − (cross1 + cross2)/2, with variances added. Throws BinMismatch.
CorrelationHistogram reduced_correlation(const CorrelationHistogram& co, const CorrelationHistogram& cross1,
                                         const CorrelationHistogram& cross2);

struct NetCoincidences {
  double value = 0.0;
  double error = 0.0;
};

/// Sum of bins with centers in (tau_lo, tau_hi], with propagated Poisson error.
NetCoincidences integrate(const CorrelationHistogram& h, double tau_lo, double tau_hi);

struct LifetimeFit {
  double lifetime = 0.0;
  double lifetime_std = 0.0;
  double amplitude = 0.0;
  double offset = 0.0;
  int bins_used = 0;
};

/// Weighted fit of A·exp(−τ/T) + B to the positive-delay side, skipping the
/// first bin after zero. Throws FitFailed when no decaying component is found.
LifetimeFit extract_lifetime(const CorrelationHistogram& h);

/// CSV `tau_ns,counts`.
std::string histogram_to_csv(const CorrelationHistogram& h);

}  // namespace qdent::eventsim
