#pragma once

// Biexciton–exciton cascade model. Energies are in µeV with ħ = c = 1; the
// level energies enter as complex poles ε_j = E_j − iΓ_j/2.

#include <complex>
#include <span>
#include <vector>

#include "qdent/polstate.hpp"

namespace qdent::cascade {

using Complex = std::complex<double>;

enum class Path { H, V };

struct CascadeParams {
  double biexciton_energy = 0.0;  // E_u
  double biexciton_width = 3.2;   // Γ_u
  double exciton_energy_h = 13.5;
  double exciton_energy_v = -13.5;
  double width_h = 1.6;
  double width_v = 1.6;
  Complex alpha{0.70710678118654752440, 0.0};
  Complex beta{0.70710678118654752440, 0.0};
  double phase_h = 0.0;
  double phase_v = 0.0;
  Complex dot_overlap{1.0, 0.0};  // η = ⟨d_H|d_V⟩

  /// Measured dot: Δ = 27 µeV, Γ_H = Γ_V = 1.6 µeV, Γ_u = 2Γ, equal paths, η = 1.
  static CascadeParams defaults() { return {}; }

  /// Symmetric doublet E_H,V = ±Δ/2 about zero, Γ_u = 2Γ.
  static CascadeParams symmetric(double detuning, double width);

  double detuning() const noexcept { return exciton_energy_h - exciton_energy_v; }
  double mean_exciton_energy() const noexcept { return 0.5 * (exciton_energy_h + exciton_energy_v); }
  Complex pole(Path p) const noexcept;
  Complex biexciton_pole() const noexcept { return {biexciton_energy, -0.5 * biexciton_width}; }

  /// Throws InvalidArgument when an invariant is violated.
  void validate() const;
};

struct SpectralWindow {
  double center = 0.0;
  double width = 0.0;

  /// Window centered on the mean exciton energy (E_H + E_V)/2.
  static SpectralWindow centered(const CascadeParams& p, double width) { return {p.mean_exciton_energy(), width}; }
  double lo() const noexcept { return center - 0.5 * width; }
  double hi() const noexcept { return center + 0.5 * width; }
  bool contains(double e) const noexcept { return e >= lo() && e <= hi(); }
};

/// Two-photon amplitude ⟨k1,k2|p_path⟩ = e^{iφ}·(Γ_H/2π) / ((k1+k2−ε_u)(k2−ε_path)).
/// The path amplitude α or β is not included.
Complex joint_amplitude(const CascadeParams& p, double k1, double k2, Path path);

/// Window integrals after integrating out the first photon over the real line.
/// The k1 integral is the constant 2π/Γ_u (times the squared prefactor), common
/// to every term, and is dropped.
struct WindowIntegrals {
  Complex cross;        // ∫_W dk 1 / ((k − ε_H)·conj(k − ε_V))
  double lorentz_h = 0; // ∫_W dk |k − ε_H|⁻²
  double lorentz_v = 0;
  double cross_error = 0;
  double lorentz_h_error = 0;
  double lorentz_v_error = 0;
  int evaluations = 0;
};

/// Adaptive quadrature of the window integrals to relative tolerance `tol`.
/// Throws NonConvergence when the interval budget is exhausted first.
WindowIntegrals window_integrals(const CascadeParams& p, const SpectralWindow& w, double tol, int max_intervals = 4000);

struct FilteredCoherence {
  Complex gamma;               // γ′
  double gamma_error = 0;      // absolute error bound on γ′
  double detection_probability = 0;
  double probability_error = 0;
  double weight_h = 0;         // renormalized |α'|²
  double weight_v = 0;         // renormalized |β'|²
};

/// γ′ = η·αβ*·∫_W A_H A_V* / (|α|²∫_W|A_H|² + |β|²∫_W|A_V|²) together with the
/// detection probability normalized to 1 for an infinite window.
FilteredCoherence filtered_coherence(const CascadeParams& p, const SpectralWindow& w, double tol);

/// Throws DomainError for width ≤ 0 or tol ≤ 0.
Complex gamma_prime_numeric(const CascadeParams& p, const SpectralWindow& w, double tol);

/// Probability that the second photon lands in the window; 0 for an empty window.
double detection_probability(const CascadeParams& p, const SpectralWindow& w, double tol);

/// Narrow-linewidth limit |γ′| = ¼(1/x − x)·ln((1+x)/(1−x)), x = w/Δ, valid for
/// 0 < w < Δ. Throws DomainError outside that range.
double gamma_prime_analytic(double w, double delta);

polstate::TwoQubitDensityMatrix filtered_density_matrix(const CascadeParams& p, const SpectralWindow& w, double tol);

struct SweepPoint {
  double width = 0;
  double gamma_abs = 0;
  double detection_probability = 0;
};

/// Evaluates |γ′| and the detection probability on a strictly increasing grid
/// of positive widths, optionally on several threads. Errors are rethrown with
/// the offending width in the message.
std::vector<SweepPoint> sweep_gamma_vs_window(const CascadeParams& p, std::span<const double> widths, double tol,
                                              unsigned threads = 1);

}  // namespace qdent::cascade
