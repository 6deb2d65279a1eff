#include "qdent/cascade.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <sstream>
#include <thread>

#include "qdent/errors.hpp"
#include "qdent/kernels.hpp"
#include "qdent/quadrature.hpp"

namespace qdent::cascade {

CascadeParams CascadeParams::symmetric(double detuning, double width) {
  CascadeParams p;
  p.exciton_energy_h = 0.5 * detuning;
  p.exciton_energy_v = -0.5 * detuning;
  p.width_h = p.width_v = width;
  p.biexciton_width = 2.0 * width;
  return p;
}

Complex CascadeParams::pole(Path p) const noexcept {
  return p == Path::H ? Complex{exciton_energy_h, -0.5 * width_h} : Complex{exciton_energy_v, -0.5 * width_v};
}

void CascadeParams::validate() const {
  const double fields[] = {biexciton_energy, biexciton_width, exciton_energy_h, exciton_energy_v, width_h,
                           width_v,          phase_h,         phase_v,          alpha.real(),     alpha.imag(),
                           beta.real(),      beta.imag(),     dot_overlap.real(), dot_overlap.imag()};
  for (double f : fields)
    if (!std::isfinite(f)) throw InvalidArgument("cascade parameters must be finite");
  if (!(biexciton_width > 0.0 && width_h > 0.0 && width_v > 0.0))
    throw InvalidArgument("radiative widths must be positive");
  if (std::abs(std::norm(alpha) + std::norm(beta) - 1.0) > 1e-12)
    throw InvalidArgument("path amplitudes must satisfy |alpha|^2 + |beta|^2 = 1");
  if (std::abs(dot_overlap) > 1.0 + 1e-15) throw InvalidArgument("|dot_overlap| must not exceed 1");
}

Complex joint_amplitude(const CascadeParams& p, double k1, double k2, Path path) {
  const double phase = path == Path::H ? p.phase_h : p.phase_v;
  const Complex prefactor = std::polar(p.width_h / (2.0 * std::numbers::pi), phase);
  return prefactor / ((Complex(k1 + k2) - p.biexciton_pole()) * (Complex(k2) - p.pole(path)));
}

WindowIntegrals window_integrals(const CascadeParams& p, const SpectralWindow& w, double tol, int max_intervals) {
  p.validate();
  if (!(w.width >= 0.0) || !std::isfinite(w.center) || !std::isfinite(w.width))
    throw DomainError("window width must be finite and non-negative");
  if (!(tol > 0.0)) throw DomainError("quadrature tolerance must be positive");

  const kernels::ResonancePair res{p.exciton_energy_h, 0.5 * p.width_h, p.exciton_energy_v, 0.5 * p.width_v};
  const quad::BatchIntegrand integrand = [&res](std::span<const double> nodes,
                                                const std::array<std::span<double>, quad::kLanes>& out) {
    kernels::cascade_integrand(res, nodes, {out[0], out[1], out[2], out[3]});
  };
  // Cross components share half the budget each; the combined γ′ error is then
  // bounded by tol relative to |γ′| (plus a floor far below any physical value).
  const quad::ToleranceRule rule = [tol](const quad::Lanes& v) {
    const double cross = std::hypot(v[0], v[1]);
    const double floor = 1e-10 * std::sqrt(std::abs(v[2] * v[3]));
    const double tc = 0.25 * tol * std::max(cross, floor);
    return quad::Lanes{tc, tc, 0.5 * tol * std::abs(v[2]), 0.5 * tol * std::abs(v[3])};
  };
  const double breaks[] = {p.exciton_energy_h, p.exciton_energy_v};
  const quad::Result r = quad::adaptive_gk15(integrand, w.lo(), w.hi(), breaks, rule, {max_intervals});
  if (!r.converged) {
    std::ostringstream os;
    os << "window quadrature did not reach tolerance " << tol << " within " << r.intervals << " intervals";
    throw NonConvergence(os.str());
  }
  WindowIntegrals out;
  out.cross = {r.value[0], r.value[1]};
  out.lorentz_h = r.value[2];
  out.lorentz_v = r.value[3];
  out.cross_error = std::hypot(r.error[0], r.error[1]);
  out.lorentz_h_error = r.error[2];
  out.lorentz_v_error = r.error[3];
  out.evaluations = r.evaluations;
  return out;
}

namespace {

// ∫_ℝ |k − ε|⁻² dk = 2π/Γ
double full_line_weight(const CascadeParams& p) {
  return std::norm(p.alpha) * 2.0 * std::numbers::pi / p.width_h +
         std::norm(p.beta) * 2.0 * std::numbers::pi / p.width_v;
}

void require_positive_width(const SpectralWindow& w) {
  if (!(w.width > 0.0)) throw DomainError("coherence is undefined for an empty spectral window");
}

}  // namespace

FilteredCoherence filtered_coherence(const CascadeParams& p, const SpectralWindow& w, double tol) {
  require_positive_width(w);
  const WindowIntegrals wi = window_integrals(p, w, tol);
  const double a2 = std::norm(p.alpha);
  const double b2 = std::norm(p.beta);
  const double den = a2 * wi.lorentz_h + b2 * wi.lorentz_v;
  const double den_err = a2 * wi.lorentz_h_error + b2 * wi.lorentz_v_error;
  const Complex prefactor = p.dot_overlap * p.alpha * std::conj(p.beta) * std::polar(1.0, p.phase_h - p.phase_v);

  FilteredCoherence fc;
  fc.gamma = prefactor * wi.cross / den;
  fc.gamma_error = std::abs(prefactor) * wi.cross_error / den + std::abs(fc.gamma) * den_err / den;
  const double norm = full_line_weight(p);
  fc.detection_probability = std::min(1.0, den / norm);
  fc.probability_error = den_err / norm;
  fc.weight_h = a2 * wi.lorentz_h / den;
  fc.weight_v = b2 * wi.lorentz_v / den;
  return fc;
}

Complex gamma_prime_numeric(const CascadeParams& p, const SpectralWindow& w, double tol) {
  return filtered_coherence(p, w, tol).gamma;
}

double detection_probability(const CascadeParams& p, const SpectralWindow& w, double tol) {
  if (w.width == 0.0) {
    p.validate();
    return 0.0;
  }
  const WindowIntegrals wi = window_integrals(p, w, tol);
  const double den = std::norm(p.alpha) * wi.lorentz_h + std::norm(p.beta) * wi.lorentz_v;
  return std::min(1.0, den / full_line_weight(p));
}

double gamma_prime_analytic(double w, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("detuning must be positive");
  if (!(w > 0.0) || !(w < delta)) throw DomainError("analytic coherence requires 0 < w < detuning");
  const double x = w / delta;
  // ¼(1/x − x)·ln((1+x)/(1−x)) = ½(1 − x²)·atanh(x)/x
  double ratio;
  if (x < 1e-4) {
    const double x2 = x * x;
    ratio = 1.0 + x2 * (1.0 / 3.0 + x2 * (1.0 / 5.0 + x2 / 7.0));
  } else {
    ratio = std::atanh(x) / x;
  }
  return 0.5 * (1.0 - x * x) * ratio;
}

polstate::TwoQubitDensityMatrix filtered_density_matrix(const CascadeParams& p, const SpectralWindow& w, double tol) {
  const FilteredCoherence fc = filtered_coherence(p, w, tol);
  polstate::CascadeForm form{fc.weight_h, fc.weight_v, fc.gamma};
  // Quadrature error can push |γ′|² a hair above a2·b2 at the w → 0 limit.
  const double bound = std::sqrt(form.a2 * form.b2);
  if (std::abs(form.gamma) > bound) form.gamma *= bound / std::abs(form.gamma);
  return polstate::from_cascade_form(form);
}

std::vector<SweepPoint> sweep_gamma_vs_window(const CascadeParams& p, std::span<const double> widths, double tol,
                                              unsigned threads) {
  p.validate();
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (!(widths[i] > 0.0) || !std::isfinite(widths[i])) {
      std::ostringstream os;
      os << "window grid entry " << i << " (" << widths[i] << ") must be positive";
      throw DomainError(os.str());
    }
    if (i > 0 && !(widths[i] > widths[i - 1])) throw DomainError("window grid must be strictly increasing");
  }

  std::vector<SweepPoint> out(widths.size());
  std::vector<std::exception_ptr> errors(widths.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < widths.size(); i = next++) {
      try {
        const FilteredCoherence fc = filtered_coherence(p, SpectralWindow::centered(p, widths[i]), tol);
        out[i] = {widths[i], std::abs(fc.gamma), fc.detection_probability};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(widths.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }

  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (!errors[i]) continue;
    std::ostringstream os;
    os << "at w = " << widths[i] << " ueV: ";
    try {
      std::rethrow_exception(errors[i]);
    } catch (const NonConvergence& e) {
      throw NonConvergence(os.str() + e.what());
    } catch (const DomainError& e) {
      throw DomainError(os.str() + e.what());
    }
  }
  return out;
}

}  // namespace qdent::cascade
