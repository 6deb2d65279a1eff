#pragma once
// Independent reference computations used by the tests. Nothing here calls
// into the library's numerics.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace oracle {

using Complex = std::complex<double>;

// High-precision values of ¼(1/x − x)·ln((1+x)/(1−x)), from 40-digit arithmetic.
inline constexpr double kAnalyticAt25Over27 = 0.1254970518349015306;
inline constexpr double kAnalyticAtHalf = 0.4119796082505411343;
inline constexpr double kAnalyticAt1em4 = 0.49999999666666666;

// Default dot (Δ = 27, Γ = 1.6, Γ_u = 3.2 µeV, η = 1, equal paths), from
// 40-digit integration of the window integrals.
inline constexpr double kGammaAbsW25 = 0.14143128436182344;
inline constexpr Complex kGammaW25{-0.13631200185265911, -0.037707377887564984};
inline constexpr double kProbabilityW25 = 0.20498565128016432;
inline constexpr double kGammaAbsW200 = 0.029689254228899176;
inline constexpr double kProbabilityW200 = 0.99481262071226066;
inline constexpr double kGammaAbsW2700 = 0.029578341516014015;
inline constexpr double kProbabilityW2700 = 0.99962270615339425;

struct Doublet {
  double e_u = 0.0, gamma_u = 3.2;
  double e_h = 13.5, gamma_h = 1.6;
  double e_v = -13.5, gamma_v = 1.6;
  Complex alpha{std::numbers::sqrt2 / 2, 0.0}, beta{std::numbers::sqrt2 / 2, 0.0};
  double phi_h = 0.0, phi_v = 0.0;
  Complex eta{1.0, 0.0};
};

struct GridResult {
  Complex gamma;
  double probability;
};

// Brute-force midpoint rule on the (k1, k2) plane: k2 runs over the window,
// k1 over ±k1_half_range around the biexciton pole line k1 + k2 = E_u.
// Probability is normalized by the analytic full-plane integral, with the
// k1 truncation divided out (it is the same for every k2 on the shifted grid).
inline GridResult dense_grid(const Doublet& d, double center, double width, int n2, int n1,
                             double k1_half_range) {
  const Complex eu(d.e_u, -0.5 * d.gamma_u), eh(d.e_h, -0.5 * d.gamma_h), ev(d.e_v, -0.5 * d.gamma_v);
  const double pref = d.gamma_h / (2 * std::numbers::pi);
  const double h2 = width / n2, h1 = 2 * k1_half_range / n1;
  Complex cross = 0.0;
  double sum_h = 0.0, sum_v = 0.0, k1_weight = 0.0;
  for (int j = 0; j < n1; ++j) {
    const double s = -k1_half_range + (j + 0.5) * h1;  // k1 + k2 − E_u
    k1_weight += h1 / std::norm(Complex(s, 0.0) + Complex(0.0, 0.5 * d.gamma_u));
  }
  for (int i = 0; i < n2; ++i) {
    const double k2 = center - 0.5 * width + (i + 0.5) * h2;
    for (int j = 0; j < n1; ++j) {
      const double k1 = d.e_u - k2 - k1_half_range + (j + 0.5) * h1;
      const Complex common = pref / (k1 + k2 - eu);
      const Complex ah = std::polar(1.0, d.phi_h) * common / (k2 - eh);
      const Complex av = std::polar(1.0, d.phi_v) * common / (k2 - ev);
      cross += ah * std::conj(av) * h1 * h2;
      sum_h += std::norm(ah) * h1 * h2;
      sum_v += std::norm(av) * h1 * h2;
    }
  }
  const double a2 = std::norm(d.alpha), b2 = std::norm(d.beta);
  const double den = a2 * sum_h + b2 * sum_v;
  GridResult r;
  r.gamma = d.eta * d.alpha * std::conj(d.beta) * cross / den;
  // ∫|A_path|² over the plane = pref²·(2π/Γ_u)·(2π/Γ_path); the k1 grid captures
  // k1_weight instead of 2π/Γ_u.
  const double full = pref * pref * k1_weight *
                      (a2 * 2 * std::numbers::pi / d.gamma_h + b2 * 2 * std::numbers::pi / d.gamma_v);
  r.probability = den / full;
  return r;
}

// Closed forms of the 1-D window integrals.
inline double lorentzian_integral(double lo, double hi, double center, double half_width) {
  return (std::atan((hi - center) / half_width) - std::atan((lo - center) / half_width)) / half_width;
}

// ∫_lo^hi dk / ((k − a)(k − b)) with a, b off the real axis (principal log).
inline Complex pole_pair_integral(double lo, double hi, Complex a, Complex b) {
  return (std::log(hi - a) - std::log(lo - a) - std::log(hi - b) + std::log(lo - b)) / (a - b);
}

inline Complex closed_form_gamma(const Doublet& d, double center, double width) {
  const double lo = center - 0.5 * width, hi = center + 0.5 * width;
  const Complex eh(d.e_h, -0.5 * d.gamma_h), ev(d.e_v, -0.5 * d.gamma_v);
  const Complex cross = pole_pair_integral(lo, hi, eh, std::conj(ev));
  const double lh = lorentzian_integral(lo, hi, d.e_h, 0.5 * d.gamma_h);
  const double lv = lorentzian_integral(lo, hi, d.e_v, 0.5 * d.gamma_v);
  const Complex phase = std::polar(1.0, d.phi_h - d.phi_v);
  return d.eta * d.alpha * std::conj(d.beta) * phase * cross / (std::norm(d.alpha) * lh + std::norm(d.beta) * lv);
}

inline double closed_form_probability(const Doublet& d, double center, double width) {
  const double lo = center - 0.5 * width, hi = center + 0.5 * width;
  const double a2 = std::norm(d.alpha), b2 = std::norm(d.beta);
  const double num = a2 * lorentzian_integral(lo, hi, d.e_h, 0.5 * d.gamma_h) +
                     b2 * lorentzian_integral(lo, hi, d.e_v, 0.5 * d.gamma_v);
  return num / (a2 * 2 * std::numbers::pi / d.gamma_h + b2 * 2 * std::numbers::pi / d.gamma_v);
}

// Naive evaluation of ¼(1/x − x)·ln((1+x)/(1−x)) in long double.
inline double analytic_naive(double x) {
  const long double lx = x;
  return static_cast<double>(0.25L * (1.0L / lx - lx) * std::log((1.0L + lx) / (1.0L - lx)));
}

// Full 4×4 eigen-solve of a Hermitian matrix, ascending.
inline Eigen::Vector4d hermitian_eigenvalues(const Eigen::Matrix4cd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

// Partial transpose over the second qubit written out index by index.
inline Eigen::Matrix4cd partial_transpose_naive(const Eigen::Matrix4cd& m) {
  Eigen::Matrix4cd out;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) out(2 * a + b, 2 * c + d) = m(2 * a + d, 2 * c + b);
  return out;
}

inline Eigen::Matrix4cd cascade_matrix(double a2, double b2, Complex gamma) {
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
  m(0, 0) = a2;
  m(3, 3) = b2;
  m(0, 3) = gamma;
  m(3, 0) = std::conj(gamma);
  return m;
}

// Werner state p·|Φ⁺⟩⟨Φ⁺| + (1 − p)·I/4 and its maximal CHSH value 2√2·p.
inline Eigen::Matrix4cd werner(double p) {
  Eigen::Matrix4cd m = (1 - p) * Eigen::Matrix4cd::Identity() / 4.0;
  m(0, 0) += p / 2;
  m(3, 3) += p / 2;
  m(0, 3) += p / 2;
  m(3, 0) += p / 2;
  return m;
}
inline double werner_bell(double p) { return 2 * std::numbers::sqrt2 * p; }

// Random density matrix G G† / Tr from a complex Gaussian G (Ginibre).
template <class Gen>
Eigen::Matrix4cd random_density(Gen& normal) {
  Eigen::Matrix4cd g;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) g(i, j) = Complex(normal(), normal());
  Eigen::Matrix4cd m = g * g.adjoint();
  return m / m.trace().real();
}

// Kolmogorov distribution tail P(√n·D > t), leading series terms.
inline double kolmogorov_pvalue(double t) {
  if (t < 0.2) return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) p += 2 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * t * t);
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace oracle
