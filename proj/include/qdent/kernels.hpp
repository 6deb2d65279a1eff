#pragma once

// Data-parallel inner loops. Each kernel has a portable scalar reference in
// qdent::kernels::scalar and, where the target supports it, an AVX2 variant in
// qdent::kernels::avx2. The free functions in qdent::kernels dispatch on the
// backend detected at first use; tests pin both paths against each other.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace qdent::kernels {

/// Two Lorentzian resonances, given by center energy and half width (Γ/2).
struct ResonancePair {
  double center_h;
  double half_width_h;
  double center_v;
  double half_width_v;
};

/// Output lanes of cascade_integrand, all of equal length.
struct IntegrandLanes {
  std::span<double> cross_re;
  std::span<double> cross_im;
  std::span<double> lorentz_h;
  std::span<double> lorentz_v;
};

enum class Backend { Scalar, Avx2 };

std::string_view backend_name(Backend b) noexcept;
bool backend_available(Backend b) noexcept;

/// Backend used by the dispatching entry points.
Backend active_backend() noexcept;

/// Pins dispatch to `b` (must be available); std::nullopt restores detection.
void force_backend(std::optional<Backend> b);

/// For every node k writes
///   cross     = 1 / ((k - ε_H) * conj(k - ε_V)),   ε_j = E_j - i·hw_j
///   lorentz_h = 1 / ((k - E_H)^2 + hw_H^2)
///   lorentz_v = 1 / ((k - E_V)^2 + hw_V^2)
void cascade_integrand(const ResonancePair& res, std::span<const double> nodes, const IntegrandLanes& out);

/// Number of values in the closed interval [lo, hi].
std::size_t count_in_window(std::span<const double> values, double lo, double hi);

namespace scalar {
void cascade_integrand(const ResonancePair& res, std::span<const double> nodes, const IntegrandLanes& out);
std::size_t count_in_window(std::span<const double> values, double lo, double hi);
}  // namespace scalar

namespace avx2 {
bool compiled() noexcept;
void cascade_integrand(const ResonancePair& res, std::span<const double> nodes, const IntegrandLanes& out);
std::size_t count_in_window(std::span<const double> values, double lo, double hi);
}  // namespace avx2

}  // namespace qdent::kernels
