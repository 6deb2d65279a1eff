#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

namespace qdent::quad {

/// Number of integrand components integrated together on a shared subdivision.
inline constexpr std::size_t kLanes = 4;
using Lanes = std::array<double, kLanes>;

/// Fills out[l][i] with component l of the integrand at nodes[i].
using BatchIntegrand = std::function<void(std::span<const double> nodes, const std::array<std::span<double>, kLanes>& out)>;

/// Maps current integral estimates to per-component absolute error targets.
using ToleranceRule = std::function<Lanes(const Lanes& value)>;

struct Options {
  int max_intervals = 4000;
};

struct Result {
  Lanes value{};
  Lanes error{};
  int intervals = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Globally adaptive 15-point Gauss–Kronrod integration of a vector integrand
/// over [lo, hi]. Interior breakpoints (sorted or not, out-of-range ignored)
/// seed the initial partition. The error estimate per interval is |K15 − G7|.
/// Never throws; callers inspect `converged`.
Result adaptive_gk15(const BatchIntegrand& f, double lo, double hi, std::span<const double> breakpoints,
                     const ToleranceRule& tolerance, const Options& options = {});

}  // namespace qdent::quad
