#include <atomic>
#include <cstdlib>
#include <cstring>

#include "qdent/errors.hpp"
#include "qdent/kernels.hpp"

namespace qdent::kernels {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) || defined(_M_X64)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect() noexcept {
  // QDENT_KERNELS=scalar forces the reference path for the whole process.
  if (const char* env = std::getenv("QDENT_KERNELS"); env && std::strcmp(env, "scalar") == 0) {
    return Backend::Scalar;
  }
  return backend_available(Backend::Avx2) ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<int> forced{-1};

}  // namespace

std::string_view backend_name(Backend b) noexcept {
  switch (b) {
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
  }
  return "unknown";
}

bool backend_available(Backend b) noexcept {
  switch (b) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
      return avx2::compiled() && cpu_has_avx2();
  }
  return false;
}

Backend active_backend() noexcept {
  static const Backend detected = detect();
  const int f = forced.load(std::memory_order_relaxed);
  return f < 0 ? detected : static_cast<Backend>(f);
}

void force_backend(std::optional<Backend> b) {
  if (b && !backend_available(*b)) {
    throw InvalidArgument("kernel backend not available: " + std::string(backend_name(*b)));
  }
  forced.store(b ? static_cast<int>(*b) : -1, std::memory_order_relaxed);
}

void cascade_integrand(const ResonancePair& res, std::span<const double> nodes, const IntegrandLanes& out) {
  if (active_backend() == Backend::Avx2) {
    avx2::cascade_integrand(res, nodes, out);
  } else {
    scalar::cascade_integrand(res, nodes, out);
  }
}

std::size_t count_in_window(std::span<const double> values, double lo, double hi) {
  return active_backend() == Backend::Avx2 ? avx2::count_in_window(values, lo, hi)
                                           : scalar::count_in_window(values, lo, hi);
}

}  // namespace qdent::kernels
