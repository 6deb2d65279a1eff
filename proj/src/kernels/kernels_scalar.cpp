#include "qdent/kernels.hpp"

namespace qdent::kernels::scalar {

void cascade_integrand(const ResonancePair& res, std::span<const double> nodes, const IntegrandLanes& out) {
  const double gh = res.half_width_h;
  const double gv = res.half_width_v;
  const double gh2 = gh * gh;
  const double gv2 = gv * gv;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double a = nodes[i] - res.center_h;
    const double b = nodes[i] - res.center_v;
    const double lh = 1.0 / (a * a + gh2);
    const double lv = 1.0 / (b * b + gv2);
    const double scale = lh * lv;
    // (a + i gh)(b - i gv) = (ab + gh gv) + i (gh b - a gv); invert via conj / |z|^2
    out.cross_re[i] = (a * b + gh * gv) * scale;
    out.cross_im[i] = (a * gv - gh * b) * scale;
    out.lorentz_h[i] = lh;
    out.lorentz_v[i] = lv;
  }
}

std::size_t count_in_window(std::span<const double> values, double lo, double hi) {
  std::size_t n = 0;
  for (double x : values) n += (x >= lo && x <= hi) ? 1 : 0;
  return n;
}

}  // namespace qdent::kernels::scalar
