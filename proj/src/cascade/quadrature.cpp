#include "qdent/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace qdent::quad {
namespace {

// Kronrod abscissae (non-negative half) and weights; odd indices are the Gauss nodes.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr int kNodes = 15;

struct Interval {
  double lo;
  double hi;
  Lanes value;
  Lanes error;
};

class Evaluator {
 public:
  explicit Evaluator(const BatchIntegrand& f) : f_(f) {
    for (auto& lane : buf_) lane.resize(kNodes);
    nodes_.resize(kNodes);
  }

  Interval rule(double lo, double hi) {
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    // node order: 0..6 left of center, 7 center, 8..14 mirrored right
    for (int j = 0; j < 7; ++j) {
      nodes_[j] = center - half * kXgk[j];
      nodes_[kNodes - 1 - j] = center + half * kXgk[j];
    }
    nodes_[7] = center;
    std::array<std::span<double>, kLanes> out;
    for (std::size_t l = 0; l < kLanes; ++l) out[l] = buf_[l];
    f_(nodes_, out);
    evaluations += kNodes;

    Interval iv{lo, hi, {}, {}};
    for (std::size_t l = 0; l < kLanes; ++l) {
      const auto& v = buf_[l];
      double kron = kWgk[7] * v[7];
      double gauss = kWg[3] * v[7];
      for (int j = 0; j < 7; ++j) {
        const double pair = v[j] + v[kNodes - 1 - j];
        kron += kWgk[j] * pair;
        if (j % 2 == 1) gauss += kWg[j / 2] * pair;
      }
      iv.value[l] = kron * half;
      iv.error[l] = std::abs((kron - gauss) * half);
    }
    return iv;
  }

  int evaluations = 0;

 private:
  const BatchIntegrand& f_;
  std::vector<double> nodes_;
  std::array<std::vector<double>, kLanes> buf_;
};

}  // namespace

Result adaptive_gk15(const BatchIntegrand& f, double lo, double hi, std::span<const double> breakpoints,
                     const ToleranceRule& tolerance, const Options& options) {
  Result res;
  if (!(hi > lo)) {
    res.converged = true;
    return res;
  }

  std::vector<double> edges{lo};
  std::vector<double> inner(breakpoints.begin(), breakpoints.end());
  std::sort(inner.begin(), inner.end());
  for (double b : inner)
    if (b > edges.back() && b < hi) edges.push_back(b);
  edges.push_back(hi);

  Evaluator eval(f);
  std::vector<Interval> intervals;
  intervals.reserve(static_cast<std::size_t>(options.max_intervals) + edges.size());
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) intervals.push_back(eval.rule(edges[i], edges[i + 1]));

  for (;;) {
    Lanes total{};
    Lanes err{};
    for (const auto& iv : intervals)
      for (std::size_t l = 0; l < kLanes; ++l) {
        total[l] += iv.value[l];
        err[l] += iv.error[l];
      }
    const Lanes target = tolerance(total);
    bool done = true;
    for (std::size_t l = 0; l < kLanes; ++l) done = done && err[l] <= target[l];
    res.value = total;
    res.error = err;
    res.intervals = static_cast<int>(intervals.size());
    res.evaluations = eval.evaluations;
    if (done) {
      res.converged = true;
      return res;
    }
    if (res.intervals >= options.max_intervals) return res;

    // Split the interval contributing the most normalized error.
    std::size_t worst = 0;
    double worst_score = -1.0;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
      double score = 0.0;
      for (std::size_t l = 0; l < kLanes; ++l) {
        const double t = target[l] > 0.0 ? target[l] : 1e-300;
        score += intervals[i].error[l] / t;
      }
      if (score > worst_score) {
        worst_score = score;
        worst = i;
      }
    }
    const Interval parent = intervals[worst];
    const double mid = 0.5 * (parent.lo + parent.hi);
    if (!(mid > parent.lo && mid < parent.hi)) return res;  // interval exhausted at machine precision
    intervals[worst] = eval.rule(parent.lo, mid);
    intervals.push_back(eval.rule(mid, parent.hi));
  }
}

}  // namespace qdent::quad
