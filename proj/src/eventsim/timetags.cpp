#include <algorithm>
#include <cmath>
#include <cstdio>

#include "qdent/errors.hpp"
#include "qdent/eventsim.hpp"
#include "qdent/rng.hpp"

namespace qdent::eventsim {
namespace {

// Sub-stream ids under the run seed.
constexpr std::uint64_t kStreamTimes = 1;
constexpr std::uint64_t kStreamEnergies = 2;
constexpr std::uint64_t kStreamPolarization = 3;
constexpr std::uint64_t kStreamBackground1 = 4;
constexpr std::uint64_t kStreamBackground2 = 5;

}  // namespace

void RateModelParams::validate() const {
  if (!(pump_rate >= 0.0) || !(background_rate >= 0.0) || !std::isfinite(pump_rate) || !std::isfinite(background_rate))
    throw InvalidArgument("pump and background rates must be finite and non-negative");
  if (!(t_xx > 0.0) || !(t_x > 0.0) || !std::isfinite(t_xx) || !std::isfinite(t_x))
    throw InvalidArgument("lifetimes must be positive");
}

EventStream generate_timetags(const RateModelParams& rate, double duration, std::uint64_t seed,
                              const TimetagSource& source) {
  rate.validate();
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw InvalidArgument("duration must be non-negative");
  EventStream stream;
  stream.duration = duration;
  stream.analyzers = source.analyzers;

  if (rate.pump_rate > 0.0) {
    Rng rng(derive_seed(seed, kStreamTimes));
    const double mean_wait = 1.0 / rate.pump_rate;
    double t = rng.exponential(mean_wait);
    while (t < duration) {
      const double t_xx = t + rng.exponential(rate.t_xx);
      const double t_x = t_xx + rng.exponential(rate.t_x);
      stream.pairs.push_back({t_xx, t_x, 0.0, 0.0, Outcome::BlockBlock});
      // The pump process is memoryless, so discarding arrivals while the dot is
      // busy is the same as restarting the wait at t_x.
      t = (rate.exclusive_cascades ? t_x : t) + rng.exponential(mean_wait);
    }
  }

  if (!stream.pairs.empty()) {
    const auto energies = sample_pair_energies(source.cascade, stream.pairs.size(), derive_seed(seed, kStreamEnergies));
    const auto outcomes =
        sample_polarization(stream.pairs.size(), source.rho, source.analyzers, derive_seed(seed, kStreamPolarization));
    for (std::size_t i = 0; i < stream.pairs.size(); ++i) {
      stream.pairs[i].e_xx = energies[i].e_xx;
      stream.pairs[i].e_x = energies[i].e_x;
      stream.pairs[i].outcome = outcomes[i];
    }
  }

  if (rate.background_rate > 0.0) {
    for (int arm = 1; arm <= 2; ++arm) {
      Rng rng(derive_seed(seed, arm == 1 ? kStreamBackground1 : kStreamBackground2));
      const double mean_wait = 1.0 / rate.background_rate;
      for (double t = rng.exponential(mean_wait); t < duration; t += rng.exponential(mean_wait))
        stream.background.push_back({arm, t});
    }
  }
  return stream;
}

std::string timetags_to_csv(const EventStream& stream) {
  struct Row {
    int arm;
    double t;
    double energy;
    bool has_energy;
  };
  std::vector<Row> rows;
  for (const auto& p : stream.pairs) {
    if (arm1_passes(p.outcome)) rows.push_back({1, p.t_xx, p.e_xx, true});
    if (arm2_passes(p.outcome)) rows.push_back({2, p.t_x, p.e_x, true});
  }
  for (const auto& b : stream.background) rows.push_back({b.arm, b.t, 0.0, false});
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.t < b.t || (a.t == b.t && a.arm < b.arm);
  });

  std::string out = "arm,t_ns,energy_ueV,pol\n";
  char buf[96];
  for (const auto& r : rows) {
    const char pol = tomography::polarizer_symbol(r.arm == 1 ? stream.analyzers.arm1 : stream.analyzers.arm2);
    if (r.has_energy) {
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%c\n", r.arm, r.t, r.energy, pol);
    } else {
      std::snprintf(buf, sizeof buf, "%d,%.17g,,%c\n", r.arm, r.t, pol);
    }
    out += buf;
  }
  return out;
}

}  // namespace qdent::eventsim
