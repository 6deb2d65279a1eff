#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "qdent/errors.hpp"
#include "qdent/rng.hpp"
#include "qdent/tomography.hpp"

using namespace qdent::tomography;
using qdent::polstate::CascadeForm;
using qdent::polstate::Complex;
using qdent::polstate::from_cascade_form;
using qdent::polstate::Vector4;

namespace {

std::vector<MeasurementRecord> exact_records(const TwoQubitDensityMatrix& rho, double n) {
  std::vector<MeasurementRecord> out;
  for (const auto& s : default_settings()) out.push_back({s, n * expected_rate(rho, s), 1.0});
  return out;
}

const TwoQubitDensityMatrix& measured_state() {
  static const auto rho = from_cascade_form({0.5, 0.5, {0.05, 0.17}});
  return rho;
}

}  // namespace

TEST_SUITE("tomography") {
  TEST_CASE("polarizer Jones vectors are unit and pairwise orthogonal") {
    for (auto p : {Polarizer::H, Polarizer::V, Polarizer::D, Polarizer::A, Polarizer::R, Polarizer::L})
      CHECK(jones_vector(p).norm() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(jones_vector(Polarizer::H).dot(jones_vector(Polarizer::V))) < 1e-15);
    CHECK(std::abs(jones_vector(Polarizer::D).dot(jones_vector(Polarizer::A))) < 1e-15);
    CHECK(std::abs(jones_vector(Polarizer::R).dot(jones_vector(Polarizer::L))) < 1e-15);
    CHECK(jones_vector(Polarizer::R)(1) == Complex(0, -1 / std::numbers::sqrt2));
    CHECK(parse_polarizer("d") == Polarizer::D);
    CHECK_THROWS_AS(parse_polarizer("X"), qdent::InvalidArgument);
    CHECK_THROWS_AS(parse_polarizer("HV"), qdent::InvalidArgument);
    CHECK(to_string({Polarizer::R, Polarizer::L}) == "RL");
  }

  TEST_CASE("projectors") {
    CHECK((projector({Polarizer::H, Polarizer::H}) - oracle::cascade_matrix(1, 0, 0)).norm() < 1e-15);
    const Matrix4 dd = projector({Polarizer::D, Polarizer::D});
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) CHECK(std::abs(dd(i, j) - 0.25) < 1e-15);
    // |R⟩ = (1, −i)/√2, |L⟩ = (1, i)/√2, so |RL⟩ = (1, i, −i, 1)/2.
    const Vector4 rl(0.5, Complex(0, 0.5), Complex(0, -0.5), 0.5);
    CHECK((projector({Polarizer::R, Polarizer::L}) - rl * rl.adjoint()).norm() < 1e-15);
    CHECK(std::abs(projector({Polarizer::R, Polarizer::L})(0, 3) - Complex(0.25, 0)) < 1e-15);
    CHECK(std::abs(projector({Polarizer::R, Polarizer::R})(0, 3) - Complex(-0.25, 0)) < 1e-15);
  }

  TEST_CASE("expected rates") {
    const auto bell = TwoQubitDensityMatrix::bell_phi_plus();
    CHECK(expected_rate(bell, {Polarizer::H, Polarizer::V}) == doctest::Approx(0.0));
    CHECK(expected_rate(bell, {Polarizer::D, Polarizer::D}) == doctest::Approx(0.5));
    const auto im = from_cascade_form({0.5, 0.5, {0.0, 0.17}});
    CHECK(expected_rate(im, {Polarizer::D, Polarizer::D}) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(expected_rate(im, {Polarizer::D, Polarizer::R}) == doctest::Approx(0.25 + 0.5 * 0.17).epsilon(1e-15));
  }

  TEST_CASE("property: rates sum to one within every analysis basis pair") {
    qdent::Rng r(1);
    auto normal = [&] { return r.normal(); };
    const std::pair<Polarizer, Polarizer> bases[] = {
        {Polarizer::H, Polarizer::V}, {Polarizer::D, Polarizer::A}, {Polarizer::R, Polarizer::L}};
    for (int i = 0; i < 50; ++i) {
      const auto rho = TwoQubitDensityMatrix::from_matrix(oracle::random_density(normal));
      for (auto [a1, a2] : bases)
        for (auto [b1, b2] : bases) {
          const double sum = expected_rate(rho, {a1, b1}) + expected_rate(rho, {a1, b2}) +
                             expected_rate(rho, {a2, b1}) + expected_rate(rho, {a2, b2});
          CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
        }
    }
  }

  TEST_CASE("design rank") {
    CHECK(design_rank(default_settings()) == 16);
    auto s = default_settings();
    s.pop_back();
    CHECK(design_rank(s) == 15);
    const std::vector<Setting> linear_only{{Polarizer::H, Polarizer::H}, {Polarizer::H, Polarizer::V},
                                           {Polarizer::V, Polarizer::H}, {Polarizer::V, Polarizer::V}};
    CHECK(design_rank(linear_only) == 4);
  }

  TEST_CASE("simulated counts: zero rates, Poisson mean, determinism") {
    const auto bell = TwoQubitDensityMatrix::bell_phi_plus();
    const auto settings = default_settings();
    const auto rec = simulate_counts(bell, settings, 10000, 9);
    for (const auto& r : rec)
      if (expected_rate(bell, r.setting) < 1e-15) CHECK(r.counts == 0.0);
    CHECK(simulate_counts(bell, settings, 10000, 9).front().counts == rec.front().counts);

    const std::vector<Setting> hh{{Polarizer::H, Polarizer::H}};
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) sum += simulate_counts(bell, hh, 10000, seed)[0].counts;
    CHECK(std::abs(sum / 1000 - 5000) < 3 * std::sqrt(5000.0 / 1000));
    CHECK_THROWS_AS(simulate_counts(bell, settings, 0, 1), qdent::InvalidArgument);
  }

  TEST_CASE("record validation") {
    CHECK_NOTHROW(MeasurementRecord({{}, -3.0, 1.0}).validate());
    CHECK_THROWS_AS(MeasurementRecord({{}, 5.0, 0.0}).validate(), qdent::InvalidArgument);
    CHECK_THROWS_AS(MeasurementRecord({{}, -100.0, 1.0}).validate(), qdent::InvalidArgument);
    CHECK_THROWS_AS(MeasurementRecord({{}, NAN, 1.0}).validate(), qdent::InvalidArgument);
  }

  TEST_CASE("linear inversion: exact rates and rank deficiency") {
    qdent::Rng r(2);
    auto normal = [&] { return r.normal(); };
    for (int i = 0; i < 20; ++i) {
      const auto rho = TwoQubitDensityMatrix::from_matrix(oracle::random_density(normal));
      CHECK((linear_inversion(exact_records(rho, 12345.0)) - rho.matrix()).norm() < 1e-10);
    }
    auto rec = exact_records(measured_state(), 1000.0);
    rec.pop_back();
    try {
      linear_inversion(rec);
      FAIL("expected SingularDesign");
    } catch (const qdent::SingularDesign& e) {
      CHECK(e.rank() == 15);
    }
  }

  TEST_CASE("linear inversion under Poisson noise at n = 1e6") {
    int good = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const auto rec = simulate_counts(measured_state(), default_settings(), 1000000, seed);
      const Matrix4 err = linear_inversion(rec) - measured_state().matrix();
      good += err.cwiseAbs().maxCoeff() < 5e-3;
    }
    CHECK(good >= 190);
  }

  TEST_CASE("maximum likelihood: noise-free Bell state") {
    const auto res = mle_reconstruct(exact_records(TwoQubitDensityMatrix::bell_phi_plus(), 1e5));
    Vector4 phi(1, 0, 0, 1);
    phi /= std::sqrt(2.0);
    CHECK(qdent::polstate::fidelity_with_pure(res.rho, phi) >= 1 - 1e-6);
    CHECK(res.intensity == doctest::Approx(1e5).epsilon(1e-4));
  }

  TEST_CASE("maximum likelihood beats the projected linear inversion and is reproducible") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto rec = simulate_counts(measured_state(), default_settings(), 1000, seed);
      const auto res = mle_reconstruct(rec);
      const auto li = qdent::polstate::project_to_physical(linear_inversion(rec));
      CHECK(res.log_likelihood >= profile_log_likelihood(rec, li.matrix()) - 1e-9);
      CHECK(res.log_likelihood <= 0.0);
      CHECK(res.rho.min_eigenvalue() >= -1e-12);
      const auto again = mle_reconstruct(rec);
      CHECK((again.rho.matrix() - res.rho.matrix()).norm() < 1e-12);
    }
  }

  TEST_CASE("maximum likelihood handles negative net counts") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto rec = simulate_counts(TwoQubitDensityMatrix::bell_phi_plus(), default_settings(), 200, seed);
      qdent::Rng r(seed + 100);
      int negatives = 0;
      for (auto& x : rec) {
        x.counts -= 8.0 * r.uniform();  // background subtraction residue
        negatives += x.counts < 0;
      }
      CHECK(negatives >= 1);
      const auto res = mle_reconstruct(rec);
      CHECK(res.rho.min_eigenvalue() >= -1e-12);
      CHECK(std::isfinite(res.log_likelihood));
    }
  }

  TEST_CASE("maximum likelihood recovers the measured-state family at n = 1e5") {
    int within = 0;
    const int seeds = 40;
    for (int seed = 0; seed < seeds; ++seed) {
      const auto rec = simulate_counts(measured_state(), default_settings(), 100000, seed);
      const auto res = mle_reconstruct(rec);
      within += std::abs(std::abs(res.cascade_fit.form.gamma) - std::abs(Complex(0.05, 0.17))) < 0.03;
    }
    CHECK(within >= 0.95 * seeds);
  }

  TEST_CASE("property: trace distance to truth shrinks like 1/sqrt(n)") {
    auto median_distance = [](std::int64_t n) {
      std::vector<double> d;
      for (std::uint64_t seed = 0; seed < 21; ++seed) {
        const auto res = mle_reconstruct(simulate_counts(measured_state(), default_settings(), n, seed));
        d.push_back(qdent::polstate::trace_distance(res.rho.matrix(), measured_state().matrix()));
      }
      std::nth_element(d.begin(), d.begin() + 10, d.end());
      return d[10];
    };
    const double d1 = median_distance(1000), d2 = median_distance(100000);
    CHECK(d2 < d1);
    CHECK(d1 / d2 > 10.0 / 2);
    CHECK(d1 / d2 < 10.0 * 2);
  }

  TEST_CASE("bootstrap: error bars scale as 1/sqrt(n)") {
    const auto rec1 = simulate_counts(measured_state(), default_settings(), 400, 1);
    const auto rec4 = simulate_counts(measured_state(), default_settings(), 1600, 1);
    const auto b1 = bootstrap_uncertainty(rec1, mle_reconstruct(rec1), 200, 5);
    const auto b4 = bootstrap_uncertainty(rec4, mle_reconstruct(rec4), 200, 5);
    CHECK(b1.resamples == 200);
    CHECK(b1.diverged == 0);
    const double s1 = std::hypot(b1.std_gamma_re, b1.std_gamma_im), s4 = std::hypot(b4.std_gamma_re, b4.std_gamma_im);
    CHECK(s1 / s4 == doctest::Approx(2.0).epsilon(0.2));
    // About 400 pairs per setting gives error bars near 0.05 per component.
    CHECK(b1.std_gamma_re > 0.025);
    CHECK(b1.std_gamma_re < 0.075);
    CHECK(b1.std_gamma_im > 0.025);
    CHECK(b1.std_gamma_im < 0.075);
    CHECK_THROWS_AS(bootstrap_uncertainty(rec1, mle_reconstruct(rec1), 99, 5), qdent::InvalidArgument);
  }

  TEST_CASE("bootstrap: significance of the measured state, thread independence") {
    const auto rec = simulate_counts(measured_state(), default_settings(), 100000, 3);
    const auto a = reconstruct(rec, 100, 7, 1);
    const auto b = reconstruct(rec, 100, 7, 3);
    CHECK(a.significance_sigmas > 3);
    CHECK(a.std_gamma_re == b.std_gamma_re);
    CHECK(a.significance_sigmas == b.significance_sigmas);
    CHECK(a.std_gamma_re < 0.01);
  }

  TEST_CASE("csv round trip and line-numbered errors") {
    const auto rec = simulate_counts(measured_state(), default_settings(), 1000, 4);
    auto with_fraction = rec;
    with_fraction[3].counts = -1.25;
    with_fraction[5].duration_weight = 0.1 + 0.2;
    const auto back = records_from_csv(records_to_csv(with_fraction));
    REQUIRE(back.size() == with_fraction.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(back[i].setting == with_fraction[i].setting);
      CHECK(back[i].counts == with_fraction[i].counts);
      CHECK(back[i].duration_weight == with_fraction[i].duration_weight);
    }
    auto message = [](const char* text) {
      try {
        records_from_csv(text);
      } catch (const qdent::InvalidArgument& e) {
        return std::string(e.what());
      }
      return std::string();
    };
    CHECK(message("arm1,arm2,counts,weight\nH,H,12,1\nH,Q,3,1\n").find("line 3") == 0);
    CHECK(message("arm1,arm2,counts,weight\nH,H,abc,1\n").find("line 2") == 0);
    CHECK(message("arm1,arm2,counts,weight\nH,H,1\n").find("line 2") == 0);
    CHECK(message("a,b,c,d\n").find("line 1") == 0);
    CHECK(message("arm1,arm2,counts,weight\nH,H,5,0\n").find("line 2") == 0);
    CHECK(!message("").empty());
  }
}
