#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "qdent/errors.hpp"
#include "qdent/polstate.hpp"
#include "qdent/rng.hpp"

using namespace qdent::polstate;

namespace {

CascadeForm random_form(qdent::Rng& r) {
  const double a2 = r.uniform();
  const double g = std::sqrt(a2 * (1 - a2)) * r.uniform();
  return {a2, 1 - a2, std::polar(g, 2 * std::numbers::pi * r.uniform())};
}

Matrix4 hermitian_noise(qdent::Rng& r, double scale) {
  Matrix4 n;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) n(i, j) = Complex(r.uniform() - 0.5, r.uniform() - 0.5);
  n = 0.5 * (n + n.adjoint()).eval();
  for (int i = 0; i < 4; ++i) n(i, i) = n(i, i).real();
  n -= Matrix4::Identity() * (n.trace() / 4.0);
  return scale * n / n.norm();
}

}  // namespace

TEST_SUITE("polstate") {
  TEST_CASE("density matrix validation") {
    CHECK_NOTHROW(TwoQubitDensityMatrix::from_matrix(oracle::werner(0.3)));
    Matrix4 bad = oracle::werner(0.3);
    bad(0, 1) = 0.1;
    CHECK_THROWS_AS(TwoQubitDensityMatrix::from_matrix(bad), qdent::InvalidDensityMatrix);
    bad = oracle::werner(0.3) * 1.01;
    CHECK_THROWS_AS(TwoQubitDensityMatrix::from_matrix(bad), qdent::InvalidDensityMatrix);
    bad = oracle::cascade_matrix(0.5, 0.5, 0.6);
    CHECK_THROWS_AS(TwoQubitDensityMatrix::from_matrix(bad), qdent::InvalidDensityMatrix);
  }

  TEST_CASE("cascade form: Bell state, classical mixture, invalid forms") {
    const auto bell = from_cascade_form({0.5, 0.5, 0.5});
    CHECK((bell.matrix() - TwoQubitDensityMatrix::bell_phi_plus().matrix()).norm() < 1e-15);
    const auto mix = from_cascade_form({0.5, 0.5, 0.0});
    CHECK(mix(0, 3) == Complex(0.0));
    CHECK(mix(0, 0).real() == 0.5);
    const auto measured = from_cascade_form({0.5, 0.5, {0.05, 0.17}});
    CHECK(measured(0, 3) == Complex(0.05, 0.17));
    CHECK(measured(3, 0) == Complex(0.05, -0.17));
    CHECK_THROWS_AS(from_cascade_form({0.5, 0.5, 0.51}), qdent::InvalidForm);
    CHECK_THROWS_AS(from_cascade_form({0.7, 0.5, 0.0}), qdent::InvalidForm);
    CHECK_THROWS_AS(from_cascade_form({-0.1, 1.1, 0.0}), qdent::InvalidForm);
  }

  TEST_CASE("partial transpose matches index-by-index oracle") {
    qdent::Rng r(1);
    auto normal = [&] { return r.normal(); };
    for (int i = 0; i < 20; ++i) {
      const Matrix4 m = oracle::random_density(normal);
      CHECK((partial_transpose(m) - oracle::partial_transpose_naive(m)).norm() < 1e-15);
    }
  }

  TEST_CASE("PPT witness: known values") {
    CHECK(ppt_min_eigenvalue(from_cascade_form({0.5, 0.5, 0.18})) == doctest::Approx(-0.18).epsilon(1e-12));
    CHECK(ppt_min_eigenvalue(from_cascade_form({0.5, 0.5, 0.0})) >= 0.0);
    CHECK(ppt_min_eigenvalue(TwoQubitDensityMatrix::bell_phi_plus()) == doctest::Approx(-0.5).epsilon(1e-12));
  }

  TEST_CASE("property: PPT minimum eigenvalue is −|γ| on the family") {
    qdent::Rng r(2);
    for (int i = 0; i < 1000; ++i) {
      const auto f = random_form(r);
      const auto rho = from_cascade_form(f);
      const double ev = oracle::hermitian_eigenvalues(oracle::partial_transpose_naive(rho.matrix()))(0);
      const double expect = std::min(-std::abs(f.gamma), 0.0);
      CHECK(std::abs(ppt_min_eigenvalue(rho) - expect) < 1e-10);
      CHECK(std::abs(ev - ppt_min_eigenvalue(rho)) < 1e-12);
    }
  }

  TEST_CASE("Bell value for the cascade family") {
    CHECK(bell_value_cascade({0.5, 0.5, 0.0}) == 2.0);
    CHECK(bell_value_cascade({0.5, 0.5, 0.5}) == doctest::Approx(2 * std::numbers::sqrt2).epsilon(1e-15));
    CHECK(bell_value_cascade({0.5, 0.5, 0.18}) == doctest::Approx(2.1257).epsilon(5e-4));
  }

  TEST_CASE("property: general Bell value equals the closed form on the family") {
    qdent::Rng r(3);
    for (int i = 0; i < 1000; ++i) {
      const auto f = random_form(r);
      CHECK(std::abs(bell_value_general(from_cascade_form(f)) - bell_value_cascade(f)) < 1e-9);
    }
  }

  TEST_CASE("general Bell value: Werner states and the maximally mixed state") {
    for (double p : {0.0, 0.2, 0.5, 1 / std::numbers::sqrt2, 0.9, 1.0})
      CHECK(bell_value_general(TwoQubitDensityMatrix::from_matrix(oracle::werner(p))) ==
            doctest::Approx(oracle::werner_bell(p)).epsilon(1e-12));
    CHECK(bell_value_general(TwoQubitDensityMatrix::maximally_mixed()) == 0.0);
  }

  TEST_CASE("property: Tsirelson bound on random density matrices") {
    qdent::Rng r(4);
    auto normal = [&] { return r.normal(); };
    for (int i = 0; i < 10000; ++i) {
      const auto rho = TwoQubitDensityMatrix::from_matrix(oracle::random_density(normal));
      REQUIRE(bell_value_general(rho) <= 2 * std::numbers::sqrt2 + 1e-12);
    }
  }

  TEST_CASE("property: Peres and CHSH agree on the family; witnesses are gauge invariant") {
    qdent::Rng r(5);
    for (int i = 0; i < 500; ++i) {
      auto f = random_form(r);
      if (i % 10 == 0) f.gamma = 0.0;
      const auto rho = from_cascade_form(f);
      const bool entangled = std::abs(f.gamma) > 0;
      CHECK((bell_value_cascade(f) > 2) == entangled);
      CHECK((ppt_min_eigenvalue(rho) < 0) == entangled);
      auto g = f;
      g.gamma *= std::polar(1.0, 2.1);
      const auto rho_g = from_cascade_form(g);
      CHECK(ppt_min_eigenvalue(rho_g) == doctest::Approx(ppt_min_eigenvalue(rho)).epsilon(1e-12));
      CHECK(bell_value_general(rho_g) == doctest::Approx(bell_value_general(rho)).epsilon(1e-12));
      CHECK(bell_value_cascade(g) == doctest::Approx(bell_value_cascade(f)).epsilon(1e-15));
    }
  }

  TEST_CASE("property: fit is the identity on the family") {
    qdent::Rng r(6);
    for (int i = 0; i < 500; ++i) {
      const auto f = random_form(r);
      const auto fit = fit_cascade_form(from_cascade_form(f));
      CHECK(fit.residual < 1e-12);
      CHECK(fit.form.a2 == doctest::Approx(f.a2).epsilon(1e-14));
      CHECK(std::abs(fit.form.gamma - f.gamma) < 1e-15);
      CHECK((from_cascade_form(fit.form).matrix() - from_cascade_form(f).matrix()).norm() < 1e-12);
    }
  }

  TEST_CASE("fit under Hermitian noise") {
    qdent::Rng r(7);
    for (int i = 0; i < 100; ++i) {
      const CascadeForm f{0.5, 0.5, {0.05, 0.17}};
      const Matrix4 noisy = from_cascade_form(f).matrix() + hermitian_noise(r, 0.01);
      const auto rho = project_to_physical(noisy);
      const auto fit = fit_cascade_form(rho);
      CHECK(std::abs(fit.form.a2 - f.a2) < 0.02);
      CHECK(std::abs(fit.form.gamma - f.gamma) < 0.02);
      CHECK(fit.residual < 0.03);
    }
  }

  TEST_CASE("fit of a wide-window matrix") {
    const Matrix4 m = oracle::cascade_matrix(0.51, 0.47, 0.03);
    Matrix4 set1 = m;
    set1(1, 1) = 0.01;
    set1(2, 2) = 0.01;
    const auto fit = fit_cascade_form(TwoQubitDensityMatrix::from_matrix(set1));
    CHECK(fit.form.a2 == doctest::Approx(0.51 / 0.98).epsilon(1e-12));
    CHECK(std::abs(fit.form.gamma) == doctest::Approx(0.03).epsilon(1e-12));
  }

  TEST_CASE("Pauli algebra, fidelity, trace distance") {
    for (int a = 0; a < 4; ++a) CHECK((pauli(a) * pauli(a) - Matrix2::Identity()).norm() < 1e-15);
    CHECK((pauli(1) * pauli(2) - Complex(0, 1) * pauli(3)).norm() < 1e-15);
    const auto bell = TwoQubitDensityMatrix::bell_phi_plus();
    Vector4 phi(1, 0, 0, 1);
    phi /= std::sqrt(2.0);
    CHECK(fidelity_with_pure(bell, phi) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(trace_distance(bell.matrix(), TwoQubitDensityMatrix::maximally_mixed().matrix()) ==
          doctest::Approx(0.75).epsilon(1e-12));
    const auto c = correlation_matrix(bell);
    CHECK(c(0, 0) == doctest::Approx(1.0));
    CHECK(c(1, 1) == doctest::Approx(-1.0));
    CHECK(c(2, 2) == doctest::Approx(1.0));
  }

  TEST_CASE("projection to the physical set clips negative eigenvalues") {
    Matrix4 m = oracle::cascade_matrix(0.5, 0.5, 0.6);
    const auto rho = project_to_physical(m);
    CHECK(rho.min_eigenvalue() >= -1e-12);
    CHECK(rho.matrix().trace().real() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(project_to_physical(-Matrix4::Identity()), qdent::InvalidDensityMatrix);
  }

  TEST_CASE("eigenvalues are reproducible") {
    qdent::Rng r(8);
    auto normal = [&] { return r.normal(); };
    const auto rho = TwoQubitDensityMatrix::from_matrix(oracle::random_density(normal));
    const auto a = rho.eigenvalues(), b = rho.eigenvalues();
    CHECK(a == b);
    CHECK((a - oracle::hermitian_eigenvalues(rho.matrix())).norm() < 1e-14);
  }
}
