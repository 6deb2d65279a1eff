#include "qdent/polstate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qdent/errors.hpp"

namespace qdent::polstate {
namespace {

Eigen::Vector4d hermitian_eigenvalues(const Matrix4& m) {
  // Symmetrize first so round-off in the lower triangle cannot leak in.
  const Matrix4 h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix4> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

}  // namespace

TwoQubitDensityMatrix TwoQubitDensityMatrix::from_matrix(const Matrix4& m, const DensityTolerances& tol) {
  if (!m.allFinite()) throw InvalidDensityMatrix("density matrix has non-finite entries");
  const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (herm > tol.hermitian) {
    std::ostringstream os;
    os << "density matrix not Hermitian (max deviation " << herm << ")";
    throw InvalidDensityMatrix(os.str());
  }
  const Complex tr = m.trace();
  if (std::abs(tr - 1.0) > tol.trace) {
    std::ostringstream os;
    os << "density matrix trace " << tr.real() << " differs from 1";
    throw InvalidDensityMatrix(os.str());
  }
  const double lmin = hermitian_eigenvalues(m).minCoeff();
  if (lmin < -tol.psd) {
    std::ostringstream os;
    os << "density matrix not positive semidefinite (min eigenvalue " << lmin << ")";
    throw InvalidDensityMatrix(os.str());
  }
  return TwoQubitDensityMatrix(m);
}

TwoQubitDensityMatrix TwoQubitDensityMatrix::maximally_mixed() {
  return TwoQubitDensityMatrix(Matrix4::Identity() * 0.25);
}

TwoQubitDensityMatrix TwoQubitDensityMatrix::bell_phi_plus() {
  Vector4 psi = Vector4::Zero();
  psi(kHH) = psi(kVV) = 1.0 / std::sqrt(2.0);
  return pure(psi);
}

TwoQubitDensityMatrix TwoQubitDensityMatrix::pure(const Vector4& psi) {
  const double n = psi.norm();
  if (!(n > 0.0)) throw InvalidDensityMatrix("zero state vector");
  const Vector4 u = psi / n;
  return TwoQubitDensityMatrix(u * u.adjoint());
}

double TwoQubitDensityMatrix::min_eigenvalue() const { return hermitian_eigenvalues(m_).minCoeff(); }

Eigen::Vector4d TwoQubitDensityMatrix::eigenvalues() const { return hermitian_eigenvalues(m_); }

void CascadeForm::validate(double sum_tolerance) const {
  if (!(std::isfinite(a2) && std::isfinite(b2) && std::isfinite(gamma.real()) && std::isfinite(gamma.imag()))) {
    throw InvalidForm("cascade form has non-finite fields");
  }
  if (a2 < 0.0 || a2 > 1.0 || b2 < 0.0 || b2 > 1.0) throw InvalidForm("path weights must lie in [0, 1]");
  if (std::abs(a2 + b2 - 1.0) > sum_tolerance) throw InvalidForm("path weights must sum to 1");
  if (std::norm(gamma) > a2 * b2 + 1e-12) {
    std::ostringstream os;
    os << "|gamma|^2 = " << std::norm(gamma) << " exceeds a2*b2 = " << a2 * b2;
    throw InvalidForm(os.str());
  }
}

TwoQubitDensityMatrix from_cascade_form(const CascadeForm& f) {
  f.validate();
  Matrix4 m = Matrix4::Zero();
  m(kHH, kHH) = f.a2;
  m(kVV, kVV) = f.b2;
  m(kHH, kVV) = f.gamma;
  m(kVV, kHH) = std::conj(f.gamma);
  return TwoQubitDensityMatrix::from_matrix(m);
}

Matrix4 partial_transpose(const Matrix4& m) {
  // Index = 2*first + second; swap the second-photon indices of row and column.
  Matrix4 out;
  for (int i1 = 0; i1 < 2; ++i1)
    for (int i2 = 0; i2 < 2; ++i2)
      for (int j1 = 0; j1 < 2; ++j1)
        for (int j2 = 0; j2 < 2; ++j2) out(2 * i1 + i2, 2 * j1 + j2) = m(2 * i1 + j2, 2 * j1 + i2);
  return out;
}

double ppt_min_eigenvalue(const TwoQubitDensityMatrix& rho) {
  return hermitian_eigenvalues(partial_transpose(rho.matrix())).minCoeff();
}

double bell_value_cascade(const CascadeForm& f) {
  f.validate();
  return 2.0 * std::sqrt(1.0 + 4.0 * std::norm(f.gamma));
}

Matrix2 pauli(int index) {
  Matrix2 s;
  switch (index) {
    case 0:
      s << 1, 0, 0, 1;
      break;
    case 1:
      s << 0, 1, 1, 0;
      break;
    case 2:
      s << 0, Complex(0, -1), Complex(0, 1), 0;
      break;
    case 3:
      s << 1, 0, 0, -1;
      break;
    default:
      throw InvalidArgument("Pauli index must be 0..3");
  }
  return s;
}

Matrix4 pauli_product(int a, int b) {
  const Matrix2 sa = pauli(a);
  const Matrix2 sb = pauli(b);
  Matrix4 out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) out(2 * i + k, 2 * j + l) = sa(i, j) * sb(k, l);
  return out;
}

Eigen::Matrix3d correlation_matrix(const TwoQubitDensityMatrix& rho) {
  Eigen::Matrix3d t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t(i, j) = (rho.matrix() * pauli_product(i + 1, j + 1)).trace().real();
  return t;
}

double bell_value_general(const TwoQubitDensityMatrix& rho) {
  const Eigen::Matrix3d t = correlation_matrix(rho);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(t.transpose() * t, Eigen::EigenvaluesOnly);
  // ascending order
  const Eigen::Vector3d ev = solver.eigenvalues();
  return 2.0 * std::sqrt(std::max(0.0, ev(1) + ev(2)));
}

CascadeFit fit_cascade_form(const TwoQubitDensityMatrix& rho) {
  const Matrix4& m = rho.matrix();
  const double hh = m(kHH, kHH).real();
  const double vv = m(kVV, kVV).real();
  const double pop = hh + vv;
  CascadeFit fit;
  if (pop > 0.0) {
    fit.form.a2 = hh / pop;
    fit.form.b2 = vv / pop;
  } else {
    fit.form.a2 = fit.form.b2 = 0.5;
  }
  fit.form.gamma = 0.5 * (m(kHH, kVV) + std::conj(m(kVV, kHH)));
  // Positivity of rho already bounds |γ|² ≤ hh·vv ≤ a2·b2; clamp only round-off.
  const double bound = std::sqrt(fit.form.a2 * fit.form.b2);
  if (std::abs(fit.form.gamma) > bound) fit.form.gamma *= bound / std::abs(fit.form.gamma);
  fit.residual = (m - from_cascade_form(fit.form).matrix()).norm();
  return fit;
}

double fidelity_with_pure(const TwoQubitDensityMatrix& rho, const Vector4& psi) {
  const Vector4 u = psi.normalized();
  return (u.adjoint() * rho.matrix() * u)(0).real();
}

double trace_distance(const Matrix4& a, const Matrix4& b) {
  return 0.5 * hermitian_eigenvalues(a - b).cwiseAbs().sum();
}

TwoQubitDensityMatrix project_to_physical(const Matrix4& m) {
  const Matrix4 h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix4> solver(h);
  Eigen::Vector4d ev = solver.eigenvalues().cwiseMax(0.0);
  const double total = ev.sum();
  if (!(total > 0.0)) throw InvalidDensityMatrix("no positive spectrum left after projection");
  ev /= total;
  const Matrix4& u = solver.eigenvectors();
  Matrix4 out = u * ev.cast<Complex>().asDiagonal() * u.adjoint();
  out = 0.5 * (out + out.adjoint());
  return TwoQubitDensityMatrix::from_matrix(out);
}

}  // namespace qdent::polstate
