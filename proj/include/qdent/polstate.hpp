#pragma once

// Two-photon polarization states in the fixed basis order (HH, HV, VH, VV),
// with H and V the eigenstates of σ_z.

#include <array>
#include <complex>

#include <Eigen/Core>

namespace qdent::polstate {

using Complex = std::complex<double>;
using Matrix4 = Eigen::Matrix4cd;
using Matrix2 = Eigen::Matrix2cd;
using Vector4 = Eigen::Vector4cd;

enum BasisIndex : int { kHH = 0, kHV = 1, kVH = 2, kVV = 3 };

struct DensityTolerances {
  double hermitian = 1e-10;
  double trace = 1e-10;
  double psd = 1e-8;
};

class TwoQubitDensityMatrix {
 public:
  /// Validates Hermiticity, unit trace and positivity; throws InvalidDensityMatrix.
  static TwoQubitDensityMatrix from_matrix(const Matrix4& m, const DensityTolerances& tol = {});

  static TwoQubitDensityMatrix maximally_mixed();
  /// |Φ⁺⟩ = (|HH⟩ + |VV⟩)/√2.
  static TwoQubitDensityMatrix bell_phi_plus();
  static TwoQubitDensityMatrix pure(const Vector4& psi);

  const Matrix4& matrix() const noexcept { return m_; }
  Complex operator()(int row, int col) const { return m_(row, col); }

  double min_eigenvalue() const;
  Eigen::Vector4d eigenvalues() const;

 private:
  explicit TwoQubitDensityMatrix(const Matrix4& m) : m_(m) {}
  Matrix4 m_;
};

/// Parameters of the cascade family: diag(a2, 0, 0, b2) with γ in the HH/VV corner.
struct CascadeForm {
  double a2 = 0.5;
  double b2 = 0.5;
  Complex gamma{0.0, 0.0};

  /// Throws InvalidForm on out-of-range weights or |γ|² > a2·b2 + 1e-12.
  void validate(double sum_tolerance = 1e-9) const;
};

TwoQubitDensityMatrix from_cascade_form(const CascadeForm& f);

/// Partial transpose over the second photon.
Matrix4 partial_transpose(const Matrix4& m);

/// Smallest eigenvalue of the partial transpose; negative iff the state is entangled.
double ppt_min_eigenvalue(const TwoQubitDensityMatrix& rho);

/// Maximal CHSH value for the cascade family, 2·sqrt(1 + 4|γ|²).
double bell_value_cascade(const CascadeForm& f);

/// T_ij = Tr(ρ σ_i ⊗ σ_j) for i, j in {x, y, z}.
Eigen::Matrix3d correlation_matrix(const TwoQubitDensityMatrix& rho);

/// Maximal CHSH value over all Bell operators, 2·sqrt(t1 + t2) with t1, t2 the
/// two largest eigenvalues of TᵀT. Values below 2 are returned as-is.
double bell_value_general(const TwoQubitDensityMatrix& rho);

struct CascadeFit {
  CascadeForm form;
  double residual = 0.0;  // Frobenius norm of rho - from_cascade_form(form)
};

CascadeFit fit_cascade_form(const TwoQubitDensityMatrix& rho);

/// Single-qubit Pauli matrix: 0 → I, 1 → X, 2 → Y, 3 → Z.
Matrix2 pauli(int index);

/// σ_a ⊗ σ_b.
Matrix4 pauli_product(int a, int b);

double fidelity_with_pure(const TwoQubitDensityMatrix& rho, const Vector4& psi);

/// ½‖a − b‖₁.
double trace_distance(const Matrix4& a, const Matrix4& b);

/// Nearest density matrix in the eigenvalue sense: Hermitian part, negative
/// eigenvalues clipped to zero, trace renormalized. Throws InvalidDensityMatrix
/// when nothing positive remains.
TwoQubitDensityMatrix project_to_physical(const Matrix4& m);

}  // namespace qdent::polstate
