#pragma once

#include <span>
#include <vector>

#include "qdent/tomography.hpp"

namespace qdent::tomography::detail {

struct Term {
  double counts;
  double weight;
  Matrix4 proj;
};

/// Deviance of one record at expected count λ (−2× is not applied; this is
/// the saturated log-likelihood minus the model log-likelihood). Writes
/// ∂/∂λ when d_lambda is non-null.
double deviance(double counts, double lambda, double* d_lambda);

std::vector<Term> make_terms(std::span<const MeasurementRecord> records);

}  // namespace qdent::tomography::detail
