#include "adaloc/ensemble.hpp"

#include <string>

#include "adaloc/errors.hpp"

namespace adaloc {

namespace {

void require_nonempty(const Ensemble& ens, const char* where) {
  if (ens.members.rows() == 0 || ens.members.cols() == 0) {
    throw DimensionError(std::string(where) + ": empty ensemble");
  }
}

}  // namespace

Vector mean(const Ensemble& ens) {
  require_nonempty(ens, "mean");
  return ens.members.rowwise().mean();
}

Matrix anomalies(const Ensemble& ens) {
  require_nonempty(ens, "anomalies");
  return ens.members.colwise() - mean(ens).eval();
}

Matrix covariance(const Ensemble& ens) {
  require_nonempty(ens, "covariance");
  if (ens.n_ens() < 2) {
    throw DegenerateEnsembleError(
        "covariance: needs at least 2 members, got " +
        std::to_string(ens.n_ens()));
  }
  const Matrix a = anomalies(ens);
  return (a * a.transpose()) / static_cast<double>(ens.n_ens() - 1);
}

Ensemble inflate(const Ensemble& ens, double delta) {
  require_nonempty(ens, "inflate");
  if (!(delta >= 1.0)) {
    throw ParameterError("inflate: delta must be >= 1, got " +
                         std::to_string(delta));
  }
  const Vector m = mean(ens);
  Ensemble out;
  out.members = (delta * anomalies(ens)).colwise() + m;
  out.time_index = ens.time_index;
  return out;
}

}  // namespace adaloc
