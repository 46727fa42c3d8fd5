#include <doctest.h>

#include <cmath>
#include <set>

#include "adaloc/errors.hpp"
#include "adaloc/features.hpp"
#include "adaloc/metrics.hpp"
#include "adaloc/rng.hpp"

using namespace adaloc;

namespace {

Ensemble random_ensemble(int n_state, int n_ens, std::uint64_t seed) {
  Rng rng(seed);
  Ensemble ens;
  ens.members.resize(n_state, n_ens);
  for (int e = 0; e < n_ens; ++e) {
    for (int i = 0; i < n_state; ++i) {
      ens.members(i, e) = rng.normal();
    }
  }
  return ens;
}

ObservationBatch identity_obs(const Vector& y) {
  return ObservationBatch::identity(y, Vector::Constant(y.size(), 1.0));
}

// Recomputes the whole feature vector with plain loops.
Vector naive_features(const Ensemble& ens, const ObservationBatch& obs,
                      int stride, int corr_lag, std::uint64_t tie_seed) {
  const int k = ens.n_state();
  const int n = ens.n_ens();
  std::vector<int> idx;
  for (int i = 0; i < k; i += stride) {
    idx.push_back(i);
  }
  std::vector<double> out;
  std::vector<double> m(k, 0.0);
  std::vector<double> var(k, 0.0);
  for (int i = 0; i < k; ++i) {
    for (int e = 0; e < n; ++e) {
      m[i] += ens.members(i, e);
    }
    m[i] /= n;
    for (int e = 0; e < n; ++e) {
      const double d = ens.members(i, e) - m[i];
      var[i] += d * d;
    }
    var[i] /= n - 1;
  }
  for (int i : idx) {
    out.push_back(m[i]);
  }
  out.push_back(ens.members.minCoeff());
  out.push_back(ens.members.maxCoeff());
  for (int i : idx) {
    out.push_back(var[i]);
  }
  for (int i : idx) {
    for (int d = 1; d <= corr_lag; ++d) {
      const int j = (i + d) % k;
      double cov = 0.0;
      for (int e = 0; e < n; ++e) {
        cov += (ens.members(i, e) - m[i]) * (ens.members(j, e) - m[j]);
      }
      cov /= n - 1;
      const double denom = std::sqrt(var[i] * var[j]);
      out.push_back(denom > 0.0 ? cov / denom : 0.0);
    }
  }
  Rng tie(tie_seed);
  double kl;
  try {
    kl = kl_beta_uniform(fit_beta(rank_histogram(ens, obs, tie)));
  } catch (const DegenerateHistogramError&) {
    kl = kDegenerateKlPenalty;
  }
  out.push_back(kl);
  Vector mv(k);
  for (int i = 0; i < k; ++i) {
    mv[i] = m[i];
  }
  out.push_back(obs_rmse(mv, obs));
  return Eigen::Map<Vector>(out.data(), static_cast<Eigen::Index>(out.size()));
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("layout shape and names for the default geometry") {
  const FeatureLayout layout = make_feature_layout(40, 2, 3);
  CHECK(layout.n_strided == 20);
  CHECK(layout.n_feat == 20 + 2 + 20 + 60 + 2);
  REQUIRE(static_cast<int>(layout.names.size()) == layout.n_feat);
  CHECK(layout.names.front() == "mean_i0");
  CHECK(layout.names[20] == "min");
  CHECK(layout.names[21] == "max");
  CHECK(layout.names[22] == "var_i0");
  CHECK(layout.names[42] == "corr_i0_d1");
  CHECK(layout.names[layout.n_feat - 2] == "fc_rank_kl");
  CHECK(layout.names.back() == "fc_obs_rmse");
  const std::set<std::string> unique(layout.names.begin(), layout.names.end());
  CHECK(unique.size() == layout.names.size());
}

TEST_CASE("layout handles ragged strides") {
  const FeatureLayout layout = make_feature_layout(7, 2, 2);
  CHECK(layout.n_strided == 4);  // indices 0, 2, 4, 6
  CHECK(layout.n_feat == 4 + 2 + 4 + 8 + 2);
}

TEST_CASE("extraction matches a naive recomputation") {
  const Ensemble ens = random_ensemble(12, 9, 71);
  Vector y(12);
  Rng yr(72);
  for (int i = 0; i < 12; ++i) {
    y[i] = yr.normal();
  }
  const auto obs = identity_obs(y);
  Rng tie(13);
  const Vector got = extract_features(ens, obs, 3, 2, tie);
  const Vector want = naive_features(ens, obs, 3, 2, 13);
  REQUIRE(got.size() == want.size());
  CHECK((got - want).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(static_cast<int>(got.size()) == make_feature_layout(12, 3, 2).n_feat);
}

TEST_CASE("rotating the ring permutes the strided blocks") {
  const int k = 8;
  const int stride = 2;
  const int lag = 2;
  const Ensemble ens = random_ensemble(k, 7, 91);
  Vector y(k);
  Rng yr(92);
  for (int i = 0; i < k; ++i) {
    y[i] = yr.normal();
  }

  Ensemble rotated;
  rotated.members.resize(k, ens.n_ens());
  Vector y_rot(k);
  for (int i = 0; i < k; ++i) {
    rotated.members.row(i) = ens.members.row((i + stride) % k);
    y_rot[i] = y[(i + stride) % k];
  }

  Rng tie_a(17);
  Rng tie_b(17);
  const Vector base = extract_features(ens, identity_obs(y), stride, lag,
                                       tie_a);
  const Vector shifted = extract_features(rotated, identity_obs(y_rot),
                                          stride, lag, tie_b);

  const FeatureLayout layout = make_feature_layout(k, stride, lag);
  const int ns = layout.n_strided;
  auto strided_rotated = [&](int block_start, int per_index) {
    for (int p = 0; p < ns; ++p) {
      const int q = (p + 1) % ns;  // one strided position over
      for (int d = 0; d < per_index; ++d) {
        CHECK(shifted[block_start + p * per_index + d] ==
              doctest::Approx(base[block_start + q * per_index + d])
                  .epsilon(1e-12));
      }
    }
  };
  strided_rotated(0, 1);           // means
  strided_rotated(ns + 2, 1);      // variances
  strided_rotated(2 * ns + 2, lag);  // correlations
  CHECK(shifted[ns] == base[ns]);          // min
  CHECK(shifted[ns + 1] == base[ns + 1]);  // max
  CHECK(shifted[layout.n_feat - 2] ==
        doctest::Approx(base[layout.n_feat - 2]).epsilon(1e-12));
  CHECK(shifted[layout.n_feat - 1] ==
        doctest::Approx(base[layout.n_feat - 1]).epsilon(1e-12));
}

TEST_CASE("zero-variance components yield zero correlations") {
  Ensemble ens = random_ensemble(6, 5, 101);
  ens.members.row(2).setConstant(3.0);
  Vector y = Vector::Zero(6);
  Rng tie(19);
  const Vector f = extract_features(ens, identity_obs(y), 1, 2, tie);
  const FeatureLayout layout = make_feature_layout(6, 1, 2);
  // corr block starts after means, min/max, vars.
  const int corr0 = 6 + 2 + 6;
  // corr(1, 1+1=2), corr(0, 0+2=2): both touch the flat component 2.
  CHECK(f[corr0 + 1 * 2 + 0] == 0.0);
  CHECK(f[corr0 + 0 * 2 + 1] == 0.0);
  // var feature for component 2 is exactly zero.
  CHECK(f[6 + 2 + 2] == 0.0);
}

TEST_CASE("a collapsed ensemble reports the kl penalty") {
  Ensemble ens;
  ens.members = Matrix::Constant(6, 5, 2.0);
  Vector y = Vector::Zero(6);
  Rng tie(23);
  const Vector f = extract_features(ens, identity_obs(y), 2, 2, tie);
  const FeatureLayout layout = make_feature_layout(6, 2, 2);
  CHECK(f[layout.n_feat - 2] == kDegenerateKlPenalty);
  CHECK(f[layout.n_feat - 1] == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("parameter validation") {
  const Ensemble ens = random_ensemble(8, 5, 111);
  Vector y = Vector::Zero(8);
  const auto obs = identity_obs(y);
  Rng tie(29);
  CHECK_THROWS_AS(extract_features(ens, obs, 0, 2, tie), ParameterError);
  CHECK_THROWS_AS(extract_features(ens, obs, 9, 2, tie), ParameterError);
  CHECK_THROWS_AS(extract_features(ens, obs, 2, 4, tie), ParameterError);
  CHECK_THROWS_AS(make_feature_layout(8, 2, 0), ParameterError);
  Ensemble single;
  single.members = Matrix::Zero(8, 1);
  CHECK_THROWS_AS(extract_features(single, obs, 2, 2, tie),
                  DegenerateEnsembleError);
}

}  // TEST_SUITE
