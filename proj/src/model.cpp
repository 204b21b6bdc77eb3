/*
 Copyright 2026 The pdmhe Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "pdmhe/model.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "pdmhe/errors.hpp"

namespace pdmhe
{

  namespace
  {
    constexpr double kInf = std::numeric_limits<double>::infinity();
  } // namespace

  std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index)
  {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // ---------------------------------------------------------------- BoxSet

  BoxSet::BoxSet(Vec lower, Vec upper) : lower_(std::move(lower)), upper_(std::move(upper))
  {
    if (lower_.size() != upper_.size())
      throw DimensionMismatch("BoxSet: lower/upper size mismatch");
    for (Eigen::Index i = 0; i < lower_.size(); ++i)
    {
      if (std::isnan(lower_[i]) || std::isnan(upper_[i]))
        throw DomainError("BoxSet: NaN bound");
      if (lower_[i] > upper_[i])
        throw DomainError("BoxSet: empty box (lower > upper at coordinate " + std::to_string(i) + ")");
      if (lower_[i] == kInf || upper_[i] == -kInf)
        throw DomainError("BoxSet: empty box (infinite bound on wrong side)");
    }
  }

  BoxSet BoxSet::unbounded(int dim) { return {Vec::Constant(dim, -kInf), Vec::Constant(dim, kInf)}; }
  BoxSet BoxSet::nonnegative(int dim) { return {Vec::Zero(dim), Vec::Constant(dim, kInf)}; }
  BoxSet BoxSet::nonpositive(int dim) { return {Vec::Constant(dim, -kInf), Vec::Zero(dim)}; }
  BoxSet BoxSet::point(const Vec &p) { return {p, p}; }

  bool BoxSet::contains(const Vec &v, double tol) const
  {
    if (v.size() != lower_.size())
      throw DimensionMismatch("BoxSet::contains: dimension mismatch");
    return violation(v) <= tol;
  }

  Vec BoxSet::project(const Vec &v) const
  {
    if (v.size() != lower_.size())
      throw DimensionMismatch("BoxSet::project: dimension mismatch");
    return v.cwiseMax(lower_).cwiseMin(upper_);
  }

  double BoxSet::violation(const Vec &v) const
  {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
      worst = std::max({worst, lower_[i] - v[i], v[i] - upper_[i]});
    return worst;
  }

  BoxSet BoxSet::scaled(const Vec &factors) const
  {
    if (factors.size() != lower_.size())
      throw DimensionMismatch("BoxSet::scaled: dimension mismatch");
    if ((factors.array() <= 0.0).any())
      throw DomainError("BoxSet::scaled: factors must be positive");
    return {lower_.cwiseProduct(factors), upper_.cwiseProduct(factors)};
  }

  bool BoxSet::is_unbounded() const
  {
    return (lower_.array() == -kInf).all() && (upper_.array() == kInf).all();
  }

  // ----------------------------------------------------------- SystemModel

  SystemModel::SystemModel(Mat A, Mat C)
      : n_(static_cast<int>(A.rows())), m_(static_cast<int>(C.rows())), dynamics_{std::move(A)},
        measurement_{std::move(C)}, lti_(true)
  {
    validate();
  }

  SystemModel::SystemModel(std::vector<Mat> dynamics, std::vector<Mat> measurement)
      : dynamics_(std::move(dynamics)), measurement_(std::move(measurement))
  {
    if (dynamics_.empty() || measurement_.empty())
      throw DimensionMismatch("SystemModel: empty matrix sequence");
    n_ = static_cast<int>(dynamics_.front().rows());
    m_ = static_cast<int>(measurement_.front().rows());
    lti_ = dynamics_.size() == 1 && measurement_.size() == 1;
    validate();
  }

  void SystemModel::validate() const
  {
    if (n_ <= 0 || m_ <= 0)
      throw DimensionMismatch("SystemModel: dimensions must be positive");
    for (const auto &A : dynamics_)
    {
      if (A.rows() != n_ || A.cols() != n_)
        throw DimensionMismatch("SystemModel: every A_t must be n x n");
      if (!A.allFinite())
        throw DomainError("SystemModel: non-finite entry in A_t");
    }
    for (const auto &C : measurement_)
    {
      if (C.rows() != m_ || C.cols() != n_)
        throw DimensionMismatch("SystemModel: every C_t must be m x n");
      if (!C.allFinite())
        throw DomainError("SystemModel: non-finite entry in C_t");
    }
  }

  const Mat &SystemModel::A(int t) const
  {
    if (dynamics_.size() == 1)
      return dynamics_.front();
    if (t < 0 || t >= static_cast<int>(dynamics_.size()))
      throw DomainError("SystemModel::A: time index out of range");
    return dynamics_[static_cast<std::size_t>(t)];
  }

  const Mat &SystemModel::C(int t) const
  {
    if (measurement_.size() == 1)
      return measurement_.front();
    if (t < 0 || t >= static_cast<int>(measurement_.size()))
      throw DomainError("SystemModel::C: time index out of range");
    return measurement_[static_cast<std::size_t>(t)];
  }

  int SystemModel::horizon_limit() const
  {
    int limit = std::numeric_limits<int>::max();
    if (dynamics_.size() > 1)
      limit = std::min(limit, static_cast<int>(dynamics_.size()));
    if (measurement_.size() > 1)
      limit = std::min(limit, static_cast<int>(measurement_.size()));
    return limit;
  }

  // ------------------------------------------------------------- NoiseSpec

  void NoiseSpec::validate(int n, int m) const
  {
    if (Q.rows() != n || Q.cols() != n || R.rows() != m || R.cols() != m)
      throw DimensionMismatch("NoiseSpec: Q must be n x n and R m x m");
    if (xi_set.dim() != n || zeta_set.dim() != m)
      throw DimensionMismatch("NoiseSpec: constraint set dimensions");
    if (!is_spd(Q))
      throw DomainError("NoiseSpec: Q must be symmetric positive definite");
    if (!is_spd(R))
      throw DomainError("NoiseSpec: R must be symmetric positive definite");
  }

  // ---------------------------------------------------------------- sampling

  TruncatedGaussianSampler::TruncatedGaussianSampler(const Mat &cov, BoxSet box)
      : box_(std::move(box))
  {
    if (cov.rows() != box_.dim() || cov.cols() != box_.dim())
      throw DimensionMismatch("TruncatedGaussianSampler: covariance/box dimension mismatch");
    Eigen::LLT<Mat> llt(symmetrize(cov));
    if (llt.info() != Eigen::Success)
      throw NotSPD("TruncatedGaussianSampler: covariance is not positive definite");
    chol_ = llt.matrixL();
  }

  Vec TruncatedGaussianSampler::operator()(Rng &rng) const
  {
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto d = chol_.rows();
    // A point box has measure zero; it is the degenerate "noise-free" case.
    if ((box_.lower().array() == box_.upper().array()).all())
      return box_.lower();
    Vec z(d);
    for (int attempt = 0; attempt < kMaxConsecutiveRejections; ++attempt)
    {
      for (Eigen::Index i = 0; i < d; ++i)
        z[i] = normal(rng);
      Vec candidate = chol_ * z;
      if (box_.contains(candidate))
        return candidate;
    }
    throw AcceptanceTooLow("truncated Gaussian: 10000 consecutive rejections");
  }

  Vec sample_truncated_gaussian(const Mat &cov, const BoxSet &box, Rng &rng)
  {
    return TruncatedGaussianSampler(cov, box)(rng);
  }

  Trajectory simulate_trajectory(const SystemModel &model, const NoiseSpec &noise, const Vec &x0,
                                 int T, std::uint64_t seed)
  {
    if (T < 1)
      throw DomainError("simulate_trajectory: T must be >= 1");
    if (x0.size() != model.n())
      throw DimensionMismatch("simulate_trajectory: x0 dimension");
    if (!x0.allFinite())
      throw DomainError("simulate_trajectory: x0 must be finite");
    if (T > model.horizon_limit())
      throw DomainError("simulate_trajectory: T exceeds the time-varying model length");
    noise.validate(model.n(), model.m());

    const TruncatedGaussianSampler sample_xi(noise.Q, noise.xi_set);
    const TruncatedGaussianSampler sample_zeta(noise.R, noise.zeta_set);

    Trajectory traj;
    traj.seed = seed;
    traj.states.reserve(static_cast<std::size_t>(T) + 1);
    traj.states.push_back(x0);
    Rng rng(seed);
    for (int t = 0; t < T; ++t)
    {
      Vec xi = sample_xi(rng);
      Vec zeta = sample_zeta(rng);
      const Vec &x = traj.states.back();
      traj.measurements.push_back(model.C(t) * x + zeta);
      traj.states.push_back(model.A(t) * x + xi);
      traj.process_noise.push_back(std::move(xi));
      traj.measurement_noise.push_back(std::move(zeta));
    }
    return traj;
  }

  // ------------------------------------------------------------ info vector

  InfoVector build_info_vector(std::span<const Vec> measurements, std::span<const Vec> estimates,
                               std::span<const Mat> weights, const SystemModel &model, int t,
                               int horizon)
  {
    if (t <= 0)
      throw WindowUnderflow("build_info_vector: t must be >= 1");
    if (horizon < 1)
      throw DomainError("build_info_vector: horizon must be >= 1");
    if (static_cast<int>(measurements.size()) < t)
      throw DimensionMismatch("build_info_vector: need measurements y_0..y_{t-1}");
    const int M = std::min(t, horizon);
    const int start = t - M;
    if (static_cast<int>(estimates.size()) <= start || static_cast<int>(weights.size()) <= start)
      throw DimensionMismatch("build_info_vector: prior estimate/weight missing for window start");

    InfoVector iv;
    iv.t = t;
    iv.M = M;
    iv.horizon = horizon;
    iv.lti = model.lti();
    iv.prior_estimate = estimates[static_cast<std::size_t>(start)];
    iv.prior_weight = weights[static_cast<std::size_t>(start)];
    if (iv.prior_estimate.size() != model.n())
      throw DimensionMismatch("build_info_vector: prior estimate dimension");
    if (!is_spd(iv.prior_weight, 0.0, 1e-9))
      throw NotSPD("build_info_vector: prior weight must be SPD");
    for (int i = start; i < t; ++i)
    {
      const Vec &y = measurements[static_cast<std::size_t>(i)];
      if (y.size() != model.m())
        throw DimensionMismatch("build_info_vector: measurement dimension");
      iv.window_measurements.push_back(y);
      iv.window_dynamics.push_back(model.A(i));
      iv.window_measurement_maps.push_back(model.C(i));
    }
    return iv;
  }

  int feature_dim(int n, int m, int horizon, bool lti)
  {
    int dim = horizon * m + n;
    if (!lti)
      dim += horizon * (n * n + m * n) + n * n;
    return dim;
  }

  namespace
  {
    void append_row_major(Vec &out, Eigen::Index &pos, const Mat &X)
    {
      for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < X.cols(); ++j)
          out[pos++] = X(i, j);
    }
  } // namespace

  Vec encode_features(const InfoVector &iv)
  {
    const int n = iv.n();
    const int m = iv.m();
    const int H = iv.horizon;
    const int pad = H - iv.M;
    Vec out(feature_dim(n, m, H, iv.lti));
    Eigen::Index pos = 0;
    for (int k = 0; k < H; ++k)
    {
      const int src = std::max(k - pad, 0);
      out.segment(pos, m) = iv.window_measurements[static_cast<std::size_t>(src)];
      pos += m;
    }
    out.segment(pos, n) = iv.prior_estimate;
    pos += n;
    if (!iv.lti)
    {
      for (int k = 0; k < H; ++k)
        append_row_major(out, pos, iv.window_dynamics[static_cast<std::size_t>(std::max(k - pad, 0))]);
      for (int k = 0; k < H; ++k)
        append_row_major(out, pos, iv.window_measurement_maps[static_cast<std::size_t>(std::max(k - pad, 0))]);
      append_row_major(out, pos, iv.prior_weight);
    }
    return out;
  }

} // namespace pdmhe
