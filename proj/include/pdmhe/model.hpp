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

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "pdmhe/linalg.hpp"

namespace pdmhe
{

  using Rng = std::mt19937_64;

  /// splitmix64 finalizer; derives independent per-task seeds from a base seed.
  std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index);

  /**
   * @brief Convex set with a closed-form Euclidean projection.
   *
   * Only axis-aligned boxes ship; other sets plug in here.
   */
  class ConvexSet
  {
  public:
    virtual ~ConvexSet() = default;
    virtual int dim() const = 0;
    virtual bool contains(const Vec &v, double tol = 0.0) const = 0;
    virtual Vec project(const Vec &v) const = 0;
  };

  /// Axis-aligned box {x : lower <= x <= upper}; infinite bounds allowed.
  class BoxSet final : public ConvexSet
  {
  public:
    BoxSet() = default;
    BoxSet(Vec lower, Vec upper);

    static BoxSet unbounded(int dim);
    static BoxSet nonnegative(int dim);
    static BoxSet nonpositive(int dim);
    static BoxSet point(const Vec &p);

    int dim() const override { return static_cast<int>(lower_.size()); }
    bool contains(const Vec &v, double tol = 0.0) const override;
    Vec project(const Vec &v) const override;

    /// Largest per-coordinate distance outside the box (0 when inside).
    double violation(const Vec &v) const;

    /// Box with both bounds multiplied coordinate-wise by positive factors.
    BoxSet scaled(const Vec &factors) const;

    bool is_unbounded() const;
    const Vec &lower() const { return lower_; }
    const Vec &upper() const { return upper_; }

  private:
    Vec lower_;
    Vec upper_;
  };

  /// x_{t+1} = A_t x_t + xi_t,  y_t = C_t x_t + zeta_t.
  class SystemModel
  {
  public:
    SystemModel() = default;
    /// Time-invariant model.
    SystemModel(Mat A, Mat C);
    /// Time-varying model; sequences are indexed by absolute time.
    SystemModel(std::vector<Mat> dynamics, std::vector<Mat> measurement);

    int n() const { return n_; }
    int m() const { return m_; }
    bool lti() const { return lti_; }

    const Mat &A(int t) const;
    const Mat &C(int t) const;

    /// Number of time steps covered (unbounded for LTI).
    int horizon_limit() const;

    const std::vector<Mat> &dynamics() const { return dynamics_; }
    const std::vector<Mat> &measurement() const { return measurement_; }

  private:
    void validate() const;

    int n_ = 0;
    int m_ = 0;
    std::vector<Mat> dynamics_;
    std::vector<Mat> measurement_;
    bool lti_ = true;
  };

  struct NoiseSpec
  {
    Mat Q;
    Mat R;
    BoxSet xi_set;
    BoxSet zeta_set;

    /// Throws DomainError / DimensionMismatch.
    void validate(int n, int m) const;
  };

  /// Rejection sampler for N(0, cov) conditioned on a box.
  class TruncatedGaussianSampler
  {
  public:
    static constexpr int kMaxConsecutiveRejections = 10000;

    TruncatedGaussianSampler(const Mat &cov, BoxSet box);

    /// Throws AcceptanceTooLow after kMaxConsecutiveRejections misses in a row.
    Vec operator()(Rng &rng) const;

  private:
    Mat chol_;
    BoxSet box_;
  };

  Vec sample_truncated_gaussian(const Mat &cov, const BoxSet &box, Rng &rng);

  struct Trajectory
  {
    std::vector<Vec> states;            // x_0 .. x_T
    std::vector<Vec> measurements;      // y_0 .. y_{T-1}
    std::vector<Vec> process_noise;     // xi_0 .. xi_{T-1}
    std::vector<Vec> measurement_noise; // zeta_0 .. zeta_{T-1}
    std::uint64_t seed = 0;

    int length() const { return static_cast<int>(measurements.size()); }
  };

  Trajectory simulate_trajectory(const SystemModel &model, const NoiseSpec &noise, const Vec &x0,
                                 int T, std::uint64_t seed);

  /// Everything that defines one windowed estimation problem at time t.
  struct InfoVector
  {
    std::vector<Vec> window_measurements;     // y_{t-M} .. y_{t-1}
    std::vector<Mat> window_dynamics;         // A_{t-M} .. A_{t-1}
    std::vector<Mat> window_measurement_maps; // C_{t-M} .. C_{t-1}
    Mat prior_weight;                         // P_{t-M}
    Vec prior_estimate;                       // xhat*_{t-M}
    int t = 0;
    int M = 0;       // effective window length
    int horizon = 0; // configured cap M_t
    bool lti = true;

    int n() const { return static_cast<int>(prior_estimate.size()); }
    int m() const { return window_measurements.empty() ? 0 : static_cast<int>(window_measurements.front().size()); }
  };

  /**
   * @brief Slice the window ending at t.
   *
   * estimates[k] and weights[k] are the estimate emitted at time k and the arrival weight P_k;
   * both must reach index max(t - horizon, 0). measurements must hold y_0 .. y_{t-1}.
   * The window grows as min(t, horizon) during start-up.
   */
  InfoVector build_info_vector(std::span<const Vec> measurements, std::span<const Vec> estimates,
                               std::span<const Mat> weights, const SystemModel &model, int t,
                               int horizon);

  /// Fixed-size network input for a given model and horizon.
  int feature_dim(int n, int m, int horizon, bool lti);

  /**
   * @brief Canonical input encoding.
   *
   * LTI: [y_{t-M}..y_{t-1} left-padded by repeating y_{t-M}; xhat*_{t-M}].
   * LTV additionally appends the (equally padded) A and C windows and P, all row-major.
   */
  Vec encode_features(const InfoVector &iv);

} // namespace pdmhe
