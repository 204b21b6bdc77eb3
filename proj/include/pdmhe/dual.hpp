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

#include <iosfwd>
#include <optional>
#include <vector>

#include "pdmhe/mhe.hpp"

namespace pdmhe
{

  /// Noise boxes seen through Q^{-1/2} and R^{-1/2}.
  struct ScaledSets
  {
    BoxSet xi_tilde;
    BoxSet zeta_tilde;

    /// Throws DomainError for a non-diagonal covariance paired with a bounded box.
    static ScaledSets from_instance(const MheInstance &inst);
  };

  /// argmin over the box of |x - z/2|^2, i.e. clamp(z/2).
  Vec project_half(const Vec &z, const BoxSet &box);

  /**
   * @brief Backward multiplier recursion.
   *
   * lambda_{M-1} = 0, lambda_{k-1} = A_k' lambda_k + C_k' mu_k. mu is given per window position.
   */
  std::vector<Vec> adjoint_lambda(const std::vector<Vec> &mu, const std::vector<Mat> &dynamics,
                                  const std::vector<Mat> &measurement_maps);

  /// Flat (M*m) <-> per-position conversions for the measurement multipliers.
  Vec flatten(const std::vector<Vec> &parts);
  std::vector<Vec> split(const Vec &flat, int parts);

  struct DualSolution
  {
    Vec mu; // flat, window position major
    std::vector<Vec> lambda;
    double value = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
  };

  /// Dual function with everything that does not depend on mu precomputed.
  class DualProblem
  {
  public:
    /// Throws DomainError when gamma == 0 or the scaled sets are not boxes.
    explicit DualProblem(const MheInstance &inst);

    struct Evaluation
    {
      double value = 0.0;
      Vec gradient;
      std::vector<Vec> lambda;
      Vec x0;
      std::vector<Vec> xi;
      std::vector<Vec> zeta; // projection minimizers, equal to y - C x only at the optimum
    };

    Evaluation evaluate(const Vec &mu, bool with_gradient = true) const;
    double value(const Vec &mu) const { return evaluate(mu, false).value; }
    Vec gradient(const Vec &mu) const { return evaluate(mu, true).gradient; }

    int size() const { return inst_.M() * inst_.m(); }
    const MheInstance &instance() const { return inst_; }

  private:
    MheInstance inst_;
    ScaledSets sets_;
    Mat Qhalf_;
    Mat Rhalf_;
  };

  double dual_function(const Vec &mu, const MheInstance &inst);
  Vec dual_gradient(const Vec &mu, const MheInstance &inst);

  struct DualSettings
  {
    double initial_step = 1.0;
    double shrink = 0.5;
    double armijo = 1e-4;
    /// stop when |grad G| <= tol * (1 + |G|)
    double tol = 1e-7;
    int max_iter = 200000;
    /// Barzilai-Borwein trial step in place of the fixed initial step
    bool bb_step = true;
    /// CSV rows iteration,G,grad_norm
    std::ostream *trace = nullptr;
  };

  /// Gradient ascent with backtracking on mu. Throws MaxIterations carrying the best mu.
  DualSolution solve_dual(const MheInstance &inst, const DualSettings &settings = {},
                          const std::optional<Vec> &mu0 = std::nullopt);

  /// Closed-form primal minimizers at mu, rolled out through the dynamics.
  PrimalSolution recover_primal(const DualSolution &dual, const MheInstance &inst);

} // namespace pdmhe
