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
#include <vector>

#include "pdmhe/model.hpp"
#include "pdmhe/problem.hpp"
#include "pdmhe/qp.hpp"

namespace pdmhe
{

  /// One windowed estimation problem with its weights and constraint sets.
  struct MheInstance
  {
    InfoVector iv;
    double gamma = 0.8;
    Mat Q;
    Mat R;
    Mat Qinv;
    Mat Rinv;
    BoxSet xi_set;
    BoxSet zeta_set;

    int n() const { return iv.n(); }
    int m() const { return iv.m(); }
    int M() const { return iv.M; }

    /// gamma^(M-1-k) for window position k
    double stage_weight(int k) const;
    /// gamma^M
    double arrival_discount() const;

    /// Throws DimensionMismatch / DomainError.
    void validate() const;
  };

  MheInstance make_instance(InfoVector iv, double gamma, const NoiseSpec &noise);

  /// Decision variables of the windowed problem; index k runs over window positions 0..M-1.
  struct PrimalSolution
  {
    Vec x0_hat;
    std::vector<Vec> xi_hat;
    std::vector<Vec> x_traj; // M + 1 states, last is the current estimate
    std::vector<Vec> zeta_hat;
    double cost = 0.0;
    bool feasible = false;

    int iterations = 0;
    double duality_gap = 0.0;
    /// measurement multipliers recovered from the QP, one m-vector per window position
    std::vector<Vec> mu;

    const Vec &estimate() const { return x_traj.back(); }
  };

  struct ArrivalCost
  {
    Mat P;
    int t = 0;
  };

  /// Condensed QP over z = (x0, xi_0 .. xi_{M-1}).
  struct CondensedMhe
  {
    QpProblem qp;
    /// V = 1/2 z'Hz + g'z + constant
    double constant = 0.0;
    /// x_k = state_maps[k] * z for k = 0..M
    std::vector<Mat> state_maps;
    /// QP row holding xi_k(j) resp. the zeta_k(j) row, -1 when the row was dropped
    std::vector<int> xi_rows;
    std::vector<int> zeta_rows;
  };

  CondensedMhe condense(const MheInstance &inst);

  /// Roll out (x0, xi) through the dynamics; zeta = y - C x.
  PrimalSolution rollout(const MheInstance &inst, const Vec &x0, const std::vector<Vec> &xi);

  /// Discounted MHE cost of the given variables. Throws DimensionMismatch.
  double mhe_cost(const MheInstance &inst, const PrimalSolution &sol);

  /// Checks xi and zeta against their boxes with the given absolute tolerance.
  bool is_feasible(const MheInstance &inst, const PrimalSolution &sol, double tol = 1e-8);

  /**
   * @brief Solve the constrained MHE problem.
   *
   * Throws Infeasible when no (x0, xi) satisfies the boxes and MaxIterations when the
   * solver stalls.
   */
  PrimalSolution solve_primal(const MheInstance &inst, const QpSettings &settings = {});

  struct Phase1Result
  {
    bool feasible = false;
    Vec x0;
    std::vector<Vec> xi;
  };

  Phase1Result phase1_feasible(const MheInstance &inst);

  /// One Riccati step. Throws SingularInnovation when R + C P C' is numerically singular.
  ArrivalCost riccati_update(const ArrivalCost &P, const Mat &A, const Mat &C, const Mat &Q, const Mat &R);

  struct KalmanState
  {
    Vec x;
    ArrivalCost P;
  };

  /// Prediction-form Kalman step: x+ = A x + A P C' S^-1 (y - C x), P+ = riccati_update(P).
  KalmanState kalman_step(const Vec &x, const ArrivalCost &P, const Vec &y, const Mat &A, const Mat &C,
                          const Mat &Q, const Mat &R);

  /// Fixed point of the Riccati recursion (LTI models). Throws Diverged if it does not settle.
  Mat stationary_riccati(const Mat &A, const Mat &C, const Mat &Q, const Mat &R, const Mat &P0,
                         double tol = 1e-12, int max_iter = 100000);

  /// Arrival weights P_0 .. P_T under the setup's policy.
  std::vector<Mat> arrival_weights(const ProblemSetup &setup, int T);

} // namespace pdmhe
