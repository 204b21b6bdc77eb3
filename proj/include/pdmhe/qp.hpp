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

#include "pdmhe/linalg.hpp"

namespace pdmhe
{

  /// minimize 1/2 x'Hx + g'x  subject to  lower <= D x <= upper  (bounds may be infinite).
  struct QpProblem
  {
    Mat H;
    Vec g;
    Mat D;
    Vec lower;
    Vec upper;
  };

  enum class QpStatus
  {
    Solved,
    MaxIterations,
    PrimalInfeasible,
  };

  struct QpSettings
  {
    /// ADMM step size; rows with lower == upper use 1e3 * rho
    double rho = 0.1;
    /// proximal regularization
    double sigma = 1e-6;
    /// over-relaxation
    double alpha = 1.6;
    double eps_abs = 1e-5;
    double eps_rel = 1e-5;
    double eps_infeasible = 1e-7;
    int max_iter = 20000;
    int check_interval = 5;
    bool adaptive_rho = true;

    /// active-set refinement of the ADMM iterate
    bool polish = true;
    int max_polish_iter = 30;
    /// KKT tolerance a polished point must meet
    double polish_tol = 1e-9;

    /// when set, one CSV row per check: iteration,primal_residual,dual_residual,objective
    std::ostream *trace = nullptr;
  };

  struct QpResult
  {
    QpStatus status = QpStatus::MaxIterations;
    Vec x;
    /// multipliers; KKT reads H x + g + D'y = 0, y <= 0 at active lower, y >= 0 at active upper
    Vec y;
    int iterations = 0;
    bool polished = false;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    /// x'Hx + g'x + sum(u y+ + l y-), zero at an exact KKT point
    double duality_gap = 0.0;
    double objective = 0.0;
  };

  /**
   * @brief Operator-splitting (ADMM) QP solver with an active-set polish.
   *
   * The ADMM phase brings the iterate near the optimum; the polish then identifies the
   * active set and solves the reduced KKT system, iterating primal-dual active-set
   * updates until the set is stable. If the polish is rejected the ADMM tolerance is
   * tightened and the loop resumes.
   */
  QpResult solve_qp(const QpProblem &problem, const QpSettings &settings = {});

  /// Warm-started variant.
  QpResult solve_qp(const QpProblem &problem, const QpSettings &settings, const Vec &x0, const Vec &y0);

  /// Largest bound violation of D x.
  double constraint_violation(const QpProblem &problem, const Vec &x);

} // namespace pdmhe
