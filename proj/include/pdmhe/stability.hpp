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
#include <string>
#include <vector>

#include "pdmhe/model.hpp"

namespace pdmhe
{

  /// Largest eigenvalue of the pencil (P2, P1). Throws NotSPD.
  double generalized_eig_max(const Mat &P2, const Mat &P1);

  /**
   * @brief Worst generalized eigenvalue over a realized arrival-weight sequence.
   *
   * max over i >= M of lambda(P_i^-1, P_{i-M}^-1) and over i < M of lambda(P_i^-1, P_0^-1).
   */
  double lambda_max_over_sequence(const std::vector<Mat> &P, int horizon);

  /// Symmetric (2n+m) block matrix whose negative semidefiniteness is the stability LMI.
  Mat lmi_block(const Mat &A, const Mat &C, const Mat &Q, const Mat &R, const Mat &P, double gamma);

  struct LmiResult
  {
    bool ok = false;
    double max_eigenvalue = 0.0;
    int worst_index = 0;
  };

  /// Checks the block for every supplied P (and every time-varying A, C pair); ok iff max eig <= 1e-10.
  LmiResult lmi_check(const SystemModel &model, const Mat &Q, const Mat &R, const std::vector<Mat> &P,
                      double gamma);

  struct HorizonCheck
  {
    double rho = 0.0;
    int min_horizon = 0;
    bool satisfied = false;
  };

  /// Throws DomainError for lambda_max < 1/4 or gamma outside (0, 1).
  HorizonCheck rho_and_min_horizon(double lambda_max, double gamma, int horizon);

  struct StabilityCert
  {
    double lambda_max = 0.0;
    double rho = 0.0;
    int min_horizon = 0;
    bool horizon_ok = false;
    bool lmi_ok = false;
    double lmi_max_eigenvalue = 0.0;
    int horizon = 0;
    double gamma = 0.0;

    bool satisfied() const { return horizon_ok && lmi_ok && rho < 1.0; }
  };

  StabilityCert make_stability_cert(const SystemModel &model, const Mat &Q, const Mat &R,
                                    const std::vector<Mat> &P, double gamma, int horizon);

  /**
   * @brief Error bound at time t.
   *
   * initial_error is |xhat_0 - x_0| in the P_0^-1 norm; noise_norms[k] is |xi_k| in the Q^-1
   * norm for k = 0..t-1. Throws DomainError for rho >= 1.
   */
  double error_bound(int t, double initial_error, const std::vector<double> &noise_norms, double rho,
                     int horizon, double delta);

  struct AuditRow
  {
    int t = 0;
    double weighted_error = 0.0;
    double bound = 0.0;
    double margin = 0.0; // bound - weighted_error
    std::string provenance;
  };

  struct AuditReport
  {
    std::vector<AuditRow> rows;
    int violations = 0;
    double worst_margin = 0.0;
    bool passed() const { return violations == 0; }
  };

  /**
   * @brief Compare estimation errors against the bound along one trajectory.
   *
   * estimates[t] for t = 0..T; P[t] is the arrival weight at time t; provenance may be empty.
   */
  AuditReport audit_trajectory(const Trajectory &traj, const std::vector<Vec> &estimates,
                               const std::vector<std::string> &provenance, const std::vector<Mat> &P,
                               const Mat &Q, const StabilityCert &cert, double delta);

  void write_audit_csv(std::ostream &out, const AuditReport &report);

} // namespace pdmhe
