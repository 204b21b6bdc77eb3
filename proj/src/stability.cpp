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

#include "pdmhe/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "pdmhe/errors.hpp"

namespace pdmhe
{

  double generalized_eig_max(const Mat &P2, const Mat &P1)
  {
    if (P2.rows() != P1.rows() || P2.cols() != P1.cols())
      throw DimensionMismatch("generalized_eig_max: size mismatch");
    if (!is_spd(P2, 1e-12, 1e-9) || !is_spd(P1, 1e-12, 1e-9))
      throw NotSPD("generalized_eig_max: both matrices must be SPD");
    const Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(symmetrize(P2), symmetrize(P1), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
  }

  double lambda_max_over_sequence(const std::vector<Mat> &P, int horizon)
  {
    if (P.empty() || horizon < 1)
      throw DomainError("lambda_max_over_sequence: empty sequence or horizon");
    std::vector<Mat> inv;
    inv.reserve(P.size());
    for (const auto &p : P)
      inv.push_back(symmetrize(inverse_spd(p)));
    double worst = 0.0;
    for (std::size_t i = 0; i < inv.size(); ++i)
    {
      const std::size_t ref = i >= static_cast<std::size_t>(horizon) ? i - horizon : 0;
      worst = std::max(worst, generalized_eig_max(inv[i], inv[ref]));
    }
    return worst;
  }

  Mat lmi_block(const Mat &A, const Mat &C, const Mat &Q, const Mat &R, const Mat &P, double gamma)
  {
    const auto n = A.rows();
    const auto m = C.rows();
    if (A.cols() != n || C.cols() != n || Q.rows() != n || R.rows() != m || P.rows() != n)
      throw DimensionMismatch("lmi_block: dimensions");
    Mat B = Mat::Zero(n, n + m);
    B.leftCols(n).setIdentity();
    Mat D = Mat::Zero(m, n + m);
    D.rightCols(m).setIdentity();
    Mat Qbar = Mat::Zero(n + m, n + m);
    const Mat Pinv = inverse_spd(P);
    const Mat Rinv = inverse_spd(R);
    Qbar.topLeftCorner(n, n) = inverse_spd(Q);

    Mat block(2 * n + m, 2 * n + m);
    const Mat M11 = A.transpose() * Pinv * A - gamma * Pinv - 2.0 * C.transpose() * Rinv * C;
    const Mat M12 = A.transpose() * Pinv * B - 2.0 * C.transpose() * Rinv * D;
    const Mat M22 = B.transpose() * Pinv * B - Qbar - 2.0 * D.transpose() * Rinv * D;
    block.topLeftCorner(n, n) = M11;
    block.topRightCorner(n, n + m) = M12;
    block.bottomLeftCorner(n + m, n) = M12.transpose();
    block.bottomRightCorner(n + m, n + m) = M22;
    return symmetrize(block);
  }

  LmiResult lmi_check(const SystemModel &model, const Mat &Q, const Mat &R, const std::vector<Mat> &P,
                      double gamma)
  {
    if (P.empty())
      throw DimensionMismatch("lmi_check: empty P sequence");
    LmiResult res;
    res.max_eigenvalue = -std::numeric_limits<double>::infinity();
    const int steps = model.lti() ? 1 : model.horizon_limit();
    for (std::size_t i = 0; i < P.size(); ++i)
      for (int t = 0; t < steps; ++t)
      {
        const Mat block = lmi_block(model.A(t), model.C(t), Q, R, P[i], gamma);
        const double top = Eigen::SelfAdjointEigenSolver<Mat>(block, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
        if (top > res.max_eigenvalue)
        {
          res.max_eigenvalue = top;
          res.worst_index = static_cast<int>(i);
        }
      }
    res.ok = res.max_eigenvalue <= 1e-10;
    return res;
  }

  HorizonCheck rho_and_min_horizon(double lambda_max, double gamma, int horizon)
  {
    if (!(lambda_max >= 0.25))
      throw DomainError("rho_and_min_horizon: lambda_max must be at least 1/4");
    if (!(gamma > 0.0 && gamma < 1.0))
      throw DomainError("rho_and_min_horizon: gamma must lie in (0, 1)");
    if (horizon < 1)
      throw DomainError("rho_and_min_horizon: horizon must be positive");
    HorizonCheck h;
    const double l4 = std::log(4.0 * lambda_max);
    h.rho = std::pow(4.0 * lambda_max, 1.0 / horizon) * gamma;
    h.min_horizon = static_cast<int>(std::floor(-l4 / std::log(gamma))) + 1;
    h.satisfied = horizon >= h.min_horizon && h.rho < 1.0;
    return h;
  }

  StabilityCert make_stability_cert(const SystemModel &model, const Mat &Q, const Mat &R,
                                    const std::vector<Mat> &P, double gamma, int horizon)
  {
    StabilityCert c;
    c.horizon = horizon;
    c.gamma = gamma;
    c.lambda_max = lambda_max_over_sequence(P, horizon);
    const HorizonCheck h = rho_and_min_horizon(std::max(c.lambda_max, 0.25), gamma, horizon);
    c.rho = h.rho;
    c.min_horizon = h.min_horizon;
    c.horizon_ok = h.satisfied && c.lambda_max >= 0.25;
    const LmiResult lmi = lmi_check(model, Q, R, P, gamma);
    c.lmi_ok = lmi.ok;
    c.lmi_max_eigenvalue = lmi.max_eigenvalue;
    return c;
  }

  double error_bound(int t, double initial_error, const std::vector<double> &noise_norms, double rho,
                     int horizon, double delta)
  {
    if (!(rho >= 0.0 && rho < 1.0))
      throw DomainError("error_bound: rho must lie in [0, 1)");
    if (t < 0 || static_cast<int>(noise_norms.size()) < t)
      throw DimensionMismatch("error_bound: noise history shorter than t");
    const double sr = std::sqrt(rho);
    double worst = 0.0;
    for (int i = 0; i < t; ++i)
      worst = std::max(worst, std::pow(rho, 0.25 * i) * noise_norms[static_cast<std::size_t>(t - i - 1)]);
    return 2.0 * std::pow(sr, t) * initial_error + std::sqrt(2.0 * delta / (1.0 - std::pow(rho, horizon))) +
           2.0 * std::sqrt(1.0 / (1.0 - sr)) * worst;
  }

  AuditReport audit_trajectory(const Trajectory &traj, const std::vector<Vec> &estimates,
                               const std::vector<std::string> &provenance, const std::vector<Mat> &P,
                               const Mat &Q, const StabilityCert &cert, double delta)
  {
    const int T = traj.length();
    if (static_cast<int>(estimates.size()) != T + 1 || static_cast<int>(P.size()) < T + 1)
      throw DimensionMismatch("audit_trajectory: estimates or weights do not cover the trajectory");
    const Mat Qinv = inverse_spd(Q);
    std::vector<double> noise(static_cast<std::size_t>(T));
    for (int k = 0; k < T; ++k)
      noise[static_cast<std::size_t>(k)] = std::sqrt(weighted_sq_norm(traj.process_noise[k], Qinv));
    const double e0 = std::sqrt(weighted_sq_norm(estimates[0] - traj.states[0], inverse_spd(P[0])));

    AuditReport rep;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    for (int t = 0; t <= T; ++t)
    {
      const Mat &Pw = P[static_cast<std::size_t>(std::max(t - cert.horizon, 0))];
      AuditRow row;
      row.t = t;
      row.weighted_error = std::sqrt(weighted_sq_norm(estimates[t] - traj.states[t], inverse_spd(Pw)));
      row.bound = error_bound(t, e0, noise, cert.rho, cert.horizon, delta);
      row.margin = row.bound - row.weighted_error;
      row.provenance = static_cast<int>(provenance.size()) > t ? provenance[t] : std::string();
      if (row.margin < 0.0)
        ++rep.violations;
      rep.worst_margin = std::min(rep.worst_margin, row.margin);
      rep.rows.push_back(std::move(row));
    }
    return rep;
  }

  void write_audit_csv(std::ostream &out, const AuditReport &report)
  {
    out << "t,weighted_error,bound,margin,provenance\n";
    out.precision(17);
    for (const auto &r : report.rows)
      out << r.t << ',' << r.weighted_error << ',' << r.bound << ',' << r.margin << ',' << r.provenance << '\n';
  }

} // namespace pdmhe
