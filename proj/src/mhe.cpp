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

#include "pdmhe/mhe.hpp"

#include <cmath>
#include <limits>

#include "pdmhe/errors.hpp"

namespace pdmhe
{

  namespace
  {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    constexpr double kFeasTol = 1e-8;
  } // namespace

  double MheInstance::stage_weight(int k) const { return std::pow(gamma, M() - 1 - k); }

  double MheInstance::arrival_discount() const { return std::pow(gamma, M()); }

  void MheInstance::validate() const
  {
    const int n = this->n();
    const int m = this->m();
    if (M() < 1)
      throw DomainError("MheInstance: empty window");
    if (!(gamma >= 0.0 && gamma < 1.0))
      throw DomainError("MheInstance: gamma must lie in [0, 1)");
    if (static_cast<int>(iv.window_measurements.size()) != M() ||
        static_cast<int>(iv.window_dynamics.size()) != M() ||
        static_cast<int>(iv.window_measurement_maps.size()) != M())
      throw DimensionMismatch("MheInstance: window lengths differ from M");
    if (Q.rows() != n || Qinv.rows() != n || R.rows() != m || Rinv.rows() != m)
      throw DimensionMismatch("MheInstance: weight dimensions");
    if (xi_set.dim() != n || zeta_set.dim() != m)
      throw DimensionMismatch("MheInstance: box dimensions");
    if (iv.prior_weight.rows() != n || iv.prior_weight.cols() != n)
      throw DimensionMismatch("MheInstance: prior weight dimensions");
  }

  MheInstance make_instance(InfoVector iv, double gamma, const NoiseSpec &noise)
  {
    MheInstance inst;
    inst.iv = std::move(iv);
    inst.gamma = gamma;
    inst.Q = noise.Q;
    inst.R = noise.R;
    inst.Qinv = symmetrize(inverse_spd(noise.Q));
    inst.Rinv = symmetrize(inverse_spd(noise.R));
    inst.xi_set = noise.xi_set;
    inst.zeta_set = noise.zeta_set;
    inst.validate();
    return inst;
  }

  CondensedMhe condense(const MheInstance &inst)
  {
    inst.validate();
    const int n = inst.n();
    const int m = inst.m();
    const int M = inst.M();
    const int nz = n + M * n;

    CondensedMhe c;
    c.state_maps.reserve(M + 1);
    Mat S = Mat::Zero(n, nz);
    S.leftCols(n).setIdentity();
    c.state_maps.push_back(S);
    for (int k = 0; k < M; ++k)
    {
      Mat next = inst.iv.window_dynamics[k] * S;
      next.middleCols(n + k * n, n) += Mat::Identity(n, n);
      c.state_maps.push_back(next);
      S = std::move(next);
    }

    const Mat Pinv = symmetrize(inverse_spd(inst.iv.prior_weight));
    const double wa = inst.arrival_discount();
    const Vec &xbar = inst.iv.prior_estimate;

    Mat H = Mat::Zero(nz, nz);
    Vec g = Vec::Zero(nz);
    H.topLeftCorner(n, n) += wa * Pinv;
    g.head(n) -= wa * Pinv * xbar;
    c.constant = wa * xbar.dot(Pinv * xbar);
    for (int k = 0; k < M; ++k)
    {
      const double w = inst.stage_weight(k);
      const Mat CS = inst.iv.window_measurement_maps[k] * c.state_maps[k];
      const Vec &y = inst.iv.window_measurements[k];
      H.block(n + k * n, n + k * n, n, n) += w * inst.Qinv;
      H += w * CS.transpose() * inst.Rinv * CS;
      g -= w * CS.transpose() * (inst.Rinv * y);
      c.constant += w * y.dot(inst.Rinv * y);
    }
    c.qp.H = symmetrize(2.0 * H);
    c.qp.g = 2.0 * g;

    // constraint rows, skipping coordinates with both bounds infinite
    std::vector<Vec> rows;
    std::vector<double> lo, hi;
    c.xi_rows.assign(static_cast<std::size_t>(M * n), -1);
    c.zeta_rows.assign(static_cast<std::size_t>(M * m), -1);
    const Vec &xl = inst.xi_set.lower();
    const Vec &xu = inst.xi_set.upper();
    for (int k = 0; k < M; ++k)
      for (int j = 0; j < n; ++j)
      {
        if (std::isinf(xl[j]) && std::isinf(xu[j]))
          continue;
        Vec r = Vec::Zero(nz);
        r[n + k * n + j] = 1.0;
        c.xi_rows[static_cast<std::size_t>(k * n + j)] = static_cast<int>(rows.size());
        rows.push_back(std::move(r));
        lo.push_back(xl[j]);
        hi.push_back(xu[j]);
      }
    const Vec &zl = inst.zeta_set.lower();
    const Vec &zu = inst.zeta_set.upper();
    for (int k = 0; k < M; ++k)
    {
      const Mat CS = inst.iv.window_measurement_maps[k] * c.state_maps[k];
      const Vec &y = inst.iv.window_measurements[k];
      for (int j = 0; j < m; ++j)
      {
        if (std::isinf(zl[j]) && std::isinf(zu[j]))
          continue;
        c.zeta_rows[static_cast<std::size_t>(k * m + j)] = static_cast<int>(rows.size());
        rows.push_back(CS.row(j).transpose());
        lo.push_back(std::isinf(zu[j]) ? -kInf : y[j] - zu[j]);
        hi.push_back(std::isinf(zl[j]) ? kInf : y[j] - zl[j]);
      }
    }
    const auto nr = static_cast<Eigen::Index>(rows.size());
    c.qp.D.resize(nr, nz);
    c.qp.lower.resize(nr);
    c.qp.upper.resize(nr);
    for (Eigen::Index r = 0; r < nr; ++r)
    {
      c.qp.D.row(r) = rows[static_cast<std::size_t>(r)].transpose();
      c.qp.lower[r] = lo[static_cast<std::size_t>(r)];
      c.qp.upper[r] = hi[static_cast<std::size_t>(r)];
    }
    return c;
  }

  PrimalSolution rollout(const MheInstance &inst, const Vec &x0, const std::vector<Vec> &xi)
  {
    const int M = inst.M();
    if (x0.size() != inst.n() || static_cast<int>(xi.size()) != M)
      throw DimensionMismatch("rollout: variable dimensions");
    PrimalSolution sol;
    sol.x0_hat = x0;
    sol.xi_hat = xi;
    sol.x_traj.reserve(M + 1);
    sol.zeta_hat.reserve(M);
    sol.x_traj.push_back(x0);
    for (int k = 0; k < M; ++k)
    {
      if (xi[k].size() != inst.n())
        throw DimensionMismatch("rollout: xi dimension");
      const Vec &x = sol.x_traj.back();
      sol.zeta_hat.push_back(inst.iv.window_measurements[k] - inst.iv.window_measurement_maps[k] * x);
      sol.x_traj.push_back(inst.iv.window_dynamics[k] * x + xi[k]);
    }
    sol.cost = mhe_cost(inst, sol);
    sol.feasible = is_feasible(inst, sol, kFeasTol);
    return sol;
  }

  double mhe_cost(const MheInstance &inst, const PrimalSolution &sol)
  {
    const int M = inst.M();
    if (sol.x0_hat.size() != inst.n() || static_cast<int>(sol.xi_hat.size()) != M ||
        static_cast<int>(sol.zeta_hat.size()) != M)
      throw DimensionMismatch("mhe_cost: solution dimensions");
    const Vec d = sol.x0_hat - inst.iv.prior_estimate;
    const Eigen::LLT<Mat> P(inst.iv.prior_weight);
    double cost = inst.arrival_discount() * d.dot(P.solve(d));
    for (int k = 0; k < M; ++k)
    {
      if (sol.xi_hat[k].size() != inst.n() || sol.zeta_hat[k].size() != inst.m())
        throw DimensionMismatch("mhe_cost: stage dimensions");
      cost += inst.stage_weight(k) * (weighted_sq_norm(sol.xi_hat[k], inst.Qinv) +
                                      weighted_sq_norm(sol.zeta_hat[k], inst.Rinv));
    }
    return std::max(cost, 0.0);
  }

  bool is_feasible(const MheInstance &inst, const PrimalSolution &sol, double tol)
  {
    for (const auto &xi : sol.xi_hat)
      if (!inst.xi_set.contains(xi, tol))
        return false;
    for (const auto &zeta : sol.zeta_hat)
      if (!inst.zeta_set.contains(zeta, tol))
        return false;
    return true;
  }

  namespace
  {

    PrimalSolution from_condensed(const MheInstance &inst, const CondensedMhe &c, const Vec &z)
    {
      const int n = inst.n();
      const int M = inst.M();
      std::vector<Vec> xi;
      xi.reserve(M);
      for (int k = 0; k < M; ++k)
        xi.push_back(z.segment(n + k * n, n));
      (void)c;
      return rollout(inst, z.head(n), xi);
    }

  } // namespace

  PrimalSolution solve_primal(const MheInstance &inst, const QpSettings &settings)
  {
    const CondensedMhe c = condense(inst);
    const QpResult r = solve_qp(c.qp, settings);
    if (r.status == QpStatus::PrimalInfeasible)
    {
      if (!phase1_feasible(inst).feasible)
        throw Infeasible("solve_primal: constraint boxes admit no window trajectory");
      throw MaxIterations("solve_primal: solver reported infeasibility on a feasible instance", r.x,
                          r.primal_residual, r.dual_residual);
    }
    if (r.status != QpStatus::Solved)
      throw MaxIterations("solve_primal: QP solver did not converge", r.x, r.primal_residual,
                          r.dual_residual);

    PrimalSolution sol = from_condensed(inst, c, r.x);
    sol.iterations = r.iterations;
    sol.duality_gap = r.duality_gap;

    const int m = inst.m();
    sol.mu.reserve(inst.M());
    for (int k = 0; k < inst.M(); ++k)
    {
      Vec mu = 2.0 * inst.stage_weight(k) * (inst.Rinv * sol.zeta_hat[k]);
      for (int j = 0; j < m; ++j)
      {
        const int row = c.zeta_rows[static_cast<std::size_t>(k * m + j)];
        if (row >= 0)
          mu[j] -= r.y[row];
      }
      sol.mu.push_back(std::move(mu));
    }
    return sol;
  }

  Phase1Result phase1_feasible(const MheInstance &inst)
  {
    const CondensedMhe c = condense(inst);
    const int n = inst.n();
    const int M = inst.M();
    const auto nz = c.qp.H.rows();
    const auto nr = c.qp.D.rows();

    Phase1Result out;
    if (nr == 0)
    {
      out.feasible = true;
      out.x0 = Vec::Zero(n);
      out.xi.assign(static_cast<std::size_t>(M), Vec::Zero(n));
      return out;
    }

    // min 1/2 |D z - w|^2 + tiny |z|^2  over (z, w) with w in the box
    QpProblem p;
    p.H = Mat::Zero(nz + nr, nz + nr);
    p.H.topLeftCorner(nz, nz) = c.qp.D.transpose() * c.qp.D;
    p.H.topLeftCorner(nz, nz).diagonal().array() += 1e-10;
    p.H.topRightCorner(nz, nr) = -c.qp.D.transpose();
    p.H.bottomLeftCorner(nr, nz) = -c.qp.D;
    p.H.bottomRightCorner(nr, nr).setIdentity();
    p.g = Vec::Zero(nz + nr);
    p.D = Mat::Zero(nr, nz + nr);
    p.D.rightCols(nr).setIdentity();
    p.lower = c.qp.lower;
    p.upper = c.qp.upper;

    QpSettings s;
    s.eps_abs = 1e-10;
    s.eps_rel = 1e-10;
    s.max_iter = 50000;
    const QpResult r = solve_qp(p, s);
    const Vec z = r.x.head(nz);
    out.x0 = z.head(n);
    for (int k = 0; k < M; ++k)
      out.xi.push_back(z.segment(n + k * n, n));
    out.feasible = constraint_violation(c.qp, z) <= kFeasTol;
    return out;
  }

  ArrivalCost riccati_update(const ArrivalCost &P, const Mat &A, const Mat &C, const Mat &Q, const Mat &R)
  {
    const auto n = A.rows();
    if (A.cols() != n || P.P.rows() != n || P.P.cols() != n || C.cols() != n || Q.rows() != n ||
        R.rows() != C.rows())
      throw DimensionMismatch("riccati_update: dimensions");
    const Mat S = symmetrize(R + C * P.P * C.transpose());
    const Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e14)
      throw SingularInnovation("riccati_update: innovation covariance is singular");
    const Mat APCt = A * P.P * C.transpose();
    const Mat next = Q + A * P.P * A.transpose() - APCt * S.ldlt().solve(APCt.transpose());
    return {symmetrize(next), P.t + 1};
  }

  KalmanState kalman_step(const Vec &x, const ArrivalCost &P, const Vec &y, const Mat &A, const Mat &C,
                          const Mat &Q, const Mat &R)
  {
    if (x.size() != A.rows() || y.size() != C.rows())
      throw DimensionMismatch("kalman_step: dimensions");
    ArrivalCost next = riccati_update(P, A, C, Q, R);
    const Mat S = symmetrize(R + C * P.P * C.transpose());
    const Vec innovation = y - C * x;
    const Vec xf = x + P.P * C.transpose() * S.ldlt().solve(innovation);
    return {A * xf, std::move(next)};
  }

  Mat stationary_riccati(const Mat &A, const Mat &C, const Mat &Q, const Mat &R, const Mat &P0,
                         double tol, int max_iter)
  {
    ArrivalCost P{P0, 0};
    for (int it = 0; it < max_iter; ++it)
    {
      ArrivalCost next = riccati_update(P, A, C, Q, R);
      const double step = (next.P - P.P).norm();
      P = std::move(next);
      if (step <= tol * (1.0 + P.P.norm()))
        return P.P;
      if (!P.P.allFinite())
        break;
    }
    throw Diverged("stationary_riccati: recursion did not converge");
  }

  std::vector<Mat> arrival_weights(const ProblemSetup &setup, int T)
  {
    if (T < 0)
      throw DomainError("arrival_weights: negative horizon");
    const auto &model = setup.model;
    std::vector<Mat> out;
    out.reserve(static_cast<std::size_t>(T) + 1);
    switch (setup.arrival)
    {
    case ArrivalPolicy::Fixed:
      out.assign(static_cast<std::size_t>(T) + 1, setup.P0);
      break;
    case ArrivalPolicy::Stationary:
    {
      if (!model.lti())
        throw DomainError("arrival_weights: stationary policy needs a time-invariant model");
      const Mat Ps = stationary_riccati(model.A(0), model.C(0), setup.noise.Q, setup.noise.R, setup.P0);
      out.assign(static_cast<std::size_t>(T) + 1, Ps);
      break;
    }
    case ArrivalPolicy::Riccati:
    {
      ArrivalCost P{setup.P0, 0};
      out.push_back(P.P);
      for (int t = 0; t < T; ++t)
      {
        P = riccati_update(P, model.A(t), model.C(t), setup.noise.Q, setup.noise.R);
        out.push_back(P.P);
      }
      break;
    }
    }
    return out;
  }

} // namespace pdmhe
