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

#include "pdmhe/dual.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "pdmhe/errors.hpp"

namespace pdmhe
{

  namespace
  {

    BoxSet scale_box(const BoxSet &box, const Mat &cov, const char *name)
    {
      if (box.is_unbounded())
        return box;
      if (!is_diagonal(cov))
        throw DomainError(std::string("ScaledSets: non-diagonal ") + name +
                          " with a bounded box has no closed-form projection");
      return box.scaled(cov.diagonal().cwiseSqrt().cwiseInverse());
    }

  } // namespace

  ScaledSets ScaledSets::from_instance(const MheInstance &inst)
  {
    return {scale_box(inst.xi_set, inst.Q, "Q"), scale_box(inst.zeta_set, inst.R, "R")};
  }

  Vec project_half(const Vec &z, const BoxSet &box) { return box.project(0.5 * z); }

  std::vector<Vec> adjoint_lambda(const std::vector<Vec> &mu, const std::vector<Mat> &dynamics,
                                  const std::vector<Mat> &measurement_maps)
  {
    const auto M = mu.size();
    if (M == 0 || dynamics.size() != M || measurement_maps.size() != M)
      throw DimensionMismatch("adjoint_lambda: window lengths differ");
    const auto n = dynamics.front().rows();
    std::vector<Vec> lambda(M, Vec::Zero(n));
    for (std::size_t k = M - 1; k >= 1; --k)
    {
      if (mu[k].size() != measurement_maps[k].rows())
        throw DimensionMismatch("adjoint_lambda: mu dimension");
      lambda[k - 1] = dynamics[k].transpose() * lambda[k] + measurement_maps[k].transpose() * mu[k];
    }
    return lambda;
  }

  Vec flatten(const std::vector<Vec> &parts)
  {
    Eigen::Index total = 0;
    for (const auto &p : parts)
      total += p.size();
    Vec out(total);
    Eigen::Index at = 0;
    for (const auto &p : parts)
    {
      out.segment(at, p.size()) = p;
      at += p.size();
    }
    return out;
  }

  std::vector<Vec> split(const Vec &flat, int parts)
  {
    if (parts <= 0 || flat.size() % parts != 0)
      throw DimensionMismatch("split: length not divisible");
    const auto len = flat.size() / parts;
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(parts));
    for (int k = 0; k < parts; ++k)
      out.push_back(flat.segment(k * len, len));
    return out;
  }

  DualProblem::DualProblem(const MheInstance &inst)
      : inst_(inst), sets_(ScaledSets::from_instance(inst)), Qhalf_(sqrtm_spd(inst.Q)),
        Rhalf_(sqrtm_spd(inst.R))
  {
    inst_.validate();
    if (!(inst_.gamma > 0.0))
      throw DomainError("DualProblem: the dual needs gamma > 0");
  }

  DualProblem::Evaluation DualProblem::evaluate(const Vec &mu_flat, bool with_gradient) const
  {
    const int M = inst_.M();
    const int m = inst_.m();
    if (mu_flat.size() != M * m)
      throw DimensionMismatch("dual: mu has wrong length");
    const auto &iv = inst_.iv;
    const std::vector<Vec> mu = split(mu_flat, M);

    Evaluation ev;
    ev.lambda = adjoint_lambda(mu, iv.window_dynamics, iv.window_measurement_maps);

    const double wa = inst_.arrival_discount();
    const Vec s = iv.window_dynamics[0].transpose() * ev.lambda[0] + iv.window_measurement_maps[0].transpose() * mu[0];
    const Vec Ps = iv.prior_weight * s;
    double G = -s.dot(Ps) / (4.0 * wa) - s.dot(iv.prior_estimate);
    ev.x0 = iv.prior_estimate + Ps / (2.0 * wa);

    ev.xi.reserve(M);
    ev.zeta.reserve(M);
    for (int k = 0; k < M; ++k)
    {
      const double w = inst_.stage_weight(k);
      const Vec ql = Qhalf_ * ev.lambda[k];
      const Vec u_xi = project_half(ql / w, sets_.xi_tilde);
      const Vec rm = Rhalf_ * mu[k];
      const Vec u_zeta = project_half(rm / w, sets_.zeta_tilde);
      G += mu[k].dot(iv.window_measurements[k]);
      G += w * u_xi.squaredNorm() - ql.dot(u_xi);
      G += w * u_zeta.squaredNorm() - rm.dot(u_zeta);
      ev.xi.push_back(Qhalf_ * u_xi);
      ev.zeta.push_back(Rhalf_ * u_zeta);
    }
    ev.value = G;

    if (with_gradient)
    {
      ev.gradient.resize(M * m);
      Vec x = ev.x0;
      for (int k = 0; k < M; ++k)
      {
        ev.gradient.segment(k * m, m) = iv.window_measurements[k] - iv.window_measurement_maps[k] * x - ev.zeta[k];
        x = iv.window_dynamics[k] * x + ev.xi[k];
      }
    }
    return ev;
  }

  double dual_function(const Vec &mu, const MheInstance &inst) { return DualProblem(inst).value(mu); }

  Vec dual_gradient(const Vec &mu, const MheInstance &inst) { return DualProblem(inst).gradient(mu); }

  DualSolution solve_dual(const MheInstance &inst, const DualSettings &settings, const std::optional<Vec> &mu0)
  {
    const DualProblem dp(inst);
    Vec mu = mu0 ? *mu0 : Vec::Zero(dp.size());
    if (mu.size() != dp.size())
      throw DimensionMismatch("solve_dual: initial mu has wrong length");

    auto ev = dp.evaluate(mu);
    Vec prev_mu, prev_grad;
    int it = 0;
    for (;; ++it)
    {
      const double gnorm = ev.gradient.norm();
      if (settings.trace)
        *settings.trace << it << ',' << ev.value << ',' << gnorm << '\n';
      if (gnorm <= settings.tol * (1.0 + std::abs(ev.value)))
        break;
      if (it >= settings.max_iter)
        throw MaxIterations("solve_dual: gradient ascent did not converge", mu, gnorm, 0.0);

      double step = settings.initial_step;
      if (settings.bb_step && prev_mu.size() == mu.size())
      {
        const Vec ds = mu - prev_mu;
        const Vec dg = prev_grad - ev.gradient;
        const double curv = ds.dot(dg);
        if (curv > 1e-300)
          step = std::clamp(ds.squaredNorm() / curv, 1e-10, 1e10);
      }

      // backtracking on the ascent direction
      const double slope = ev.gradient.squaredNorm();
      Vec trial;
      DualProblem::Evaluation next;
      bool accepted = false;
      for (int bt = 0; bt < 200; ++bt)
      {
        trial = mu + step * ev.gradient;
        next = dp.evaluate(trial);
        const bool armijo = next.value >= ev.value + settings.armijo * step * slope;
        // near the optimum the increase drops below rounding in G; fall back to gradient decrease
        const bool flat = std::abs(next.value - ev.value) <= 1e-13 * (1.0 + std::abs(ev.value)) &&
                          next.gradient.norm() < gnorm;
        if (armijo || flat)
        {
          accepted = true;
          break;
        }
        step *= settings.shrink;
      }
      if (!accepted)
        throw MaxIterations("solve_dual: line search failed", mu, gnorm, 0.0);
      prev_mu = std::move(mu);
      prev_grad = std::move(ev.gradient);
      mu = std::move(trial);
      ev = std::move(next);
    }

    DualSolution out;
    out.mu = mu;
    out.lambda = ev.lambda;
    out.value = ev.value;
    out.gradient_norm = ev.gradient.norm();
    out.iterations = it;
    return out;
  }

  PrimalSolution recover_primal(const DualSolution &dual, const MheInstance &inst)
  {
    const DualProblem dp(inst);
    const auto ev = dp.evaluate(dual.mu, false);
    PrimalSolution sol = rollout(inst, ev.x0, ev.xi);
    sol.mu = split(dual.mu, inst.M());
    return sol;
  }

} // namespace pdmhe
