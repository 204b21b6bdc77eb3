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

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "pdmhe/mhe.hpp"

namespace pdmhe::testing
{

  inline constexpr double kInf = std::numeric_limits<double>::infinity();

  inline Mat random_matrix(int r, int c, Rng &rng, double scale = 1.0)
  {
    std::normal_distribution<double> nd(0.0, scale);
    Mat X(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j)
        X(i, j) = nd(rng);
    return X;
  }

  inline Vec random_vector(int n, Rng &rng, double scale = 1.0) { return random_matrix(n, 1, rng, scale).col(0); }

  inline Mat random_spd(int n, Rng &rng, double floor = 0.2)
  {
    const Mat X = random_matrix(n, n, rng);
    return X * X.transpose() / n + floor * Mat::Identity(n, n);
  }

  inline Mat random_diag_spd(int n, Rng &rng, double lo = 0.05, double hi = 1.5)
  {
    std::uniform_real_distribution<double> u(lo, hi);
    Mat D = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
      D(i, i) = u(rng);
    return D;
  }

  struct InstanceOptions
  {
    int n = 2;
    int m = 1;
    int M = 3;
    double gamma = 0.8;
    bool constrained = true; // xi >= 0, zeta <= 0
    bool diagonal = true;
  };

  /// Random window with measurements generated by the system itself, so the true noise is feasible.
  inline MheInstance random_instance(std::uint64_t seed, const InstanceOptions &o = {})
  {
    Rng rng(seed);
    const int n = o.n, m = o.m, M = o.M;
    InfoVector iv;
    const Mat A = Mat::Identity(n, n) + random_matrix(n, n, rng, 0.2);
    const Mat C = random_matrix(m, n, rng);
    NoiseSpec noise;
    noise.Q = o.diagonal ? random_diag_spd(n, rng) : random_spd(n, rng);
    noise.R = o.diagonal ? random_diag_spd(m, rng) : random_spd(m, rng);
    noise.xi_set = o.constrained ? BoxSet::nonnegative(n) : BoxSet::unbounded(n);
    noise.zeta_set = o.constrained ? BoxSet::nonpositive(m) : BoxSet::unbounded(m);
    Vec x = random_vector(n, rng);
    iv.prior_estimate = x + random_vector(n, rng, 0.5);
    iv.prior_weight = random_spd(n, rng);
    for (int k = 0; k < M; ++k)
    {
      Vec xi = random_vector(n, rng, 0.3);
      Vec zeta = random_vector(m, rng, 0.5);
      if (o.constrained)
      {
        xi = xi.cwiseAbs();
        zeta = -zeta.cwiseAbs();
      }
      iv.window_dynamics.push_back(A);
      iv.window_measurement_maps.push_back(C);
      iv.window_measurements.push_back(C * x + zeta);
      x = A * x + xi;
    }
    iv.t = M;
    iv.M = M;
    iv.horizon = M;
    iv.lti = true;
    return make_instance(iv, o.gamma, noise);
  }

  /// Cost written out term by term from the definition, independent of the library's evaluator.
  inline double naive_cost(const MheInstance &inst, const Vec &x0, const std::vector<Vec> &xi)
  {
    const int M = inst.M();
    double arrival = 0.0;
    {
      const Vec d = x0 - inst.iv.prior_estimate;
      const Mat Pinv = inst.iv.prior_weight.inverse();
      for (int i = 0; i < d.size(); ++i)
        for (int j = 0; j < d.size(); ++j)
          arrival += d(i) * Pinv(i, j) * d(j);
    }
    double total = std::pow(inst.gamma, M) * arrival;
    Vec x = x0;
    const Mat Qi = inst.Q.inverse();
    const Mat Ri = inst.R.inverse();
    for (int k = 0; k < M; ++k)
    {
      const Vec zeta = inst.iv.window_measurements[k] - inst.iv.window_measurement_maps[k] * x;
      double sq = 0.0, sz = 0.0;
      for (int i = 0; i < xi[k].size(); ++i)
        for (int j = 0; j < xi[k].size(); ++j)
          sq += xi[k](i) * Qi(i, j) * xi[k](j);
      for (int i = 0; i < zeta.size(); ++i)
        for (int j = 0; j < zeta.size(); ++j)
          sz += zeta(i) * Ri(i, j) * zeta(j);
      total += std::pow(inst.gamma, M - 1 - k) * (sq + sz);
      x = inst.iv.window_dynamics[k] * x + xi[k];
    }
    return total;
  }

  /// Brute-force argmin of |x - c|^2 over a box by repeated grid refinement.
  inline Vec grid_projection(const Vec &c, const Vec &lower, const Vec &upper)
  {
    const int d = static_cast<int>(c.size());
    Vec lo(d), hi(d);
    for (int i = 0; i < d; ++i)
    {
      const double w = 10.0 + std::abs(c(i));
      lo(i) = std::max(lower(i), -w - std::abs(c(i)));
      hi(i) = std::min(upper(i), w + std::abs(c(i)));
    }
    Vec best = lo;
    const int G = 41;
    for (int round = 0; round < 16; ++round)
    {
      double best_f = kInf;
      std::vector<int> idx(d, 0);
      while (true)
      {
        Vec x(d);
        for (int i = 0; i < d; ++i)
          x(i) = lo(i) + (hi(i) - lo(i)) * idx[i] / (G - 1);
        // f(x) - f(best) = (x - best)'(x + best - 2c), free of the cancellation in f itself
        const double f = best_f == kInf ? 0.0 : (x - best).dot(x + best - 2.0 * c);
        if (best_f == kInf || f < 0.0)
        {
          best_f = 0.0;
          best = x;
        }
        int k = 0;
        while (k < d && ++idx[k] == G)
          idx[k++] = 0;
        if (k == d)
          break;
      }
      for (int i = 0; i < d; ++i)
      {
        const double half = (hi(i) - lo(i)) / (G - 1) * 2.0;
        lo(i) = std::max(lower(i), best(i) - half);
        hi(i) = std::min(upper(i), best(i) + half);
      }
    }
    return best;
  }

} // namespace pdmhe::testing
