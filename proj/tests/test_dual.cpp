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

#include <random>

#include "doctest.h"
#include "pdmhe/dataset.hpp"
#include "pdmhe/dual.hpp"
#include "pdmhe/errors.hpp"
#include "support.hpp"

using namespace pdmhe;
using namespace pdmhe::testing;

namespace
{

  Vec central_difference(const DualProblem &dp, const Vec &mu, double h)
  {
    Vec g(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i)
    {
      Vec a = mu, b = mu;
      a(i) += h;
      b(i) -= h;
      g(i) = (dp.value(a) - dp.value(b)) / (2.0 * h);
    }
    return g;
  }

  BoxSet random_box(int d, Rng &rng)
  {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_int_distribution<int> kind(0, 3);
    Vec lo(d), hi(d);
    for (int i = 0; i < d; ++i)
    {
      const double a = u(rng), b = u(rng);
      lo(i) = std::min(a, b);
      hi(i) = std::max(a, b);
      const int k = kind(rng);
      if (k == 1)
        lo(i) = -kInf;
      else if (k == 2)
        hi(i) = kInf;
    }
    return BoxSet(lo, hi);
  }

} // namespace

TEST_SUITE("dual")
{
  TEST_CASE("half projection examples")
  {
    const Vec z = Vec::Constant(2, 0.4);
    CHECK((project_half(z, BoxSet::nonnegative(2)) - 0.5 * z).norm() == 0.0);

    Vec w(2);
    w << -2.0, 4.0;
    const Vec p = project_half(w, BoxSet::nonnegative(2));
    const Vec brute = grid_projection(0.5 * w, Vec::Zero(2), Vec::Constant(2, kInf));
    CHECK(p(0) == 0.0);
    CHECK(p(1) == 2.0);
    CHECK((p - brute).norm() <= 1e-9);

    CHECK(project_half(Vec::Constant(1, 3.0), BoxSet::nonpositive(1))(0) == 0.0);
    CHECK(project_half(Vec::Constant(1, -3.0), BoxSet::nonpositive(1))(0) == -1.5);
  }

  TEST_CASE("half projection matches brute-force grid minimization")
  {
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial)
    {
      const int d = 1 + trial % 3;
      const BoxSet box = random_box(d, rng);
      const Vec z = random_vector(d, rng, 3.0);
      const Vec brute = grid_projection(0.5 * z, box.lower(), box.upper());
      CHECK((project_half(z, box) - brute).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }

  TEST_CASE("half projection is 1/2-Lipschitz")
  {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial)
    {
      const BoxSet box = random_box(3, rng);
      const Vec a = random_vector(3, rng, 3.0), b = random_vector(3, rng, 3.0);
      CHECK((project_half(a, box) - project_half(b, box)).norm() <= 0.5 * (a - b).norm() + 1e-15);
    }
  }

  TEST_CASE("adjoint recursion")
  {
    const std::vector<Mat> I2(2, Mat::Identity(2, 2));
    Vec v(2);
    v << 1.5, -2.0;
    const auto lam = adjoint_lambda({Vec::Zero(2), v}, I2, I2);
    CHECK((lam[0] - v).norm() == 0.0);
    CHECK(lam[1].norm() == 0.0);

    Rng rng(7);
    const int M = 6;
    std::vector<Mat> A, C;
    std::vector<Vec> mu, mu2;
    for (int k = 0; k < M; ++k)
    {
      A.push_back(random_matrix(3, 3, rng));
      C.push_back(random_matrix(2, 3, rng));
      mu.push_back(random_vector(2, rng));
      mu2.push_back(random_vector(2, rng));
    }
    const auto zero = adjoint_lambda(std::vector<Vec>(M, Vec::Zero(2)), A, C);
    for (const Vec &l : zero)
      CHECK(l.norm() == 0.0);
    const auto l1 = adjoint_lambda(mu, A, C);
    CHECK(l1[M - 1].norm() == 0.0);
    for (int k = 1; k < M; ++k)
    {
      const Vec r = l1[k - 1] - A[k].transpose() * l1[k] - C[k].transpose() * mu[k];
      CHECK(r.cwiseAbs().maxCoeff() <= 1e-12);
    }
    std::vector<Vec> comb;
    for (int k = 0; k < M; ++k)
      comb.push_back(2.0 * mu[k] - 0.5 * mu2[k]);
    const auto l2 = adjoint_lambda(mu2, A, C);
    const auto lc = adjoint_lambda(comb, A, C);
    for (int k = 0; k < M; ++k)
      CHECK((lc[k] - (2.0 * l1[k] - 0.5 * l2[k])).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK_THROWS_AS(adjoint_lambda(mu, A, std::vector<Mat>(M - 1, C[0])), DimensionMismatch);
  }

  TEST_CASE("dual function at zero multipliers")
  {
    const MheInstance inst = random_instance(3);
    CHECK(dual_function(Vec::Zero(3), inst) == doctest::Approx(0.0));

    MheInstance centered = random_instance(4);
    centered.iv.prior_estimate.setZero();
    for (Vec &y : centered.iv.window_measurements)
      y.setZero();
    CHECK(dual_gradient(Vec::Zero(3), centered).norm() <= 1e-14);
  }

  TEST_CASE("weak duality against feasible primal points")
  {
    const ProblemSetup di = double_integrator_problem();
    const auto P = arrival_weights(di, 100);
    Rng rng(9);
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
    {
      const SampledInstance smp = sample_instance(di, P, 100, seed);
      const int t0 = smp.t - smp.inst.M();
      std::vector<Vec> xi(smp.traj.process_noise.begin() + t0, smp.traj.process_noise.begin() + smp.t);
      const double truth = mhe_cost(smp.inst, rollout(smp.inst, smp.traj.states[t0], xi));
      for (int k = 0; k < 10; ++k)
      {
        const Vec mu = random_vector(smp.inst.M(), rng, 2.0);
        CHECK(dual_function(mu, smp.inst) <= truth + 1e-9 * (1.0 + truth));
      }
    }
    for (int trial = 0; trial < 20; ++trial)
    {
      InstanceOptions o;
      o.n = 3;
      o.m = 2;
      o.M = 4;
      const MheInstance inst = random_instance(500 + trial, o);
      const PrimalSolution s = solve_primal(inst);
      for (int k = 0; k < 10; ++k)
        CHECK(dual_function(random_vector(8, rng, 3.0), inst) <= s.cost + 1e-9 * (1.0 + s.cost));
    }
  }

  TEST_CASE("gradient matches central differences")
  {
    Rng rng(11);
    for (int trial = 0; trial < 30; ++trial)
    {
      InstanceOptions o;
      o.n = 2 + trial % 2;
      o.m = 1 + trial % 2;
      o.M = 3 + trial % 4;
      const MheInstance inst = random_instance(600 + trial, o);
      const DualProblem dp(inst);
      const Vec mu = random_vector(dp.size(), rng, 2.0);
      const Vec g = dp.gradient(mu);
      const Vec fd = central_difference(dp, mu, 1e-5);
      CHECK((g - fd).norm() <= std::max(1e-6, 1e-4 * g.norm()));
    }
  }

  TEST_CASE("midpoint concavity")
  {
    Rng rng(13);
    const MheInstance inst = random_instance(14, {3, 2, 5});
    for (int trial = 0; trial < 100; ++trial)
    {
      const Vec a = random_vector(10, rng, 3.0), b = random_vector(10, rng, 3.0);
      const double ga = dual_function(a, inst), gb = dual_function(b, inst);
      CHECK(dual_function(0.5 * (a + b), inst) >= 0.5 * (ga + gb) - 1e-10 * (1.0 + std::abs(ga) + std::abs(gb)));
    }
  }

  TEST_CASE("strong duality on sampled instances")
  {
    const ProblemSetup di = double_integrator_problem();
    const auto P = arrival_weights(di, 100);
    for (std::uint64_t seed = 100; seed < 120; ++seed)
    {
      const MheInstance inst = sample_instance(di, P, 100, seed).inst;
      const double p = solve_primal(inst).cost;
      const DualSolution d = solve_dual(inst);
      CHECK(std::abs(p - d.value) <= 1e-6 * (1.0 + std::abs(p)));
      CHECK(d.lambda.back().norm() == 0.0);
      CHECK(d.gradient_norm <= 1e-7 * (1.0 + std::abs(d.value)));
    }
  }

  TEST_CASE("unconstrained dual reproduces the unconstrained optimum")
  {
    for (int trial = 0; trial < 10; ++trial)
    {
      InstanceOptions o;
      o.constrained = false;
      o.diagonal = trial % 2 == 0;
      o.M = 2 + trial % 4;
      const MheInstance inst = random_instance(700 + trial, o);
      const PrimalSolution p = solve_primal(inst);
      const DualSolution d = solve_dual(inst);
      CHECK(std::abs(p.cost - d.value) <= 1e-8 * (1.0 + p.cost));
      const PrimalSolution r = recover_primal(d, inst);
      CHECK((r.estimate() - p.estimate()).norm() <= 1e-5);
    }
  }

  TEST_CASE("dual solve started at the optimum stops at once")
  {
    const MheInstance inst = random_instance(21, {2, 1, 6});
    const DualSolution d = solve_dual(inst);
    const DualSolution again = solve_dual(inst, {}, d.mu);
    CHECK(again.iterations <= 2);
    CHECK(again.value == doctest::Approx(d.value).epsilon(1e-12));
  }

  TEST_CASE("primal recovery")
  {
    const MheInstance inst = random_instance(22);
    DualSolution zero;
    zero.mu = Vec::Zero(3);
    zero.lambda.assign(3, Vec::Zero(2));
    const PrimalSolution r0 = recover_primal(zero, inst);
    CHECK((r0.x0_hat - inst.iv.prior_estimate).norm() <= 1e-14);
    for (const Vec &x : r0.xi_hat)
      CHECK(x.norm() == 0.0);

    const ProblemSetup di = double_integrator_problem();
    const auto P = arrival_weights(di, 100);
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
    {
      const MheInstance s = sample_instance(di, P, 100, seed).inst;
      const PrimalSolution p = solve_primal(s);
      const PrimalSolution r = recover_primal(solve_dual(s), s);
      for (std::size_t k = 0; k < p.x_traj.size(); ++k)
        CHECK((r.x_traj[k] - p.x_traj[k]).norm() <= 1e-5);
    }
  }

  TEST_CASE("domain errors")
  {
    InstanceOptions o;
    o.gamma = 0.0;
    CHECK_THROWS_AS(DualProblem(random_instance(1, o)), DomainError);
    o = {};
    o.diagonal = false;
    CHECK_THROWS_AS(DualProblem(random_instance(1, o)), DomainError);
    o.constrained = false;
    CHECK_NOTHROW(DualProblem(random_instance(1, o)));
  }
}
