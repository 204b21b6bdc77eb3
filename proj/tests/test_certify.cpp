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

#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "pdmhe/certify.hpp"
#include "pdmhe/dual.hpp"
#include "pdmhe/errors.hpp"
#include "pdmhe/experiment.hpp"
#include "support.hpp"

using namespace pdmhe;
using namespace pdmhe::testing;

namespace
{

  long reference_sample_size(long double eps, long double beta)
  {
    return static_cast<long>(std::ceil(std::log(1.0L / beta) / -std::log1p(-eps)));
  }

  /// Exact solution plus a seeded perturbation that depends on the instance only.
  class NoisyPrimal final : public PrimalEstimator
  {
  public:
    explicit NoisyPrimal(double scale) : scale_(scale) {}
    PrimalGuess estimate(const MheInstance &inst, const Vec &) const override
    {
      const PrimalSolution s = solve_primal(inst);
      Rng rng(static_cast<std::uint64_t>(std::abs(inst.iv.window_measurements[0](0)) * 1e9));
      PrimalGuess g{s.x0_hat + random_vector(inst.n(), rng, scale_), s.xi_hat};
      for (Vec &x : g.xi)
        x += random_vector(inst.n(), rng, 0.1 * scale_);
      return g;
    }
    std::string name() const override { return "noisy"; }

  private:
    double scale_;
  };

  class NoisyDual final : public DualEstimator
  {
  public:
    explicit NoisyDual(double scale) : scale_(scale) {}
    Vec estimate(const MheInstance &inst, const Vec &) const override
    {
      const PrimalSolution s = solve_primal(inst);
      Rng rng(static_cast<std::uint64_t>(std::abs(inst.iv.window_measurements[0](0)) * 1e9) + 1);
      const Vec mu = solve_dual(inst, {}, flatten(s.mu)).mu;
      return mu + random_vector(static_cast<int>(mu.size()), rng, scale_);
    }
    std::string name() const override { return "noisy"; }

  private:
    double scale_;
  };

  struct Fixture
  {
    ProblemSetup setup = double_integrator_problem();
    std::vector<Mat> P = arrival_weights(setup, 100);
  };

} // namespace

TEST_SUITE("certify")
{
  TEST_CASE("sample-size formula")
  {
    CHECK(min_sample_size(0.5, 0.5) == 1);
    CHECK(min_sample_size(0.05, 1e-6) == 270);
    CHECK(min_sample_size(0.01, 1e-6) == 1375);
    CHECK(min_sample_size(0.025, 5e-7) == 574);
    for (double eps : {0.001, 0.01, 0.03, 0.1, 0.3})
      for (double beta : {1e-9, 1e-6, 1e-3, 0.1})
        CHECK(min_sample_size(eps, beta) == reference_sample_size(eps, beta));
    CHECK_THROWS_AS(min_sample_size(0.0, 0.1), DomainError);
    CHECK_THROWS_AS(min_sample_size(0.1, 1.0), DomainError);
    CHECK_THROWS_AS(min_sample_size(-0.1, 0.1), DomainError);
    int last = 1 << 30;
    for (double eps = 0.01; eps < 0.9; eps += 0.01)
    {
      const int n = min_sample_size(eps, 1e-4);
      CHECK(n <= last);
      last = n;
    }
    last = 0;
    for (double beta = 0.5; beta > 1e-12; beta *= 0.3)
    {
      const int n = min_sample_size(0.05, beta);
      CHECK(n >= last);
      last = n;
    }
  }

  TEST_CASE("violation budget")
  {
    CertBudget b;
    b.delta_p = 0.3;
    b.delta_d = 0.2;
    BudgetTotals t = violation_budget(b);
    CHECK(t.eps == doctest::Approx(0.05));
    CHECK(t.beta == doctest::Approx(1e-6));
    CHECK(t.delta == doctest::Approx(0.5));
    b.delta_gap = 0.1;
    CHECK(violation_budget(b).delta == doctest::Approx(0.6));
    CHECK(b.delta() == doctest::Approx(0.6));
    const CertBudget s = CertBudget::symmetric(0.05, 1e-6, 1.0, 2.0);
    CHECK(s.eps_p == 0.025);
    CHECK(s.beta_d == 5e-7);
    CHECK(s.delta() == 3.0);
    b.eps_p = 1.0;
    CHECK_THROWS_AS(b.validate(), DomainError);
  }

  TEST_CASE("gap check decisions")
  {
    CHECK(online_gap_check(1.3, 1.0, 0.5).decision == Decision::Accept);
    CHECK(online_gap_check(1.7, 1.0, 0.5).decision == Decision::Reject);
    CHECK(online_gap_check(1.7, 1.0, 0.5).gap == doctest::Approx(0.7));
    Fixture f;
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
    {
      const MheInstance inst = sample_instance(f.setup, f.P, 100, seed).inst;
      const PrimalSolution p = solve_primal(inst);
      const DualSolution d = solve_dual(inst, {}, flatten(p.mu));
      const GapCheck c = online_gap_check(inst, p, d.mu, 1e-6);
      CHECK(c.gap <= 1e-6);
      CHECK(c.decision == Decision::Accept);
    }
  }

  TEST_CASE("post projection always yields a feasible point")
  {
    Fixture f;
    Rng rng(4);
    int repaired = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed)
    {
      const MheInstance inst = sample_instance(f.setup, f.P, 100, seed).inst;
      PrimalGuess g{inst.iv.prior_estimate + random_vector(2, rng, 3.0), {}};
      for (int k = 0; k < inst.M(); ++k)
        g.xi.push_back(random_vector(2, rng, 0.2));
      const Projected p = post_project(inst, g);
      REQUIRE(p.ok);
      CHECK(is_feasible(inst, p.sol, 0.0));
      CHECK(p.pre_violation > 0.0);
      CHECK(p.sol.cost == doctest::Approx(mhe_cost(inst, p.sol)));
      repaired += p.shifted ? 1 : 0;
    }
    CHECK(repaired > 0);
  }

  TEST_CASE("verification: oracle passes, zero fails")
  {
    Fixture f;
    const int N = min_sample_size(0.025, 5e-7);
    const auto samples = prepare_samples(f.setup, f.P, 100, N, 1, SampleStream::Verification, 1);
    const CertBudget b = CertBudget::symmetric(0.05, 1e-6, 1e-6, 1e-6);

    const VerificationReport good = verify(OraclePrimalEstimator(), OracleDualEstimator(), samples, b);
    CHECK(good.passed());
    CHECK(good.n_samples == N);
    CHECK(good.worst_excess <= 1e-6);

    const VerificationReport bad = verify(ZeroPrimalEstimator(), ZeroDualEstimator(), samples, b);
    CHECK_FALSE(bad.passed());
    CHECK(bad.worst_excess > 1.0);

    const VerificationReport dual0 = verify_dual(ZeroDualEstimator(), samples, b);
    CHECK_FALSE(dual0.primal_checked);
    for (std::size_t i = 0; i < 20; ++i)
    {
      const double expected = samples[i].G_star - dual_function(Vec::Zero(samples[i].inst.M() * samples[i].inst.m()), samples[i].inst);
      CHECK(dual0.records[i].shortfall == doctest::Approx(expected).epsilon(1e-12));
    }

    const std::vector<VerificationSample> few(samples.begin(), samples.begin() + 100);
    CHECK_THROWS_AS(verify_primal(OraclePrimalEstimator(), few, b), InsufficientSamples);
    CHECK_THROWS_AS(verify_dual(OracleDualEstimator(), few, b), InsufficientSamples);

    std::ostringstream csv;
    good.write_csv(csv);
    CHECK(csv.str().rfind("sample_id,V_hat,V_star,excess,feasible,G_hat,G_star,shortfall\n", 0) == 0);
    const auto j = good.to_json();
    CHECK(j["passed"] == true);
    CHECK(j["primal"]["required_samples"] == N);
  }

  TEST_CASE("accepted gap checks are sound")
  {
    Fixture f;
    const auto samples = prepare_samples(f.setup, f.P, 100, 300, 7, SampleStream::Test, 1);
    const NoisyPrimal primal(0.05);
    const NoisyDual dual(0.05);
    int accepted = 0;
    for (const auto &s : samples)
    {
      const StepResult r = pd_mhe_step(s.inst, s.features, primal, dual, 0.5);
      if (r.provenance != Provenance::Learned)
        continue;
      ++accepted;
      CHECK(r.solution.cost - s.V_star <= 0.5 + 1e-9);
      CHECK(is_feasible(s.inst, r.solution, 0.0));
    }
    CHECK(accepted > 30);
    CHECK(accepted < 300);
  }

  TEST_CASE("threshold extremes")
  {
    Fixture f;
    const Trajectory tr = simulate_trajectory(f.setup.model, f.setup.noise, f.setup.x0, 30, 5);
    const ZeroPrimalEstimator zp;
    const ZeroDualEstimator zd;
    PdMheRunner open(f.setup, f.P, zp, zd, kInf);
    PdMheRunner closed(f.setup, f.P, zp, zd, 0.0);
    std::vector<Vec> exact{f.setup.x0_hat};
    for (int t = 1; t <= 30; ++t)
    {
      const std::vector<Vec> ys(tr.measurements.begin(), tr.measurements.begin() + t);
      CHECK(open.step(ys).provenance == Provenance::Learned);
      const StepResult c = closed.step(ys);
      CHECK(c.provenance == Provenance::Backup);
      const MheInstance inst = instance_at(f.setup, f.P, ys, exact, t);
      exact.push_back(solve_primal(inst).estimate());
      CHECK((c.estimate - exact.back()).norm() <= 1e-8);
    }
  }
}
