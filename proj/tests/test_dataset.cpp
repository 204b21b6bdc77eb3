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

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "pdmhe/dataset.hpp"
#include "pdmhe/dual.hpp"
#include "pdmhe/errors.hpp"
#include "support.hpp"

using namespace pdmhe;

namespace
{

  struct Fixture
  {
    ProblemSetup setup = double_integrator_problem();
    std::vector<Mat> P = arrival_weights(setup, 100);
  };

} // namespace

TEST_SUITE("dataset")
{
  TEST_CASE("single primal row re-evaluates to its stored cost")
  {
    Fixture f;
    for (Encoding e : {Encoding::Residual, Encoding::Raw})
    {
      const Dataset ds = gen_dataset(f.setup, f.P, 100, 1, 5, DatasetKind::Primal, e);
      REQUIRE(ds.size() == 1);
      const SampledInstance smp = sample_instance(f.setup, f.P, 100, ds.seeds[0]);
      CHECK(smp.t == ds.times[0]);
      CHECK((encode(smp.inst.iv, e) - ds.inputs.col(0)).norm() == 0.0);
      const DecodedPrimal d =
          decode_primal(ds.targets.col(0), 2, smp.inst.M(), 10, e, smp.inst.iv.prior_estimate);
      const double V = mhe_cost(smp.inst, rollout(smp.inst, d.x0, d.xi));
      CHECK(std::abs(V - ds.values[0]) <= 1e-9 * (1.0 + ds.values[0]));
    }
  }

  TEST_CASE("fixed seed gives a bit-identical dataset, across thread counts")
  {
    Fixture f;
    const Dataset a = gen_dataset(f.setup, f.P, 100, 12, 9, DatasetKind::Dual, Encoding::Residual, 1);
    const Dataset b = gen_dataset(f.setup, f.P, 100, 12, 9, DatasetKind::Dual, Encoding::Residual, 3);
    CHECK((a.inputs.array() == b.inputs.array()).all());
    CHECK((a.targets.array() == b.targets.array()).all());
    CHECK(a.seeds == b.seeds);
    const Dataset c = gen_dataset(f.setup, f.P, 100, 12, 10, DatasetKind::Dual);
    CHECK((a.inputs - c.inputs).norm() > 0.0);
  }

  TEST_CASE("stored dual targets are stationary")
  {
    Fixture f;
    const Dataset ds = gen_dataset(f.setup, f.P, 100, 100, 3, DatasetKind::Dual);
    for (int i = 0; i < ds.size(); ++i)
    {
      const SampledInstance smp = sample_instance(f.setup, f.P, 100, ds.seeds[i]);
      const Vec mu = decode_dual(ds.targets.col(i), 1, smp.inst.M(), 10);
      const DualProblem dp(smp.inst);
      const auto ev = dp.evaluate(mu);
      CHECK(ev.gradient.norm() <= 1e-7 * (1.0 + std::abs(ev.value)));
      CHECK(ev.value == doctest::Approx(ds.values[i]).epsilon(1e-12));
    }
  }

  TEST_CASE("residual features determine the optimal offsets")
  {
    Fixture f;
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
    {
      const SampledInstance smp = sample_instance(f.setup, f.P, 100, seed);
      MheInstance shifted = smp.inst;
      Vec d(2);
      d << 3.0 - seed, 0.5 * seed;
      shifted.iv.prior_estimate += d;
      Vec phi = d;
      for (int k = 0; k < shifted.M(); ++k)
      {
        shifted.iv.window_measurements[k] += shifted.iv.window_measurement_maps[k] * phi;
        phi = shifted.iv.window_dynamics[k] * phi;
      }
      CHECK((encode(shifted.iv, Encoding::Residual) - encode(smp.inst.iv, Encoding::Residual)).norm() <= 1e-12);
      const Vec ta = primal_target(solve_primal(smp.inst), 10, Encoding::Residual, smp.inst.iv.prior_estimate);
      const Vec tb = primal_target(solve_primal(shifted), 10, Encoding::Residual, shifted.iv.prior_estimate);
      CHECK((ta - tb).norm() <= 1e-7);
    }
  }

  TEST_CASE("target layout with padding")
  {
    CHECK(primal_target_dim(2, 10) == 22);
    CHECK(dual_target_dim(1, 10) == 10);
    CHECK(encoded_dim(Encoding::Raw, 2, 1, 10, true) == 12);
    CHECK(encoded_dim(Encoding::Residual, 2, 1, 10, true) == 11);

    PrimalSolution s;
    s.x0_hat = Vec::Constant(2, 5.0);
    s.xi_hat = {Vec::Constant(2, 1.0), Vec::Constant(2, 2.0), Vec::Constant(2, 3.0)};
    const Vec prior = Vec::Constant(2, 1.0);
    const Vec t = primal_target(s, 10, Encoding::Residual, prior);
    CHECK(t.size() == 22);
    CHECK(t(0) == 4.0);
    CHECK(t.segment(2, 14).norm() == 0.0);
    CHECK(t(16) == 1.0);
    CHECK(t(21) == 3.0);
    const DecodedPrimal d = decode_primal(t, 2, 3, 10, Encoding::Residual, prior);
    CHECK((d.x0 - s.x0_hat).norm() == 0.0);
    CHECK((d.xi[2] - s.xi_hat[2]).norm() == 0.0);

    Vec mu(3);
    mu << 1.0, 2.0, 3.0;
    const Vec td = dual_target(mu, 1, 10);
    CHECK(td.head(7).norm() == 0.0);
    CHECK((decode_dual(td, 1, 3, 10) - mu).norm() == 0.0);

    // start-up windows carry the pad fraction
    Fixture f;
    const auto P = f.P;
    std::vector<Vec> ys(3, Vec::Constant(1, 0.5));
    std::vector<Vec> est(1, Vec::Zero(2));
    const Vec r = encode(build_info_vector(ys, est, P, f.setup.model, 3, 10), Encoding::Residual);
    CHECK(r(10) == doctest::Approx(0.7));
  }

  TEST_CASE("csv round trip")
  {
    Fixture f;
    const Dataset a = gen_dataset(f.setup, f.P, 100, 5, 2, DatasetKind::Primal);
    const auto path = std::filesystem::temp_directory_path() / "pdmhe_test_dataset.csv";
    {
      std::ofstream out(path);
      out << "# header line\n";
      write_dataset_csv(out, a);
    }
    const Dataset b = read_dataset_csv(path);
    std::filesystem::remove(path);
    CHECK(b.kind == DatasetKind::Primal);
    CHECK(b.encoding == Encoding::Residual);
    CHECK(b.seeds == a.seeds);
    CHECK((a.inputs - b.inputs).norm() == 0.0);
    CHECK((a.targets - b.targets).norm() == 0.0);
  }

  TEST_CASE("sample streams never share seeds")
  {
    std::set<std::uint64_t> seen;
    for (auto s : {SampleStream::TrainPrimal, SampleStream::TrainDual, SampleStream::Calibration,
                   SampleStream::Verification, SampleStream::Test, SampleStream::Online})
      for (std::uint64_t i = 0; i < 20000; ++i)
        seen.insert(stream_seed(1, s, i));
    CHECK(seen.size() == 6 * 20000);
  }

  TEST_CASE("exact prior chain solves only what the window needs")
  {
    Fixture f;
    const Trajectory tr = simulate_trajectory(f.setup.model, f.setup.noise, f.setup.x0, 40, 3);
    const auto est = exact_prior_chain(f.setup, f.P, tr.measurements, 37);
    CHECK(est[0].size() == 2);
    CHECK(est[7].size() == 2);
    CHECK(est[17].size() == 2);
    CHECK(est[27].size() == 2);
    CHECK(est[26].size() == 0);
    const MheInstance inst = instance_at(f.setup, f.P, tr.measurements, est, 37);
    CHECK(inst.M() == 10);
    CHECK((inst.iv.prior_estimate - est[27]).norm() == 0.0);
  }
}
