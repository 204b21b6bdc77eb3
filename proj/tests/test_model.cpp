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
#include <set>

#include "doctest.h"
#include "pdmhe/errors.hpp"
#include "pdmhe/model.hpp"
#include "pdmhe/problem.hpp"
#include "support.hpp"

using namespace pdmhe;
using pdmhe::testing::kInf;

TEST_SUITE("model")
{
  TEST_CASE("box construction and projection")
  {
    BoxSet b(Vec::Constant(2, -1.0), Vec::Constant(2, 2.0));
    CHECK(b.contains(Vec::Zero(2)));
    CHECK_FALSE(b.contains(Vec::Constant(2, 3.0)));
    CHECK(b.project(Vec::Constant(2, 5.0)).isApprox(Vec::Constant(2, 2.0)));
    CHECK(b.violation(Vec::Constant(2, 2.5)) == doctest::Approx(0.5));
    CHECK_THROWS_AS(BoxSet(Vec::Constant(1, 1.0), Vec::Constant(1, 0.0)), DomainError);
    CHECK_THROWS_AS(BoxSet(Vec::Zero(2), Vec::Zero(1)), DimensionMismatch);
    CHECK(BoxSet::unbounded(3).is_unbounded());
    const BoxSet s = BoxSet::nonnegative(2).scaled(Vec::Constant(2, 2.0));
    CHECK(s.lower()(0) == 0.0);
    CHECK(std::isinf(s.upper()(1)));
  }

  TEST_CASE("mix_seed separates indices")
  {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i)
      seen.insert(mix_seed(42, i));
    CHECK(seen.size() == 1000);
    CHECK(mix_seed(1, 2) == mix_seed(1, 2));
  }

  TEST_CASE("unbounded box gives the plain Gaussian draw")
  {
    Mat cov(2, 2);
    cov << 1.0, 0.3, 0.3, 0.5;
    TruncatedGaussianSampler s(cov, BoxSet::unbounded(2));
    const Mat L = cov.llt().matrixL();
    Rng a(7), b(7);
    for (int k = 0; k < 20; ++k)
    {
      const Vec v = s(a);
      std::normal_distribution<double> nd(0.0, 1.0);
      Vec z(2);
      z(0) = nd(b);
      z(1) = nd(b);
      CHECK((v - L * z).norm() <= 1e-14);
    }
  }

  TEST_CASE("orthant truncation holds for every draw")
  {
    Rng rng(3);
    const Mat Q = 0.01 * Mat::Identity(2, 2);
    for (int k = 0; k < 2000; ++k)
    {
      const Vec v = sample_truncated_gaussian(Q, BoxSet::nonnegative(2), rng);
      CHECK((v.array() >= 0.0).all());
    }
  }

  TEST_CASE("half-normal mean")
  {
    // E[z | z <= 0] = -sqrt(2/pi) for a standard normal
    Rng rng(11);
    TruncatedGaussianSampler s(Mat::Identity(1, 1), BoxSet::nonpositive(1));
    double sum = 0.0;
    const int N = 100000;
    for (int k = 0; k < N; ++k)
      sum += s(rng)(0);
    CHECK(std::abs(sum / N + std::sqrt(2.0 / M_PI)) <= 0.02);
  }

  TEST_CASE("empirical covariance of unconstrained draws")
  {
    Mat cov(2, 2);
    cov << 2.0, -0.4, -0.4, 0.7;
    TruncatedGaussianSampler s(cov, BoxSet::unbounded(2));
    Rng rng(5);
    Mat acc = Mat::Zero(2, 2);
    const int N = 100000;
    for (int k = 0; k < N; ++k)
    {
      const Vec v = s(rng);
      acc += v * v.transpose();
    }
    acc /= N;
    CHECK((acc - cov).norm() / cov.norm() <= 0.05);
  }

  TEST_CASE("near-empty box raises AcceptanceTooLow")
  {
    Rng rng(1);
    TruncatedGaussianSampler s(Mat::Identity(1, 1), BoxSet(Vec::Constant(1, 12.0), Vec::Constant(1, kInf)));
    CHECK_THROWS_AS(s(rng), AcceptanceTooLow);
  }

  TEST_CASE("noise-free rollout")
  {
    const ProblemSetup di = double_integrator_problem();
    NoiseSpec noise = di.noise;
    noise.xi_set = BoxSet::point(Vec::Zero(2));
    noise.zeta_set = BoxSet::point(Vec::Zero(1));
    Vec x0(2);
    x0 << 1.0, -0.5;
    const Trajectory tr = simulate_trajectory(di.model, noise, x0, 30, 9);
    Vec x = x0;
    for (int t = 0; t < 30; ++t)
    {
      CHECK((tr.states[t] - x).norm() <= 1e-12);
      CHECK((tr.measurements[t] - di.model.C(t) * x).norm() <= 1e-12);
      x = di.model.A(t) * x;
    }
  }

  TEST_CASE("simulation: determinism, constraints and dynamics residual")
  {
    const ProblemSetup di = double_integrator_problem();
    const Trajectory a = simulate_trajectory(di.model, di.noise, di.x0, 100, 123);
    const Trajectory b = simulate_trajectory(di.model, di.noise, di.x0, 100, 123);
    const Trajectory c = simulate_trajectory(di.model, di.noise, di.x0, 100, 124);
    CHECK(a.states.size() == 101);
    CHECK(a.measurements.size() == 100);
    bool same = true, differ = false;
    for (int t = 0; t <= 100; ++t)
    {
      same = same && (a.states[t].array() == b.states[t].array()).all();
      differ = differ || (a.states[t] - c.states[t]).norm() > 0.0;
    }
    CHECK(same);
    CHECK(differ);
    for (int t = 0; t < 100; ++t)
    {
      CHECK((a.process_noise[t].array() >= 0.0).all());
      CHECK((a.measurement_noise[t].array() <= 0.0).all());
      const double res = (a.states[t + 1] - di.model.A(t) * a.states[t] - a.process_noise[t]).cwiseAbs().maxCoeff();
      CHECK(res <= 1e-10 * (1.0 + a.states[t + 1].cwiseAbs().maxCoeff()));
      CHECK((a.measurements[t] - di.model.C(t) * a.states[t] - a.measurement_noise[t]).norm() <= 1e-10);
    }
  }

  TEST_CASE("information vector windows")
  {
    const ProblemSetup di = double_integrator_problem();
    const Trajectory tr = simulate_trajectory(di.model, di.noise, di.x0, 40, 1);
    std::vector<Vec> est(41, Vec::Zero(2));
    std::vector<Mat> W(41, Mat::Identity(2, 2));
    for (int t = 0; t <= 40; ++t)
      est[t] = Vec::Constant(2, t);

    const InfoVector a = build_info_vector(tr.measurements, est, W, di.model, 3, 10);
    CHECK(a.M == 3);
    CHECK(a.prior_estimate(0) == 0.0);
    CHECK(a.window_measurements.size() == 3);
    CHECK(a.window_measurements[0](0) == tr.measurements[0](0));

    const InfoVector b = build_info_vector(tr.measurements, est, W, di.model, 25, 10);
    CHECK(b.M == 10);
    CHECK(b.prior_estimate(0) == 15.0);
    CHECK(b.window_measurements.front()(0) == tr.measurements[15](0));
    CHECK(b.window_measurements.back()(0) == tr.measurements[24](0));
    for (const Mat &A : b.window_dynamics)
      CHECK((A - di.model.A(0)).norm() == 0.0);

    int last = 0;
    for (int t = 1; t <= 15; ++t)
    {
      const int M = build_info_vector(tr.measurements, est, W, di.model, t, 10).M;
      CHECK(M == std::min(t, 10));
      CHECK(M >= last);
      last = M;
    }
    CHECK_THROWS_AS(build_info_vector(tr.measurements, est, W, di.model, 0, 10), WindowUnderflow);
  }

  TEST_CASE("feature encoding")
  {
    const ProblemSetup di = double_integrator_problem();
    CHECK(feature_dim(2, 1, 10, true) == 12);

    std::vector<Vec> zeros(10, Vec::Zero(1));
    std::vector<Vec> est(1, Vec::Zero(2));
    std::vector<Mat> W(1, Mat::Identity(2, 2));
    const Vec f0 = encode_features(build_info_vector(zeros, est, W, di.model, 10, 10));
    CHECK(f0.size() == 12);
    CHECK(f0.norm() == 0.0);

    std::vector<Vec> ys;
    for (int k = 0; k < 4; ++k)
      ys.push_back(Vec::Constant(1, 10.0 + k));
    const Vec f = encode_features(build_info_vector(ys, est, W, di.model, 4, 10));
    for (int i = 0; i < 6; ++i)
      CHECK(f(i) == 10.0);
    for (int i = 0; i < 4; ++i)
      CHECK(f(6 + i) == 10.0 + i);
    const Vec g = encode_features(build_info_vector(ys, est, W, di.model, 4, 10));
    CHECK((f.array() == g.array()).all());
  }
}
