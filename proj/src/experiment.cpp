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

#include "pdmhe/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "pdmhe/dataset.hpp"
#include "pdmhe/errors.hpp"
#include "pdmhe/parallel.hpp"

namespace pdmhe
{

  namespace
  {
    using Clock = std::chrono::steady_clock;

    double seconds_since(Clock::time_point start)
    {
      return std::chrono::duration<double>(Clock::now() - start).count();
    }
  } // namespace

  RunTrace run_kalman(const ProblemSetup &setup, const Trajectory &traj)
  {
    RunTrace tr;
    tr.estimates.push_back(setup.x0_hat);
    tr.provenance.push_back("initial");
    KalmanState s{setup.x0_hat, {setup.P0, 0}};
    for (int t = 0; t < traj.length(); ++t)
    {
      const auto start = Clock::now();
      s = kalman_step(s.x, s.P, traj.measurements[t], setup.model.A(t), setup.model.C(t), setup.noise.Q,
                      setup.noise.R);
      tr.step_seconds.push_back(seconds_since(start));
      tr.estimates.push_back(s.x);
      tr.provenance.push_back("kf");
    }
    return tr;
  }

  RunTrace run_mhe(const ProblemSetup &setup, const std::vector<Mat> &P, const Trajectory &traj)
  {
    RunTrace tr;
    tr.estimates.push_back(setup.x0_hat);
    tr.provenance.push_back("initial");
    for (int t = 1; t <= traj.length(); ++t)
    {
      const auto start = Clock::now();
      const MheInstance inst = instance_at(setup, P, traj.measurements, tr.estimates, t);
      const PrimalSolution sol = solve_primal(inst);
      tr.step_seconds.push_back(seconds_since(start));
      tr.estimates.push_back(sol.estimate());
      tr.provenance.push_back("backup");
    }
    return tr;
  }

  RunTrace run_pdmhe(const ProblemSetup &setup, const std::vector<Mat> &P, const Trajectory &traj,
                     const PrimalEstimator &primal, const DualEstimator &dual, double delta)
  {
    RunTrace tr;
    tr.provenance.push_back("initial");
    PdMheRunner runner(setup, P, primal, dual, delta);
    for (int t = 1; t <= traj.length(); ++t)
    {
      const auto start = Clock::now();
      const StepResult r = runner.step(traj.measurements);
      tr.step_seconds.push_back(seconds_since(start));
      tr.provenance.push_back(to_string(r.provenance));
      tr.gaps.push_back(r.check.gap);
    }
    tr.estimates = runner.estimates();
    return tr;
  }

  const EstimatorSummary &McResult::get(const std::string &name) const
  {
    for (const auto &e : estimators)
      if (e.name == name)
        return e;
    throw Error("McResult: no estimator named " + name);
  }

  Trajectory mc_trajectory(const ProblemSetup &setup, const McConfig &cfg, int r)
  {
    return simulate_trajectory(setup.model, setup.noise, setup.x0, cfg.T,
                               stream_seed(cfg.seed, SampleStream::Online, static_cast<std::uint64_t>(r)));
  }

  namespace
  {

    EstimatorSummary summarize(const std::string &name, const std::vector<RunTrace> &runs,
                               const std::vector<Trajectory> &trajs, const McConfig &cfg)
    {
      EstimatorSummary s;
      s.name = name;
      const int T = cfg.T;
      const double N = static_cast<double>(runs.size());
      s.rmse.assign(static_cast<std::size_t>(T) + 1, 0.0);
      s.mean_err.assign(static_cast<std::size_t>(T) + 1, 0.0);
      s.sd_err.assign(static_cast<std::size_t>(T) + 1, 0.0);
      for (int t = 0; t <= T; ++t)
      {
        double sq = 0.0, sum = 0.0;
        for (std::size_t r = 0; r < runs.size(); ++r)
        {
          const double e = (runs[r].estimates[t] - trajs[r].states[t]).norm();
          sq += e * e;
          sum += e;
        }
        const auto ts = static_cast<std::size_t>(t);
        s.rmse[ts] = std::sqrt(sq / N);
        s.mean_err[ts] = sum / N;
        double var = 0.0;
        for (std::size_t r = 0; r < runs.size(); ++r)
        {
          const double d = (runs[r].estimates[t] - trajs[r].states[t]).norm() - s.mean_err[ts];
          var += d * d;
        }
        s.sd_err[ts] = runs.size() > 1 ? std::sqrt(var / (N - 1.0)) : 0.0;
      }
      const int t0 = static_cast<int>(std::ceil(cfg.armse_start * T));
      double acc = 0.0;
      for (int t = t0; t <= T; ++t)
        acc += s.rmse[static_cast<std::size_t>(t)];
      s.armse = acc / (T - t0 + 1);

      std::vector<double> times;
      long backups = 0;
      for (const auto &r : runs)
      {
        times.insert(times.end(), r.step_seconds.begin(), r.step_seconds.end());
        backups += std::count(r.provenance.begin() + 1, r.provenance.end(), std::string("backup"));
      }
      s.steps = static_cast<long>(times.size());
      if (!times.empty())
      {
        auto mid = times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2);
        std::nth_element(times.begin(), mid, times.end());
        s.median_step_seconds = *mid;
        s.backup_fraction = static_cast<double>(backups) / static_cast<double>(s.steps);
      }
      return s;
    }

  } // namespace

  McResult monte_carlo(const ProblemSetup &setup, const std::vector<Mat> &P, const McConfig &cfg,
                       const PrimalEstimator *primal, const DualEstimator *dual, double delta)
  {
    if (cfg.runs < 1 || cfg.T < 1)
      throw DomainError("monte_carlo: runs and T must be positive");
    if (static_cast<int>(P.size()) < cfg.T + 1)
      throw DimensionMismatch("monte_carlo: arrival weights shorter than T");
    const bool with_pd = primal && dual;
    const auto R = static_cast<std::size_t>(cfg.runs);

    McResult res;
    res.trajectories.resize(R);
    std::vector<RunTrace> kf(R), mhe(R), pd(with_pd ? R : 0);
    parallel_for(R, cfg.threads, [&](std::size_t r) {
      res.trajectories[r] = mc_trajectory(setup, cfg, static_cast<int>(r));
      kf[r] = run_kalman(setup, res.trajectories[r]);
      mhe[r] = run_mhe(setup, P, res.trajectories[r]);
      if (with_pd)
        pd[r] = run_pdmhe(setup, P, res.trajectories[r], *primal, *dual, delta);
    });
    res.estimators.push_back(summarize("KF", kf, res.trajectories, cfg));
    res.estimators.push_back(summarize("MHE", mhe, res.trajectories, cfg));
    res.traces.push_back(std::move(kf));
    res.traces.push_back(std::move(mhe));
    if (with_pd)
    {
      res.estimators.push_back(summarize("PD-MHE", pd, res.trajectories, cfg));
      res.traces.push_back(std::move(pd));
    }
    return res;
  }

  void write_summary_csv(std::ostream &out, const McResult &res)
  {
    out << "estimator,armse,median_step_us,backup_fraction\n";
    out.precision(10);
    for (const auto &e : res.estimators)
      out << e.name << ',' << e.armse << ',' << e.median_step_seconds * 1e6 << ',' << e.backup_fraction << '\n';
  }

  void write_plot_csv(std::ostream &out, const McResult &res)
  {
    out << "t,estimator,mean,lo95,hi95\n";
    out.precision(10);
    for (const auto &e : res.estimators)
    {
      const double N = res.trajectories.empty() ? 1.0 : static_cast<double>(res.trajectories.size());
      for (std::size_t t = 0; t < e.mean_err.size(); ++t)
      {
        const double half = 1.96 * e.sd_err[t] / std::sqrt(N);
        out << t << ',' << e.name << ',' << e.mean_err[t] << ',' << e.mean_err[t] - half << ','
            << e.mean_err[t] + half << '\n';
      }
    }
  }

} // namespace pdmhe
