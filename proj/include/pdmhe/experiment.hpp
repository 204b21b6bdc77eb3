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

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pdmhe/certify.hpp"

namespace pdmhe
{

  struct RunTrace
  {
    std::vector<Vec> estimates; // t = 0..T
    std::vector<double> step_seconds;
    std::vector<std::string> provenance; // per estimate, "initial" at t = 0
    std::vector<double> gaps;
  };

  /// Prediction-form Kalman filter: estimate at t uses y_0 .. y_{t-1}.
  RunTrace run_kalman(const ProblemSetup &setup, const Trajectory &traj);
  /// Exact MHE at every step, cold-started.
  RunTrace run_mhe(const ProblemSetup &setup, const std::vector<Mat> &P, const Trajectory &traj);
  RunTrace run_pdmhe(const ProblemSetup &setup, const std::vector<Mat> &P, const Trajectory &traj,
                     const PrimalEstimator &primal, const DualEstimator &dual, double delta);

  struct McConfig
  {
    int runs = 200;
    int T = 100;
    std::uint64_t seed = 1;
    int threads = 1;
    /// ARMSE averages RMSE over t >= armse_start * T
    double armse_start = 0.5;
  };

  struct EstimatorSummary
  {
    std::string name;
    double armse = 0.0;
    double median_step_seconds = 0.0;
    double backup_fraction = 0.0;
    long steps = 0;
    std::vector<double> rmse;     // per t
    std::vector<double> mean_err; // mean |e_t| across runs
    std::vector<double> sd_err;
  };

  struct McResult
  {
    std::vector<EstimatorSummary> estimators;
    std::vector<Trajectory> trajectories;
    std::vector<std::vector<RunTrace>> traces; // [estimator][run]
    const EstimatorSummary &get(const std::string &name) const;
  };

  /// Trajectory of Monte-Carlo run r.
  Trajectory mc_trajectory(const ProblemSetup &setup, const McConfig &cfg, int r);

  /// KF and MHE always; PD-MHE when both estimators are given.
  McResult monte_carlo(const ProblemSetup &setup, const std::vector<Mat> &P, const McConfig &cfg,
                       const PrimalEstimator *primal = nullptr, const DualEstimator *dual = nullptr,
                       double delta = 0.0);

  /// estimator,armse,median_step_us,backup_fraction
  void write_summary_csv(std::ostream &out, const McResult &res);
  /// t,estimator,mean,lo95,hi95
  void write_plot_csv(std::ostream &out, const McResult &res);

} // namespace pdmhe
