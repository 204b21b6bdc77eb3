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
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "pdmhe/certify.hpp"
#include "pdmhe/dataset.hpp"
#include "pdmhe/experiment.hpp"
#include "pdmhe/mlp.hpp"
#include "pdmhe/problem.hpp"

namespace pdmhe
{

  /**
   * @brief Everything one pipeline invocation needs.
   *
   * Unset delta_p / delta_d are calibrated from held-out samples as
   * calibration_factor times the largest observed excess or shortfall.
   */
  struct RunConfig
  {
    std::filesystem::path model_path;
    ProblemSetup setup;

    double eps = 0.05;
    double beta = 1e-6;
    double eps_primal_share = 0.5;
    double beta_primal_share = 0.5;
    std::optional<double> delta_p;
    std::optional<double> delta_d;
    double delta_gap = 0.0;
    double calibration_factor = 1.5;

    Encoding encoding = Encoding::Residual;
    int n_train_primal = 40000;
    int n_train_dual = 40000;
    int n_calibration = 1000;
    int n_test = 10000;
    std::optional<int> n_verification; // default: max of the two required sample sizes
    int retries = 1;

    TrainConfig train;
    McConfig mc;
    std::filesystem::path out_dir = "out";

    nlohmann::json source;

    /// eps/beta split with the given suboptimality levels.
    CertBudget budget(double dp, double dd) const;
    int verification_count() const;
    /// 16 hex digits identifying the effective configuration (output location excluded).
    std::string hash() const;
    void validate() const;
  };

  /// Relative model paths resolve against base_dir. Throws ConfigError.
  RunConfig run_config_from_json(const nlohmann::json &j, const std::filesystem::path &base_dir);
  RunConfig load_run_config(const std::filesystem::path &path);
  nlohmann::json to_json(const RunConfig &cfg);

  struct TrainedEstimator
  {
    MlpParams params;
    std::vector<EpochStats> curve;
    int samples = 0;
    int skipped = 0;
  };

  /// Dataset generation and training for one estimator; the dataset is returned through `data` when given.
  TrainedEstimator train_estimator(const RunConfig &cfg, const std::vector<Mat> &P, DatasetKind kind,
                                   int threads, Dataset *data = nullptr);

  struct Thresholds
  {
    double delta_p = 0.0;
    double delta_d = 0.0;
    Calibration calibration;
    bool calibrated = false;
  };

  /// Uses configured levels where set, calibrates the rest on the calibration stream.
  Thresholds resolve_thresholds(const RunConfig &cfg, const std::vector<Mat> &P, const PrimalEstimator &primal,
                                const DualEstimator &dual, int threads);

  /// epoch,train_loss,validation_loss
  void write_curve_csv(std::ostream &out, const std::vector<EpochStats> &curve);

} // namespace pdmhe
