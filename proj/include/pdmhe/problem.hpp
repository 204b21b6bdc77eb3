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

#include <filesystem>
#include <string>

#include "json.hpp"
#include "pdmhe/model.hpp"

namespace pdmhe
{

  /// How the arrival weight P_{t-M} evolves over time.
  enum class ArrivalPolicy
  {
    Riccati,    ///< P_{k+1} = riccati_update(P_k), starting at P0
    Stationary, ///< fixed point of the Riccati recursion (LTI only)
    Fixed,      ///< P0 at every step
  };

  /// A complete estimation setup: system, noise, horizon, discount and priors.
  struct ProblemSetup
  {
    SystemModel model;
    NoiseSpec noise;
    int horizon = 10;
    double gamma = 0.8;
    Mat P0;     // initial arrival weight
    Vec x0_hat; // initial prior estimate
    Vec x0;     // true initial state used by simulation
    ArrivalPolicy arrival = ArrivalPolicy::Riccati;

    void validate() const;
  };

  std::string to_string(ArrivalPolicy policy);
  ArrivalPolicy arrival_policy_from_string(const std::string &name);

  /**
   * Parse the JSON model file. Keys: A, C, Q, R, xi_lower, xi_upper, zeta_lower,
   * zeta_upper, M_t, gamma, P0, x0_hat; optional x0 and arrival. A and C may also be
   * lists of matrices (time-varying). Unbounded box entries are null.
   */
  ProblemSetup problem_from_json(const nlohmann::json &j);
  nlohmann::json problem_to_json(const ProblemSetup &setup);
  ProblemSetup load_problem(const std::filesystem::path &path);

  /// Double-integrator example: xi >= 0, zeta <= 0, Q = 0.01 I, R = 1.
  ProblemSetup double_integrator_problem(double gamma = 0.65, int horizon = 10);

} // namespace pdmhe
