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

#include "doctest.h"
#include "pdmhe/errors.hpp"
#include "pdmhe/problem.hpp"

using namespace pdmhe;
using nlohmann::json;

TEST_SUITE("problem")
{
  TEST_CASE("shipped model file matches the built-in example")
  {
    const ProblemSetup a = load_problem(std::filesystem::path(PDMHE_SOURCE_DIR) / "configs/double_integrator.json");
    const ProblemSetup b = double_integrator_problem();
    CHECK((a.model.A(0) - b.model.A(0)).norm() == 0.0);
    CHECK((a.model.C(0) - b.model.C(0)).norm() == 0.0);
    CHECK((a.noise.Q - b.noise.Q).norm() == 0.0);
    CHECK((a.noise.R - b.noise.R).norm() == 0.0);
    CHECK(a.horizon == 10);
    CHECK(a.gamma == 0.65);
    CHECK(a.arrival == ArrivalPolicy::Stationary);
    CHECK(std::isinf(a.noise.xi_set.upper()(0)));
    CHECK(a.noise.xi_set.lower()(1) == 0.0);
    CHECK(std::isinf(a.noise.zeta_set.lower()(0)));
    CHECK(a.noise.zeta_set.upper()(0) == 0.0);
  }

  TEST_CASE("json round trip")
  {
    const ProblemSetup a = double_integrator_problem(0.8, 7);
    const json j = problem_to_json(a);
    const ProblemSetup b = problem_from_json(j);
    CHECK(b.horizon == 7);
    CHECK(b.gamma == 0.8);
    CHECK(problem_to_json(b) == j);
    CHECK(j["xi_upper"][0].is_null());
  }

  TEST_CASE("time-varying model file")
  {
    json j = problem_to_json(double_integrator_problem());
    json As = json::array();
    for (int k = 0; k < 5; ++k)
      As.push_back(json::array({json::array({1.0, 0.1 * k}), json::array({0.0, 1.0})}));
    j["A"] = As;
    j["arrival"] = "riccati";
    const ProblemSetup s = problem_from_json(j);
    CHECK_FALSE(s.model.lti());
    CHECK(s.model.A(3)(0, 1) == doctest::Approx(0.3));
  }

  TEST_CASE("invalid model files")
  {
    json j = problem_to_json(double_integrator_problem());
    json bad = j;
    bad.erase("Q");
    CHECK_THROWS_AS(problem_from_json(bad), ConfigError);
    bad = j;
    bad["gamma"] = 1.0;
    CHECK_THROWS_AS(problem_from_json(bad), ConfigError);
    bad = j;
    bad["M_t"] = 0;
    CHECK_THROWS_AS(problem_from_json(bad), ConfigError);
    bad = j;
    bad["P0"] = json::array({json::array({1.0, 0.0}), json::array({0.0, -1.0})});
    CHECK_THROWS_AS(problem_from_json(bad), ConfigError);
    bad = j;
    bad["arrival"] = "sometimes";
    CHECK_THROWS_AS(problem_from_json(bad), ConfigError);
    bad = j;
    bad["xi_lower"] = json::array({0.0});
    CHECK_THROWS_AS(problem_from_json(bad), ConfigError);
    CHECK_THROWS_AS(load_problem("/nonexistent/model.json"), ConfigError);
  }
}
