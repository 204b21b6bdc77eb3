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
#include <fstream>
#include <limits>

#include "pdmhe/errors.hpp"
#include "pdmhe/problem.hpp"

namespace pdmhe
{

  using nlohmann::json;

  namespace
  {
    constexpr double kInf = std::numeric_limits<double>::infinity();

    Mat matrix_from_json(const json &j, const char *key)
    {
      if (!j.is_array() || j.empty())
        throw ConfigError(std::string("'") + key + "' must be a non-empty matrix");
      // A bare vector is accepted as a single row.
      if (!j.front().is_array())
      {
        Mat out(1, j.size());
        for (std::size_t c = 0; c < j.size(); ++c)
          out(0, static_cast<Eigen::Index>(c)) = j[c].get<double>();
        return out;
      }
      const auto rows = j.size();
      const auto cols = j.front().size();
      Mat out(rows, cols);
      for (std::size_t r = 0; r < rows; ++r)
      {
        if (!j[r].is_array() || j[r].size() != cols)
          throw ConfigError(std::string("'") + key + "' has ragged rows");
        for (std::size_t c = 0; c < cols; ++c)
          out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
      }
      return out;
    }

    Mat scalar_or_matrix(const json &j, const char *key)
    {
      if (j.is_number())
        return Mat::Constant(1, 1, j.get<double>());
      return matrix_from_json(j, key);
    }

    /// True for [[[..]]] (a sequence of matrices).
    bool is_matrix_sequence(const json &j)
    {
      return j.is_array() && !j.empty() && j.front().is_array() && !j.front().empty() &&
             j.front().front().is_array();
    }

    Vec bound_vector(const json &j, const char *key, double unbounded, int dim)
    {
      if (j.is_null())
        return Vec::Constant(dim, unbounded);
      if (!j.is_array() || static_cast<int>(j.size()) != dim)
        throw ConfigError(std::string("'") + key + "' must be a list of length " + std::to_string(dim));
      Vec out(dim);
      for (int i = 0; i < dim; ++i)
        out[i] = j[static_cast<std::size_t>(i)].is_null() ? unbounded : j[static_cast<std::size_t>(i)].get<double>();
      return out;
    }

    Vec vector_from_json(const json &j, const char *key)
    {
      if (j.is_number())
        return Vec::Constant(1, j.get<double>());
      if (!j.is_array())
        throw ConfigError(std::string("'") + key + "' must be a list");
      Vec out(j.size());
      for (std::size_t i = 0; i < j.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = j[i].get<double>();
      return out;
    }

    json matrix_to_json(const Mat &X)
    {
      json rows = json::array();
      for (Eigen::Index r = 0; r < X.rows(); ++r)
      {
        json row = json::array();
        for (Eigen::Index c = 0; c < X.cols(); ++c)
          row.push_back(X(r, c));
        rows.push_back(row);
      }
      return rows;
    }

    json vector_to_json(const Vec &v)
    {
      json out = json::array();
      for (Eigen::Index i = 0; i < v.size(); ++i)
        out.push_back(v[i]);
      return out;
    }

    json bound_to_json(const Vec &v)
    {
      json out = json::array();
      for (Eigen::Index i = 0; i < v.size(); ++i)
      {
        if (std::isinf(v[i]))
          out.push_back(nullptr);
        else
          out.push_back(v[i]);
      }
      return out;
    }

    const json &require(const json &j, const char *key)
    {
      if (!j.contains(key))
        throw ConfigError(std::string("model file: missing key '") + key + "'");
      return j.at(key);
    }
  } // namespace

  std::string to_string(ArrivalPolicy policy)
  {
    switch (policy)
    {
    case ArrivalPolicy::Riccati:
      return "riccati";
    case ArrivalPolicy::Stationary:
      return "stationary";
    case ArrivalPolicy::Fixed:
      return "fixed";
    }
    return "riccati";
  }

  ArrivalPolicy arrival_policy_from_string(const std::string &name)
  {
    if (name == "riccati")
      return ArrivalPolicy::Riccati;
    if (name == "stationary")
      return ArrivalPolicy::Stationary;
    if (name == "fixed")
      return ArrivalPolicy::Fixed;
    throw ConfigError("unknown arrival policy '" + name + "'");
  }

  void ProblemSetup::validate() const
  {
    noise.validate(model.n(), model.m());
    if (horizon < 1)
      throw ConfigError("M_t must be >= 1");
    if (!(gamma >= 0.0 && gamma < 1.0))
      throw ConfigError("gamma must lie in [0, 1)");
    if (P0.rows() != model.n() || P0.cols() != model.n() || !is_spd(P0))
      throw ConfigError("P0 must be an n x n SPD matrix");
    if (x0_hat.size() != model.n() || x0.size() != model.n())
      throw ConfigError("x0_hat and x0 must have dimension n");
    if (arrival == ArrivalPolicy::Stationary && !model.lti())
      throw ConfigError("stationary arrival weight requires a time-invariant model");
  }

  ProblemSetup problem_from_json(const json &j)
  {
    try
    {
      ProblemSetup s;
      const json &jA = require(j, "A");
      const json &jC = require(j, "C");
      if (is_matrix_sequence(jA) || is_matrix_sequence(jC))
      {
        std::vector<Mat> As, Cs;
        if (is_matrix_sequence(jA))
          for (const auto &a : jA)
            As.push_back(matrix_from_json(a, "A"));
        else
          As.push_back(matrix_from_json(jA, "A"));
        if (is_matrix_sequence(jC))
          for (const auto &c : jC)
            Cs.push_back(matrix_from_json(c, "C"));
        else
          Cs.push_back(matrix_from_json(jC, "C"));
        s.model = SystemModel(std::move(As), std::move(Cs));
      }
      else
      {
        s.model = SystemModel(matrix_from_json(jA, "A"), matrix_from_json(jC, "C"));
      }
      const int n = s.model.n();
      const int m = s.model.m();
      s.noise.Q = scalar_or_matrix(require(j, "Q"), "Q");
      s.noise.R = scalar_or_matrix(require(j, "R"), "R");
      s.noise.xi_set = BoxSet(bound_vector(j.value("xi_lower", json()), "xi_lower", -kInf, n),
                              bound_vector(j.value("xi_upper", json()), "xi_upper", kInf, n));
      s.noise.zeta_set = BoxSet(bound_vector(j.value("zeta_lower", json()), "zeta_lower", -kInf, m),
                                bound_vector(j.value("zeta_upper", json()), "zeta_upper", kInf, m));
      s.horizon = require(j, "M_t").get<int>();
      s.gamma = require(j, "gamma").get<double>();
      s.P0 = j.contains("P0") ? scalar_or_matrix(j.at("P0"), "P0") : Mat(Mat::Identity(n, n));
      s.x0_hat = j.contains("x0_hat") ? vector_from_json(j.at("x0_hat"), "x0_hat") : Vec(Vec::Zero(n));
      s.x0 = j.contains("x0") ? vector_from_json(j.at("x0"), "x0") : s.x0_hat;
      if (j.contains("arrival"))
        s.arrival = arrival_policy_from_string(j.at("arrival").get<std::string>());
      s.validate();
      return s;
    }
    catch (const json::exception &e)
    {
      throw ConfigError(std::string("model file: ") + e.what());
    }
    catch (const ConfigError &)
    {
      throw;
    }
    catch (const Error &e)
    {
      throw ConfigError(std::string("model file: ") + e.what());
    }
  }

  json problem_to_json(const ProblemSetup &s)
  {
    json j;
    if (s.model.lti())
    {
      j["A"] = matrix_to_json(s.model.A(0));
      j["C"] = matrix_to_json(s.model.C(0));
    }
    else
    {
      json As = json::array(), Cs = json::array();
      for (const auto &A : s.model.dynamics())
        As.push_back(matrix_to_json(A));
      for (const auto &C : s.model.measurement())
        Cs.push_back(matrix_to_json(C));
      j["A"] = As;
      j["C"] = Cs;
    }
    j["Q"] = matrix_to_json(s.noise.Q);
    j["R"] = matrix_to_json(s.noise.R);
    j["xi_lower"] = bound_to_json(s.noise.xi_set.lower());
    j["xi_upper"] = bound_to_json(s.noise.xi_set.upper());
    j["zeta_lower"] = bound_to_json(s.noise.zeta_set.lower());
    j["zeta_upper"] = bound_to_json(s.noise.zeta_set.upper());
    j["M_t"] = s.horizon;
    j["gamma"] = s.gamma;
    j["P0"] = matrix_to_json(s.P0);
    j["x0_hat"] = vector_to_json(s.x0_hat);
    j["x0"] = vector_to_json(s.x0);
    j["arrival"] = to_string(s.arrival);
    return j;
  }

  ProblemSetup load_problem(const std::filesystem::path &path)
  {
    std::ifstream in(path);
    if (!in)
      throw ConfigError("cannot open model file " + path.string());
    json j;
    try
    {
      in >> j;
    }
    catch (const json::exception &e)
    {
      throw ConfigError("model file " + path.string() + ": " + e.what());
    }
    return problem_from_json(j);
  }

  ProblemSetup double_integrator_problem(double gamma, int horizon)
  {
    ProblemSetup s;
    Mat A(2, 2);
    A << 1.0, 0.1, 0.0, 1.0;
    Mat C(1, 2);
    C << 1.0, 0.0;
    s.model = SystemModel(A, C);
    s.noise.Q = 0.01 * Mat::Identity(2, 2);
    s.noise.R = Mat::Identity(1, 1);
    s.noise.xi_set = BoxSet::nonnegative(2);
    s.noise.zeta_set = BoxSet::nonpositive(1);
    s.horizon = horizon;
    s.gamma = gamma;
    s.P0 = Mat::Identity(2, 2);
    s.x0_hat = Vec::Zero(2);
    s.x0 = Vec::Zero(2);
    s.arrival = ArrivalPolicy::Stationary;
    s.validate();
    return s;
  }

} // namespace pdmhe
