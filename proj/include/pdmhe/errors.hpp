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

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pdmhe
{

  /// Root of every error raised by the library.
  class Error : public std::runtime_error
  {
  public:
    using std::runtime_error::runtime_error;
  };

  class DimensionMismatch : public Error
  {
  public:
    using Error::Error;
  };

  /// An argument lies outside the domain of the operation.
  class DomainError : public Error
  {
  public:
    using Error::Error;
  };

  /// Rejection sampler hit its consecutive-rejection cap.
  class AcceptanceTooLow : public Error
  {
  public:
    using Error::Error;
  };

  class WindowUnderflow : public Error
  {
  public:
    using Error::Error;
  };

  class Infeasible : public Error
  {
  public:
    using Error::Error;
  };

  /// Iterative solver stopped before converging. Carries the best iterate.
  class MaxIterations : public Error
  {
  public:
    MaxIterations(const std::string &what, Eigen::VectorXd best, double primal_residual,
                  double dual_residual)
        : Error(what), best_iterate(std::move(best)), primal_residual(primal_residual),
          dual_residual(dual_residual)
    {
    }

    Eigen::VectorXd best_iterate;
    double primal_residual;
    double dual_residual;
  };

  class SingularInnovation : public Error
  {
  public:
    using Error::Error;
  };

  class NotSPD : public Error
  {
  public:
    using Error::Error;
  };

  class InsufficientSamples : public Error
  {
  public:
    using Error::Error;
  };

  /// Training loss became non-finite.
  class Diverged : public Error
  {
  public:
    using Error::Error;
  };

  class ConfigError : public Error
  {
  public:
    using Error::Error;
  };

} // namespace pdmhe
