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

#include <Eigen/Dense>

namespace pdmhe
{

  using Vec = Eigen::VectorXd;
  using Mat = Eigen::MatrixXd;

  /// (X + X^T) / 2
  Mat symmetrize(const Mat &X);

  /// True when X is symmetric within `sym_tol` and its smallest eigenvalue exceeds `eig_tol`.
  bool is_spd(const Mat &X, double eig_tol = 1e-12, double sym_tol = 1e-12);

  bool all_finite(const Mat &X);

  /// v^T W v
  double weighted_sq_norm(const Vec &v, const Mat &W);

  /// Symmetric square root of an SPD matrix.
  Mat sqrtm_spd(const Mat &X);

  /// Inverse of an SPD matrix via Cholesky. Throws NotSPD.
  Mat inverse_spd(const Mat &X);

  bool is_diagonal(const Mat &X, double tol = 0.0);

} // namespace pdmhe
