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

#include "pdmhe/linalg.hpp"

#include <cmath>

#include "pdmhe/errors.hpp"

namespace pdmhe
{

  Mat symmetrize(const Mat &X) { return 0.5 * (X + X.transpose()); }

  bool all_finite(const Mat &X) { return X.allFinite(); }

  bool is_spd(const Mat &X, double eig_tol, double sym_tol)
  {
    if (X.rows() != X.cols() || X.rows() == 0 || !X.allFinite())
      return false;
    if ((X - X.transpose()).cwiseAbs().maxCoeff() > sym_tol * std::max(1.0, X.cwiseAbs().maxCoeff()))
      return false;
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(X), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() > eig_tol;
  }

  double weighted_sq_norm(const Vec &v, const Mat &W) { return v.dot(W * v); }

  Mat sqrtm_spd(const Mat &X)
  {
    if (is_diagonal(X))
      return X.diagonal().cwiseSqrt().asDiagonal();
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(X));
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw NotSPD("sqrtm_spd: matrix is not positive definite");
    return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
           es.eigenvectors().transpose();
  }

  Mat inverse_spd(const Mat &X)
  {
    Eigen::LLT<Mat> llt(symmetrize(X));
    if (llt.info() != Eigen::Success)
      throw NotSPD("inverse_spd: Cholesky failed");
    Mat inv = llt.solve(Mat::Identity(X.rows(), X.cols()));
    return symmetrize(inv);
  }

  bool is_diagonal(const Mat &X, double tol)
  {
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      for (Eigen::Index i = 0; i < X.rows(); ++i)
        if (i != j && std::abs(X(i, j)) > tol)
          return false;
    return true;
  }

} // namespace pdmhe
