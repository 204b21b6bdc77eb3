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
#include <iosfwd>
#include <string>
#include <vector>

#include "pdmhe/mhe.hpp"

namespace pdmhe
{

  /// Independent sample streams; seeds drawn from different streams never coincide by construction.
  enum class SampleStream : std::uint64_t
  {
    TrainPrimal = 1,
    TrainDual = 2,
    Calibration = 3,
    Verification = 4,
    Test = 5,
    Online = 6,
  };

  std::uint64_t stream_seed(std::uint64_t base, SampleStream stream, std::uint64_t index);

  /**
   * @brief Exact MHE estimates along a measurement record.
   *
   * Computes only the estimates the prior chain for time t needs (t-M, t-2M, ...),
   * leaving the others empty. estimates[0] is the initial prior.
   */
  std::vector<Vec> exact_prior_chain(const ProblemSetup &setup, const std::vector<Mat> &P,
                                     const std::vector<Vec> &measurements, int t);

  MheInstance instance_at(const ProblemSetup &setup, const std::vector<Mat> &P,
                          const std::vector<Vec> &measurements, const std::vector<Vec> &estimates, int t);

  struct SampledInstance
  {
    MheInstance inst;
    Vec features;
    std::uint64_t seed = 0;
    int t = 0;
    Trajectory traj; // x_0 .. x_t
  };

  /// Fresh trajectory, time drawn uniformly from [1, T], prior chain from the exact estimator.
  SampledInstance sample_instance(const ProblemSetup &setup, const std::vector<Mat> &P, int T, std::uint64_t seed);

  /// count instances from a stream; draws that fail are skipped and replaced by further draws.
  std::vector<SampledInstance> sample_instances(const ProblemSetup &setup, const std::vector<Mat> &P, int T,
                                                std::size_t count, std::uint64_t base, SampleStream stream,
                                                int threads, int *skipped = nullptr);

  /**
   * @brief Network input encodings.
   *
   * Raw is encode_features. Residual replaces the measurements by r_k = y_k - C_k Phi_k xhat*
   * (Phi_k the state transition from the window start), drops the prior and appends the
   * fraction of padded positions; the optimal (x0 - xhat*, xi) and mu depend on nothing else.
   */
  enum class Encoding
  {
    Raw,
    Residual,
  };

  std::string to_string(Encoding e);
  Encoding encoding_from_string(const std::string &name);

  int encoded_dim(Encoding e, int n, int m, int horizon, bool lti);
  Vec encode(const InfoVector &iv, Encoding e);

  /// Network targets: primal [x0, left zero padding, xi_0..xi_{M-1}], dual [zero padding, mu_0..mu_{M-1}].
  int primal_target_dim(int n, int horizon);
  int dual_target_dim(int m, int horizon);
  /// Residual encoding stores x0 - xhat* in place of x0.
  Vec primal_target(const PrimalSolution &sol, int horizon, Encoding e, const Vec &prior);
  Vec dual_target(const Vec &mu, int m, int horizon);

  struct DecodedPrimal
  {
    Vec x0;
    std::vector<Vec> xi;
  };

  DecodedPrimal decode_primal(const Vec &out, int n, int M, int horizon, Encoding e, const Vec &prior);
  Vec decode_dual(const Vec &out, int m, int M, int horizon);

  enum class DatasetKind
  {
    Primal,
    Dual,
  };

  std::string to_string(DatasetKind kind);
  DatasetKind dataset_kind_from_string(const std::string &name);

  /// Samples are columns.
  struct Dataset
  {
    DatasetKind kind = DatasetKind::Primal;
    Encoding encoding = Encoding::Residual;
    Mat inputs;
    Mat targets;
    std::vector<std::uint64_t> seeds;
    std::vector<int> times;
    std::vector<double> values; // optimal V (primal) or G (dual)
    int skipped = 0;

    int size() const { return static_cast<int>(inputs.cols()); }
  };

  Dataset gen_dataset(const ProblemSetup &setup, const std::vector<Mat> &P, int T, std::size_t count,
                      std::uint64_t seed, DatasetKind kind, Encoding encoding = Encoding::Residual,
                      int threads = 1);

  /// Comment line naming the encoding, then header row seed,t,value,f0..,z0.. (or mu0..)
  void write_dataset_csv(std::ostream &out, const Dataset &data);
  Dataset read_dataset_csv(const std::filesystem::path &path);

} // namespace pdmhe
