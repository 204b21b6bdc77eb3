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
#include <string>
#include <vector>

#include "json.hpp"
#include "pdmhe/linalg.hpp"

namespace pdmhe
{

  /**
   * @brief Fully connected network, rectifier on hidden layers, identity output.
   *
   * Inputs and outputs pass through fixed affine standardizations so the
   * learned layers work in unit scale.
   */
  struct MlpParams
  {
    std::vector<int> layer_dims; // [in, h1, ..., out]
    std::vector<Mat> W;
    std::vector<Vec> b;
    Vec in_shift, in_scale;
    Vec out_shift, out_scale;
    /// name of the input encoding the network was trained on
    std::string encoding = "raw";

    int input_dim() const { return layer_dims.front(); }
    int output_dim() const { return layer_dims.back(); }
    int layers() const { return static_cast<int>(W.size()); }
    std::size_t parameter_count() const;

    /// Layer weights and biases in layer order, W column-major then b.
    Vec flat() const;
    void set_flat(const Vec &theta);

    void validate() const;
  };

  /// Seeded fan-in scaled uniform weights, zero biases, identity standardization.
  MlpParams init_mlp(const std::vector<int> &layer_dims, std::uint64_t seed);

  Vec forward(const MlpParams &p, const Vec &x);
  /// Columns are samples.
  Mat forward_batch(const MlpParams &p, const Mat &X);

  /// Mean over samples of the squared error in standardized output units.
  double mlp_loss(const MlpParams &p, const Mat &X, const Mat &Y);

  /// Gradient of mlp_loss with respect to flat().
  Vec mlp_grad(const MlpParams &p, const Mat &X, const Mat &Y, double *loss = nullptr);

  enum class Optimizer
  {
    SgdMomentum,
    Adam,
  };

  struct TrainConfig
  {
    std::vector<int> hidden{64, 64, 64};
    int epochs = 400;
    int batch_size = 64;
    double learning_rate = 1e-2;
    double final_learning_rate = 0.0; // cosine decay target
    double momentum = 0.9;
    Optimizer optimizer = Optimizer::SgdMomentum;
    double validation_fraction = 0.1;
    bool standardize = true;
    std::uint64_t seed = 1;
  };

  struct EpochStats
  {
    int epoch = 0;
    double train_loss = 0.0;
    double validation_loss = 0.0;
  };

  struct TrainResult
  {
    MlpParams params; // parameters at the best validation loss
    std::vector<EpochStats> curve;
  };

  /// Deterministic minibatch training. Throws Diverged on a non-finite loss.
  TrainResult train(const Mat &X, const Mat &Y, const TrainConfig &cfg);

  /// meta is stored verbatim under "meta" and is not covered by the checksum.
  void save_mlp(const MlpParams &p, const std::filesystem::path &path,
                const nlohmann::json &meta = nlohmann::json::object());
  /// Throws ConfigError on a malformed file or checksum mismatch.
  MlpParams load_mlp(const std::filesystem::path &path);

  std::string to_string(Optimizer opt);
  Optimizer optimizer_from_string(const std::string &name);

} // namespace pdmhe
