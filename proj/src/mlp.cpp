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

#include "pdmhe/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "pdmhe/errors.hpp"
#include "pdmhe/model.hpp"

namespace pdmhe
{

  using nlohmann::json;

  std::size_t MlpParams::parameter_count() const
  {
    std::size_t count = 0;
    for (std::size_t l = 0; l < W.size(); ++l)
      count += static_cast<std::size_t>(W[l].size() + b[l].size());
    return count;
  }

  Vec MlpParams::flat() const
  {
    Vec theta(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < W.size(); ++l)
    {
      theta.segment(at, W[l].size()) = W[l].reshaped();
      at += W[l].size();
      theta.segment(at, b[l].size()) = b[l];
      at += b[l].size();
    }
    return theta;
  }

  void MlpParams::set_flat(const Vec &theta)
  {
    if (theta.size() != static_cast<Eigen::Index>(parameter_count()))
      throw DimensionMismatch("MlpParams::set_flat: wrong length");
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < W.size(); ++l)
    {
      W[l].reshaped() = theta.segment(at, W[l].size());
      at += W[l].size();
      b[l] = theta.segment(at, b[l].size());
      at += b[l].size();
    }
  }

  void MlpParams::validate() const
  {
    if (layer_dims.size() < 2 || W.size() != layer_dims.size() - 1 || b.size() != W.size())
      throw DimensionMismatch("MlpParams: layer count");
    for (std::size_t l = 0; l < W.size(); ++l)
    {
      if (W[l].rows() != layer_dims[l + 1] || W[l].cols() != layer_dims[l] || b[l].size() != layer_dims[l + 1])
        throw DimensionMismatch("MlpParams: layer " + std::to_string(l) + " is not conformable");
      if (!W[l].allFinite() || !b[l].allFinite())
        throw DomainError("MlpParams: non-finite parameter");
    }
    if (in_shift.size() != input_dim() || in_scale.size() != input_dim() || out_shift.size() != output_dim() ||
        out_scale.size() != output_dim())
      throw DimensionMismatch("MlpParams: standardization dimensions");
    if ((in_scale.array() <= 0.0).any() || (out_scale.array() <= 0.0).any())
      throw DomainError("MlpParams: standardization scales must be positive");
  }

  MlpParams init_mlp(const std::vector<int> &layer_dims, std::uint64_t seed)
  {
    if (layer_dims.size() < 2)
      throw DimensionMismatch("init_mlp: need at least input and output sizes");
    for (int d : layer_dims)
      if (d <= 0)
        throw DomainError("init_mlp: layer sizes must be positive");
    MlpParams p;
    p.layer_dims = layer_dims;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l)
    {
      const double limit = std::sqrt(6.0 / layer_dims[l]);
      std::uniform_real_distribution<double> U(-limit, limit);
      Mat W(layer_dims[l + 1], layer_dims[l]);
      for (Eigen::Index j = 0; j < W.cols(); ++j)
        for (Eigen::Index i = 0; i < W.rows(); ++i)
          W(i, j) = U(rng);
      p.W.push_back(std::move(W));
      p.b.push_back(Vec::Zero(layer_dims[l + 1]));
    }
    p.in_shift = Vec::Zero(layer_dims.front());
    p.in_scale = Vec::Ones(layer_dims.front());
    p.out_shift = Vec::Zero(layer_dims.back());
    p.out_scale = Vec::Ones(layer_dims.back());
    return p;
  }

  namespace
  {

    Mat standardize_inputs(const MlpParams &p, const Mat &X)
    {
      return (X.colwise() - p.in_shift).array().colwise() / p.in_scale.array();
    }

    Mat standardize_outputs(const MlpParams &p, const Mat &Y)
    {
      return (Y.colwise() - p.out_shift).array().colwise() / p.out_scale.array();
    }

    /// Raw network output in standardized units.
    Mat forward_standardized(const MlpParams &p, const Mat &X)
    {
      Mat A = standardize_inputs(p, X);
      const auto L = p.W.size();
      for (std::size_t l = 0; l < L; ++l)
      {
        Mat Z = (p.W[l] * A).colwise() + p.b[l];
        if (l + 1 < L)
          A = Z.cwiseMax(0.0);
        else
          A = std::move(Z);
      }
      return A;
    }

  } // namespace

  Mat forward_batch(const MlpParams &p, const Mat &X)
  {
    if (X.rows() != p.input_dim())
      throw DimensionMismatch("forward: input dimension " + std::to_string(X.rows()) + ", expected " +
                              std::to_string(p.input_dim()));
    Mat out = forward_standardized(p, X);
    return (out.array().colwise() * p.out_scale.array()).matrix().colwise() + p.out_shift;
  }

  Vec forward(const MlpParams &p, const Vec &x) { return forward_batch(p, x); }

  double mlp_loss(const MlpParams &p, const Mat &X, const Mat &Y)
  {
    if (X.cols() != Y.cols() || Y.rows() != p.output_dim())
      throw DimensionMismatch("mlp_loss: batch shapes");
    if (X.cols() == 0)
      throw DomainError("mlp_loss: empty batch");
    return (forward_standardized(p, X) - standardize_outputs(p, Y)).squaredNorm() / static_cast<double>(X.cols());
  }

  Vec mlp_grad(const MlpParams &p, const Mat &X, const Mat &Y, double *loss)
  {
    if (X.rows() != p.input_dim() || X.cols() != Y.cols() || Y.rows() != p.output_dim())
      throw DimensionMismatch("mlp_grad: batch shapes");
    if (X.cols() == 0)
      throw DomainError("mlp_grad: empty batch");
    const auto L = p.W.size();
    const double N = static_cast<double>(X.cols());

    std::vector<Mat> acts;
    std::vector<Mat> pre;
    acts.reserve(L + 1);
    pre.reserve(L);
    acts.push_back(standardize_inputs(p, X));
    for (std::size_t l = 0; l < L; ++l)
    {
      pre.push_back((p.W[l] * acts.back()).colwise() + p.b[l]);
      acts.push_back(l + 1 < L ? Mat(pre.back().cwiseMax(0.0)) : pre.back());
    }

    const Mat err = acts.back() - standardize_outputs(p, Y);
    if (loss)
      *loss = err.squaredNorm() / N;

    std::vector<Mat> gW(L);
    std::vector<Vec> gb(L);
    Mat delta = (2.0 / N) * err;
    for (std::size_t l = L; l-- > 0;)
    {
      gW[l] = delta * acts[l].transpose();
      gb[l] = delta.rowwise().sum();
      if (l > 0)
        delta = (p.W[l].transpose() * delta).cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    }

    Vec g(static_cast<Eigen::Index>(p.parameter_count()));
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < L; ++l)
    {
      g.segment(at, gW[l].size()) = gW[l].reshaped();
      at += gW[l].size();
      g.segment(at, gb[l].size()) = gb[l];
      at += gb[l].size();
    }
    return g;
  }

  namespace
  {

    void fit_standardization(MlpParams &p, const Mat &X, const Mat &Y)
    {
      auto fit = [](const Mat &D, Vec &shift, Vec &scale) {
        const double N = static_cast<double>(D.cols());
        shift = D.rowwise().mean();
        scale = ((D.colwise() - shift).array().square().rowwise().sum() / N).sqrt().matrix();
        for (Eigen::Index i = 0; i < scale.size(); ++i)
          if (!(scale[i] > 1e-10))
            scale[i] = 1.0;
      };
      fit(X, p.in_shift, p.in_scale);
      fit(Y, p.out_shift, p.out_scale);
    }

  } // namespace

  TrainResult train(const Mat &X, const Mat &Y, const TrainConfig &cfg)
  {
    if (X.cols() != Y.cols() || X.cols() == 0)
      throw DimensionMismatch("train: inputs and targets need the same nonzero sample count");
    if (cfg.epochs <= 0 || cfg.batch_size <= 0 || !(cfg.learning_rate > 0.0) || cfg.momentum < 0.0 ||
        cfg.validation_fraction < 0.0 || cfg.validation_fraction >= 1.0)
      throw DomainError("train: invalid hyperparameters");

    const auto N = static_cast<int>(X.cols());
    Rng rng(mix_seed(cfg.seed, 0));
    std::vector<int> order(static_cast<std::size_t>(N));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    int n_val = static_cast<int>(std::floor(cfg.validation_fraction * N));
    if (N - n_val < 1)
      n_val = N - 1;
    std::vector<int> train_idx(order.begin(), order.end() - n_val);
    std::vector<int> val_idx(order.end() - n_val, order.end());
    if (val_idx.empty())
      val_idx = train_idx;

    const Mat Xt = X(Eigen::all, train_idx);
    const Mat Yt = Y(Eigen::all, train_idx);
    const Mat Xv = X(Eigen::all, val_idx);
    const Mat Yv = Y(Eigen::all, val_idx);

    std::vector<int> dims{static_cast<int>(X.rows())};
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(static_cast<int>(Y.rows()));
    MlpParams p = init_mlp(dims, mix_seed(cfg.seed, 1));
    if (cfg.standardize)
      fit_standardization(p, Xt, Yt);

    Vec theta = p.flat();
    Vec v = Vec::Zero(theta.size());
    Vec s = Vec::Zero(theta.size());
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

    const int n_train = static_cast<int>(train_idx.size());
    const int batch = std::min(cfg.batch_size, n_train);
    const int steps_per_epoch = (n_train + batch - 1) / batch;
    const double total_steps = static_cast<double>(steps_per_epoch) * cfg.epochs;
    long step = 0;

    TrainResult result;
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> perm(static_cast<std::size_t>(n_train));
    std::iota(perm.begin(), perm.end(), 0);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch)
    {
      std::shuffle(perm.begin(), perm.end(), rng);
      double epoch_loss = 0.0;
      for (int start = 0; start < n_train; start += batch)
      {
        const int stop = std::min(start + batch, n_train);
        const std::vector<int> idx(perm.begin() + start, perm.begin() + stop);
        double batch_loss = 0.0;
        p.set_flat(theta);
        const Vec g = mlp_grad(p, Xt(Eigen::all, idx), Yt(Eigen::all, idx), &batch_loss);
        if (!std::isfinite(batch_loss) || !g.allFinite())
          throw Diverged("train: loss became non-finite at epoch " + std::to_string(epoch));
        epoch_loss += batch_loss * (stop - start);

        const double lr = cfg.final_learning_rate +
                          0.5 * (cfg.learning_rate - cfg.final_learning_rate) *
                              (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / total_steps));
        ++step;
        if (cfg.optimizer == Optimizer::SgdMomentum)
        {
          v = cfg.momentum * v - lr * g;
          theta += v;
        }
        else
        {
          v = beta1 * v + (1.0 - beta1) * g;
          s = beta2 * s + (1.0 - beta2) * g.cwiseProduct(g);
          const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
          const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
          theta -= lr * ((v / c1).array() / ((s / c2).array().sqrt() + adam_eps)).matrix();
        }
      }
      p.set_flat(theta);
      const double val = mlp_loss(p, Xv, Yv);
      if (!std::isfinite(val))
        throw Diverged("train: validation loss became non-finite at epoch " + std::to_string(epoch));
      result.curve.push_back({epoch, epoch_loss / n_train, val});
      if (val < best)
      {
        best = val;
        result.params = p;
      }
    }
    return result;
  }

  // ------------------------------------------------------------------ IO

  namespace
  {

    constexpr int kFormatVersion = 1;

    std::uint64_t fnv1a(std::uint64_t h, const void *data, std::size_t len)
    {
      const auto *bytes = static_cast<const unsigned char *>(data);
      for (std::size_t i = 0; i < len; ++i)
      {
        h ^= bytes[i];
        h *= 0x100000001B3ULL;
      }
      return h;
    }

    std::uint64_t checksum(const MlpParams &p)
    {
      std::uint64_t h = 0xCBF29CE484222325ULL;
      for (int d : p.layer_dims)
      {
        const std::int64_t v = d;
        h = fnv1a(h, &v, sizeof v);
      }
      auto mix = [&h](const Vec &x) { h = fnv1a(h, x.data(), sizeof(double) * static_cast<std::size_t>(x.size())); };
      mix(p.flat());
      mix(p.in_shift);
      mix(p.in_scale);
      mix(p.out_shift);
      mix(p.out_scale);
      h = fnv1a(h, p.encoding.data(), p.encoding.size());
      return h;
    }

    json row_major(const Mat &M)
    {
      json rows = json::array();
      for (Eigen::Index i = 0; i < M.rows(); ++i)
      {
        json r = json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j)
          r.push_back(M(i, j));
        rows.push_back(std::move(r));
      }
      return rows;
    }

    json as_array(const Vec &v) { return std::vector<double>(v.data(), v.data() + v.size()); }

    Mat matrix_from(const json &j, int rows, int cols)
    {
      Mat M(rows, cols);
      if (!j.is_array() || static_cast<int>(j.size()) != rows)
        throw ConfigError("load_mlp: weight matrix has wrong row count");
      for (int i = 0; i < rows; ++i)
      {
        if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols)
          throw ConfigError("load_mlp: weight matrix has wrong column count");
        for (int k = 0; k < cols; ++k)
          M(i, k) = j[i][k].get<double>();
      }
      return M;
    }

    Vec vector_from(const json &j, int size)
    {
      if (!j.is_array() || static_cast<int>(j.size()) != size)
        throw ConfigError("load_mlp: vector has wrong length");
      Vec v(size);
      for (int i = 0; i < size; ++i)
        v[i] = j[i].get<double>();
      return v;
    }

    std::string hex(std::uint64_t h)
    {
      std::ostringstream os;
      os << std::hex << h;
      return os.str();
    }

  } // namespace

  void save_mlp(const MlpParams &p, const std::filesystem::path &path, const json &meta)
  {
    p.validate();
    json j;
    j["format"] = "pdmhe-mlp";
    j["version"] = kFormatVersion;
    j["layer_dims"] = p.layer_dims;
    j["weights"] = json::array();
    j["biases"] = json::array();
    for (std::size_t l = 0; l < p.W.size(); ++l)
    {
      j["weights"].push_back(row_major(p.W[l]));
      j["biases"].push_back(as_array(p.b[l]));
    }
    j["in_shift"] = as_array(p.in_shift);
    j["in_scale"] = as_array(p.in_scale);
    j["out_shift"] = as_array(p.out_shift);
    j["out_scale"] = as_array(p.out_scale);
    j["encoding"] = p.encoding;
    j["checksum"] = hex(checksum(p));
    if (!meta.empty())
      j["meta"] = meta;
    std::ofstream out(path);
    if (!out)
      throw Error("save_mlp: cannot open " + path.string());
    out << j.dump(1) << '\n';
  }

  MlpParams load_mlp(const std::filesystem::path &path)
  {
    std::ifstream in(path);
    if (!in)
      throw ConfigError("load_mlp: cannot open " + path.string());
    MlpParams p;
    try
    {
      const json j = json::parse(in);
      if (j.at("format").get<std::string>() != "pdmhe-mlp")
        throw ConfigError("load_mlp: not a network file");
      if (j.at("version").get<int>() != kFormatVersion)
        throw ConfigError("load_mlp: unsupported version");
      p.layer_dims = j.at("layer_dims").get<std::vector<int>>();
      if (p.layer_dims.size() < 2 || j.at("weights").size() != p.layer_dims.size() - 1 ||
          j.at("biases").size() != p.layer_dims.size() - 1)
        throw ConfigError("load_mlp: layer count mismatch");
      for (std::size_t l = 0; l + 1 < p.layer_dims.size(); ++l)
      {
        p.W.push_back(matrix_from(j["weights"][l], p.layer_dims[l + 1], p.layer_dims[l]));
        p.b.push_back(vector_from(j["biases"][l], p.layer_dims[l + 1]));
      }
      p.in_shift = vector_from(j.at("in_shift"), p.input_dim());
      p.in_scale = vector_from(j.at("in_scale"), p.input_dim());
      p.out_shift = vector_from(j.at("out_shift"), p.output_dim());
      p.out_scale = vector_from(j.at("out_scale"), p.output_dim());
      p.encoding = j.value("encoding", std::string("raw"));
      if (j.at("checksum").get<std::string>() != hex(checksum(p)))
        throw ConfigError("load_mlp: checksum mismatch in " + path.string());
    }
    catch (const json::exception &e)
    {
      throw ConfigError(std::string("load_mlp: ") + e.what());
    }
    try
    {
      p.validate();
    }
    catch (const Error &e)
    {
      throw ConfigError(std::string("load_mlp: ") + e.what());
    }
    return p;
  }

  std::string to_string(Optimizer opt) { return opt == Optimizer::Adam ? "adam" : "sgd_momentum"; }

  Optimizer optimizer_from_string(const std::string &name)
  {
    if (name == "adam")
      return Optimizer::Adam;
    if (name == "sgd_momentum" || name == "sgd")
      return Optimizer::SgdMomentum;
    throw ConfigError("unknown optimizer '" + name + "'");
  }

} // namespace pdmhe
