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

#include "pdmhe/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "pdmhe/errors.hpp"

namespace pdmhe
{

  namespace
  {

    using nlohmann::json;

    template <class T> T get_or(const json &j, const char *key, T fallback)
    {
      if (!j.contains(key) || j.at(key).is_null())
        return fallback;
      try
      {
        return j.at(key).get<T>();
      }
      catch (const json::exception &e)
      {
        throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
      }
    }

    std::optional<double> optional_number(const json &j, const char *key)
    {
      if (!j.contains(key) || j.at(key).is_null())
        return std::nullopt;
      if (!j.at(key).is_number())
        throw ConfigError(std::string("config: '") + key + "' must be a number or null");
      return j.at(key).get<double>();
    }

    const json &section(const json &j, const char *key)
    {
      static const json empty = json::object();
      if (!j.contains(key))
        return empty;
      if (!j.at(key).is_object())
        throw ConfigError(std::string("config: '") + key + "' must be an object");
      return j.at(key);
    }

  } // namespace

  CertBudget RunConfig::budget(double dp, double dd) const
  {
    CertBudget b;
    b.eps_p = eps * eps_primal_share;
    b.eps_d = eps - b.eps_p;
    b.beta_p = beta * beta_primal_share;
    b.beta_d = beta - b.beta_p;
    b.delta_p = dp;
    b.delta_d = dd;
    b.delta_gap = delta_gap;
    return b;
  }

  int RunConfig::verification_count() const
  {
    if (n_verification)
      return *n_verification;
    const CertBudget b = budget(0.0, 0.0);
    return std::max(min_sample_size(b.eps_p, b.beta_p), min_sample_size(b.eps_d, b.beta_d));
  }

  std::string RunConfig::hash() const
  {
    json j = to_json(*this);
    j.erase("output_dir");
    const std::string text = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text)
    {
      h ^= c;
      h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  void RunConfig::validate() const
  {
    setup.validate();
    if (!(eps > 0.0 && eps < 1.0) || !(beta > 0.0 && beta < 1.0))
      throw ConfigError("config: eps and beta must lie in (0, 1)");
    if (!(eps_primal_share > 0.0 && eps_primal_share < 1.0) || !(beta_primal_share > 0.0 && beta_primal_share < 1.0))
      throw ConfigError("config: primal shares must lie in (0, 1)");
    if ((delta_p && *delta_p < 0.0) || (delta_d && *delta_d < 0.0) || delta_gap < 0.0)
      throw ConfigError("config: suboptimality levels must be >= 0");
    if (!(calibration_factor >= 1.0))
      throw ConfigError("config: calibration_factor must be >= 1");
    if (n_train_primal < 1 || n_train_dual < 1 || n_calibration < 1 || n_test < 1)
      throw ConfigError("config: dataset sizes must be >= 1");
    if (n_verification && *n_verification < 1)
      throw ConfigError("config: verification size must be >= 1");
    if (retries < 0)
      throw ConfigError("config: retries must be >= 0");
    if (train.epochs < 1 || train.batch_size < 1 || !(train.learning_rate > 0.0) || train.hidden.empty() ||
        !(train.validation_fraction >= 0.0 && train.validation_fraction < 1.0))
      throw ConfigError("config: invalid training settings");
    for (int h : train.hidden)
      if (h < 1)
        throw ConfigError("config: hidden widths must be >= 1");
    if (mc.runs < 1 || mc.T < 1 || !(mc.armse_start >= 0.0 && mc.armse_start < 1.0))
      throw ConfigError("config: invalid Monte-Carlo settings");
  }

  RunConfig run_config_from_json(const json &j, const std::filesystem::path &base_dir)
  {
    if (!j.is_object())
      throw ConfigError("config: top level must be an object");
    RunConfig cfg;
    cfg.source = j;
    try
    {
      if (!j.contains("model"))
        throw ConfigError("config: missing 'model'");
      const json &model = j.at("model");
      json model_json;
      if (model.is_string())
      {
        std::filesystem::path p = model.get<std::string>();
        if (p.is_relative())
          p = base_dir / p;
        if (!std::filesystem::exists(p))
          throw ConfigError("config: model file not found: " + p.string());
        cfg.model_path = p;
        std::ifstream in(p);
        model_json = json::parse(in);
      }
      else if (model.is_object())
        model_json = model;
      else
        throw ConfigError("config: 'model' must be a path or an object");
      if (j.contains("horizon"))
        model_json["M_t"] = j.at("horizon");
      if (j.contains("gamma"))
        model_json["gamma"] = j.at("gamma");
      cfg.setup = problem_from_json(model_json);

      const json &b = section(j, "budget");
      cfg.eps = get_or(b, "eps", cfg.eps);
      cfg.beta = get_or(b, "beta", cfg.beta);
      cfg.eps_primal_share = get_or(b, "eps_primal_share", cfg.eps_primal_share);
      cfg.beta_primal_share = get_or(b, "beta_primal_share", cfg.beta_primal_share);
      cfg.delta_p = optional_number(b, "delta_p");
      cfg.delta_d = optional_number(b, "delta_d");
      cfg.delta_gap = get_or(b, "delta_gap", cfg.delta_gap);
      cfg.calibration_factor = get_or(b, "calibration_factor", cfg.calibration_factor);

      const json &d = section(j, "dataset");
      cfg.encoding = encoding_from_string(get_or<std::string>(d, "encoding", to_string(cfg.encoding)));
      cfg.n_train_primal = get_or(d, "primal", cfg.n_train_primal);
      cfg.n_train_dual = get_or(d, "dual", cfg.n_train_dual);
      cfg.n_calibration = get_or(d, "calibration", cfg.n_calibration);
      cfg.n_test = get_or(d, "test", cfg.n_test);
      if (d.contains("verification") && !d.at("verification").is_null())
        cfg.n_verification = d.at("verification").get<int>();
      cfg.retries = get_or(d, "retries", cfg.retries);

      const json &t = section(j, "train");
      cfg.train.hidden = get_or(t, "hidden", cfg.train.hidden);
      cfg.train.epochs = get_or(t, "epochs", cfg.train.epochs);
      cfg.train.batch_size = get_or(t, "batch_size", cfg.train.batch_size);
      cfg.train.learning_rate = get_or(t, "learning_rate", cfg.train.learning_rate);
      cfg.train.final_learning_rate = get_or(t, "final_learning_rate", cfg.train.final_learning_rate);
      cfg.train.momentum = get_or(t, "momentum", cfg.train.momentum);
      cfg.train.optimizer = optimizer_from_string(get_or<std::string>(t, "optimizer", to_string(cfg.train.optimizer)));
      cfg.train.validation_fraction = get_or(t, "validation_fraction", cfg.train.validation_fraction);
      cfg.train.standardize = get_or(t, "standardize", cfg.train.standardize);
      cfg.train.seed = get_or<std::uint64_t>(t, "seed", cfg.train.seed);

      const json &mc = section(j, "monte_carlo");
      cfg.mc.runs = get_or(mc, "runs", cfg.mc.runs);
      cfg.mc.T = get_or(mc, "T", cfg.mc.T);
      cfg.mc.seed = get_or<std::uint64_t>(mc, "seed", cfg.mc.seed);
      cfg.mc.armse_start = get_or(mc, "armse_start", cfg.mc.armse_start);

      cfg.out_dir = get_or<std::string>(j, "output_dir", cfg.out_dir.string());
    }
    catch (const ConfigError &)
    {
      throw;
    }
    catch (const Error &e)
    {
      throw ConfigError(std::string("config: ") + e.what());
    }
    catch (const json::exception &e)
    {
      throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
  }

  RunConfig load_run_config(const std::filesystem::path &path)
  {
    std::ifstream in(path);
    if (!in)
      throw ConfigError("config: cannot open " + path.string());
    json j;
    try
    {
      j = json::parse(in);
    }
    catch (const json::exception &e)
    {
      throw ConfigError("config: " + path.string() + ": " + e.what());
    }
    return run_config_from_json(j, path.parent_path());
  }

  json to_json(const RunConfig &cfg)
  {
    json j;
    j["model"] = problem_to_json(cfg.setup);
    j["budget"] = {{"eps", cfg.eps},
                   {"beta", cfg.beta},
                   {"eps_primal_share", cfg.eps_primal_share},
                   {"beta_primal_share", cfg.beta_primal_share},
                   {"delta_p", cfg.delta_p ? json(*cfg.delta_p) : json(nullptr)},
                   {"delta_d", cfg.delta_d ? json(*cfg.delta_d) : json(nullptr)},
                   {"delta_gap", cfg.delta_gap},
                   {"calibration_factor", cfg.calibration_factor}};
    j["dataset"] = {{"encoding", to_string(cfg.encoding)},
                    {"primal", cfg.n_train_primal},
                    {"dual", cfg.n_train_dual},
                    {"calibration", cfg.n_calibration},
                    {"test", cfg.n_test},
                    {"verification", cfg.n_verification ? json(*cfg.n_verification) : json(nullptr)},
                    {"retries", cfg.retries}};
    j["train"] = {{"hidden", cfg.train.hidden},
                  {"epochs", cfg.train.epochs},
                  {"batch_size", cfg.train.batch_size},
                  {"learning_rate", cfg.train.learning_rate},
                  {"final_learning_rate", cfg.train.final_learning_rate},
                  {"momentum", cfg.train.momentum},
                  {"optimizer", to_string(cfg.train.optimizer)},
                  {"validation_fraction", cfg.train.validation_fraction},
                  {"standardize", cfg.train.standardize},
                  {"seed", cfg.train.seed}};
    j["monte_carlo"] = {
        {"runs", cfg.mc.runs}, {"T", cfg.mc.T}, {"seed", cfg.mc.seed}, {"armse_start", cfg.mc.armse_start}};
    j["output_dir"] = cfg.out_dir.string();
    return j;
  }

  TrainedEstimator train_estimator(const RunConfig &cfg, const std::vector<Mat> &P, DatasetKind kind, int threads,
                                   Dataset *data)
  {
    const int count = kind == DatasetKind::Primal ? cfg.n_train_primal : cfg.n_train_dual;
    Dataset ds = gen_dataset(cfg.setup, P, cfg.mc.T, static_cast<std::size_t>(count), cfg.mc.seed, kind,
                             cfg.encoding, threads);
    TrainConfig tc = cfg.train;
    tc.seed = mix_seed(cfg.train.seed, static_cast<std::uint64_t>(kind));
    TrainResult res = train(ds.inputs, ds.targets, tc);
    TrainedEstimator out;
    out.params = std::move(res.params);
    out.params.encoding = to_string(cfg.encoding);
    out.curve = std::move(res.curve);
    out.samples = ds.size();
    out.skipped = ds.skipped;
    if (data)
      *data = std::move(ds);
    return out;
  }

  Thresholds resolve_thresholds(const RunConfig &cfg, const std::vector<Mat> &P, const PrimalEstimator &primal,
                                const DualEstimator &dual, int threads)
  {
    Thresholds th;
    if (cfg.delta_p && cfg.delta_d)
    {
      th.delta_p = *cfg.delta_p;
      th.delta_d = *cfg.delta_d;
      return th;
    }
    const auto samples = prepare_samples(cfg.setup, P, cfg.mc.T, static_cast<std::size_t>(cfg.n_calibration),
                                         cfg.mc.seed, SampleStream::Calibration, threads);
    th.calibration = calibrate(primal, dual, samples);
    th.calibrated = true;
    const double level =
        cfg.calibration_factor * std::max({th.calibration.max_excess, th.calibration.max_shortfall, 0.0});
    th.delta_p = cfg.delta_p.value_or(level);
    th.delta_d = cfg.delta_d.value_or(level);
    return th;
  }

  void write_curve_csv(std::ostream &out, const std::vector<EpochStats> &curve)
  {
    out << "epoch,train_loss,validation_loss\n";
    out.precision(17);
    for (const auto &e : curve)
      out << e.epoch << ',' << e.train_loss << ',' << e.validation_loss << '\n';
  }

} // namespace pdmhe
