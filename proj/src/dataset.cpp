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

#include "pdmhe/dataset.hpp"

#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "pdmhe/dual.hpp"
#include "pdmhe/errors.hpp"
#include "pdmhe/parallel.hpp"

namespace pdmhe
{

  std::uint64_t stream_seed(std::uint64_t base, SampleStream stream, std::uint64_t index)
  {
    return mix_seed(mix_seed(base, static_cast<std::uint64_t>(stream)), index);
  }

  MheInstance instance_at(const ProblemSetup &setup, const std::vector<Mat> &P,
                          const std::vector<Vec> &measurements, const std::vector<Vec> &estimates, int t)
  {
    InfoVector iv = build_info_vector(measurements, estimates, P, setup.model, t, setup.horizon);
    return make_instance(std::move(iv), setup.gamma, setup.noise);
  }

  std::vector<Vec> exact_prior_chain(const ProblemSetup &setup, const std::vector<Mat> &P,
                                     const std::vector<Vec> &measurements, int t)
  {
    const int M = setup.horizon;
    std::vector<Vec> est(static_cast<std::size_t>(std::max(t, 0)) + 1);
    est[0] = setup.x0_hat;
    std::vector<int> needed;
    for (int k = t - M; k > 0; k -= M)
      needed.push_back(k);
    for (auto it = needed.rbegin(); it != needed.rend(); ++it)
    {
      const MheInstance inst = instance_at(setup, P, measurements, est, *it);
      est[static_cast<std::size_t>(*it)] = solve_primal(inst).estimate();
    }
    return est;
  }

  SampledInstance sample_instance(const ProblemSetup &setup, const std::vector<Mat> &P, int T, std::uint64_t seed)
  {
    if (T < 1)
      throw DomainError("sample_instance: T must be >= 1");
    Rng rng(mix_seed(seed, 0));
    std::uniform_int_distribution<int> U(1, T);
    SampledInstance s;
    s.seed = seed;
    s.t = U(rng);
    s.traj = simulate_trajectory(setup.model, setup.noise, setup.x0, s.t, mix_seed(seed, 1));
    const std::vector<Vec> est = exact_prior_chain(setup, P, s.traj.measurements, s.t);
    s.inst = instance_at(setup, P, s.traj.measurements, est, s.t);
    s.features = encode_features(s.inst.iv);
    return s;
  }

  std::vector<SampledInstance> sample_instances(const ProblemSetup &setup, const std::vector<Mat> &P, int T,
                                                std::size_t count, std::uint64_t base, SampleStream stream,
                                                int threads, int *skipped)
  {
    std::vector<SampledInstance> out;
    out.reserve(count);
    std::uint64_t next = 0;
    int skips = 0;
    while (out.size() < count)
    {
      const std::size_t want = count - out.size();
      std::vector<std::optional<SampledInstance>> batch(want);
      parallel_for(want, threads, [&](std::size_t i) {
        const std::uint64_t seed = stream_seed(base, stream, next + i);
        try
        {
          batch[i] = sample_instance(setup, P, T, seed);
        }
        catch (const Error &e)
        {
          std::cerr << "sample " << seed << " skipped: " << e.what() << '\n';
        }
      });
      next += want;
      for (auto &b : batch)
      {
        if (b)
          out.push_back(std::move(*b));
        else
          ++skips;
      }
      if (skips > static_cast<int>(10 * count + 100))
        throw Error("sample_instances: too many failed draws");
    }
    if (skipped)
      *skipped = skips;
    return out;
  }

  std::string to_string(Encoding e) { return e == Encoding::Raw ? "raw" : "residual"; }

  Encoding encoding_from_string(const std::string &name)
  {
    if (name == "raw")
      return Encoding::Raw;
    if (name == "residual")
      return Encoding::Residual;
    throw ConfigError("unknown encoding '" + name + "'");
  }

  int encoded_dim(Encoding e, int n, int m, int horizon, bool lti)
  {
    if (e == Encoding::Raw)
      return feature_dim(n, m, horizon, lti);
    int dim = horizon * m + 1;
    if (!lti)
      dim += horizon * (n * n + m * n) + n * n;
    return dim;
  }

  Vec encode(const InfoVector &iv, Encoding e)
  {
    if (e == Encoding::Raw)
      return encode_features(iv);
    const int n = iv.n();
    const int m = iv.m();
    const int H = iv.horizon;
    const int pad = H - iv.M;
    std::vector<Vec> r;
    r.reserve(static_cast<std::size_t>(iv.M));
    Vec x = iv.prior_estimate;
    for (int k = 0; k < iv.M; ++k)
    {
      r.push_back(iv.window_measurements[k] - iv.window_measurement_maps[k] * x);
      x = iv.window_dynamics[k] * x;
    }
    Vec out(encoded_dim(e, n, m, H, iv.lti));
    Eigen::Index pos = 0;
    for (int k = 0; k < H; ++k)
    {
      out.segment(pos, m) = r[static_cast<std::size_t>(std::max(k - pad, 0))];
      pos += m;
    }
    out[pos++] = static_cast<double>(pad) / H;
    if (!iv.lti)
    {
      // the time-varying tail is shared with the raw encoding
      const Vec raw = encode_features(iv);
      const Eigen::Index tail = raw.size() - (H * m + n);
      out.segment(pos, tail) = raw.tail(tail);
    }
    return out;
  }

  int primal_target_dim(int n, int horizon) { return n + horizon * n; }
  int dual_target_dim(int m, int horizon) { return horizon * m; }

  Vec primal_target(const PrimalSolution &sol, int horizon, Encoding e, const Vec &prior)
  {
    const auto n = sol.x0_hat.size();
    const auto M = static_cast<int>(sol.xi_hat.size());
    if (M > horizon)
      throw DimensionMismatch("primal_target: window longer than horizon");
    Vec out = Vec::Zero(primal_target_dim(static_cast<int>(n), horizon));
    out.head(n) = e == Encoding::Residual ? Vec(sol.x0_hat - prior) : sol.x0_hat;
    const Eigen::Index base = n + (horizon - M) * n;
    for (int k = 0; k < M; ++k)
      out.segment(base + k * n, n) = sol.xi_hat[k];
    return out;
  }

  Vec dual_target(const Vec &mu, int m, int horizon)
  {
    if (mu.size() % m != 0 || mu.size() > horizon * m)
      throw DimensionMismatch("dual_target: multiplier length");
    Vec out = Vec::Zero(dual_target_dim(m, horizon));
    out.tail(mu.size()) = mu;
    return out;
  }

  DecodedPrimal decode_primal(const Vec &out, int n, int M, int horizon, Encoding e, const Vec &prior)
  {
    if (out.size() != primal_target_dim(n, horizon) || M > horizon || M < 1)
      throw DimensionMismatch("decode_primal: output length");
    DecodedPrimal d;
    d.x0 = out.head(n);
    if (e == Encoding::Residual)
      d.x0 += prior;
    const Eigen::Index base = n + (horizon - M) * n;
    for (int k = 0; k < M; ++k)
      d.xi.push_back(out.segment(base + k * n, n));
    return d;
  }

  Vec decode_dual(const Vec &out, int m, int M, int horizon)
  {
    if (out.size() != dual_target_dim(m, horizon) || M > horizon || M < 1)
      throw DimensionMismatch("decode_dual: output length");
    return out.tail(M * m);
  }

  std::string to_string(DatasetKind kind) { return kind == DatasetKind::Dual ? "dual" : "primal"; }

  DatasetKind dataset_kind_from_string(const std::string &name)
  {
    if (name == "primal")
      return DatasetKind::Primal;
    if (name == "dual")
      return DatasetKind::Dual;
    throw ConfigError("unknown dataset kind '" + name + "'");
  }

  Dataset gen_dataset(const ProblemSetup &setup, const std::vector<Mat> &P, int T, std::size_t count,
                      std::uint64_t seed, DatasetKind kind, Encoding encoding, int threads)
  {
    if (count < 1)
      throw DomainError("gen_dataset: count must be >= 1");
    const int n = setup.model.n();
    const int m = setup.model.m();
    const int H = setup.horizon;
    const SampleStream stream = kind == DatasetKind::Primal ? SampleStream::TrainPrimal : SampleStream::TrainDual;

    struct Row
    {
      Vec x, y;
      double value = 0.0;
      std::uint64_t seed = 0;
      int t = 0;
    };

    Dataset data;
    data.kind = kind;
    data.encoding = encoding;
    std::vector<Row> rows;
    rows.reserve(count);
    std::uint64_t next = 0;
    while (rows.size() < count)
    {
      const std::size_t want = count - rows.size();
      std::vector<std::optional<Row>> batch(want);
      parallel_for(want, threads, [&](std::size_t i) {
        const std::uint64_t s = stream_seed(seed, stream, next + i);
        try
        {
          const SampledInstance smp = sample_instance(setup, P, T, s);
          const PrimalSolution ps = solve_primal(smp.inst);
          Row r;
          r.x = encode(smp.inst.iv, encoding);
          r.seed = s;
          r.t = smp.t;
          if (kind == DatasetKind::Primal)
          {
            r.y = primal_target(ps, H, encoding, smp.inst.iv.prior_estimate);
            r.value = ps.cost;
          }
          else
          {
            const DualSolution ds = solve_dual(smp.inst, {}, flatten(ps.mu));
            r.y = dual_target(ds.mu, m, H);
            r.value = ds.value;
          }
          batch[i] = std::move(r);
        }
        catch (const Error &e)
        {
          std::cerr << "sample " << s << " skipped: " << e.what() << '\n';
        }
      });
      next += want;
      for (auto &b : batch)
      {
        if (b)
          rows.push_back(std::move(*b));
        else
          ++data.skipped;
      }
      if (data.skipped > static_cast<int>(10 * count + 100))
        throw Error("gen_dataset: too many failed draws");
    }

    const int fdim = encoded_dim(encoding, n, m, H, setup.model.lti());
    const int tdim = kind == DatasetKind::Primal ? primal_target_dim(n, H) : dual_target_dim(m, H);
    data.inputs.resize(fdim, static_cast<Eigen::Index>(count));
    data.targets.resize(tdim, static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i)
    {
      const auto c = static_cast<Eigen::Index>(i);
      data.inputs.col(c) = rows[i].x;
      data.targets.col(c) = rows[i].y;
      data.seeds.push_back(rows[i].seed);
      data.times.push_back(rows[i].t);
      data.values.push_back(rows[i].value);
    }
    return data;
  }

  void write_dataset_csv(std::ostream &out, const Dataset &data)
  {
    out << "# encoding=" << to_string(data.encoding) << '\n';
    out << "seed,t,value";
    for (Eigen::Index i = 0; i < data.inputs.rows(); ++i)
      out << ",f" << i;
    for (Eigen::Index i = 0; i < data.targets.rows(); ++i)
      out << ',' << (data.kind == DatasetKind::Primal ? "z" : "mu") << i;
    out << '\n';
    out.precision(17);
    for (int c = 0; c < data.size(); ++c)
    {
      out << data.seeds[static_cast<std::size_t>(c)] << ',' << data.times[static_cast<std::size_t>(c)] << ','
          << data.values[static_cast<std::size_t>(c)];
      for (Eigen::Index i = 0; i < data.inputs.rows(); ++i)
        out << ',' << data.inputs(i, c);
      for (Eigen::Index i = 0; i < data.targets.rows(); ++i)
        out << ',' << data.targets(i, c);
      out << '\n';
    }
  }

  Dataset read_dataset_csv(const std::filesystem::path &path)
  {
    std::ifstream in(path);
    if (!in)
      throw ConfigError("read_dataset_csv: cannot open " + path.string());
    std::string line;
    Dataset data;
    do
    {
      if (!std::getline(in, line))
        throw ConfigError("read_dataset_csv: missing header in " + path.string());
      const auto at = line.find("encoding=");
      if (!line.empty() && line[0] == '#' && at != std::string::npos)
      {
        const auto end = line.find_first_of(" ,\r", at);
        data.encoding = encoding_from_string(line.substr(at + 9, end == std::string::npos ? end : end - at - 9));
      }
    } while (!line.empty() && line[0] == '#');

    int fdim = 0, tdim = 0;
    {
      std::istringstream hs(line);
      std::string col;
      while (std::getline(hs, col, ','))
      {
        if (col.rfind("f", 0) == 0)
          ++fdim;
        else if (col.rfind("z", 0) == 0)
        {
          ++tdim;
          data.kind = DatasetKind::Primal;
        }
        else if (col.rfind("mu", 0) == 0)
        {
          ++tdim;
          data.kind = DatasetKind::Dual;
        }
      }
    }
    if (fdim == 0 || tdim == 0)
      throw ConfigError("read_dataset_csv: header names no feature or target columns");

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line))
    {
      if (line.empty())
        continue;
      std::istringstream ls(line);
      std::string cell;
      std::vector<double> vals;
      while (std::getline(ls, cell, ','))
        vals.push_back(std::stod(cell));
      if (static_cast<int>(vals.size()) != 3 + fdim + tdim)
        throw ConfigError("read_dataset_csv: row has wrong column count");
      data.seeds.push_back(static_cast<std::uint64_t>(std::stoull(line.substr(0, line.find(',')))));
      data.times.push_back(static_cast<int>(vals[1]));
      data.values.push_back(vals[2]);
      rows.push_back(std::move(vals));
    }
    data.inputs.resize(fdim, static_cast<Eigen::Index>(rows.size()));
    data.targets.resize(tdim, static_cast<Eigen::Index>(rows.size()));
    for (std::size_t c = 0; c < rows.size(); ++c)
    {
      for (int i = 0; i < fdim; ++i)
        data.inputs(i, static_cast<Eigen::Index>(c)) = rows[c][static_cast<std::size_t>(3 + i)];
      for (int i = 0; i < tdim; ++i)
        data.targets(i, static_cast<Eigen::Index>(c)) = rows[c][static_cast<std::size_t>(3 + fdim + i)];
    }
    return data;
  }

} // namespace pdmhe
