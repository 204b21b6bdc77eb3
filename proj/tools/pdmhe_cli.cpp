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

// pdmhe command-line driver.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pdmhe/config.hpp"
#include "pdmhe/dual.hpp"
#include "pdmhe/errors.hpp"
#include "pdmhe/parallel.hpp"
#include "pdmhe/stability.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pdmhe;

namespace
{

  enum ExitCode
  {
    kOk = 0,
    kConfig = 2,
    kVerifyFail = 3,
    kSolver = 4,
  };

  struct Globals
  {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    bool debug = false;
  };

  struct Context
  {
    RunConfig cfg;
    std::vector<Mat> P;
    fs::path out;
    int threads = 1;
    bool debug = false;

    std::string header(const std::string &cmd) const
    {
      return "# pdmhe " + cmd + " config_hash=" + cfg.hash() + " seed=" + std::to_string(cfg.mc.seed);
    }

    json meta(const std::string &cmd) const
    {
      return {{"command", cmd}, {"config_hash", cfg.hash()}, {"seed", cfg.mc.seed}};
    }

    void log(const std::string &msg) const
    {
      if (debug)
        std::cerr << "[pdmhe] " << msg << '\n';
    }
  };

  Context make_context(const Globals &g)
  {
    Context ctx;
    if (g.config.empty())
    {
      ctx.cfg.setup = double_integrator_problem();
      ctx.cfg.source = to_json(ctx.cfg);
    }
    else
      ctx.cfg = load_run_config(g.config);
    if (g.seed)
      ctx.cfg.mc.seed = *g.seed;
    if (!g.out.empty())
      ctx.cfg.out_dir = g.out;
    ctx.cfg.mc.threads = g.threads;
    ctx.threads = g.threads;
    ctx.debug = g.debug;
    ctx.out = ctx.cfg.out_dir;
    fs::create_directories(ctx.out);
    ctx.P = arrival_weights(ctx.cfg.setup, ctx.cfg.mc.T);
    return ctx;
  }

  std::ofstream open_out(const fs::path &path)
  {
    std::ofstream f(path);
    if (!f)
      throw ConfigError("cannot write " + path.string());
    f.precision(17);
    return f;
  }

  std::string run_name(const char *stem, int r)
  {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%04d.csv", stem, r);
    return buf;
  }

  double parse_delta(const std::string &s)
  {
    if (s == "inf" || s == "+inf" || s == "infinity")
      return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = 0.0;
    try
    {
      v = std::stod(s, &used);
    }
    catch (const std::exception &)
    {
      throw ConfigError("bad delta: " + s);
    }
    if (used != s.size() || !(v >= 0.0))
      throw ConfigError("bad delta: " + s);
    return v;
  }

  struct Nets
  {
    std::unique_ptr<PrimalEstimator> primal;
    std::unique_ptr<DualEstimator> dual;
  };

  Nets load_nets(const Context &ctx, const std::string &primal_path, const std::string &dual_path)
  {
    const fs::path pp = primal_path.empty() ? ctx.out / "primal.mlp.json" : fs::path(primal_path);
    const fs::path dp = dual_path.empty() ? ctx.out / "dual.mlp.json" : fs::path(dual_path);
    if (!fs::exists(pp) || !fs::exists(dp))
      throw ConfigError("network files not found (" + pp.string() + ", " + dp.string() + "); run train first");
    Nets n;
    n.primal = std::make_unique<MlpPrimalEstimator>(load_mlp(pp));
    n.dual = std::make_unique<MlpDualEstimator>(load_mlp(dp));
    return n;
  }

  double stored_delta(const Context &ctx)
  {
    const fs::path p = ctx.out / "budget.json";
    if (!fs::exists(p))
      throw ConfigError("no threshold: pass --delta or run verify first (" + p.string() + " missing)");
    std::ifstream in(p);
    try
    {
      return json::parse(in).at("delta").get<double>();
    }
    catch (const json::exception &e)
    {
      throw ConfigError(p.string() + ": " + e.what());
    }
  }

  void write_trajectory(std::ostream &out, const Trajectory &traj)
  {
    const int n = static_cast<int>(traj.states.front().size());
    const int m = traj.measurements.empty() ? 0 : static_cast<int>(traj.measurements.front().size());
    out << "t";
    for (int i = 0; i < n; ++i)
      out << ",x" << i;
    for (int i = 0; i < m; ++i)
      out << ",y" << i;
    for (int i = 0; i < n; ++i)
      out << ",xi" << i;
    for (int i = 0; i < m; ++i)
      out << ",zeta" << i;
    out << '\n';
    const int T = traj.length();
    for (int t = 0; t <= T; ++t)
    {
      out << t;
      for (int i = 0; i < n; ++i)
        out << ',' << traj.states[t](i);
      auto cells = [&](const std::vector<Vec> &seq, int dim) {
        for (int i = 0; i < dim; ++i)
        {
          out << ',';
          if (t < T)
            out << seq[t](i);
        }
      };
      cells(traj.measurements, m);
      cells(traj.process_noise, n);
      cells(traj.measurement_noise, m);
      out << '\n';
    }
  }

  // ------------------------------------------------------------------ simulate

  int cmd_simulate(const Context &ctx, int runs)
  {
    const fs::path dir = ctx.out / "trajectories";
    fs::create_directories(dir);
    parallel_for(static_cast<std::size_t>(runs), ctx.threads, [&](std::size_t r) {
      const Trajectory traj = mc_trajectory(ctx.cfg.setup, ctx.cfg.mc, static_cast<int>(r));
      std::ofstream f = open_out(dir / run_name("run", static_cast<int>(r)));
      f << "# pdmhe simulate config_hash=" << ctx.cfg.hash() << " seed=" << traj.seed << '\n';
      write_trajectory(f, traj);
    });
    std::cout << "wrote " << runs << " trajectories to " << dir.string() << '\n';
    return kOk;
  }

  // --------------------------------------------------------------- gen-dataset

  int cmd_gen_dataset(const Context &ctx, const std::string &kind_name, int count)
  {
    const DatasetKind kind = dataset_kind_from_string(kind_name);
    if (count <= 0)
      count = kind == DatasetKind::Primal ? ctx.cfg.n_train_primal : ctx.cfg.n_train_dual;
    const Dataset ds = gen_dataset(ctx.cfg.setup, ctx.P, ctx.cfg.mc.T, static_cast<std::size_t>(count), ctx.cfg.mc.seed,
                                   kind, ctx.cfg.encoding, ctx.threads);
    const fs::path path = ctx.out / ("dataset_" + to_string(kind) + ".csv");
    std::ofstream f = open_out(path);
    f << ctx.header("gen-dataset") << '\n';
    write_dataset_csv(f, ds);
    std::cout << "wrote " << ds.size() << " samples (" << ds.skipped << " skipped draws) to " << path.string() << '\n';
    return kOk;
  }

  // --------------------------------------------------------------------- train

  void train_one(const Context &ctx, DatasetKind kind)
  {
    const auto t0 = std::chrono::steady_clock::now();
    const TrainedEstimator te = train_estimator(ctx.cfg, ctx.P, kind, ctx.threads);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string stem = to_string(kind);
    save_mlp(te.params, ctx.out / (stem + ".mlp.json"), ctx.meta("train"));
    std::ofstream f = open_out(ctx.out / (stem + "_curve.csv"));
    f << ctx.header("train") << '\n';
    write_curve_csv(f, te.curve);
    double best = std::numeric_limits<double>::infinity();
    for (const auto &e : te.curve)
      best = std::min(best, e.validation_loss);
    std::cout << stem << ": " << te.samples << " samples, best validation loss " << best << ", " << std::fixed
              << std::setprecision(1) << secs << " s\n"
              << std::defaultfloat;
  }

  int cmd_train(const Context &ctx, const std::string &kind)
  {
    if (kind != "primal" && kind != "dual" && kind != "both")
      throw ConfigError("train: --kind must be primal, dual or both");
    if (kind != "dual")
      train_one(ctx, DatasetKind::Primal);
    if (kind != "primal")
      train_one(ctx, DatasetKind::Dual);
    return kOk;
  }

  // -------------------------------------------------------------------- verify

  struct VerifyOptions
  {
    std::string estimator = "mlp";
    std::string primal, dual;
    std::optional<double> delta_p, delta_d;
  };

  int cmd_verify(Context &ctx, const VerifyOptions &opt)
  {
    if (opt.delta_p)
      ctx.cfg.delta_p = opt.delta_p;
    if (opt.delta_d)
      ctx.cfg.delta_d = opt.delta_d;
    Nets nets;
    if (opt.estimator == "mlp")
      nets = load_nets(ctx, opt.primal, opt.dual);
    else if (opt.estimator == "oracle")
    {
      nets.primal = std::make_unique<OraclePrimalEstimator>();
      nets.dual = std::make_unique<OracleDualEstimator>();
    }
    else if (opt.estimator == "zero")
    {
      nets.primal = std::make_unique<ZeroPrimalEstimator>();
      nets.dual = std::make_unique<ZeroDualEstimator>();
    }
    else
      throw ConfigError("verify: --estimator must be mlp, oracle or zero");
    if (opt.estimator != "mlp")
    {
      ctx.cfg.delta_p = ctx.cfg.delta_p.value_or(1e-6);
      ctx.cfg.delta_d = ctx.cfg.delta_d.value_or(1e-6);
    }

    const auto samples = prepare_samples(ctx.cfg.setup, ctx.P, ctx.cfg.mc.T,
                                         static_cast<std::size_t>(ctx.cfg.verification_count()), ctx.cfg.mc.seed,
                                         SampleStream::Verification, ctx.threads);
    ctx.log("prepared " + std::to_string(samples.size()) + " verification samples");

    Thresholds th;
    VerificationReport rep;
    for (int attempt = 0;; ++attempt)
    {
      th = resolve_thresholds(ctx.cfg, ctx.P, *nets.primal, *nets.dual, ctx.threads);
      rep = verify(*nets.primal, *nets.dual, samples, ctx.cfg.budget(th.delta_p, th.delta_d));
      if (rep.passed() || opt.estimator != "mlp" || attempt >= ctx.cfg.retries)
        break;
      std::cout << "verification failed (attempt " << attempt + 1 << "), retraining\n";
      ctx.cfg.train.seed = mix_seed(ctx.cfg.train.seed, 0x7e7);
      for (DatasetKind kind : {DatasetKind::Primal, DatasetKind::Dual})
      {
        const TrainedEstimator te = train_estimator(ctx.cfg, ctx.P, kind, ctx.threads);
        save_mlp(te.params, ctx.out / (to_string(kind) + ".mlp.json"), ctx.meta("verify"));
      }
      nets = load_nets(ctx, "", "");
    }

    const CertBudget b = ctx.cfg.budget(th.delta_p, th.delta_d);
    json budget = {{"eps_p", b.eps_p},     {"eps_d", b.eps_d},     {"beta_p", b.beta_p},
                   {"beta_d", b.beta_d},   {"delta_p", b.delta_p}, {"delta_d", b.delta_d},
                   {"delta_gap", b.delta_gap}, {"delta", b.delta()}, {"estimator", opt.estimator},
                   {"verified", rep.passed()}, {"meta", ctx.meta("verify")}};
    if (th.calibrated)
      budget["calibration"] = {{"samples", ctx.cfg.n_calibration},
                               {"factor", ctx.cfg.calibration_factor},
                               {"max_excess", th.calibration.max_excess},
                               {"max_shortfall", th.calibration.max_shortfall}};
    open_out(ctx.out / "budget.json") << budget.dump(2) << '\n';
    json report = rep.to_json();
    report["meta"] = ctx.meta("verify");
    open_out(ctx.out / "verification.json") << report.dump(2) << '\n';
    std::ofstream csv = open_out(ctx.out / "verification.csv");
    csv << ctx.header("verify") << '\n';
    rep.write_csv(csv);

    std::cout << "verification " << (rep.passed() ? "PASSED" : "FAILED") << ": N=" << rep.n_samples
              << " worst_excess=" << rep.worst_excess << " (delta_p=" << th.delta_p << ")"
              << " worst_shortfall=" << rep.worst_shortfall << " (delta_d=" << th.delta_d << ")"
              << " infeasible=" << rep.infeasible << '\n';
    return rep.passed() ? kOk : kVerifyFail;
  }

  // ----------------------------------------------------------------------- run

  struct RunOptions
  {
    int runs = 1;
    std::string delta;
    std::string primal, dual;
    bool audit = false;
  };

  int cmd_run(const Context &ctx, const RunOptions &opt)
  {
    const double delta = opt.delta.empty() ? stored_delta(ctx) : parse_delta(opt.delta);
    const Nets nets = load_nets(ctx, opt.primal, opt.dual);
    const fs::path dir = ctx.out / "runs";
    fs::create_directories(dir);
    const ProblemSetup &s = ctx.cfg.setup;
    const int n = s.model.n();

    std::optional<StabilityCert> cert;
    if (opt.audit)
    {
      cert = make_stability_cert(s.model, s.noise.Q, s.noise.R, ctx.P, s.gamma, s.horizon);
      std::cout << "stability: lambda_max=" << cert->lambda_max << " rho=" << cert->rho
                << " min_horizon=" << cert->min_horizon << " lmi_max_eig=" << cert->lmi_max_eigenvalue << '\n';
      if (!cert->satisfied())
      {
        std::cout << "stability hypotheses not satisfied; audit not possible\n";
        return kVerifyFail;
      }
    }

    std::vector<long> backups(static_cast<std::size_t>(opt.runs), 0);
    std::vector<int> violations(static_cast<std::size_t>(opt.runs), 0);
    std::vector<RunTrace> debug_trace(1);
    parallel_for(static_cast<std::size_t>(opt.runs), ctx.threads, [&](std::size_t r) {
      const Trajectory traj = mc_trajectory(s, ctx.cfg.mc, static_cast<int>(r));
      const RunTrace tr = run_pdmhe(s, ctx.P, traj, *nets.primal, *nets.dual, delta);
      std::ofstream f = open_out(dir / run_name("run", static_cast<int>(r)));
      f << "# pdmhe run config_hash=" << ctx.cfg.hash() << " seed=" << traj.seed << '\n';
      f << "t";
      for (int i = 0; i < n; ++i)
        f << ",xhat" << i;
      for (int i = 0; i < n; ++i)
        f << ",x" << i;
      f << ",provenance,gap\n";
      for (std::size_t t = 0; t < tr.estimates.size(); ++t)
      {
        f << t;
        for (int i = 0; i < n; ++i)
          f << ',' << tr.estimates[t](i);
        for (int i = 0; i < n; ++i)
          f << ',' << traj.states[t](i);
        f << ',' << tr.provenance[t] << ',';
        if (t > 0 && std::isfinite(tr.gaps[t - 1]))
          f << tr.gaps[t - 1];
        f << '\n';
        if (tr.provenance[t] == "backup")
          ++backups[r];
      }
      if (cert)
      {
        const AuditReport ar = audit_trajectory(traj, tr.estimates, tr.provenance, ctx.P, s.noise.Q, *cert, delta);
        violations[r] = ar.violations;
        std::ofstream af = open_out(dir / run_name("audit", static_cast<int>(r)));
        af << "# pdmhe run config_hash=" << ctx.cfg.hash() << " seed=" << traj.seed << '\n';
        write_audit_csv(af, ar);
      }
      if (r == 0)
        debug_trace[0] = tr;
    });

    if (ctx.debug)
    {
      const Trajectory traj = mc_trajectory(s, ctx.cfg.mc, 0);
      const MheInstance inst = instance_at(s, ctx.P, traj.measurements, debug_trace[0].estimates, traj.length());
      QpSettings qs;
      std::ofstream qf = open_out(ctx.out / "qp_trace.csv");
      qf << ctx.header("run") << "\niteration,primal_residual,dual_residual,objective\n";
      qs.trace = &qf;
      const PrimalSolution ps = solve_primal(inst, qs);
      DualSettings ds;
      std::ofstream df = open_out(ctx.out / "dual_trace.csv");
      df << ctx.header("run") << "\niteration,G,grad_norm\n";
      ds.trace = &df;
      solve_dual(inst, ds);
      ctx.log("solver traces for the final step of run 0 written, V*=" + std::to_string(ps.cost));
    }

    long total_backup = 0;
    int total_violations = 0;
    for (int r = 0; r < opt.runs; ++r)
    {
      total_backup += backups[r];
      total_violations += violations[r];
    }
    const long steps = static_cast<long>(opt.runs) * ctx.cfg.mc.T;
    std::cout << "runs=" << opt.runs << " delta=" << delta << " backup_fraction="
              << static_cast<double>(total_backup) / static_cast<double>(steps) << '\n';
    if (cert)
    {
      std::cout << "audit " << (total_violations == 0 ? "PASSED" : "FAILED") << ": " << total_violations
                << " bound violations\n";
      if (total_violations > 0)
        return kVerifyFail;
    }
    return kOk;
  }

  // --------------------------------------------------------- bench / plot-data

  McResult run_mc(const Context &ctx, int runs, const std::string &delta_opt, bool need_nets,
                  const std::string &primal, const std::string &dual)
  {
    McConfig mc = ctx.cfg.mc;
    if (runs > 0)
      mc.runs = runs;
    const bool have_nets = need_nets || (fs::exists(primal.empty() ? ctx.out / "primal.mlp.json" : fs::path(primal)) &&
                                         fs::exists(dual.empty() ? ctx.out / "dual.mlp.json" : fs::path(dual)));
    if (!have_nets)
    {
      ctx.log("no networks found, running KF and MHE only");
      return monte_carlo(ctx.cfg.setup, ctx.P, mc);
    }
    const Nets nets = load_nets(ctx, primal, dual);
    const double delta = delta_opt.empty() ? stored_delta(ctx) : parse_delta(delta_opt);
    return monte_carlo(ctx.cfg.setup, ctx.P, mc, nets.primal.get(), nets.dual.get(), delta);
  }

  int cmd_bench(const Context &ctx, int runs, const std::string &delta, const std::string &primal,
                const std::string &dual)
  {
    const McResult res = run_mc(ctx, runs, delta, true, primal, dual);
    std::ofstream f = open_out(ctx.out / "summary.csv");
    f << ctx.header("bench") << '\n';
    write_summary_csv(f, res);
    std::cout << std::left << std::setw(8) << "method" << std::setw(12) << "ARMSE" << std::setw(16)
              << "median step us" << "backup fraction\n";
    for (const auto &e : res.estimators)
      std::cout << std::setw(8) << e.name << std::setw(12) << e.armse << std::setw(16)
                << e.median_step_seconds * 1e6 << e.backup_fraction << '\n';
    const double ratio = res.get("MHE").median_step_seconds / res.get("PD-MHE").median_step_seconds;
    std::cout << "median step time ratio MHE / PD-MHE: " << ratio << '\n';
    return kOk;
  }

  int cmd_plot_data(const Context &ctx, int runs, const std::string &delta, const std::string &primal,
                    const std::string &dual)
  {
    const McResult res = run_mc(ctx, runs, delta, false, primal, dual);
    const fs::path path = ctx.out / "plot.csv";
    std::ofstream f = open_out(path);
    f << ctx.header("plot-data") << '\n';
    write_plot_csv(f, res);
    std::cout << "wrote " << path.string() << '\n';
    return kOk;
  }

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Primal-dual learned moving horizon estimation"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "run configuration JSON")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "output directory (overrides the config)");
  app.add_option("--seed", g.seed, "base seed (overrides the config)");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--debug", g.debug, "verbose logging and solver traces");

  int sim_runs = 0;
  auto *sim = app.add_subcommand("simulate", "write simulated trajectories");
  sim->add_option("--runs", sim_runs, "number of trajectories (default: Monte-Carlo runs)");

  std::string ds_kind = "primal";
  int ds_count = 0;
  auto *gen = app.add_subcommand("gen-dataset", "generate a training dataset");
  gen->add_option("--kind", ds_kind, "primal or dual")->check(CLI::IsMember({"primal", "dual"}));
  gen->add_option("--count", ds_count, "number of samples (default: config)");

  std::string train_kind = "both";
  auto *tr = app.add_subcommand("train", "generate data and train the estimator networks");
  tr->add_option("--kind", train_kind, "primal, dual or both")->check(CLI::IsMember({"primal", "dual", "both"}));

  VerifyOptions vo;
  double vdp = -1.0, vdd = -1.0;
  auto *ver = app.add_subcommand("verify", "randomized offline verification");
  ver->add_option("--estimator", vo.estimator, "mlp, oracle or zero")->check(CLI::IsMember({"mlp", "oracle", "zero"}));
  ver->add_option("--primal", vo.primal, "primal network file");
  ver->add_option("--dual", vo.dual, "dual network file");
  ver->add_option("--delta-p", vdp, "primal suboptimality level")->check(CLI::NonNegativeNumber);
  ver->add_option("--delta-d", vdd, "dual suboptimality level")->check(CLI::NonNegativeNumber);

  RunOptions ro;
  auto *run = app.add_subcommand("run", "certified online estimation");
  run->add_option("--runs", ro.runs, "number of trajectories")->check(CLI::PositiveNumber);
  run->add_option("--delta", ro.delta, "gap threshold, number or inf (default: budget.json)");
  run->add_option("--primal", ro.primal, "primal network file");
  run->add_option("--dual", ro.dual, "dual network file");
  run->add_flag("--audit", ro.audit, "audit every run against the stability error bound");

  int mc_runs = 0;
  std::string mc_delta, mc_primal, mc_dual;
  auto *bench = app.add_subcommand("bench", "ARMSE and step-time table for KF, MHE and PD-MHE");
  auto *plot = app.add_subcommand("plot-data", "per-step RMSE mean and 95% band per estimator");
  for (auto *sc : {bench, plot})
  {
    sc->add_option("--runs", mc_runs, "Monte-Carlo runs (default: config)");
    sc->add_option("--delta", mc_delta, "gap threshold (default: budget.json)");
    sc->add_option("--primal", mc_primal, "primal network file");
    sc->add_option("--dual", mc_dual, "dual network file");
  }

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError &e)
  {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try
  {
    Context ctx = make_context(g);
    ctx.log("config_hash=" + ctx.cfg.hash() + " seed=" + std::to_string(ctx.cfg.mc.seed));
    if (*sim)
      return cmd_simulate(ctx, sim_runs > 0 ? sim_runs : ctx.cfg.mc.runs);
    if (*gen)
      return cmd_gen_dataset(ctx, ds_kind, ds_count);
    if (*tr)
      return cmd_train(ctx, train_kind);
    if (*ver)
    {
      if (vdp >= 0.0)
        vo.delta_p = vdp;
      if (vdd >= 0.0)
        vo.delta_d = vdd;
      return cmd_verify(ctx, vo);
    }
    if (*run)
      return cmd_run(ctx, ro);
    if (*bench)
      return cmd_bench(ctx, mc_runs, mc_delta, mc_primal, mc_dual);
    if (*plot)
      return cmd_plot_data(ctx, mc_runs, mc_delta, mc_primal, mc_dual);
  }
  catch (const ConfigError &e)
  {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  }
  catch (const DomainError &e)
  {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  }
  catch (const DimensionMismatch &e)
  {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  }
  catch (const Error &e)
  {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolver;
  }
  catch (const std::exception &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
