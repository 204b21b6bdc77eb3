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

#include "pdmhe/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>

#include "pdmhe/dual.hpp"
#include "pdmhe/errors.hpp"
#include "pdmhe/parallel.hpp"

namespace pdmhe
{

  namespace
  {
    constexpr double kFeasTol = 1e-8;
    constexpr double kInf = std::numeric_limits<double>::infinity();
  } // namespace

  void CertBudget::validate() const
  {
    auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!in_unit(eps_p) || !in_unit(eps_d) || !in_unit(beta_p) || !in_unit(beta_d))
      throw DomainError("CertBudget: eps and beta must lie in (0, 1)");
    if (delta_p < 0.0 || delta_d < 0.0 || delta_gap < 0.0)
      throw DomainError("CertBudget: suboptimality levels must be nonnegative");
  }

  CertBudget CertBudget::symmetric(double eps, double beta, double delta_p, double delta_d, double delta_gap)
  {
    CertBudget b{0.5 * eps, 0.5 * eps, 0.5 * beta, 0.5 * beta, delta_p, delta_d, delta_gap};
    b.validate();
    return b;
  }

  int min_sample_size(double eps, double beta)
  {
    if (!(eps > 0.0 && eps < 1.0) || !(beta > 0.0 && beta < 1.0))
      throw DomainError("min_sample_size: eps and beta must lie in (0, 1)");
    const double ratio = std::log(1.0 / beta) / -std::log1p(-eps);
    const double nearest = std::round(ratio);
    if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest))
      return static_cast<int>(std::max(1.0, nearest));
    return static_cast<int>(std::ceil(ratio));
  }

  BudgetTotals violation_budget(const CertBudget &b)
  {
    return {b.eps_p + b.eps_d, b.beta_p + b.beta_d, b.delta()};
  }

  // ------------------------------------------------------------ estimators

  MlpPrimalEstimator::MlpPrimalEstimator(MlpParams params) : params_(std::move(params)) { params_.validate(); }

  PrimalGuess MlpPrimalEstimator::estimate(const MheInstance &inst, const Vec &features) const
  {
    const Encoding e = encoding_from_string(params_.encoding);
    const Vec in = e == Encoding::Raw ? features : encode(inst.iv, e);
    const DecodedPrimal d =
        decode_primal(forward(params_, in), inst.n(), inst.M(), inst.iv.horizon, e, inst.iv.prior_estimate);
    return {d.x0, d.xi};
  }

  MlpDualEstimator::MlpDualEstimator(MlpParams params) : params_(std::move(params)) { params_.validate(); }

  Vec MlpDualEstimator::estimate(const MheInstance &inst, const Vec &features) const
  {
    const Encoding e = encoding_from_string(params_.encoding);
    const Vec in = e == Encoding::Raw ? features : encode(inst.iv, e);
    return decode_dual(forward(params_, in), inst.m(), inst.M(), inst.iv.horizon);
  }

  PrimalGuess OraclePrimalEstimator::estimate(const MheInstance &inst, const Vec &) const
  {
    const PrimalSolution s = solve_primal(inst);
    return {s.x0_hat, s.xi_hat};
  }

  Vec OracleDualEstimator::estimate(const MheInstance &inst, const Vec &) const
  {
    const PrimalSolution s = solve_primal(inst);
    return solve_dual(inst, {}, flatten(s.mu)).mu;
  }

  PrimalGuess ZeroPrimalEstimator::estimate(const MheInstance &inst, const Vec &) const
  {
    return {Vec::Zero(inst.n()), std::vector<Vec>(static_cast<std::size_t>(inst.M()), Vec::Zero(inst.n()))};
  }

  Vec ZeroDualEstimator::estimate(const MheInstance &inst, const Vec &) const { return Vec::Zero(inst.M() * inst.m()); }

  Projected post_project(const MheInstance &inst, const PrimalGuess &guess)
  {
    const int M = inst.M();
    if (guess.x0.size() != inst.n() || static_cast<int>(guess.xi.size()) != M)
      throw DimensionMismatch("post_project: guess dimensions");

    Projected out;
    std::vector<Vec> xi;
    xi.reserve(M);
    for (const auto &v : guess.xi)
    {
      out.pre_violation = std::max(out.pre_violation, inst.xi_set.violation(v));
      xi.push_back(inst.xi_set.project(v));
    }
    {
      const PrimalSolution raw = rollout(inst, guess.x0, guess.xi);
      for (const auto &z : raw.zeta_hat)
        out.pre_violation = std::max(out.pre_violation, inst.zeta_set.violation(z));
    }

    PrimalSolution sol = rollout(inst, guess.x0, xi);
    double zeta_violation = 0.0;
    for (const auto &z : sol.zeta_hat)
      zeta_violation = std::max(zeta_violation, inst.zeta_set.violation(z));
    if (zeta_violation <= 0.0)
    {
      out.sol = std::move(sol);
      out.ok = true;
      return out;
    }

    // smallest x0 shift d with y_k - C_k (x_k + Phi_k d) inside the zeta box
    const int n = inst.n();
    const int m = inst.m();
    const Vec &zl = inst.zeta_set.lower();
    const Vec &zu = inst.zeta_set.upper();
    const double margin = 1e-10;
    std::vector<Eigen::Index> keep;
    for (int j = 0; j < m; ++j)
      if (!(std::isinf(zl[j]) && std::isinf(zu[j])))
        keep.push_back(j);
    QpProblem qp;
    qp.H = 2.0 * Mat::Identity(n, n);
    qp.g = Vec::Zero(n);
    const auto rows = static_cast<Eigen::Index>(keep.size()) * M;
    qp.D.resize(rows, n);
    qp.lower.resize(rows);
    qp.upper.resize(rows);
    Mat Phi = Mat::Identity(n, n);
    Eigen::Index r = 0;
    for (int k = 0; k < M; ++k)
    {
      const Mat CPhi = inst.iv.window_measurement_maps[k] * Phi;
      const Vec base = inst.iv.window_measurements[k] - inst.iv.window_measurement_maps[k] * sol.x_traj[k];
      for (Eigen::Index j : keep)
      {
        qp.D.row(r) = CPhi.row(j);
        const double width = zu[j] - zl[j];
        const double pad = width > 4.0 * margin ? margin : 0.0;
        qp.lower[r] = std::isinf(zu[j]) ? -kInf : base[j] - zu[j] + pad;
        qp.upper[r] = std::isinf(zl[j]) ? kInf : base[j] - zl[j] - pad;
        ++r;
      }
      Phi = inst.iv.window_dynamics[k] * Phi;
    }
    QpSettings s;
    s.eps_abs = 1e-10;
    s.eps_rel = 1e-10;
    const QpResult res = solve_qp(qp, s);
    if (res.status != QpStatus::Solved)
    {
      out.sol = std::move(sol);
      return out;
    }
    out.sol = rollout(inst, guess.x0 + res.x, xi);
    out.shifted = true;
    out.ok = is_feasible(inst, out.sol, kFeasTol);
    return out;
  }

  // ---------------------------------------------------------- verification

  std::vector<VerificationSample> prepare_samples(const ProblemSetup &setup, const std::vector<Mat> &P, int T,
                                                  std::size_t count, std::uint64_t base, SampleStream stream,
                                                  int threads)
  {
    std::vector<SampledInstance> raw = sample_instances(setup, P, T, count, base, stream, threads);
    std::vector<std::optional<VerificationSample>> solved(raw.size());
    parallel_for(raw.size(), threads, [&](std::size_t i) {
      VerificationSample v;
      v.inst = raw[i].inst;
      v.features = raw[i].features;
      v.seed = raw[i].seed;
      v.t = raw[i].t;
      const PrimalSolution ps = solve_primal(v.inst);
      v.V_star = ps.cost;
      v.G_star = solve_dual(v.inst, {}, flatten(ps.mu)).value;
      solved[i] = std::move(v);
    });
    std::vector<VerificationSample> out;
    out.reserve(raw.size());
    for (auto &s : solved)
      out.push_back(std::move(*s));
    return out;
  }

  namespace
  {

    void check_count(std::size_t have, int need, const char *what)
    {
      if (static_cast<int>(have) < need)
        throw InsufficientSamples(std::string(what) + ": " + std::to_string(have) + " samples given, " +
                                  std::to_string(need) + " required");
    }

    void primal_pass(const PrimalEstimator &est, const std::vector<VerificationSample> &samples, double delta_p,
                     VerificationReport &rep)
    {
      rep.primal_checked = true;
      rep.delta_p = delta_p;
      rep.worst_excess = -kInf;
      for (std::size_t i = 0; i < samples.size(); ++i)
      {
        const auto &s = samples[i];
        SampleRecord &rec = rep.records[i];
        const Projected p = post_project(s.inst, est.estimate(s.inst, s.features));
        rec.V_hat = p.sol.cost;
        rec.V_star = s.V_star;
        rec.excess = rec.V_hat - rec.V_star;
        rec.feasible = p.ok && is_feasible(s.inst, p.sol, kFeasTol);
        rec.pre_violation = p.pre_violation;
        rep.worst_excess = std::max(rep.worst_excess, rec.excess);
        if (!rec.feasible)
          ++rep.infeasible;
        if (!rec.feasible || rec.excess > delta_p)
          ++rep.primal_violations;
      }
    }

    void dual_pass(const DualEstimator &est, const std::vector<VerificationSample> &samples, double delta_d,
                   VerificationReport &rep)
    {
      rep.dual_checked = true;
      rep.delta_d = delta_d;
      rep.worst_shortfall = -kInf;
      for (std::size_t i = 0; i < samples.size(); ++i)
      {
        const auto &s = samples[i];
        SampleRecord &rec = rep.records[i];
        rec.G_hat = dual_function(est.estimate(s.inst, s.features), s.inst);
        rec.G_star = s.G_star;
        rec.shortfall = rec.G_star - rec.G_hat;
        rep.worst_shortfall = std::max(rep.worst_shortfall, rec.shortfall);
        if (rec.shortfall > delta_d)
          ++rep.dual_violations;
      }
    }

    VerificationReport empty_report(const std::vector<VerificationSample> &samples, const CertBudget &budget)
    {
      VerificationReport rep;
      rep.n_samples = static_cast<int>(samples.size());
      rep.required_p = min_sample_size(budget.eps_p, budget.beta_p);
      rep.required_d = min_sample_size(budget.eps_d, budget.beta_d);
      const double nan = std::numeric_limits<double>::quiet_NaN();
      rep.records.resize(samples.size());
      for (std::size_t i = 0; i < samples.size(); ++i)
      {
        auto &r = rep.records[i];
        r.id = static_cast<int>(i);
        r.seed = samples[i].seed;
        r.V_hat = r.V_star = r.excess = nan;
        r.G_hat = r.G_star = r.shortfall = nan;
      }
      return rep;
    }

  } // namespace

  VerificationReport verify_primal(const PrimalEstimator &est, const std::vector<VerificationSample> &samples,
                                   const CertBudget &budget)
  {
    budget.validate();
    VerificationReport rep = empty_report(samples, budget);
    check_count(samples.size(), rep.required_p, "verify_primal");
    primal_pass(est, samples, budget.delta_p, rep);
    return rep;
  }

  VerificationReport verify_dual(const DualEstimator &est, const std::vector<VerificationSample> &samples,
                                 const CertBudget &budget)
  {
    budget.validate();
    VerificationReport rep = empty_report(samples, budget);
    check_count(samples.size(), rep.required_d, "verify_dual");
    dual_pass(est, samples, budget.delta_d, rep);
    return rep;
  }

  VerificationReport verify(const PrimalEstimator &primal, const DualEstimator &dual,
                            const std::vector<VerificationSample> &samples, const CertBudget &budget)
  {
    budget.validate();
    VerificationReport rep = empty_report(samples, budget);
    check_count(samples.size(), std::max(rep.required_p, rep.required_d), "verify");
    primal_pass(primal, samples, budget.delta_p, rep);
    dual_pass(dual, samples, budget.delta_d, rep);
    return rep;
  }

  Calibration calibrate(const PrimalEstimator &primal, const DualEstimator &dual,
                        const std::vector<VerificationSample> &samples)
  {
    Calibration c;
    for (const auto &s : samples)
    {
      const Projected p = post_project(s.inst, primal.estimate(s.inst, s.features));
      c.max_excess = std::max(c.max_excess, p.sol.cost - s.V_star);
      c.max_shortfall = std::max(c.max_shortfall, s.G_star - dual_function(dual.estimate(s.inst, s.features), s.inst));
    }
    return c;
  }

  nlohmann::json VerificationReport::to_json() const
  {
    nlohmann::json j;
    j["n_samples"] = n_samples;
    j["stream"] = stream;
    j["passed"] = passed();
    if (primal_checked)
      j["primal"] = {{"required_samples", required_p},
                     {"delta_p", delta_p},
                     {"passed", primal_pass()},
                     {"worst_excess", worst_excess},
                     {"infeasible", infeasible},
                     {"violations", primal_violations}};
    if (dual_checked)
      j["dual"] = {{"required_samples", required_d},
                   {"delta_d", delta_d},
                   {"passed", dual_pass()},
                   {"worst_shortfall", worst_shortfall},
                   {"violations", dual_violations}};
    return j;
  }

  void VerificationReport::write_csv(std::ostream &out) const
  {
    out << "sample_id,V_hat,V_star,excess,feasible,G_hat,G_star,shortfall\n";
    out.precision(17);
    auto cell = [&out](double v) {
      if (!std::isnan(v))
        out << v;
    };
    for (const auto &r : records)
    {
      out << r.id << ',';
      cell(r.V_hat);
      out << ',';
      cell(r.V_star);
      out << ',';
      cell(r.excess);
      out << ',';
      if (primal_checked)
        out << (r.feasible ? 1 : 0);
      out << ',';
      cell(r.G_hat);
      out << ',';
      cell(r.G_star);
      out << ',';
      cell(r.shortfall);
      out << '\n';
    }
  }

  // --------------------------------------------------------------- runtime

  GapCheck online_gap_check(double V, double G, double delta)
  {
    GapCheck c;
    c.V = V;
    c.G = G;
    c.gap = V - G;
    c.decision = c.gap <= delta ? Decision::Accept : Decision::Reject;
    return c;
  }

  GapCheck online_gap_check(const MheInstance &inst, const PrimalSolution &primal_out, const Vec &mu, double delta)
  {
    return online_gap_check(mhe_cost(inst, primal_out), dual_function(mu, inst), delta);
  }

  std::string to_string(Provenance p) { return p == Provenance::Learned ? "learned" : "backup"; }

  StepResult pd_mhe_step(const MheInstance &inst, const Vec &features, const PrimalEstimator &primal,
                         const DualEstimator &dual, double delta, const QpSettings &backup)
  {
    StepResult out;
    Projected proj = post_project(inst, primal.estimate(inst, features));
    out.pre_violation = proj.pre_violation;
    if (proj.ok)
    {
      const Vec mu = dual.estimate(inst, features);
      out.check = online_gap_check(proj.sol.cost, DualProblem(inst).value(mu), delta);
    }
    else
    {
      out.check.V = proj.sol.cost;
      out.check.G = -kInf;
      out.check.gap = kInf;
      out.check.decision = Decision::Reject;
    }
    if (out.check.decision == Decision::Accept)
    {
      out.provenance = Provenance::Learned;
      out.solution = std::move(proj.sol);
    }
    else
    {
      out.provenance = Provenance::Backup;
      out.solution = solve_primal(inst, backup);
    }
    out.estimate = out.solution.estimate();
    return out;
  }

  PdMheRunner::PdMheRunner(const ProblemSetup &setup, std::vector<Mat> P, const PrimalEstimator &primal,
                           const DualEstimator &dual, double delta)
      : setup_(setup), P_(std::move(P)), primal_(primal), dual_(dual), delta_(delta), estimates_{setup.x0_hat}
  {
  }

  StepResult PdMheRunner::step(const std::vector<Vec> &measurements)
  {
    const int t = static_cast<int>(estimates_.size());
    const MheInstance inst = instance_at(setup_, P_, measurements, estimates_, t);
    StepResult r = pd_mhe_step(inst, encode_features(inst.iv), primal_, dual_, delta_);
    estimates_.push_back(r.estimate);
    return r;
  }

} // namespace pdmhe
