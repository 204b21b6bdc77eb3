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
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdmhe/dataset.hpp"
#include "pdmhe/mhe.hpp"
#include "pdmhe/mlp.hpp"

namespace pdmhe
{

  struct CertBudget
  {
    double eps_p = 0.025;
    double eps_d = 0.025;
    double beta_p = 5e-7;
    double beta_d = 5e-7;
    double delta_p = 0.0;
    double delta_d = 0.0;
    double delta_gap = 0.0;

    /// online threshold delta_p + delta_d + delta_gap
    double delta() const { return delta_p + delta_d + delta_gap; }
    void validate() const;

    /// Even split of eps and beta between the primal and dual branches.
    static CertBudget symmetric(double eps, double beta, double delta_p, double delta_d, double delta_gap = 0.0);
  };

  /// ceil(ln(1/beta) / ln(1/(1-eps))). Throws DomainError outside (0, 1).
  int min_sample_size(double eps, double beta);

  struct BudgetTotals
  {
    double eps = 0.0;
    double beta = 0.0;
    double delta = 0.0;
  };

  BudgetTotals violation_budget(const CertBudget &budget);

  // ------------------------------------------------------------ estimators

  struct PrimalGuess
  {
    Vec x0;
    std::vector<Vec> xi;
  };

  class PrimalEstimator
  {
  public:
    virtual ~PrimalEstimator() = default;
    virtual PrimalGuess estimate(const MheInstance &inst, const Vec &features) const = 0;
    virtual std::string name() const = 0;
  };

  class DualEstimator
  {
  public:
    virtual ~DualEstimator() = default;
    /// flat mu, window position major
    virtual Vec estimate(const MheInstance &inst, const Vec &features) const = 0;
    virtual std::string name() const = 0;
  };

  class MlpPrimalEstimator final : public PrimalEstimator
  {
  public:
    explicit MlpPrimalEstimator(MlpParams params);
    PrimalGuess estimate(const MheInstance &inst, const Vec &features) const override;
    std::string name() const override { return "mlp"; }

  private:
    MlpParams params_;
  };

  class MlpDualEstimator final : public DualEstimator
  {
  public:
    explicit MlpDualEstimator(MlpParams params);
    Vec estimate(const MheInstance &inst, const Vec &features) const override;
    std::string name() const override { return "mlp"; }

  private:
    MlpParams params_;
  };

  /// Wraps the exact solvers.
  class OraclePrimalEstimator final : public PrimalEstimator
  {
  public:
    PrimalGuess estimate(const MheInstance &inst, const Vec &features) const override;
    std::string name() const override { return "oracle"; }
  };

  class OracleDualEstimator final : public DualEstimator
  {
  public:
    Vec estimate(const MheInstance &inst, const Vec &features) const override;
    std::string name() const override { return "oracle"; }
  };

  class ZeroPrimalEstimator final : public PrimalEstimator
  {
  public:
    PrimalGuess estimate(const MheInstance &inst, const Vec &features) const override;
    std::string name() const override { return "zero"; }
  };

  class ZeroDualEstimator final : public DualEstimator
  {
  public:
    Vec estimate(const MheInstance &inst, const Vec &features) const override;
    std::string name() const override { return "zero"; }
  };

  struct Projected
  {
    PrimalSolution sol;
    /// largest box violation of the raw guess (xi and zeta)
    double pre_violation = 0.0;
    bool shifted = false;
    bool ok = false;
  };

  /**
   * @brief Make a guess feasible.
   *
   * xi is clamped onto its box; remaining zeta violations are removed by the smallest
   * shift of x0 that satisfies the measurement box. ok is false when no shift exists.
   */
  Projected post_project(const MheInstance &inst, const PrimalGuess &guess);

  // ---------------------------------------------------------- verification

  /// An instance with its exact primal and dual optimal values.
  struct VerificationSample
  {
    MheInstance inst;
    Vec features;
    std::uint64_t seed = 0;
    int t = 0;
    double V_star = 0.0;
    double G_star = 0.0;
  };

  std::vector<VerificationSample> prepare_samples(const ProblemSetup &setup, const std::vector<Mat> &P, int T,
                                                  std::size_t count, std::uint64_t base, SampleStream stream,
                                                  int threads);

  struct SampleRecord
  {
    int id = 0;
    std::uint64_t seed = 0;
    double V_hat = 0.0;
    double V_star = 0.0;
    double excess = 0.0;
    bool feasible = false;
    double G_hat = 0.0;
    double G_star = 0.0;
    double shortfall = 0.0;
    double pre_violation = 0.0;
  };

  struct VerificationReport
  {
    bool primal_checked = false;
    bool dual_checked = false;
    int n_samples = 0;
    int required_p = 0;
    int required_d = 0;
    double delta_p = 0.0;
    double delta_d = 0.0;
    double worst_excess = 0.0;
    double worst_shortfall = 0.0;
    int infeasible = 0;
    int primal_violations = 0; // excess > delta_p or infeasible
    int dual_violations = 0;   // shortfall > delta_d
    std::string stream;
    std::vector<SampleRecord> records;

    bool primal_pass() const { return primal_checked && primal_violations == 0; }
    bool dual_pass() const { return dual_checked && dual_violations == 0; }
    bool passed() const { return (!primal_checked || primal_pass()) && (!dual_checked || dual_pass()); }

    nlohmann::json to_json() const;
    /// sample_id,V_hat,V_star,excess,feasible,G_hat,G_star,shortfall
    void write_csv(std::ostream &out) const;
  };

  /// Throws InsufficientSamples when fewer than min_sample_size(eps_p, beta_p) samples are given.
  VerificationReport verify_primal(const PrimalEstimator &est, const std::vector<VerificationSample> &samples,
                                   const CertBudget &budget);
  VerificationReport verify_dual(const DualEstimator &est, const std::vector<VerificationSample> &samples,
                                 const CertBudget &budget);
  /// Both checks on one sample set.
  VerificationReport verify(const PrimalEstimator &primal, const DualEstimator &dual,
                            const std::vector<VerificationSample> &samples, const CertBudget &budget);

  /// Largest excess and shortfall observed, for threshold calibration.
  struct Calibration
  {
    double max_excess = 0.0;
    double max_shortfall = 0.0;
  };

  Calibration calibrate(const PrimalEstimator &primal, const DualEstimator &dual,
                        const std::vector<VerificationSample> &samples);

  // --------------------------------------------------------------- runtime

  enum class Decision
  {
    Accept,
    Reject,
  };

  struct GapCheck
  {
    Decision decision = Decision::Reject;
    double V = 0.0;
    double G = 0.0;
    double gap = 0.0;
  };

  /// accept iff V - G <= delta
  GapCheck online_gap_check(double V, double G, double delta);
  GapCheck online_gap_check(const MheInstance &inst, const PrimalSolution &primal_out, const Vec &mu, double delta);

  enum class Provenance
  {
    Learned,
    Backup,
  };

  std::string to_string(Provenance p);

  struct StepResult
  {
    Vec estimate;
    Provenance provenance = Provenance::Backup;
    GapCheck check;
    double pre_violation = 0.0;
    /// learned solution (after projection); the backup solution when the learned one was rejected
    PrimalSolution solution;
  };

  /// Evaluate both estimators, gate with the gap check, fall back to the exact solver.
  StepResult pd_mhe_step(const MheInstance &inst, const Vec &features, const PrimalEstimator &primal,
                         const DualEstimator &dual, double delta, const QpSettings &backup = {});

  /// Sequential estimator along one measurement stream; the prior chain uses the emitted estimates.
  class PdMheRunner
  {
  public:
    PdMheRunner(const ProblemSetup &setup, std::vector<Mat> P, const PrimalEstimator &primal,
                const DualEstimator &dual, double delta);

    /// Estimate at time t = estimates().size(), from y_0 .. y_{t-1}.
    StepResult step(const std::vector<Vec> &measurements);

    const std::vector<Vec> &estimates() const { return estimates_; }

  private:
    const ProblemSetup &setup_;
    std::vector<Mat> P_;
    const PrimalEstimator &primal_;
    const DualEstimator &dual_;
    double delta_;
    std::vector<Vec> estimates_;
  };

} // namespace pdmhe
