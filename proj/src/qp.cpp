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

#include "pdmhe/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

#include "pdmhe/errors.hpp"

namespace pdmhe
{

  namespace
  {

    constexpr double kInf = std::numeric_limits<double>::infinity();
    constexpr double kRhoMin = 1e-6;
    constexpr double kRhoMax = 1e6;
    constexpr double kRhoEqScale = 1e3;

    double inf_norm(const Vec &v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

    double objective_of(const QpProblem &p, const Vec &x) { return 0.5 * x.dot(p.H * x) + p.g.dot(x); }

    double gap_of(const QpProblem &p, const Vec &x, const Vec &y)
    {
      double support = 0.0;
      for (Eigen::Index k = 0; k < y.size(); ++k)
      {
        if (y[k] > 0.0)
          support += y[k] * p.upper[k];
        else if (y[k] < 0.0)
          support += y[k] * p.lower[k];
      }
      return x.dot(p.H * x) + p.g.dot(x) + support;
    }

    void validate(const QpProblem &p)
    {
      const auto nv = p.H.rows();
      if (p.H.cols() != nv || p.g.size() != nv)
        throw DimensionMismatch("solve_qp: H must be square and match g");
      if (p.D.rows() > 0 && p.D.cols() != nv)
        throw DimensionMismatch("solve_qp: D has wrong column count");
      if (p.lower.size() != p.D.rows() || p.upper.size() != p.D.rows())
        throw DimensionMismatch("solve_qp: bounds must match D rows");
      for (Eigen::Index k = 0; k < p.lower.size(); ++k)
        if (p.lower[k] > p.upper[k])
          throw DomainError("solve_qp: lower bound exceeds upper bound");
    }

    /// ADMM state with its cached factorization.
    class Admm
    {
    public:
      Admm(const QpProblem &p, const QpSettings &s) : p_(p), s_(s)
      {
        const auto mc = p.D.rows();
        eq_.resize(mc);
        for (Eigen::Index k = 0; k < mc; ++k)
          eq_[k] = p.lower[k] == p.upper[k];
        set_rho(s.rho);
      }

      void set_rho(double rho)
      {
        rho_scalar_ = std::clamp(rho, kRhoMin, kRhoMax);
        const auto mc = p_.D.rows();
        rho_.resize(mc);
        for (Eigen::Index k = 0; k < mc; ++k)
        {
          if (std::isinf(p_.lower[k]) && std::isinf(p_.upper[k]))
            rho_[k] = kRhoMin;
          else
            rho_[k] = eq_[k] ? kRhoEqScale * rho_scalar_ : rho_scalar_;
        }
        Mat K = p_.H + s_.sigma * Mat::Identity(p_.H.rows(), p_.H.cols()) +
                p_.D.transpose() * rho_.asDiagonal() * p_.D;
        llt_.compute(symmetrize(K));
        if (llt_.info() != Eigen::Success)
          throw DomainError("solve_qp: H is not positive semidefinite");
      }

      double rho() const { return rho_scalar_; }

      void iterate(Vec &x, Vec &z, Vec &y) const
      {
        const Vec rhs = s_.sigma * x - p_.g + p_.D.transpose() * (rho_.cwiseProduct(z) - y);
        const Vec xt = llt_.solve(rhs);
        const Vec zt = p_.D * xt;
        x = s_.alpha * xt + (1.0 - s_.alpha) * x;
        const Vec zr = s_.alpha * zt + (1.0 - s_.alpha) * z;
        Vec z_new = (zr + y.cwiseQuotient(rho_)).cwiseMax(p_.lower).cwiseMin(p_.upper);
        y += rho_.cwiseProduct(zr - z_new);
        z = std::move(z_new);
      }

    private:
      const QpProblem &p_;
      const QpSettings &s_;
      std::vector<bool> eq_;
      Vec rho_;
      double rho_scalar_ = 0.1;
      Eigen::LLT<Mat> llt_;
    };

    bool infeasibility_certificate(const QpProblem &p, const Vec &dy, double eps)
    {
      const double ndy = inf_norm(dy);
      if (ndy < 1e-12)
        return false;
      if (inf_norm(p.D.transpose() * dy) > eps * ndy)
        return false;
      double support = 0.0;
      for (Eigen::Index k = 0; k < dy.size(); ++k)
      {
        if (dy[k] > 0.0)
        {
          if (std::isinf(p.upper[k]))
          {
            if (dy[k] > eps * ndy)
              return false;
            continue;
          }
          support += p.upper[k] * dy[k];
        }
        else if (dy[k] < 0.0)
        {
          if (std::isinf(p.lower[k]))
          {
            if (-dy[k] > eps * ndy)
              return false;
            continue;
          }
          support += p.lower[k] * dy[k];
        }
      }
      return support < -eps * ndy;
    }

    enum Activity : signed char
    {
      kInactive = 0,
      kLower = -1,
      kUpper = 1,
    };

    /**
     * Reduced KKT solve for a fixed active set via the Schur complement of H.
     * H is regularized by a tiny shift when singular; iterative refinement removes it.
     */
    bool solve_active_kkt(const QpProblem &p, const std::vector<Activity> &act,
                          const Eigen::LDLT<Mat> &h_fact, Vec &x, Vec &y)
    {
      std::vector<Eigen::Index> rows;
      for (std::size_t k = 0; k < act.size(); ++k)
        if (act[k] != kInactive)
          rows.push_back(static_cast<Eigen::Index>(k));
      const auto na = static_cast<Eigen::Index>(rows.size());
      const auto nv = p.H.rows();
      Mat DA(na, nv);
      Vec b(na);
      for (Eigen::Index r = 0; r < na; ++r)
      {
        const auto k = rows[static_cast<std::size_t>(r)];
        DA.row(r) = p.D.row(k);
        b[r] = act[static_cast<std::size_t>(k)] == kUpper ? p.upper[k] : p.lower[k];
      }

      Eigen::LDLT<Mat> s_fact;
      Mat HinvDt;
      if (na > 0)
      {
        HinvDt = h_fact.solve(DA.transpose());
        Mat S = DA * HinvDt;
        S.diagonal().array() += 1e-13 * (1.0 + S.diagonal().cwiseAbs().maxCoeff());
        s_fact.compute(S);
        if (s_fact.info() != Eigen::Success)
          return false;
      }

      auto apply_inverse = [&](const Vec &r1, const Vec &r2, Vec &dx, Vec &dyA) {
        const Vec h1 = h_fact.solve(r1);
        if (na > 0)
        {
          dyA = s_fact.solve(DA * h1 - r2);
          dx = h1 - HinvDt * dyA;
        }
        else
        {
          dyA.resize(0);
          dx = h1;
        }
      };

      Vec xa, yA;
      apply_inverse(-p.g, b, xa, yA);
      for (int refine = 0; refine < 5; ++refine)
      {
        Vec r1 = -p.g - p.H * xa;
        if (na > 0)
          r1 -= DA.transpose() * yA;
        const Vec r2 = na > 0 ? Vec(b - DA * xa) : Vec();
        if (inf_norm(r1) < 1e-15 * (1.0 + inf_norm(p.g)) && (na == 0 || inf_norm(r2) < 1e-15 * (1.0 + inf_norm(b))))
          break;
        Vec dx, dyA;
        apply_inverse(r1, r2, dx, dyA);
        xa += dx;
        if (na > 0)
          yA += dyA;
      }
      if (!xa.allFinite() || !yA.allFinite())
        return false;
      x = xa;
      y.setZero(p.D.rows());
      for (Eigen::Index r = 0; r < na; ++r)
        y[rows[static_cast<std::size_t>(r)]] = yA[r];
      return true;
    }

    struct KktCheck
    {
      double primal = 0.0;
      double dual = 0.0;
      double sign = 0.0;
    };

    KktCheck kkt_residuals(const QpProblem &p, const Vec &x, const Vec &y)
    {
      KktCheck c;
      c.primal = constraint_violation(p, x);
      c.dual = inf_norm(p.H * x + p.g + p.D.transpose() * y);
      const Vec Dx = p.D * x;
      for (Eigen::Index k = 0; k < y.size(); ++k)
      {
        // complementarity and sign: y > 0 only at the upper bound, y < 0 only at the lower one
        if (y[k] > 0.0)
          c.sign = std::max(c.sign, y[k] * std::max(0.0, p.upper[k] - Dx[k]));
        else if (y[k] < 0.0)
          c.sign = std::max(c.sign, -y[k] * std::max(0.0, Dx[k] - p.lower[k]));
      }
      return c;
    }

    bool polish(const QpProblem &p, const QpSettings &s, Vec &x, Vec &y)
    {
      const auto nv = p.H.rows();
      const auto mc = p.D.rows();
      Mat Hreg = p.H;
      Eigen::LDLT<Mat> h_fact(Hreg);
      if (h_fact.info() != Eigen::Success || !h_fact.isPositive() ||
          h_fact.vectorD().minCoeff() <= 1e-12 * (1.0 + h_fact.vectorD().cwiseAbs().maxCoeff()))
      {
        Hreg.diagonal().array() += 1e-9 * (1.0 + p.H.diagonal().cwiseAbs().maxCoeff());
        h_fact.compute(Hreg);
      }

      std::vector<Activity> act(static_cast<std::size_t>(mc), kInactive);
      const Vec Dx0 = p.D * x;
      for (Eigen::Index k = 0; k < mc; ++k)
      {
        const auto ks = static_cast<std::size_t>(k);
        if (p.lower[k] == p.upper[k])
          act[ks] = kUpper;
        else if (std::isfinite(p.lower[k]) && Dx0[k] - p.lower[k] < -y[k])
          act[ks] = kLower;
        else if (std::isfinite(p.upper[k]) && p.upper[k] - Dx0[k] < y[k])
          act[ks] = kUpper;
      }

      Vec xp = x, yp = Vec::Zero(mc);
      const double c = 1.0;
      bool stable = false;
      for (int it = 0; it < s.max_polish_iter; ++it)
      {
        if (!solve_active_kkt(p, act, h_fact, xp, yp))
          return false;
        const Vec Dx = p.D * xp;
        std::vector<Activity> next(static_cast<std::size_t>(mc), kInactive);
        for (Eigen::Index k = 0; k < mc; ++k)
        {
          const auto ks = static_cast<std::size_t>(k);
          if (p.lower[k] == p.upper[k])
            next[ks] = kUpper;
          else if (std::isfinite(p.upper[k]) && yp[k] + c * (Dx[k] - p.upper[k]) > 0.0)
            next[ks] = kUpper;
          else if (std::isfinite(p.lower[k]) && yp[k] + c * (Dx[k] - p.lower[k]) < 0.0)
            next[ks] = kLower;
        }
        if (next == act)
        {
          stable = true;
          break;
        }
        act = std::move(next);
      }
      if (!stable)
        return false;

      const KktCheck chk = kkt_residuals(p, xp, yp);
      const double scale = 1.0 + std::max(inf_norm(p.g), inf_norm(p.D * xp));
      // multipliers at active rows must carry the right sign
      for (Eigen::Index k = 0; k < mc; ++k)
      {
        const auto ks = static_cast<std::size_t>(k);
        if (p.lower[k] == p.upper[k])
          continue;
        if (act[ks] == kUpper && yp[k] < -s.polish_tol * (1.0 + inf_norm(yp)))
          return false;
        if (act[ks] == kLower && yp[k] > s.polish_tol * (1.0 + inf_norm(yp)))
          return false;
      }
      if (chk.primal > s.polish_tol * scale || chk.dual > s.polish_tol * scale)
        return false;
      (void)nv;
      x = std::move(xp);
      y = std::move(yp);
      return true;
    }

  } // namespace

  double constraint_violation(const QpProblem &p, const Vec &x)
  {
    if (p.D.rows() == 0)
      return 0.0;
    const Vec Dx = p.D * x;
    double worst = 0.0;
    for (Eigen::Index k = 0; k < Dx.size(); ++k)
      worst = std::max({worst, p.lower[k] - Dx[k], Dx[k] - p.upper[k]});
    return worst;
  }

  QpResult solve_qp(const QpProblem &problem, const QpSettings &settings)
  {
    const auto nv = problem.H.rows();
    return solve_qp(problem, settings, Vec::Zero(nv), Vec::Zero(problem.D.rows()));
  }

  QpResult solve_qp(const QpProblem &p, const QpSettings &s, const Vec &x0, const Vec &y0)
  {
    validate(p);
    const auto nv = p.H.rows();
    const auto mc = p.D.rows();
    if (x0.size() != nv || y0.size() != mc)
      throw DimensionMismatch("solve_qp: warm start dimensions");

    QpResult res;
    auto finish = [&](QpResult &r) {
      r.objective = objective_of(p, r.x);
      r.duality_gap = gap_of(p, r.x, r.y);
      const KktCheck chk = kkt_residuals(p, r.x, r.y);
      r.primal_residual = chk.primal;
      r.dual_residual = chk.dual;
      return r;
    };

    Vec x = x0;
    Vec y = y0;
    Vec z = (p.D * x).cwiseMax(p.lower).cwiseMin(p.upper);

    // Try the warm start directly: a correct active set needs no ADMM at all.
    // Without constraint rows the polish is a plain Newton step.
    if (s.polish && (mc == 0 || y0.cwiseAbs().maxCoeff() > 0.0))
    {
      Vec xw = x, yw = y;
      if (polish(p, s, xw, yw))
      {
        res.status = QpStatus::Solved;
        res.x = xw;
        res.y = yw;
        res.polished = true;
        return finish(res);
      }
    }

    Admm admm(p, s);
    double eps_abs = s.eps_abs;
    double eps_rel = s.eps_rel;
    Vec y_prev = y;
    bool converged = false;
    int it = 0;
    for (; it < s.max_iter; ++it)
    {
      const bool check = (it + 1) % s.check_interval == 0;
      if (check)
        y_prev = y;
      admm.iterate(x, z, y);
      if (!check)
        continue;

      const Vec Dx = p.D * x;
      const Vec Hx = p.H * x;
      const Vec Dty = p.D.transpose() * y;
      const double r_prim = mc > 0 ? inf_norm(Dx - z) : 0.0;
      const double r_dual = inf_norm(Hx + p.g + Dty);
      if (s.trace)
        *s.trace << (it + 1) << ',' << r_prim << ',' << r_dual << ',' << objective_of(p, x) << '\n';

      const double eps_p = eps_abs + eps_rel * std::max(inf_norm(Dx), inf_norm(z));
      const double eps_d = eps_abs + eps_rel * std::max({inf_norm(Hx), inf_norm(Dty), inf_norm(p.g)});
      if (r_prim <= eps_p && r_dual <= eps_d)
      {
        converged = true;
        if (!s.polish)
          break;
        Vec xp = x, yp = y;
        if (polish(p, s, xp, yp))
        {
          res.polished = true;
          x = std::move(xp);
          y = std::move(yp);
          break;
        }
        // rejected polish: keep iterating at a tighter tolerance
        converged = false;
        eps_abs *= 1e-2;
        eps_rel *= 1e-2;
        if (eps_abs < 1e-13)
        {
          converged = true;
          break;
        }
        continue;
      }

      if (mc > 0 && infeasibility_certificate(p, y - y_prev, s.eps_infeasible))
      {
        res.status = QpStatus::PrimalInfeasible;
        res.x = x;
        res.y = y - y_prev;
        res.iterations = it + 1;
        return finish(res);
      }

      if (s.adaptive_rho && (it + 1) % (5 * s.check_interval) == 0 && mc > 0)
      {
        const double pn = std::max(inf_norm(Dx), inf_norm(z)) + 1e-30;
        const double dn = std::max({inf_norm(Hx), inf_norm(Dty), inf_norm(p.g)}) + 1e-30;
        const double ratio = std::sqrt((r_prim / pn) / (r_dual / dn + 1e-30) + 1e-30);
        const double rho_new = std::clamp(admm.rho() * ratio, kRhoMin, kRhoMax);
        if (rho_new > 5.0 * admm.rho() || rho_new < 0.2 * admm.rho())
          admm.set_rho(rho_new);
      }
    }

    res.status = converged ? QpStatus::Solved : QpStatus::MaxIterations;
    res.x = x;
    res.y = y;
    res.iterations = std::min(it + 1, s.max_iter);
    return finish(res);
  }

} // namespace pdmhe
