#pragma once

#include <cstdint>
#include <sstream>

#include "vppreg/explorer.hpp"

namespace vppreg {

// Witness-based feasibility grid over the PCC plane. A cell is marked only
// when an exact solved, limit-clean operating point landing in it is stored,
// so the verified set is one-sided: verified implies truly feasible.
struct FeasibleGrid {
  double p_min = 0.0, p_max = 0.0, q_min = 0.0, q_max = 0.0;
  int resolution = 0;
  std::vector<std::uint8_t> status;       // row-major [qi * res + pi], 1 = verified
  std::vector<OperatingPoint> witnesses;  // parallel to status

  int cell_p(double p) const {
    return static_cast<int>(std::floor((p - p_min) / (p_max - p_min) * resolution));
  }
  int cell_q(double q) const {
    return static_cast<int>(std::floor((q - q_min) / (q_max - q_min) * resolution));
  }
  Vec2 cell_center(int pi, int qi) const {
    return Vec2(p_min + (pi + 0.5) * (p_max - p_min) / resolution,
                q_min + (qi + 0.5) * (q_max - q_min) / resolution);
  }
  int verified_count() const {
    int n = 0;
    for (auto s : status) n += s;
    return n;
  }
  std::string to_csv() const {
    std::ostringstream os;
    os << "p,q,status\n";
    for (int qi = 0; qi < resolution; ++qi)
      for (int pi = 0; pi < resolution; ++pi) {
        Vec2 c = cell_center(pi, qi);
        os << c.x() << "," << c.y() << ","
           << (status[qi * resolution + pi] ? "verified" : "unverified") << "\n";
      }
    return os.str();
  }
};

namespace detail {

inline bool witness_ok(const Network& net, const OperatingPoint& pt) {
  return residual_f(net, pt).lpNorm<Eigen::Infinity>() <= 1e-6 &&
         limit_check(net, pt).clean(1e-9);
}

inline void mark_landing(const Network& net, FeasibleGrid& g,
                         const OperatingPoint& pt) {
  if (!witness_ok(net, pt)) return;
  int pi = g.cell_p(pt.pcc[0]), qi = g.cell_q(pt.pcc[1]);
  if (pi < 0 || pi >= g.resolution || qi < 0 || qi >= g.resolution) return;
  int idx = qi * g.resolution + pi;
  if (!g.status[idx]) {
    g.status[idx] = 1;
    g.witnesses[idx] = pt;
  }
}

}  // namespace detail

// Exhaustive witness search: every combination from a per-dimension control
// grid is solved with the PCC free and marked where it lands; additionally,
// each unverified cell gets one targeted attempt from the linear-model
// suggestion. control_grid is the number of points per controllable
// dimension (grid skipped when the combination count exceeds the budget of
// targeted attempts).
inline FeasibleGrid brute_force_region(const Network& net, double p_min,
                                       double p_max, double q_min, double q_max,
                                       int resolution, int control_grid = 5,
                                       long budget = 4000000L) {
  if (resolution < 1 || control_grid < 1)
    throw input_error("grid parameters must be positive");
  if (p_min >= p_max || q_min >= q_max) throw input_error("grid range reversed");
  FeasibleGrid g;
  g.p_min = p_min;
  g.p_max = p_max;
  g.q_min = q_min;
  g.q_max = q_max;
  g.resolution = resolution;
  g.status.assign(static_cast<size_t>(resolution) * resolution, 0);
  g.witnesses.resize(static_cast<size_t>(resolution) * resolution);

  Vec ulo = net.u_min(), uhi = net.u_max();
  std::vector<int> free_dims;
  for (int k = 0; k < net.n_u(); ++k)
    if (uhi[k] - ulo[k] > 1e-12) free_dims.push_back(k);

  double combos = 1.0;
  for (size_t k = 0; k < free_dims.size(); ++k) {
    combos *= control_grid;
    if (combos > 1e9) break;
  }
  long total = static_cast<long>(std::min(combos, 1e18)) +
               static_cast<long>(resolution) * resolution;
  if (total > budget)
    throw budget_error("grid oracle budget exceeded; need about " +
                       std::to_string(total) + " attempts");

  // landing pass over the control grid
  Vec u = 0.5 * (ulo + uhi);
  std::vector<int> idx(free_dims.size(), 0);
  bool done = free_dims.empty();
  while (true) {
    for (size_t k = 0; k < free_dims.size(); ++k) {
      int d = free_dims[k];
      u[d] = control_grid == 1
                 ? 0.5 * (ulo[d] + uhi[d])
                 : ulo[d] + (uhi[d] - ulo[d]) * idx[k] / (control_grid - 1);
    }
    try {
      auto r = newton_solve(net, u, PccMode::Free);
      if (r.converged) detail::mark_landing(net, g, r.point);
    } catch (const singular_error&) {
    }
    if (done) break;
    size_t k = 0;
    while (k < idx.size() && ++idx[k] == control_grid) idx[k++] = 0;
    if (k == idx.size()) break;
  }

  // targeted pass: linear-model suggestion per still-unverified cell
  auto lin = detail::LinearFlowLp::build(net);
  for (int qi = 0; qi < resolution; ++qi)
    for (int pi = 0; pi < resolution; ++pi) {
      int cell = qi * resolution + pi;
      if (g.status[cell]) continue;
      Vec2 c = g.cell_center(pi, qi);
      LpProblem lp = lin.lp;
      // pin the linearized transfer to the cell center
      Vec cp = lin.pcc_objective(net, false, 1.0);
      Vec cq = lin.pcc_objective(net, true, 1.0);
      lp.add_row(cp, RowSense::EQ, c.x());
      lp.add_row(cq, RowSense::EQ, c.y());
      auto r = lp_solve(lp);
      if (r.status != LpStatus::Optimal) continue;
      try {
        auto ns = newton_solve(net, r.x.head(net.n_u()), PccMode::Fixed,
                               (Vec(2) << c.x(), c.y()).finished());
        if (ns.converged && ns.point.sigma.lpNorm<Eigen::Infinity>() <= 1e-6)
          detail::mark_landing(net, g, ns.point);
        else if (ns.converged) {
          // the slack absorbed the imbalance; land it as a free solve instead
          auto fr = newton_solve(net, r.x.head(net.n_u()), PccMode::Free,
                                 Vec(), ns.point);
          if (fr.converged) detail::mark_landing(net, g, fr.point);
        }
      } catch (const singular_error&) {
      }
    }
  return g;
}

struct VerifyResult {
  bool pass = false;
  std::string reason;
  OperatingPoint witness;
};

// Soundness check of one claimed PCC point: recover admissible controls by
// LP from the stored polytope at the fixed transfer deviation, then solve
// exactly and check every limit plus the slack budget.
inline VerifyResult verify_point(const Network& net, const SubRegion& sr,
                                 const Vec2& u_pcc, double tol = 1e-6) {
  if (!sr.polygon.contains(u_pcc, 1e-9))
    throw input_error("point is outside the claimed sub-region");
  Vec2 y1 = u_pcc - Vec2(sr.anchor.pcc[0], sr.anchor.pcc[1]);

  const int nu = net.n_u();
  LpProblem lp = LpProblem::make(nu);
  for (int r = 0; r < sr.omega.A.rows(); ++r)
    lp.add_row(sr.omega.A.row(r).tail(nu), RowSense::LE,
               sr.omega.b[r] - sr.omega.A.row(r).head(2).dot(y1));
  auto lr = lp_solve(lp);
  VerifyResult res;
  if (lr.status != LpStatus::Optimal) {
    res.reason = "no admissible controls at the fixed transfer";
    return res;
  }
  Vec u = sr.anchor.controls + lr.x;
  try {
    auto ns = newton_solve(net, u, PccMode::Fixed,
                           (Vec(2) << u_pcc.x(), u_pcc.y()).finished(),
                           sr.anchor);
    if (!ns.converged) {
      res.reason = "solver did not converge";
      return res;
    }
    res.witness = ns.point;
    auto rep = limit_check(net, ns.point);
    if (!rep.clean(tol)) {
      res.reason = "limit violation " + std::to_string(rep.worst());
      return res;
    }
    for (int k = 0; k < 2; ++k) {
      double lo = sr.box.sig_lo[k] - tol, hi = sr.box.sig_hi[k] + tol;
      if (ns.point.sigma[k] < lo || ns.point.sigma[k] > hi) {
        res.reason = "slack outside its certified budget";
        return res;
      }
    }
    res.pass = true;
  } catch (const singular_error&) {
    res.reason = "singular solve";
  }
  return res;
}

// Atlas-level variant: the point must be covered by at least one sub-region
// and passes if any covering sub-region verifies it.
inline VerifyResult verify_point(const Network& net, const RegionAtlas& atlas,
                                 const Vec2& u_pcc, double tol = 1e-6) {
  bool covered = false;
  VerifyResult last;
  for (const auto& sr : atlas.subregions) {
    if (!sr.polygon.contains(u_pcc, 1e-9)) continue;
    covered = true;
    last = verify_point(net, sr, u_pcc, tol);
    if (last.pass) return last;
  }
  if (!covered) throw input_error("point is outside the claimed atlas");
  return last;
}

}  // namespace vppreg
