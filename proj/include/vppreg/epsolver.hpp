#pragma once

#include <array>
#include <random>

#include "vppreg/fixedpoint.hpp"

namespace vppreg {

// Range of -z^2 when z spans [lo, hi].
inline std::pair<double, double> quadratic_corner_bounds(double lo, double hi) {
  if (lo > hi) throw input_error("quadratic range reversed");
  double a = -lo * lo, b = -hi * hi;
  if (lo <= 0.0 && 0.0 <= hi) return {std::min(a, b), 0.0};
  return {std::min(a, b), std::max(a, b)};
}

// Range of v*i over the box [v_lo, v_hi] x [i_lo, i_hi].
inline std::pair<double, double> bilinear_corner_bounds(double v_lo, double v_hi,
                                                        double i_lo, double i_hi) {
  if (v_lo > v_hi || i_lo > i_hi) throw input_error("bilinear range reversed");
  std::array<double, 4> c = {v_lo * i_lo, v_lo * i_hi, v_hi * i_lo, v_hi * i_hi};
  auto [mn, mx] = std::minmax_element(c.begin(), c.end());
  return {*mn, *mx};
}

// Per-branch bounds of the quadratic remainder, split by source term.
struct CornerBounds {
  Vec Rmin_P, Rmax_P;    // from -P~^2
  Vec Rmin_Q, Rmax_Q;    // from -Q~^2
  Vec Rmin_VI, Rmax_VI;  // from V~*I~
  Vec Rmin, Rmax;        // sums
};

// Decoupled expansion problem for one branch: its current range paired with
// the start node's voltage range.
struct BranchEpProblem {
  int branch = 0;
  double V_lo0 = 0.0, V_hi0 = 0.0;  // physical voltage box minus anchor
  double I_lo0 = 0.0, I_hi0 = 0.0;  // physical current box minus anchor
  double M_V_plus = 0.0;            // column sum of M_plus over voltage rows
  double M_I_plus = 0.0;            // column sum of M_plus over current rows
  double H_i = 1.0;
};

struct BranchEpSolution {
  double V_lo = 0.0, V_hi = 0.0, I_lo = 0.0, I_hi = 0.0;
  double Rvi_min = 0.0, Rvi_max = 0.0;
  double objective = 0.0;
};

// Objective of a candidate box: negative total width plus the weighted
// remainder gap, normalized by H_i. Validates box membership and corner
// consistency of the Rvi fields.
inline double ep_branch_objective(const BranchEpSolution& s,
                                  const BranchEpProblem& p) {
  const double tol = 1e-9;
  if (s.V_lo < p.V_lo0 - tol || s.V_lo > tol || s.V_hi < -tol ||
      s.V_hi > p.V_hi0 + tol || s.I_lo < p.I_lo0 - tol || s.I_lo > tol ||
      s.I_hi < -tol || s.I_hi > p.I_hi0 + tol)
    throw input_error("candidate outside the branch box");
  auto [rmin, rmax] = bilinear_corner_bounds(s.V_lo, s.V_hi, s.I_lo, s.I_hi);
  if (std::abs(s.Rvi_min - rmin) > tol || std::abs(s.Rvi_max - rmax) > tol)
    throw input_error("candidate Rvi fields are not corner-consistent");
  return ((s.V_lo + s.I_lo - s.V_hi - s.I_hi) +
          (p.M_V_plus + p.M_I_plus) * (s.Rvi_max - s.Rvi_min)) /
         p.H_i;
}

namespace detail {

// Branch problems sharing one start node; the node's voltage range is a
// joint variable across all of them.
struct EpGroup {
  bool v_fixed = false;  // root start node: voltage pinned, range stays zero
  double V_lo0 = 0.0, V_hi0 = 0.0;
  std::vector<BranchEpProblem> probs;
};

struct EpGroupVars {
  double v_lo = 0.0, v_hi = 0.0;
  std::vector<double> i_lo, i_hi;
};

inline double ep_group_objective(const EpGroup& g, const EpGroupVars& v) {
  double obj = 0.0;
  for (size_t j = 0; j < g.probs.size(); ++j) {
    auto [rmin, rmax] =
        bilinear_corner_bounds(v.v_lo, v.v_hi, v.i_lo[j], v.i_hi[j]);
    const auto& p = g.probs[j];
    obj += ((v.v_lo + v.i_lo[j] - v.v_hi - v.i_hi[j]) +
            (p.M_V_plus + p.M_I_plus) * (rmax - rmin)) /
           p.H_i;
  }
  return obj;
}

// Exact line search for one coordinate: the objective restricted to any
// single variable is convex piecewise-linear (linear width term plus a
// weighted max-minus-min of corner products, each linear in the variable),
// so the minimum sits at an interval endpoint or a piece crossing.
inline double ep_coordinate_min(const EpGroup& g, EpGroupVars& v, int kind,
                                size_t j, double zlo, double zhi) {
  auto set = [&](double z) {
    if (kind == 0) v.v_lo = z;
    else if (kind == 1) v.v_hi = z;
    else if (kind == 2) v.i_lo[j] = z;
    else v.i_hi[j] = z;
  };
  std::vector<double> cand = {zlo, zhi};
  auto add_crossings = [&](const std::array<std::pair<double, double>, 4>& ln) {
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) {
        double da = ln[a].first - ln[b].first;
        if (std::abs(da) < 1e-15) continue;
        double z = (ln[b].second - ln[a].second) / da;
        if (z > zlo && z < zhi) cand.push_back(z);
      }
  };
  for (size_t q = 0; q < g.probs.size(); ++q) {
    if ((kind == 2 || kind == 3) && q != j) continue;
    // corner products as (slope, intercept) in the active variable
    std::array<std::pair<double, double>, 4> ln;
    if (kind <= 1) {
      double vc = (kind == 0) ? v.v_hi : v.v_lo;
      ln = {{{v.i_lo[q], 0.0},
             {v.i_hi[q], 0.0},
             {0.0, vc * v.i_lo[q]},
             {0.0, vc * v.i_hi[q]}}};
    } else {
      double ic = (kind == 2) ? v.i_hi[q] : v.i_lo[q];
      ln = {{{v.v_lo, 0.0},
             {v.v_hi, 0.0},
             {0.0, v.v_lo * ic},
             {0.0, v.v_hi * ic}}};
    }
    add_crossings(ln);
  }
  double best_z = zlo, best_obj = kInf;
  std::sort(cand.begin(), cand.end());
  for (double z : cand) {
    set(std::clamp(z, zlo, zhi));
    double o = ep_group_objective(g, v);
    if (o < best_obj - 1e-15) {
      best_obj = o;
      best_z = std::clamp(z, zlo, zhi);
    }
  }
  set(best_z);
  return best_obj;
}

inline double ep_group_descend(const EpGroup& g, EpGroupVars& v) {
  double obj = ep_group_objective(g, v);
  for (int sweep = 0; sweep < 300; ++sweep) {
    double prev = obj;
    if (!g.v_fixed) {
      obj = ep_coordinate_min(g, v, 0, 0, g.V_lo0, 0.0);
      obj = ep_coordinate_min(g, v, 1, 0, 0.0, g.V_hi0);
    }
    for (size_t j = 0; j < g.probs.size(); ++j) {
      obj = ep_coordinate_min(g, v, 2, j, g.probs[j].I_lo0, 0.0);
      obj = ep_coordinate_min(g, v, 3, j, 0.0, g.probs[j].I_hi0);
    }
    if (prev - obj <= 1e-15) break;
  }
  return obj;
}

inline EpGroupVars ep_solve_group(const EpGroup& g, unsigned seed) {
  const size_t k = g.probs.size();
  std::vector<EpGroupVars> starts;
  EpGroupVars full;
  full.v_lo = g.v_fixed ? 0.0 : g.V_lo0;
  full.v_hi = g.v_fixed ? 0.0 : g.V_hi0;
  for (size_t j = 0; j < k; ++j) {
    full.i_lo.push_back(g.probs[j].I_lo0);
    full.i_hi.push_back(g.probs[j].I_hi0);
  }
  starts.push_back(full);
  EpGroupVars zero;
  zero.i_lo.assign(k, 0.0);
  zero.i_hi.assign(k, 0.0);
  starts.push_back(zero);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int t = 0; t < 8; ++t) {
    EpGroupVars r;
    r.v_lo = g.v_fixed ? 0.0 : g.V_lo0 * u01(rng);
    r.v_hi = g.v_fixed ? 0.0 : g.V_hi0 * u01(rng);
    for (size_t j = 0; j < k; ++j) {
      r.i_lo.push_back(g.probs[j].I_lo0 * u01(rng));
      r.i_hi.push_back(g.probs[j].I_hi0 * u01(rng));
    }
    starts.push_back(r);
  }
  EpGroupVars best;
  double best_obj = kInf;
  for (auto& s : starts) {
    double o = ep_group_descend(g, s);
    if (o < best_obj - 1e-12) {
      best_obj = o;
      best = s;
    }
  }
  return best;
}

}  // namespace detail

inline BranchEpSolution solve_ep_branch(const BranchEpProblem& p) {
  detail::EpGroup g;
  g.v_fixed = false;
  g.V_lo0 = p.V_lo0;
  g.V_hi0 = p.V_hi0;
  g.probs = {p};
  auto v = detail::ep_solve_group(g, 1000u + static_cast<unsigned>(p.branch));
  BranchEpSolution s;
  s.V_lo = v.v_lo;
  s.V_hi = v.v_hi;
  s.I_lo = v.i_lo[0];
  s.I_hi = v.i_hi[0];
  std::tie(s.Rvi_min, s.Rvi_max) =
      bilinear_corner_bounds(s.V_lo, s.V_hi, s.I_lo, s.I_hi);
  s.objective = ep_branch_objective(s, p);
  return s;
}

// Dense grid search over the four box variables with corner-substituted Rvi;
// acceptance oracle, not the production solver.
inline BranchEpSolution ep_grid_oracle(const BranchEpProblem& p,
                                       int resolution = 41) {
  if (resolution < 2 || resolution > 61)
    throw input_error("oracle resolution out of range");
  auto lin = [resolution](double a, double b, int k) {
    return a + (b - a) * k / (resolution - 1);
  };
  BranchEpSolution best;
  best.objective = kInf;
  for (int a = 0; a < resolution; ++a)
    for (int b = 0; b < resolution; ++b)
      for (int c = 0; c < resolution; ++c)
        for (int d = 0; d < resolution; ++d) {
          BranchEpSolution s;
          s.V_lo = lin(p.V_lo0, 0.0, a);
          s.V_hi = lin(0.0, p.V_hi0, b);
          s.I_lo = lin(p.I_lo0, 0.0, c);
          s.I_hi = lin(0.0, p.I_hi0, d);
          std::tie(s.Rvi_min, s.Rvi_max) =
              bilinear_corner_bounds(s.V_lo, s.V_hi, s.I_lo, s.I_hi);
          s.objective = ((s.V_lo + s.I_lo - s.V_hi - s.I_hi) +
                         (p.M_V_plus + p.M_I_plus) * (s.Rvi_max - s.Rvi_min)) /
                        p.H_i;
          if (s.objective < best.objective - 1e-15) best = s;
        }
  return best;
}

struct EpResult {
  BrouwerBox box;
  CornerBounds bounds;
  std::vector<BranchEpSolution> branch_solutions;  // by branch index
  BrouwerCheck check;
  double contraction = 1.0;  // uniform shrink applied to the solved ranges
};

// Solves the per-start-node expansion problems, then assembles a box over
// the full monitored state: start-node voltage and branch current ranges
// from the expansion solve, non-start voltages at their physical range, and
// the line-flow/slack rows sized to their own mapped-response bounds (their
// coordinates feed the quadratic remainder, so they cannot be left free).
// If any row of the contraction condition still fails, the solved ranges are
// shrunk uniformly until it holds.
inline EpResult solve_ep(const Network& net, const FixedPointModel& m) {
  const int nL = net.n_branches(), nN = net.n_nodes();
  const Vec& x0 = m.anchor_x0;

  // physical outer bounds relative to the anchor, clamped to contain zero
  Vec Vout_lo(nN), Vout_hi(nN), Iout_lo(nL), Iout_hi(nL);
  for (int n = 0; n < nN; ++n) {
    Vout_lo[n] = std::min(net.nodes[n].v_min - x0[net.ixV(n)], 0.0);
    Vout_hi[n] = std::max(net.nodes[n].v_max - x0[net.ixV(n)], 0.0);
  }
  for (int l = 0; l < nL; ++l) {
    Iout_lo[l] = std::min(net.branches[l].i_min - x0[net.ixI(l)], 0.0);
    Iout_hi[l] = std::max(net.branches[l].i_max - x0[net.ixI(l)], 0.0);
  }

  auto make_problem = [&](int l) {
    BranchEpProblem p;
    p.branch = l;
    int n = net.from_idx[l];
    p.V_lo0 = (n == net.root) ? 0.0 : Vout_lo[n];
    p.V_hi0 = (n == net.root) ? 0.0 : Vout_hi[n];
    p.I_lo0 = Iout_lo[l];
    p.I_hi0 = Iout_hi[l];
    for (int nn = 0; nn < nN; ++nn)
      if (nn != net.root) p.M_V_plus += m.M_plus(monitor_v_row(net, nn), l);
    for (int ll = 0; ll < nL; ++ll)
      p.M_I_plus += m.M_plus(monitor_i_row(net, ll), l);
    p.H_i = m.H[monitor_i_row(net, l)];
    return p;
  };

  EpResult res;
  res.branch_solutions.resize(nL);
  Vec Vsol_lo = Vout_lo, Vsol_hi = Vout_hi;  // non-start nodes keep full range
  Vec Isol_lo(nL), Isol_hi(nL);
  std::vector<bool> is_start(nN, false);
  for (int n = 0; n < nN; ++n) {
    if (net.out_branches[n].empty()) continue;
    is_start[n] = true;
    detail::EpGroup g;
    g.v_fixed = (n == net.root);
    g.V_lo0 = g.v_fixed ? 0.0 : Vout_lo[n];
    g.V_hi0 = g.v_fixed ? 0.0 : Vout_hi[n];
    for (int l : net.out_branches[n]) g.probs.push_back(make_problem(l));
    auto v = detail::ep_solve_group(g, 1000u + static_cast<unsigned>(n));
    Vsol_lo[n] = v.v_lo;
    Vsol_hi[n] = v.v_hi;
    for (size_t j = 0; j < g.probs.size(); ++j) {
      int l = g.probs[j].branch;
      Isol_lo[l] = v.i_lo[j];
      Isol_hi[l] = v.i_hi[j];
      BranchEpSolution s;
      s.V_lo = v.v_lo;
      s.V_hi = v.v_hi;
      s.I_lo = v.i_lo[j];
      s.I_hi = v.i_hi[j];
      std::tie(s.Rvi_min, s.Rvi_max) =
          bilinear_corner_bounds(s.V_lo, s.V_hi, s.I_lo, s.I_hi);
      s.objective = ep_branch_objective(s, g.probs[j]);
      res.branch_solutions[l] = s;
    }
  }

  // Slack rows pin the PCC deviation to the control-consistent manifold, so
  // the linear flow response over the control box can be bounded after
  // eliminating the PCC columns through the slack rows.
  const int nu = net.n_u();
  Eigen::Matrix2d Fsig = m.L_u.block(m.n_rows() - 2, 0, 2, 2);
  if (std::abs(Fsig.determinant()) < 1e-12)
    throw singular_error("slack rows do not pin the PCC deviation");
  Eigen::Matrix2d Fsig_inv = Fsig.inverse();
  Mat Fsig_u = m.L_u.block(m.n_rows() - 2, 2, 2, nu);
  Vec uabs = (net.u_min() - m.anchor_u0)
                 .cwiseAbs()
                 .cwiseMax((net.u_max() - m.anchor_u0).cwiseAbs());

  // Size every monitored row consistently: the line-flow and slack rows get
  // the mapped remainder response (plus, for flows, the linear control
  // response over the t-scaled control box), and the voltage/current rows
  // are widened toward their required remainder gap but stay inside the
  // physical bands. The widths feed back into the remainder bounds, so a
  // fixed-point pass iterates; if a physical band cannot absorb its gap the
  // whole attempt contracts by t and the gap shrinks quadratically.
  for (int attempt = 0; attempt < 120; ++attempt) {
    double t = std::pow(0.7, attempt);
    Vec bVlo(nN), bVhi(nN), bIlo(nL), bIhi(nL);
    for (int n = 0; n < nN; ++n) {
      double sc = is_start[n] ? t : 1.0;
      bVlo[n] = sc * Vsol_lo[n];
      bVhi[n] = sc * Vsol_hi[n];
    }
    bIlo = t * Isol_lo;
    bIhi = t * Isol_hi;

    Vec Ph = Vec::Zero(nL), Qh = Vec::Zero(nL), Sh = Vec::Zero(2);
    CornerBounds it;
    auto corner_vi = [&]() {
      it.Rmin_VI.resize(nL);
      it.Rmax_VI.resize(nL);
      for (int l = 0; l < nL; ++l) {
        int n = net.from_idx[l];
        double vlo = (n == net.root) ? 0.0 : bVlo[n];
        double vhi = (n == net.root) ? 0.0 : bVhi[n];
        std::tie(it.Rmin_VI[l], it.Rmax_VI[l]) =
            bilinear_corner_bounds(vlo, vhi, bIlo[l], bIhi[l]);
      }
      it.Rmin_P.resize(nL);
      it.Rmax_P = Vec::Zero(nL);
      it.Rmin_Q.resize(nL);
      it.Rmax_Q = Vec::Zero(nL);
      for (int l = 0; l < nL; ++l) {
        it.Rmin_P[l] = -Ph[l] * Ph[l];
        it.Rmin_Q[l] = -Qh[l] * Qh[l];
      }
      it.Rmin = it.Rmin_P + it.Rmin_Q + it.Rmin_VI;
      it.Rmax = it.Rmax_VI;
    };
    auto resp = [&](int row) {
      double hi = m.L_plus.row(row).dot(it.Rmax) + m.L_minus.row(row).dot(it.Rmin);
      double lo = m.L_minus.row(row).dot(it.Rmax) + m.L_plus.row(row).dot(it.Rmin);
      return std::pair<double, double>(lo, hi);
    };
    auto support = [&](int row) {
      Eigen::RowVector2d af = Eigen::RowVector2d(m.L_u.row(row).head(2)) * Fsig_inv;
      Vec btil =
          m.L_u.row(row).tail(nu).transpose() - (af * Fsig_u).transpose();
      return t * btil.cwiseAbs().dot(uabs) + std::abs(af[0]) * Sh[0] +
             std::abs(af[1]) * Sh[1];
    };

    for (int pass = 0; pass < 60; ++pass) {
      corner_vi();
      double delta = 0.0;
      auto upd = [&](double& slot, double v) {
        delta = std::max(delta, std::abs(v - slot));
        slot = v;
      };
      for (int k = 0; k < 2; ++k) {
        auto [lo, hi] = resp(m.n_rows() - 2 + k);
        upd(Sh[k], std::max(hi, -lo));
      }
      for (int l = 0; l < nL; ++l) {
        auto [plo, phi] = resp(monitor_p_row(net, l));
        upd(Ph[l], support(monitor_p_row(net, l)) + std::max(phi, -plo));
        auto [qlo, qhi] = resp(monitor_q_row(net, l));
        upd(Qh[l], support(monitor_q_row(net, l)) + std::max(qhi, -qlo));
      }
      // widen voltage/current rows to cover the response interval on each
      // side (so the anchor stays admissible), inside the physical bands
      auto widen = [&](double& lo_b, double& hi_b, double lo_r, double hi_r,
                       double p_lo, double p_hi) {
        double nlo = std::max(std::min(lo_b, lo_r - 1e-12), p_lo);
        double nhi = std::min(std::max(hi_b, hi_r + 1e-12), p_hi);
        delta = std::max(delta, std::max(lo_b - nlo, nhi - hi_b));
        lo_b = nlo;
        hi_b = nhi;
      };
      for (int n = 0; n < nN; ++n) {
        if (n == net.root) continue;
        auto [lo, hi] = resp(monitor_v_row(net, n));
        widen(bVlo[n], bVhi[n], lo, hi, Vout_lo[n], Vout_hi[n]);
      }
      for (int l = 0; l < nL; ++l) {
        auto [lo, hi] = resp(monitor_i_row(net, l));
        widen(bIlo[l], bIhi[l], lo, hi, Iout_lo[l], Iout_hi[l]);
      }
      if (delta <= 1e-15) break;
    }
    corner_vi();
    // every band must cover its response interval or the attempt fails and
    // the contraction retries with a smaller scale
    bool sides_ok = true;
    for (int n = 0; n < nN && sides_ok; ++n) {
      if (n == net.root) continue;
      auto [lo, hi] = resp(monitor_v_row(net, n));
      sides_ok = bVlo[n] <= lo && bVhi[n] >= hi;
    }
    for (int l = 0; l < nL && sides_ok; ++l) {
      auto [lo, hi] = resp(monitor_i_row(net, l));
      sides_ok = bIlo[l] <= lo && bIhi[l] >= hi;
    }
    if (!sides_ok) continue;

    BrouwerBox box;
    box.V_lo.resize(nN - 1);
    box.V_hi.resize(nN - 1);
    for (int n = 0; n < nN; ++n) {
      if (n == net.root) continue;
      box.V_lo[monitor_v_row(net, n) - 2 * nL] = bVlo[n];
      box.V_hi[monitor_v_row(net, n) - 2 * nL] = bVhi[n];
    }
    box.I_lo = bIlo;
    box.I_hi = bIhi;
    box.P_lo = -Ph;
    box.P_hi = Ph;
    box.Q_lo = -Qh;
    box.Q_hi = Qh;
    box.sig_lo = -Sh;
    box.sig_hi = Sh;

    auto check = check_brouwer_condition(m, box, it.Rmin, it.Rmax);
    if (check.holds) {
      res.box = box;
      res.bounds = it;
      res.check = check;
      res.contraction = t;
      return res;
    }
  }
  throw internal_error("expansion repair loop failed to contract");
}

}  // namespace vppreg
