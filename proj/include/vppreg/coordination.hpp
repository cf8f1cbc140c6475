#pragma once

#include <optional>
#include <vector>

#include "vppreg/geometry.hpp"
#include "vppreg/oracle.hpp"

namespace vppreg {

// DC transmission model: angle formulation with a designated reference bus.
// Line flow is b * (theta_from - theta_to); unit costs are convex
// piecewise-linear in max-of-affine form (empty = zero cost).
struct DcLine {
  int from = 0, to = 0;
  double b = 0.0;
  double limit = kInf;
};

struct CostPiece {
  double slope = 0.0;
  double intercept = 0.0;
};

struct DcUnit {
  int bus = 0;
  double p_min = 0.0, p_max = 0.0;
  std::vector<CostPiece> cost;

  double cost_at(double s) const {
    double z = 0.0;
    for (const auto& p : cost) z = std::max(z, p.slope * s + p.intercept);
    return z;
  }
};

struct DcTransmission {
  int n_buses = 0;
  int reference = 0;
  std::vector<DcLine> lines;
  std::vector<DcUnit> units;
  std::vector<int> vpp_bus;  // attachment bus per VPP
  Vec demand;                // per bus

  void check() const {
    if (n_buses < 1) throw input_error("transmission needs at least one bus");
    if (reference < 0 || reference >= n_buses)
      throw input_error("reference bus out of range");
    if (demand.size() != n_buses)
      throw input_error("demand vector size mismatch");
    for (const auto& l : lines)
      if (l.from < 0 || l.from >= n_buses || l.to < 0 || l.to >= n_buses ||
          l.from == l.to || l.b <= 0.0 || l.limit < 0.0)
        throw input_error("malformed transmission line");
    for (const auto& u : units)
      if (u.bus < 0 || u.bus >= n_buses || u.p_min > u.p_max)
        throw input_error("malformed dispatchable unit");
    for (int b : vpp_bus)
      if (b < 0 || b >= n_buses) throw input_error("VPP bus out of range");
  }
};

// Convex piecewise-linear VPP cost over the PCC plane, z(u) = max of pieces
// (empty = identically zero).
struct CostSurface {
  struct Piece {
    Vec2 a = Vec2::Zero();
    double c = 0.0;
  };
  std::vector<Piece> pieces;

  double eval(const Vec2& u) const {
    if (pieces.empty()) return 0.0;
    double z = -kInf;
    for (const auto& p : pieces) z = std::max(z, p.a.dot(u) + p.c);
    return z;
  }
};

// One certified sub-region as seen by the transmission level: its PCC
// polygon rows (absolute coordinates) and its cost surface.
struct VppOption {
  Mat A;  // m x 2
  Vec B;
  CostSurface z;
};

struct CoordinationProblem {
  DcTransmission tx;
  std::vector<std::vector<VppOption>> vpps;  // parallel to tx.vpp_bus

  void check() const {
    tx.check();
    if (vpps.size() != tx.vpp_bus.size())
      throw input_error("one option list per attached VPP required");
    for (const auto& opts : vpps) {
      if (opts.empty()) throw input_error("every VPP needs a sub-region");
      for (const auto& o : opts)
        if (o.A.rows() != o.B.size() || o.A.cols() != 2 || o.A.rows() < 1)
          throw input_error("malformed sub-region rows");
    }
  }
};

struct DispatchResult {
  bool feasible = false;
  double value = 0.0;
  Vec unit_p;                  // per dispatchable unit
  Vec theta;                   // per bus
  std::vector<Vec2> vpp_pcc;   // chosen transfer per VPP
  std::vector<int> chosen;     // selected sub-region index per VPP
  std::vector<double> vpp_cost;    // y of the selected sub-region, per VPP
  std::vector<double> option_cost;  // every y, flattened over (VPP, sub-region)
};

namespace detail {

// Variable layout of the dispatch LP:
//   [theta (nB), s (nU), tc (nU), upcc (2 per VPP), y (one per sub-region)]
struct DispatchLayout {
  int nB = 0, nU = 0, nV = 0, nJ = 0;
  int off_theta = 0, off_s = 0, off_tc = 0, off_u = 0, off_y = 0;
  int n_vars = 0;
  std::vector<int> y_base;  // per VPP, first y index

  static DispatchLayout make(const CoordinationProblem& cp) {
    DispatchLayout d;
    d.nB = cp.tx.n_buses;
    d.nU = static_cast<int>(cp.tx.units.size());
    d.nV = static_cast<int>(cp.vpps.size());
    d.off_theta = 0;
    d.off_s = d.nB;
    d.off_tc = d.nB + d.nU;
    d.off_u = d.nB + 2 * d.nU;
    d.off_y = d.nB + 2 * d.nU + 2 * d.nV;
    for (const auto& opts : cp.vpps) {
      d.y_base.push_back(d.off_y + d.nJ);
      d.nJ += static_cast<int>(opts.size());
    }
    d.n_vars = d.off_y + d.nJ;
    return d;
  }
};

// Bounding box of the union of a VPP's sub-region polygons, used both as
// explicit variable bounds and for big-M sizing.
inline void pcc_bounding_box(const std::vector<VppOption>& opts, Vec2& lo,
                             Vec2& hi) {
  lo = Vec2::Constant(kInf);
  hi = Vec2::Constant(-kInf);
  for (const auto& o : opts) {
    Polytope poly{o.A, o.B};
    for (int d = 0; d < 2; ++d) {
      Vec dir = Vec::Zero(2);
      dir[d] = 1.0;
      auto up = poly.support(dir);
      auto dn = poly.support(-dir);
      if (!up || !dn) continue;  // empty option cannot be selected
      hi[d] = std::max(hi[d], up->value);
      lo[d] = std::min(lo[d], -dn->value);
    }
  }
  if (!(lo[0] <= hi[0] && lo[1] <= hi[1]))
    throw input_error("every sub-region of a VPP is empty");
}

// Shared transmission-side LP: balance, flows, unit bounds and cost
// epigraphs. Sub-region rows are appended by the callers.
inline LpProblem dispatch_base_lp(const CoordinationProblem& cp,
                                  const DispatchLayout& d,
                                  const std::vector<Vec2>& box_lo,
                                  const std::vector<Vec2>& box_hi) {
  LpProblem lp = LpProblem::make(d.n_vars);
  lp.lo[d.off_theta + cp.tx.reference] = 0.0;
  lp.hi[d.off_theta + cp.tx.reference] = 0.0;
  for (int u = 0; u < d.nU; ++u) {
    lp.lo[d.off_s + u] = cp.tx.units[u].p_min;
    lp.hi[d.off_s + u] = cp.tx.units[u].p_max;
    lp.lo[d.off_tc + u] = 0.0;  // max-of-affine cost is never below zero
    lp.c[d.off_tc + u] = 1.0;
    for (const auto& pc : cp.tx.units[u].cost) {
      Vec row = Vec::Zero(d.n_vars);
      row[d.off_s + u] = pc.slope;
      row[d.off_tc + u] = -1.0;
      lp.add_row(row, RowSense::LE, -pc.intercept);
    }
  }
  for (int v = 0; v < d.nV; ++v) {
    for (int k = 0; k < 2; ++k) {
      lp.lo[d.off_u + 2 * v + k] = box_lo[v][k];
      lp.hi[d.off_u + 2 * v + k] = box_hi[v][k];
    }
  }
  for (int y = d.off_y; y < d.n_vars; ++y) {
    lp.lo[y] = 0.0;
    lp.c[y] = 1.0;
  }
  // nodal balance: units minus demand minus VPP draw equals net outflow
  for (int b = 0; b < d.nB; ++b) {
    Vec row = Vec::Zero(d.n_vars);
    for (int u = 0; u < d.nU; ++u)
      if (cp.tx.units[u].bus == b) row[d.off_s + u] += 1.0;
    for (int v = 0; v < d.nV; ++v)
      if (cp.tx.vpp_bus[v] == b) row[d.off_u + 2 * v] -= 1.0;
    for (const auto& l : cp.tx.lines) {
      if (l.from == b) {
        row[d.off_theta + l.from] -= l.b;
        row[d.off_theta + l.to] += l.b;
      } else if (l.to == b) {
        row[d.off_theta + l.to] -= l.b;
        row[d.off_theta + l.from] += l.b;
      }
    }
    lp.add_row(row, RowSense::EQ, cp.tx.demand[b]);
  }
  // line flow limits
  for (const auto& l : cp.tx.lines) {
    Vec row = Vec::Zero(d.n_vars);
    row[d.off_theta + l.from] = l.b;
    row[d.off_theta + l.to] = -l.b;
    lp.add_row(row, RowSense::LE, l.limit);
    lp.add_row(-row, RowSense::LE, l.limit);
  }
  return lp;
}

inline DispatchResult extract_dispatch(const CoordinationProblem& cp,
                                       const DispatchLayout& d, const Vec& x,
                                       double value,
                                       const std::vector<int>& chosen) {
  DispatchResult r;
  r.feasible = true;
  r.value = value;
  r.theta = x.segment(d.off_theta, d.nB);
  r.unit_p = x.segment(d.off_s, d.nU);
  r.chosen = chosen;
  for (int v = 0; v < d.nV; ++v) {
    r.vpp_pcc.push_back(Vec2(x[d.off_u + 2 * v], x[d.off_u + 2 * v + 1]));
    r.vpp_cost.push_back(chosen[v] >= 0 ? x[d.y_base[v] + chosen[v]] : 0.0);
    for (size_t j = 0; j < cp.vpps[v].size(); ++j)
      r.option_cost.push_back(x[d.y_base[v] + static_cast<int>(j)]);
  }
  return r;
}

}  // namespace detail

// Exact coordination oracle: enumerate one sub-region choice per VPP and
// solve an LP for each assignment. Guarded by the assignment-count cap.
inline DispatchResult solve_tp_enumerate(const CoordinationProblem& cp) {
  cp.check();
  auto d = detail::DispatchLayout::make(cp);
  double combos = 1.0;
  for (const auto& opts : cp.vpps) combos *= static_cast<double>(opts.size());
  if (combos > 1e4)
    throw budget_error("assignment enumeration too large; use the big-M solve");

  std::vector<Vec2> box_lo(d.nV), box_hi(d.nV);
  for (int v = 0; v < d.nV; ++v)
    detail::pcc_bounding_box(cp.vpps[v], box_lo[v], box_hi[v]);
  LpProblem base = detail::dispatch_base_lp(cp, d, box_lo, box_hi);

  DispatchResult best;
  std::vector<int> pick(d.nV, 0);
  for (;;) {
    LpProblem lp = base;
    for (int v = 0; v < d.nV; ++v) {
      const VppOption& o = cp.vpps[v][pick[v]];
      int ysel = d.y_base[v] + pick[v];
      for (size_t j = 0; j < cp.vpps[v].size(); ++j)
        if (static_cast<int>(j) != pick[v]) lp.hi[d.y_base[v] + j] = 0.0;
      for (int r = 0; r < o.A.rows(); ++r) {
        Vec row = Vec::Zero(d.n_vars);
        row[d.off_u + 2 * v] = o.A(r, 0);
        row[d.off_u + 2 * v + 1] = o.A(r, 1);
        lp.add_row(row, RowSense::LE, o.B[r]);
      }
      for (const auto& p : o.z.pieces) {
        Vec row = Vec::Zero(d.n_vars);
        row[d.off_u + 2 * v] = p.a[0];
        row[d.off_u + 2 * v + 1] = p.a[1];
        row[ysel] = -1.0;
        lp.add_row(row, RowSense::LE, -p.c);
      }
    }
    auto r = lp_solve(lp);
    if (r.status == LpStatus::Optimal &&
        (!best.feasible || r.value < best.value - 1e-12))
      best = detail::extract_dispatch(cp, d, r.x, r.value, pick);
    int v = 0;
    while (v < d.nV && ++pick[v] == static_cast<int>(cp.vpps[v].size()))
      pick[v++] = 0;
    if (v == d.nV) break;
  }
  return best;
}

// Big-M mixed-integer formulation: binary k selects the active sub-region
// per VPP; unselected rows are relaxed by per-row M values sized from the
// PCC bounding box plus a unit margin. m_override > 0 replaces every
// computed M (validation hook for undersized-M experiments).
inline DispatchResult solve_etp(const CoordinationProblem& cp,
                                double m_override = 0.0) {
  cp.check();
  auto d = detail::DispatchLayout::make(cp);
  std::vector<Vec2> box_lo(d.nV), box_hi(d.nV);
  for (int v = 0; v < d.nV; ++v)
    detail::pcc_bounding_box(cp.vpps[v], box_lo[v], box_hi[v]);

  // append one binary per (VPP, option) after the base variables
  int nK = 0;
  for (const auto& opts : cp.vpps) nK += static_cast<int>(opts.size());
  LpProblem base = detail::dispatch_base_lp(cp, d, box_lo, box_hi);
  MilpProblem mp;
  mp.core = LpProblem::make(d.n_vars + nK);
  mp.core.c.head(d.n_vars) = base.c;
  mp.core.lo.head(d.n_vars) = base.lo;
  mp.core.hi.head(d.n_vars) = base.hi;
  mp.core.A = Mat::Zero(base.A.rows(), d.n_vars + nK);
  mp.core.A.leftCols(d.n_vars) = base.A;
  mp.core.b = base.b;
  mp.core.sense = base.sense;
  for (int k = 0; k < nK; ++k) {
    mp.core.lo[d.n_vars + k] = 0.0;
    mp.core.hi[d.n_vars + k] = 1.0;
    mp.binaries.push_back(d.n_vars + k);
  }

  auto box_max = [&](int v, const Vec2& a, double c) {
    // max of a.u + c over the VPP's PCC bounding box
    double z = c;
    for (int k = 0; k < 2; ++k)
      z += std::max(a[k] * box_lo[v][k], a[k] * box_hi[v][k]);
    return z;
  };

  int kcol = d.n_vars;
  for (int v = 0; v < d.nV; ++v) {
    Vec one = Vec::Zero(d.n_vars + nK);
    for (size_t j = 0; j < cp.vpps[v].size(); ++j) one[kcol + j] = 1.0;
    mp.core.add_row(one, RowSense::EQ, 1.0);
    for (size_t j = 0; j < cp.vpps[v].size(); ++j, ++kcol) {
      const VppOption& o = cp.vpps[v][j];
      for (int r = 0; r < o.A.rows(); ++r) {
        Vec2 a(o.A(r, 0), o.A(r, 1));
        double M = m_override > 0.0 ? m_override : box_max(v, a, -o.B[r]) + 1.0;
        Vec row = Vec::Zero(d.n_vars + nK);
        row[d.off_u + 2 * v] = a[0];
        row[d.off_u + 2 * v + 1] = a[1];
        row[kcol] = M;
        mp.core.add_row(row, RowSense::LE, o.B[r] + M);
      }
      for (const auto& p : o.z.pieces) {
        double M = m_override > 0.0 ? m_override
                                    : std::max(box_max(v, p.a, p.c), 0.0) + 1.0;
        Vec row = Vec::Zero(d.n_vars + nK);
        row[d.off_u + 2 * v] = p.a[0];
        row[d.off_u + 2 * v + 1] = p.a[1];
        row[d.y_base[v] + static_cast<int>(j)] = -1.0;
        row[kcol] = M;
        mp.core.add_row(row, RowSense::LE, -p.c + M);
      }
    }
  }

  auto r = milp_solve(mp);
  DispatchResult out;
  if (r.status != LpStatus::Optimal) return out;
  std::vector<int> chosen(d.nV, -1);
  int kc = d.n_vars;
  for (int v = 0; v < d.nV; ++v)
    for (size_t j = 0; j < cp.vpps[v].size(); ++j, ++kc)
      if (r.x[kc] > 0.5) chosen[v] = static_cast<int>(j);
  return detail::extract_dispatch(cp, d, r.x.head(d.n_vars), r.value, chosen);
}

// Minimum internal generation cost at a fixed PCC transfer, recovered by LP
// over the stored admissible-control polytope.
namespace detail {

inline std::optional<double> subregion_cost_at(const Network& net,
                                               const SubRegion& sr,
                                               const Vec2& u_pcc) {
  Vec2 y1 = u_pcc - Vec2(sr.anchor.pcc[0], sr.anchor.pcc[1]);
  const int nu = net.n_u();
  LpProblem lp = LpProblem::make(nu);
  for (int r = 0; r < sr.omega.A.rows(); ++r)
    lp.add_row(sr.omega.A.row(r).tail(nu), RowSense::LE,
               sr.omega.b[r] - sr.omega.A.row(r).head(2).dot(y1));
  for (int g = 0; g < net.n_gens(); ++g)
    lp.c[g] = net.gens[g].cost_p;
  auto r = lp_solve(lp);
  if (r.status != LpStatus::Optimal) return std::nullopt;
  double cost = r.value;
  for (int g = 0; g < net.n_gens(); ++g)
    cost += net.gens[g].cost_p * sr.anchor.controls[g];
  return cost;
}

// Lower convex hull of (x in R^2, z) samples as max-of-affine pieces.
inline std::vector<CostSurface::Piece> lower_hull_pieces(
    const std::vector<Vec2>& xs, const std::vector<double>& zs) {
  const int n = static_cast<int>(xs.size());
  std::vector<CostSurface::Piece> out;
  auto push_unique = [&](const CostSurface::Piece& p) {
    for (const auto& q : out)
      if ((q.a - p.a).norm() <= 1e-9 && std::abs(q.c - p.c) <= 1e-9) return;
    out.push_back(p);
  };
  // spatial extent checks for the degenerate layouts
  Vec2 cmin = xs[0], cmax = xs[0];
  for (const auto& x : xs) {
    cmin = cmin.cwiseMin(x);
    cmax = cmax.cwiseMax(x);
  }
  if ((cmax - cmin).norm() <= 1e-9) {
    double z = zs[0];
    for (double v : zs) z = std::min(z, v);
    push_unique({Vec2::Zero(), z});
    return out;
  }
  // collinear: 1-D lower hull along the dominant direction
  Vec2 dir = (cmax - cmin).normalized();
  bool collinear = true;
  for (const auto& x : xs)
    if (std::abs(dir[0] * (x[1] - cmin[1]) - dir[1] * (x[0] - cmin[0])) > 1e-9)
      collinear = false;
  if (collinear) {
    std::vector<std::pair<double, double>> tz;
    for (int i = 0; i < n; ++i) tz.push_back({dir.dot(xs[i] - cmin), zs[i]});
    std::sort(tz.begin(), tz.end());
    std::vector<std::pair<double, double>> hull;
    for (const auto& p : tz) {
      while (hull.size() >= 2) {
        auto& a = hull[hull.size() - 2];
        auto& b = hull[hull.size() - 1];
        if ((b.second - a.second) * (p.first - a.first) >=
            (p.second - a.second) * (b.first - a.first))
          hull.pop_back();
        else
          break;
      }
      if (hull.empty() || p.first > hull.back().first + 1e-12) hull.push_back(p);
    }
    if (hull.size() == 1) {
      push_unique({Vec2::Zero(), hull[0].second});
      return out;
    }
    for (size_t k = 0; k + 1 < hull.size(); ++k) {
      double m = (hull[k + 1].second - hull[k].second) /
                 (hull[k + 1].first - hull[k].first);
      Vec2 a = m * dir;
      double c = hull[k].second - m * hull[k].first - a.dot(cmin);
      push_unique({a, c});
    }
    return out;
  }
  // general position: every supporting plane through three samples
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        Eigen::Matrix3d S;
        S << xs[i][0], xs[i][1], 1.0, xs[j][0], xs[j][1], 1.0, xs[k][0],
            xs[k][1], 1.0;
        if (std::abs(S.determinant()) < 1e-10) continue;
        Eigen::Vector3d rhs(zs[i], zs[j], zs[k]);
        Eigen::Vector3d abc = S.partialPivLu().solve(rhs);
        bool lower = true;
        for (int t = 0; t < n && lower; ++t)
          if (zs[t] < abc[0] * xs[t][0] + abc[1] * xs[t][1] + abc[2] - 1e-9)
            lower = false;
        if (lower) push_unique({Vec2(abc[0], abc[1]), abc[2]});
      }
  if (out.empty()) {
    double z = zs[0];
    for (double v : zs) z = std::min(z, v);
    push_unique({Vec2::Zero(), z});
  }
  return out;
}

}  // namespace detail

// Sampled lower-convex-hull cost surface over a sub-region's PCC polygon.
// The LP value is convex in the transfer, so the hull touches every sample.
inline CostSurface build_cost_surface(const Network& net, const SubRegion& sr,
                                      int target_samples = 15) {
  if (target_samples < 3) throw input_error("need at least three samples");
  bool any_cost = false;
  for (const auto& g : net.gens)
    if (g.cost_p != 0.0) any_cost = true;
  if (!any_cost) return CostSurface{};  // identically zero

  // triangular sampling: polygon vertices, centroid, and edge/interior blend
  std::vector<Vec2> xs;
  auto add = [&](const Vec2& p) {
    for (const auto& q : xs)
      if ((q - p).norm() <= 1e-12) return;
    xs.push_back(p);
  };
  Vec2 centroid = Vec2::Zero();
  for (const auto& v : sr.polygon.vertices) centroid += v;
  centroid /= static_cast<double>(sr.polygon.vertices.size());
  add(centroid);
  for (const auto& v : sr.polygon.vertices) add(v);
  for (size_t k = 0; k < sr.polygon.vertices.size(); ++k) {
    add(0.5 * (sr.polygon.vertices[k] +
               sr.polygon.vertices[(k + 1) % sr.polygon.vertices.size()]));
    add(0.5 * (sr.polygon.vertices[k] + centroid));
    if (static_cast<int>(xs.size()) >= target_samples) break;
  }

  std::vector<double> zs;
  for (const auto& x : xs) {
    auto c = detail::subregion_cost_at(net, sr, x);
    if (!c)
      throw internal_error("cost sample infeasible inside the sub-region");
    zs.push_back(*c);
  }
  CostSurface s;
  s.pieces = detail::lower_hull_pieces(xs, zs);
  return s;
}

// Convenience bridge from a characterized sub-region to its transmission
// view (absolute polygon rows plus the fitted cost surface).
inline VppOption make_vpp_option(const Network& net, const SubRegion& sr,
                                 int target_samples = 15) {
  VppOption o;
  o.A = sr.polygon.Ah;
  o.B = sr.polygon.bh;
  o.z = build_cost_surface(net, sr, target_samples);
  return o;
}

}  // namespace vppreg
