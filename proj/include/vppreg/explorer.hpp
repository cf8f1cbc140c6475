#pragma once

#include <functional>
#include <optional>
#include <string>

#include "vppreg/epsolver.hpp"
#include "vppreg/optim.hpp"

namespace vppreg {

// One characterized sub-region: a solved anchor, the admissible-control
// polytope around it (deviation coordinates), and its PCC projection
// (absolute coordinates, liftings kept as vertex certificates).
struct SubRegion {
  OperatingPoint anchor;
  Polytope omega;  // rows over (u~pcc, u~)
  PccPolygon polygon;
  BrouwerBox box;
  CornerBounds bounds;
  int iteration = 0;
};

enum class ExploreStop { NoNewVertices, MaxSubregions, MaxPoints };

inline std::string to_string(ExploreStop s) {
  switch (s) {
    case ExploreStop::NoNewVertices: return "no-new-vertices";
    case ExploreStop::MaxSubregions: return "max-subregions";
    case ExploreStop::MaxPoints: return "max-points";
  }
  return "?";
}

struct RegionAtlas {
  std::vector<SubRegion> subregions;
  std::vector<Vec2> visited_points;
  int iterations = 0;
  ExploreStop termination = ExploreStop::NoNewVertices;
};

struct ExploreConfig {
  int max_subregions = 32;
  int max_points = 256;
  int max_iterations = 8;
  double point_dedup_tol = 1e-4;
  std::function<void(const std::string&)> log;  // optional progress sink

  void check() const {
    if (max_subregions < 1 || max_points < 1 || max_iterations < 1)
      throw input_error("exploration caps must be at least 1");
  }
};

namespace detail {

// Loss-free linear power flow LP: tree flows balance exactly, voltage drops
// are linear, currents are neglected. Used only to suggest control values.
struct LinearFlowLp {
  LpProblem lp;
  int off_u = 0, off_p = 0, off_q = 0, off_v = 0;

  static LinearFlowLp build(const Network& net, double v_root = 1.0) {
    const int nu = net.n_u(), nL = net.n_branches(), nN = net.n_nodes();
    const int nG = net.n_gens();
    LinearFlowLp r;
    r.off_u = 0;
    r.off_p = nu;
    r.off_q = nu + nL;
    r.off_v = nu + 2 * nL;
    r.lp = LpProblem::make(nu + 2 * nL + nN);
    Vec ulo = net.u_min(), uhi = net.u_max();
    for (int k = 0; k < nu; ++k) {
      r.lp.lo[k] = ulo[k];
      r.lp.hi[k] = uhi[k];
    }
    for (int n = 0; n < nN; ++n) {
      r.lp.lo[r.off_v + n] = net.nodes[n].v_min;
      r.lp.hi[r.off_v + n] = net.nodes[n].v_max;
    }
    r.lp.lo[r.off_v + net.root] = v_root;
    r.lp.hi[r.off_v + net.root] = v_root;

    // nodal balance (non-root): outgoing minus incoming = gen - demand
    for (int n = 0; n < nN; ++n) {
      if (n == net.root) continue;
      Vec rp = Vec::Zero(r.lp.c.size()), rq = Vec::Zero(r.lp.c.size());
      for (int l : net.out_branches[n]) {
        rp[r.off_p + l] = 1.0;
        rq[r.off_q + l] = 1.0;
      }
      int pb = net.parent_branch[n];
      rp[r.off_p + pb] -= 1.0;
      rq[r.off_q + pb] -= 1.0;
      for (int g = 0; g < nG; ++g)
        if (net.node_index(net.gens[g].node) == n) {
          rp[g] = -1.0;
          rq[nG + g] = -1.0;
        }
      rp[2 * nG + n] = 1.0;
      rq[2 * nG + nN + n] = 1.0;
      r.lp.add_row(rp, RowSense::EQ, 0.0);
      r.lp.add_row(rq, RowSense::EQ, 0.0);
    }
    // linear voltage drops
    for (int l = 0; l < nL; ++l) {
      Vec row = Vec::Zero(r.lp.c.size());
      row[r.off_v + net.from_idx[l]] = 1.0;
      row[r.off_v + net.to_idx[l]] = -1.0;
      row[r.off_p + l] = -2.0 * net.branches[l].r;
      row[r.off_q + l] = -2.0 * net.branches[l].x;
      r.lp.add_row(row, RowSense::EQ, 0.0);
    }
    return r;
  }

  // objective vector for +- PCC active/reactive transfer
  Vec pcc_objective(const Network& net, bool reactive, double sign) const {
    Vec c = Vec::Zero(lp.c.size());
    const int nG = net.n_gens(), nN = net.n_nodes();
    for (int l : net.out_branches[net.root])
      c[(reactive ? off_q : off_p) + l] = sign;
    for (int g = 0; g < nG; ++g)
      if (net.node_index(net.gens[g].node) == net.root)
        c[(reactive ? nG : 0) + g] = -sign;
    c[(reactive ? 2 * nG + nN : 2 * nG) + net.root] = sign;
    return c;
  }
};

inline std::optional<OperatingPoint> corrected_anchor(const Network& net,
                                                      Vec u, const Vec& u_nom,
                                                      int retreats,
                                                      double step) {
  for (int t = 0; t <= retreats; ++t) {
    bool ok = false;
    try {
      auto r = newton_solve(net, u, PccMode::Free);
      ok = r.converged && limit_check(net, r.point).clean(1e-9);
      if (ok) return r.point;
    } catch (const singular_error&) {
    }
    u += step * (u_nom - u);
  }
  return std::nullopt;
}

}  // namespace detail

// Anchors at the extremes of the linearized transfer range, corrected to
// exact solved points (retreating toward the nominal controls on failure).
inline std::vector<OperatingPoint> select_start_points(const Network& net) {
  auto lin = detail::LinearFlowLp::build(net);
  Vec u_nom = 0.5 * (net.u_min() + net.u_max());
  std::vector<OperatingPoint> out;
  for (int k = 0; k < 4; ++k) {
    LpProblem lp = lin.lp;
    lp.c = lin.pcc_objective(net, k >= 2, (k % 2) ? -1.0 : 1.0);
    auto r = lp_solve(lp);
    Vec u = (r.status == LpStatus::Optimal) ? Vec(r.x.head(net.n_u())) : u_nom;
    auto pt = detail::corrected_anchor(net, u, u_nom, 10, 0.05);
    if (!pt) continue;
    bool dup = false;
    for (const auto& q : out)
      if ((q.pcc - pt->pcc).norm() <= 1e-6) dup = true;
    if (!dup) out.push_back(*pt);
  }
  if (out.empty()) {
    auto pt = detail::corrected_anchor(net, u_nom, u_nom, 0, 0.0);
    if (pt) out.push_back(*pt);
  }
  if (out.empty())
    throw input_error("no feasible anchor found; characterization cannot start");
  return out;
}

// Full construction chain at a solved anchor.
inline SubRegion construct_subregion(const Network& net,
                                     const OperatingPoint& anchor,
                                     int iteration = 0) {
  SubRegion sr;
  sr.anchor = anchor;
  sr.iteration = iteration;
  auto model = build_fixed_point_model(net, anchor);
  auto ep = solve_ep(net, model);
  sr.box = ep.box;
  sr.bounds = ep.bounds;
  sr.omega = build_omega_polytope(model, ep.box, ep.bounds.Rmin,
                                  ep.bounds.Rmax, net);
  auto pg = project_to_pcc(sr.omega, Vec2(anchor.pcc[0], anchor.pcc[1]));
  if (!pg) throw internal_error("admissible polytope lost its anchor");
  sr.polygon = *pg;
  return sr;
}

inline RegionAtlas explore(const Network& net, const ExploreConfig& cfg) {
  cfg.check();
  RegionAtlas atlas;
  auto log = [&](const std::string& s) {
    if (cfg.log) cfg.log(s);
  };

  auto seen = [&](const Vec2& p) {
    for (const auto& q : atlas.visited_points)
      if ((q - p).norm() < cfg.point_dedup_tol) return true;
    return false;
  };

  std::vector<OperatingPoint> candidates = select_start_points(net);
  bool capped = false;
  for (int it = 0; it < cfg.max_iterations && !candidates.empty(); ++it) {
    atlas.iterations = it + 1;
    std::vector<const SubRegion*> fresh;
    size_t first_new = atlas.subregions.size();
    int accepted = 0;
    for (const auto& cand : candidates) {
      Vec2 p(cand.pcc[0], cand.pcc[1]);
      if (seen(p)) continue;
      if (static_cast<int>(atlas.subregions.size()) >= cfg.max_subregions) {
        atlas.termination = ExploreStop::MaxSubregions;
        capped = true;
        break;
      }
      if (static_cast<int>(atlas.visited_points.size()) >= cfg.max_points) {
        atlas.termination = ExploreStop::MaxPoints;
        capped = true;
        break;
      }
      atlas.visited_points.push_back(p);
      try {
        atlas.subregions.push_back(construct_subregion(net, cand, it));
        ++accepted;
      } catch (const singular_error&) {
      } catch (const input_error&) {
      }
    }
    log("iter " + std::to_string(it + 1) + ": " +
        std::to_string(candidates.size()) + " candidates, " +
        std::to_string(accepted) + " accepted");
    if (capped) break;

    // harvest vertices of this iteration's sub-regions as next search points
    candidates.clear();
    for (size_t s = first_new; s < atlas.subregions.size(); ++s) {
      const SubRegion& sr = atlas.subregions[s];
      for (size_t k = 0; k < sr.polygon.vertices.size(); ++k) {
        const Vec2& v = sr.polygon.vertices[k];
        if (seen(v)) continue;
        bool interior = false;
        for (const auto& other : atlas.subregions)
          if (&other != &sr && other.polygon.strictly_contains(v, 1e-9))
            interior = true;
        if (interior) continue;
        Vec u_cand = sr.anchor.controls + sr.polygon.liftings[k].tail(net.n_u());
        auto pt = detail::corrected_anchor(net, u_cand, sr.anchor.controls, 5,
                                           0.01);
        if (!pt) continue;
        Vec2 landed(pt->pcc[0], pt->pcc[1]);
        if (seen(landed)) continue;
        bool dup = false;
        for (const auto& c : candidates)
          if ((Vec2(c.pcc[0], c.pcc[1]) - landed).norm() < cfg.point_dedup_tol)
            dup = true;
        if (!dup) candidates.push_back(*pt);
      }
    }
    if (candidates.empty() && !capped) {
      atlas.termination = ExploreStop::NoNewVertices;
      break;
    }
  }
  if (!capped && !candidates.empty())
    atlas.termination = ExploreStop::NoNewVertices;
  return atlas;
}

}  // namespace vppreg
