#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "vppreg/optim.hpp"

namespace vppreg {

using Vec2 = Eigen::Vector2d;

// H-representation A y <= b. For region polytopes the first two coordinates
// are the PCC transfer offsets and the rest the control offsets.
struct Polytope {
  Mat A;
  Vec b;

  int dim() const { return static_cast<int>(A.cols()); }
  int rows() const { return static_cast<int>(A.rows()); }

  bool feasible(const Vec& y, double tol = 1e-9) const {
    return ((A * y - b).array() <= tol).all();
  }

  LpProblem as_lp() const {
    LpProblem p = LpProblem::make(dim());
    p.A = A;
    p.b = b;
    p.sense.assign(rows(), RowSense::LE);
    return p;
  }

  // max d'y over the polytope; nullopt if infeasible, throws if unbounded.
  std::optional<LpResult> support(const Vec& d) const {
    LpProblem p = as_lp();
    p.c = -d;
    LpResult r = lp_solve(p);
    if (r.status == LpStatus::Infeasible) return std::nullopt;
    if (r.status == LpStatus::Unbounded) throw input_error("polytope is unbounded");
    r.value = -r.value;
    return r;
  }

  bool bounded() const {
    for (int k = 0; k < dim(); ++k) {
      Vec d = Vec::Zero(dim());
      d[k] = 1.0;
      for (double s : {1.0, -1.0}) {
        LpProblem p = as_lp();
        p.c = s * d;
        if (lp_solve(p).status == LpStatus::Unbounded) return false;
      }
    }
    return true;
  }
};

// Convex polygon in the absolute PCC plane: CCW vertices, halfspace rows
// Ah u <= bh, per-vertex lifting into the source polytope's control space.
struct PccPolygon {
  std::vector<Vec2> vertices;      // CCW, absolute coordinates
  Mat Ah;                          // m x 2
  Vec bh;
  Vec2 anchor = Vec2::Zero();      // u_PCC0
  std::vector<Vec> liftings;       // full source-polytope point per vertex

  bool contains(const Vec2& u, double tol = 1e-9) const {
    if (vertices.empty()) return false;
    return ((Ah * u - bh).array() <= tol).all();
  }

  // Strict interior (used by the exploration Situation-1 test).
  bool strictly_contains(const Vec2& u, double tol = 1e-9) const {
    if (vertices.empty()) return false;
    return ((Ah * u - bh).array() < -tol).all();
  }

  double area() const {
    double a = 0.0;
    const int n = static_cast<int>(vertices.size());
    for (int k = 0; k < n; ++k) {
      const Vec2& p = vertices[k];
      const Vec2& q = vertices[(k + 1) % n];
      a += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * a;
  }
};

inline bool polygon_membership(const PccPolygon& pg, const Vec2& u, double tol = 1e-9) {
  return pg.contains(u, tol);
}

inline bool polygon_membership(const std::vector<PccPolygon>& pgs, const Vec2& u,
                               double tol = 1e-9) {
  for (const auto& pg : pgs)
    if (pg.contains(u, tol)) return true;
  return false;
}

inline double union_coverage(const std::vector<PccPolygon>& pgs,
                             const std::vector<Vec2>& feasible_points,
                             double tol = 1e-9) {
  if (feasible_points.empty()) return 0.0;
  int in = 0;
  for (const auto& p : feasible_points)
    if (polygon_membership(pgs, p, tol)) ++in;
  return static_cast<double>(in) / static_cast<double>(feasible_points.size());
}

namespace detail {

inline std::vector<int> convex_hull_ccw(const std::vector<Vec2>& pts) {
  const int n = static_cast<int>(pts.size());
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (pts[a].x() != pts[b].x()) return pts[a].x() < pts[b].x();
    return pts[a].y() < pts[b].y();
  });
  auto cross = [&](int o, int a, int b) {
    return (pts[a].x() - pts[o].x()) * (pts[b].y() - pts[o].y()) -
           (pts[a].y() - pts[o].y()) * (pts[b].x() - pts[o].x());
  };
  std::vector<int> hull;
  for (int pass = 0; pass < 2; ++pass) {
    size_t start = hull.size();
    const auto& seq = idx;
    for (int ii = 0; ii < n; ++ii) {
      int i = pass == 0 ? seq[ii] : seq[n - 1 - ii];
      while (hull.size() >= start + 2 &&
             cross(hull[hull.size() - 2], hull[hull.size() - 1], i) <= 1e-18)
        hull.pop_back();
      hull.push_back(i);
    }
    hull.pop_back();
  }
  if (hull.empty() && n > 0) hull.push_back(idx[0]);
  return hull;
}

// Halfspaces from hull edges; degenerate hulls (point/segment) get a tight
// sandwich of rows so membership still means "on the certified set".
inline void polygon_halfspaces(PccPolygon& pg) {
  const int n = static_cast<int>(pg.vertices.size());
  std::vector<Vec2> normals;
  std::vector<double> offs;
  auto add = [&](const Vec2& nrm, double off) {
    double s = nrm.norm();
    if (s < 1e-14) return;
    normals.push_back(nrm / s);
    offs.push_back(off / s);
  };
  if (n == 1) {
    const Vec2& v = pg.vertices[0];
    add({1, 0}, v.x());
    add({-1, 0}, -v.x());
    add({0, 1}, v.y());
    add({0, -1}, -v.y());
  } else if (n == 2) {
    Vec2 t = pg.vertices[1] - pg.vertices[0];
    Vec2 nrm(t.y(), -t.x());
    add(nrm, nrm.dot(pg.vertices[0]));
    add(-nrm, -nrm.dot(pg.vertices[0]));
    add(t, t.dot(pg.vertices[1]));
    add(-t, -t.dot(pg.vertices[0]));
  } else {
    for (int k = 0; k < n; ++k) {
      const Vec2& p = pg.vertices[k];
      const Vec2& q = pg.vertices[(k + 1) % n];
      Vec2 e = q - p;
      Vec2 nrm(e.y(), -e.x());  // outward for CCW
      add(nrm, nrm.dot(p));
    }
  }
  pg.Ah.resize(static_cast<int>(normals.size()), 2);
  pg.bh.resize(static_cast<int>(normals.size()));
  for (size_t k = 0; k < normals.size(); ++k) {
    pg.Ah.row(static_cast<int>(k)) = normals[k].transpose();
    pg.bh[static_cast<int>(k)] = offs[k];
  }
}

}  // namespace detail

struct ProjectOptions {
  int initial_directions = 16;
  double vertex_merge_tol = 1e-7;
  double support_gain_tol = 1e-9;
  int max_refine_depth = 32;
};

// Support-function sweep projection of a bounded polytope onto its first two
// coordinates. Inner by construction: every returned vertex is the image of a
// feasible source point (kept as its lifting). Directions are refined by
// bisection while the bisector strictly improves the support value.
inline std::optional<PccPolygon> project_to_pcc(const Polytope& poly,
                                                const Vec2& anchor_upcc = Vec2::Zero(),
                                                const ProjectOptions& opt = {}) {
  struct SupportPt {
    double angle;
    Vec2 p;
    Vec lift;
  };
  std::vector<SupportPt> pts;
  auto support_at = [&](double ang) -> std::optional<SupportPt> {
    Vec d = Vec::Zero(poly.dim());
    d[0] = std::cos(ang);
    d[1] = std::sin(ang);
    auto r = poly.support(d);
    if (!r) return std::nullopt;
    return SupportPt{ang, Vec2(r->x[0], r->x[1]), r->x};
  };

  const double two_pi = 2.0 * M_PI;
  for (int k = 0; k < opt.initial_directions; ++k) {
    auto s = support_at(two_pi * k / opt.initial_directions);
    if (!s) return std::nullopt;  // empty polytope
    pts.push_back(*s);
  }

  // Adaptive refinement: probe the outward normal of each chord; a positive
  // support gain means a vertex beyond the chord was missed.
  std::vector<SupportPt> out;
  std::function<void(const SupportPt&, const SupportPt&, int)> refine =
      [&](const SupportPt& a, const SupportPt& b, int depth) {
        out.push_back(a);
        if (depth >= opt.max_refine_depth) return;
        Vec2 e = b.p - a.p;
        if (e.norm() <= opt.vertex_merge_tol) return;
        Vec2 nrm(e.y(), -e.x());  // outward for CCW ordering
        nrm.normalize();
        auto m = support_at(std::atan2(nrm.y(), nrm.x()));
        if (!m) return;
        double gain = nrm.dot(m->p) - nrm.dot(a.p);
        if (gain <= opt.support_gain_tol) return;
        out.pop_back();
        refine(a, *m, depth + 1);
        refine(*m, b, depth + 1);
      };
  for (size_t k = 0; k < pts.size(); ++k) {
    const SupportPt& a = pts[k];
    const SupportPt& b = pts[(k + 1) % pts.size()];
    refine(a, b, 0);
  }

  // Merge, hull, shift to absolute coordinates.
  std::vector<Vec2> uniq;
  std::vector<Vec> lifts;
  for (const auto& s : out) {
    bool dup = false;
    for (const auto& u : uniq)
      if ((u - s.p).norm() <= opt.vertex_merge_tol) {
        dup = true;
        break;
      }
    if (!dup) {
      uniq.push_back(s.p);
      lifts.push_back(s.lift);
    }
  }
  std::vector<int> hull = detail::convex_hull_ccw(uniq);
  PccPolygon pg;
  pg.anchor = anchor_upcc;
  for (int i : hull) {
    pg.vertices.push_back(uniq[i] + anchor_upcc);
    pg.liftings.push_back(lifts[i]);
  }
  detail::polygon_halfspaces(pg);
  return pg;
}

// Exact Fourier-Motzkin projection oracle for small dimensions.
inline std::optional<PccPolygon> fme_project(const Polytope& poly,
                                             const Vec2& anchor_upcc = Vec2::Zero()) {
  if (poly.dim() > 8) throw input_error("fme_project limited to dim <= 8");
  {
    LpProblem p = poly.as_lp();
    if (lp_solve(p).status == LpStatus::Infeasible) return std::nullopt;
  }
  Mat A = poly.A;
  Vec b = poly.b;

  auto drop_redundant = [&](Mat& Ar, Vec& br) {
    std::vector<int> keep;
    for (int r = 0; r < Ar.rows(); ++r) {
      LpProblem p = LpProblem::make(static_cast<int>(Ar.cols()));
      p.c = -Ar.row(r).transpose();
      for (int i = 0; i < Ar.rows(); ++i)
        if (i != r) p.add_row(Ar.row(i).transpose(), RowSense::LE, br[i]);
      LpResult lr = lp_solve(p);
      bool redundant =
          lr.status == LpStatus::Optimal && -lr.value <= br[r] + 1e-9;
      if (!redundant) keep.push_back(r);
    }
    Mat A2(static_cast<int>(keep.size()), Ar.cols());
    Vec b2(static_cast<int>(keep.size()));
    for (size_t i = 0; i < keep.size(); ++i) {
      A2.row(static_cast<int>(i)) = Ar.row(keep[i]);
      b2[static_cast<int>(i)] = br[keep[i]];
    }
    Ar = A2;
    br = b2;
  };

  for (int col = poly.dim() - 1; col >= 2; --col) {
    std::vector<int> pos, neg, zer;
    for (int r = 0; r < A.rows(); ++r) {
      double a = A(r, col);
      if (a > 1e-12) pos.push_back(r);
      else if (a < -1e-12) neg.push_back(r);
      else zer.push_back(r);
    }
    Mat A2(static_cast<int>(zer.size() + pos.size() * neg.size()), col);
    Vec b2(A2.rows());
    int w = 0;
    for (int r : zer) {
      A2.row(w) = A.row(r).head(col);
      b2[w++] = b[r];
    }
    for (int rp : pos)
      for (int rn : neg) {
        double ap = A(rp, col), an = -A(rn, col);
        A2.row(w) = (an * A.row(rp) + ap * A.row(rn)).head(col);
        b2[w++] = an * b[rp] + ap * b[rn];
      }
    A = A2;
    b = b2;
    drop_redundant(A, b);
  }

  // Vertex enumeration of the 2-D system.
  std::vector<Vec2> verts;
  const int m = static_cast<int>(A.rows());
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      Eigen::Matrix2d M;
      M << A(i, 0), A(i, 1), A(j, 0), A(j, 1);
      if (std::abs(M.determinant()) < 1e-12) continue;
      Vec2 v = M.inverse() * Vec2(b[i], b[j]);
      if (((A.leftCols(2) * v - b).array() <= 1e-8).all()) verts.push_back(v);
    }
  if (verts.empty()) {
    // feasible but vertexless in 2-D only if degenerate to lower dimension
    return std::nullopt;
  }
  // dedup + hull
  std::vector<Vec2> uniq;
  for (const auto& v : verts) {
    bool dup = false;
    for (const auto& u : uniq)
      if ((u - v).norm() <= 1e-9) {
        dup = true;
        break;
      }
    if (!dup) uniq.push_back(v);
  }
  std::vector<int> hull = detail::convex_hull_ccw(uniq);
  PccPolygon pg;
  pg.anchor = anchor_upcc;
  for (int i : hull) {
    pg.vertices.push_back(uniq[i] + anchor_upcc);
    pg.liftings.push_back(Vec());
  }
  detail::polygon_halfspaces(pg);
  return pg;
}

// Distance from a point to a convex polygon (0 inside).
inline double point_polygon_distance(const Vec2& p, const PccPolygon& pg) {
  if (pg.vertices.empty()) return kInf;
  if (pg.contains(p, 0.0)) return 0.0;
  double best = kInf;
  const int n = static_cast<int>(pg.vertices.size());
  for (int k = 0; k < n; ++k) {
    const Vec2& a = pg.vertices[k];
    const Vec2& b = pg.vertices[(k + 1) % n];
    Vec2 e = b - a;
    double L2 = e.squaredNorm();
    double t = L2 > 0 ? std::clamp((p - a).dot(e) / L2, 0.0, 1.0) : 0.0;
    best = std::min(best, (p - (a + t * e)).norm());
  }
  return best;
}

inline double polygon_hausdorff(const PccPolygon& a, const PccPolygon& b) {
  double h = 0.0;
  for (const auto& v : a.vertices) h = std::max(h, point_polygon_distance(v, b));
  for (const auto& v : b.vertices) h = std::max(h, point_polygon_distance(v, a));
  return h;
}

// Uniform sample from a convex polygon (fan triangulation). Degenerate
// polygons return their single vertex / a segment point.
inline Vec2 sample_polygon(const PccPolygon& pg, std::mt19937_64& rng) {
  const int n = static_cast<int>(pg.vertices.size());
  if (n == 0) throw input_error("cannot sample an empty polygon");
  std::uniform_real_distribution<double> d(0.0, 1.0);
  if (n == 1) return pg.vertices[0];
  if (n == 2) {
    double t = d(rng);
    return pg.vertices[0] + t * (pg.vertices[1] - pg.vertices[0]);
  }
  std::vector<double> areas(n - 2);
  double total = 0.0;
  for (int k = 0; k < n - 2; ++k) {
    Vec2 u = pg.vertices[k + 1] - pg.vertices[0];
    Vec2 v = pg.vertices[k + 2] - pg.vertices[0];
    areas[k] = 0.5 * std::abs(u.x() * v.y() - u.y() * v.x());
    total += areas[k];
  }
  if (total <= 0.0) {
    double t = d(rng);
    return pg.vertices[0] + t * (pg.vertices[n - 1] - pg.vertices[0]);
  }
  double pick = d(rng) * total;
  int tri = 0;
  while (tri < n - 3 && pick > areas[tri]) pick -= areas[tri++];
  double r1 = std::sqrt(d(rng)), r2 = d(rng);
  const Vec2& A = pg.vertices[0];
  const Vec2& B = pg.vertices[tri + 1];
  const Vec2& C = pg.vertices[tri + 2];
  return (1 - r1) * A + r1 * (1 - r2) * B + r1 * r2 * C;
}

}  // namespace vppreg
