#pragma once

#include <cmath>
#include <queue>
#include <vector>

#include "vppreg/common.hpp"

namespace vppreg {

enum class RowSense { LE, EQ, GE };
enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpProblem {
  Vec c;                       // minimize c'x
  Mat A;                       // m x n
  Vec b;
  std::vector<RowSense> sense;
  Vec lo, hi;                  // +-kInf for free

  int n_vars() const { return static_cast<int>(c.size()); }
  int n_rows() const { return static_cast<int>(b.size()); }

  void check() const {
    if (A.rows() != b.size() || A.cols() != c.size() ||
        static_cast<int>(sense.size()) != b.size() || lo.size() != c.size() ||
        hi.size() != c.size())
      throw input_error("LP dimensions inconsistent");
    for (int k = 0; k < n_vars(); ++k)
      if (lo[k] > hi[k]) throw input_error("LP variable bounds reversed");
  }

  static LpProblem make(int n) {
    LpProblem p;
    p.c = Vec::Zero(n);
    p.A.resize(0, n);
    p.b.resize(0);
    p.lo = Vec::Constant(n, -kInf);
    p.hi = Vec::Constant(n, kInf);
    return p;
  }

  void add_row(const Vec& row, RowSense s, double rhs) {
    Mat A2(A.rows() + 1, n_vars());
    if (A.rows() > 0) A2.topRows(A.rows()) = A;
    A2.row(A.rows()) = row.transpose();
    A = A2;
    Vec b2(b.size() + 1);
    if (b.size() > 0) b2.head(b.size()) = b;
    b2[b.size()] = rhs;
    b = b2;
    sense.push_back(s);
  }
};

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Vec x;
  double value = 0.0;
  double duality_gap = 0.0;
};

namespace detail {

// Dense tableau simplex with Bland's rule on the standardized problem
// (all variables >= 0, equality rows, b >= 0 after phase-1 setup).
class Tableau {
 public:
  Mat A;   // m x n
  Vec b;   // >= 0 maintained by pivoting from a feasible basis
  Vec c;
  std::vector<int> basis;
  std::vector<char> allowed;  // columns permitted to enter the basis
  static constexpr double eps = 1e-9;

  // Returns false on unboundedness.
  bool iterate() {
    const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
    // Reduced costs via duals: y' = c_B' B^-1 maintained implicitly; we keep
    // the tableau in canonical form instead (A has identity on basis columns).
    // Dantzig entering rule (deterministic lowest-index tie-break) for speed;
    // after a stall threshold switch to Bland's rule, which cannot cycle.
    long pivots = 0;
    const long bland_after = 2000 + 20L * (m + n);
    for (;;) {
      int enter = -1;
      if (pivots < bland_after) {
        double most = -eps;
        for (int j = 0; j < n; ++j) {
          if (!allowed.empty() && !allowed[j]) continue;
          if (c[j] < most) {
            most = c[j];
            enter = j;
          }
        }
      } else {
        for (int j = 0; j < n; ++j) {
          if (!allowed.empty() && !allowed[j]) continue;
          if (c[j] < -eps) {
            enter = j;  // Bland: lowest index
            break;
          }
        }
      }
      if (enter < 0) return true;
      ++pivots;
      int leave = -1;
      double best = kInf;
      for (int i = 0; i < m; ++i) {
        if (A(i, enter) > eps) {
          double ratio = b[i] / A(i, enter);
          if (ratio < best - eps ||
              (ratio < best + eps && (leave < 0 || basis[i] < basis[leave])))
            best = ratio, leave = i;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }

  void pivot(int r, int j) {
    const int m = static_cast<int>(A.rows());
    double p = A(r, j);
    A.row(r) /= p;
    b[r] /= p;
    for (int i = 0; i < m; ++i) {
      if (i == r) continue;
      double f = A(i, j);
      if (f != 0.0) {
        A.row(i) -= f * A.row(r);
        b[i] -= f * b[r];
      }
    }
    double f = c[j];
    if (f != 0.0) {
      c -= f * A.row(r).transpose();
      obj_shift += f * b[r];
    }
    basis[r] = j;
  }

  double obj_shift = 0.0;  // current objective value of the canonical form
};

}  // namespace detail

inline LpResult lp_solve(const LpProblem& prob) {
  prob.check();
  const int n = prob.n_vars(), m = prob.n_rows();

  // Standardize variables to x' >= 0:
  //   map[k] = (j, shift, sgn): x_k = shift + sgn * x'_j (+ optional x'_{j2} for free)
  struct VarMap {
    int j, j2;        // j2 >= 0 for free split
    double shift, sgn;
  };
  std::vector<VarMap> vmap(n);
  int ns = 0;
  std::vector<std::pair<int, double>> upper_rows;  // (std var, upper bound)
  for (int k = 0; k < n; ++k) {
    bool lof = prob.lo[k] > -kInf / 2, hif = prob.hi[k] < kInf / 2;
    if (lof) {
      vmap[k] = {ns, -1, prob.lo[k], 1.0};
      if (hif) upper_rows.push_back({ns, prob.hi[k] - prob.lo[k]});
      ++ns;
    } else if (hif) {
      vmap[k] = {ns, -1, prob.hi[k], -1.0};
      ++ns;
    } else {
      vmap[k] = {ns, ns + 1, 0.0, 1.0};
      ns += 2;
    }
  }

  const int mt = m + static_cast<int>(upper_rows.size());
  Mat As = Mat::Zero(mt, ns);
  Vec bs = Vec::Zero(mt);
  std::vector<RowSense> ss(mt);
  for (int i = 0; i < m; ++i) {
    double rhs = prob.b[i];
    for (int k = 0; k < n; ++k) {
      double a = prob.A(i, k);
      if (a == 0.0) continue;
      rhs -= a * vmap[k].shift;
      As(i, vmap[k].j) += a * vmap[k].sgn;
      if (vmap[k].j2 >= 0) As(i, vmap[k].j2) -= a;
    }
    bs[i] = rhs;
    ss[i] = prob.sense[i];
  }
  for (size_t q = 0; q < upper_rows.size(); ++q) {
    int i = m + static_cast<int>(q);
    As(i, upper_rows[q].first) = 1.0;
    bs[i] = upper_rows[q].second;
    ss[i] = RowSense::LE;
  }
  // Flip rows to b >= 0.
  for (int i = 0; i < mt; ++i) {
    if (bs[i] < 0) {
      As.row(i) *= -1.0;
      bs[i] *= -1.0;
      if (ss[i] == RowSense::LE) ss[i] = RowSense::GE;
      else if (ss[i] == RowSense::GE) ss[i] = RowSense::LE;
    }
  }

  // Columns: structural | slack/surplus | artificial.
  int n_slack = 0;
  for (auto s : ss)
    if (s != RowSense::EQ) ++n_slack;
  int n_art = 0;
  std::vector<int> art_row;
  // LE rows start basic on their slack; GE/EQ need artificials.
  detail::Tableau t;
  const int total0 = ns + n_slack;
  std::vector<int> slack_col(mt, -1);
  {
    int sc = 0;
    for (int i = 0; i < mt; ++i) {
      if (ss[i] != RowSense::EQ) slack_col[i] = total0 - n_slack + sc++;
    }
  }
  for (int i = 0; i < mt; ++i)
    if (ss[i] != RowSense::LE) {
      ++n_art;
      art_row.push_back(i);
    }
  const int total = total0 + n_art;
  t.A = Mat::Zero(mt, total);
  t.A.leftCols(ns) = As;
  t.b = bs;
  t.basis.assign(mt, -1);
  {
    int ac = 0;
    for (int i = 0; i < mt; ++i) {
      if (ss[i] == RowSense::LE) {
        t.A(i, slack_col[i]) = 1.0;
        t.basis[i] = slack_col[i];
      } else if (ss[i] == RowSense::GE) {
        t.A(i, slack_col[i]) = -1.0;
        t.A(i, total0 + ac) = 1.0;
        t.basis[i] = total0 + ac++;
      } else {
        t.A(i, total0 + ac) = 1.0;
        t.basis[i] = total0 + ac++;
      }
    }
  }

  LpResult res;
  // Phase 1.
  if (n_art > 0) {
    t.c = Vec::Zero(total);
    t.c.tail(n_art).setConstant(1.0);
    t.obj_shift = 0.0;
    for (int i = 0; i < mt; ++i)
      if (t.basis[i] >= total0) {
        t.c -= t.A.row(i).transpose();
        t.obj_shift += t.b[i];
      }
    if (!t.iterate()) throw internal_error("phase-1 unbounded");
    double p1 = t.obj_shift;
    if (p1 > 1e-7) {
      res.status = LpStatus::Infeasible;
      return res;
    }
    // Pivot remaining artificials out of the basis where possible.
    for (int i = 0; i < mt; ++i) {
      if (t.basis[i] >= total0) {
        int piv = -1;
        for (int j = 0; j < total0; ++j)
          if (std::abs(t.A(i, j)) > 1e-7) {
            piv = j;
            break;
          }
        if (piv >= 0) t.pivot(i, piv);
      }
    }
  }

  // Phase 2 cost (zero on slack columns; artificial columns barred from
  // re-entering the basis).
  Vec cs = Vec::Zero(total);
  double shift_const = 0.0;
  for (int k = 0; k < n; ++k) {
    double ck = prob.c[k];
    if (ck == 0.0) continue;
    shift_const += ck * vmap[k].shift;
    cs[vmap[k].j] += ck * vmap[k].sgn;
    if (vmap[k].j2 >= 0) cs[vmap[k].j2] -= ck;
  }
  t.allowed.assign(total, 1);
  for (int j = total0; j < total; ++j) t.allowed[j] = 0;
  t.c = cs;
  t.obj_shift = 0.0;
  for (int i = 0; i < mt; ++i) {
    int bj = t.basis[i];
    if (cs[bj] != 0.0) {
      t.c -= cs[bj] * t.A.row(i).transpose();
      t.obj_shift += cs[bj] * t.b[i];
      t.c[bj] = 0.0;  // keep canonical zeros exact
    }
  }
  if (!t.iterate()) {
    res.status = LpStatus::Unbounded;
    return res;
  }

  Vec xs = Vec::Zero(total);
  for (int i = 0; i < mt; ++i) xs[t.basis[i]] = t.b[i];
  res.x = Vec::Zero(n);
  for (int k = 0; k < n; ++k) {
    double v = vmap[k].shift + vmap[k].sgn * xs[vmap[k].j];
    if (vmap[k].j2 >= 0) v -= xs[vmap[k].j2];
    res.x[k] = v;
  }
  res.value = prob.c.dot(res.x);
  // Complementary slackness residual: sum of x'_j * reduced_cost_j over
  // nonbasic columns of the final (canonical) tableau is zero by construction;
  // report the canonical-objective mismatch instead.
  res.duality_gap = std::abs((t.obj_shift + shift_const) - res.value);
  res.status = LpStatus::Optimal;
  return res;
}

struct MilpProblem {
  LpProblem core;
  std::vector<int> binaries;

  void check() const {
    core.check();
    if (binaries.size() > 64) throw input_error("too many binaries");
    for (int k : binaries)
      if (k < 0 || k >= core.n_vars()) throw input_error("binary index out of range");
  }
};

struct MilpResult {
  LpStatus status = LpStatus::Infeasible;
  Vec x;
  double value = 0.0;
};

// Best-bound branch and bound; branching on the most fractional binary
// (ties by lowest index).
inline MilpResult milp_solve(const MilpProblem& prob) {
  prob.check();
  struct Node {
    Vec lo, hi;
    double bound;
    long id;
  };
  auto cmp = [](const Node& a, const Node& b) {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  };
  std::priority_queue<Node, std::vector<Node>, decltype(cmp)> open(cmp);

  LpProblem relax = prob.core;
  for (int k : prob.binaries) {
    relax.lo[k] = std::max(relax.lo[k], 0.0);
    relax.hi[k] = std::min(relax.hi[k], 1.0);
  }

  MilpResult best;
  double incumbent = kInf;
  long next_id = 0;
  open.push({relax.lo, relax.hi, -kInf, next_id++});
  const double int_tol = 1e-6;

  while (!open.empty()) {
    Node nd = open.top();
    open.pop();
    if (nd.bound > incumbent - 1e-9) continue;
    LpProblem sub = relax;
    sub.lo = nd.lo;
    sub.hi = nd.hi;
    LpResult lr = lp_solve(sub);
    if (lr.status == LpStatus::Unbounded) throw input_error("MILP relaxation unbounded");
    if (lr.status != LpStatus::Optimal) continue;
    if (lr.value > incumbent - 1e-9) continue;
    int frac = -1;
    double fdist = int_tol;
    for (int k : prob.binaries) {
      double v = lr.x[k];
      double d = std::abs(v - std::round(v));
      if (d > fdist + 1e-12) {
        fdist = d;
        frac = k;
      }
    }
    if (frac < 0) {
      if (lr.value < incumbent - 1e-9) {
        incumbent = lr.value;
        best.status = LpStatus::Optimal;
        best.x = lr.x;
        for (int k : prob.binaries) best.x[k] = std::round(best.x[k]);
        best.value = lr.value;
      }
      continue;
    }
    Node down = {nd.lo, nd.hi, lr.value, next_id++};
    down.hi[frac] = 0.0;
    Node up = {nd.lo, nd.hi, lr.value, next_id++};
    up.lo[frac] = 1.0;
    open.push(down);
    open.push(up);
  }
  return best;
}

}  // namespace vppreg
