#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "vppreg/common.hpp"

namespace vppreg {

struct NodeRec {
  int id = 0;
  double v_min = 0.81, v_max = 1.21;   // squared voltage magnitude, p.u.^2
  double p_min = 0.0, p_max = 0.0;     // demand bounds, p.u.
  double q_min = 0.0, q_max = 0.0;
};

struct BranchRec {
  int from = 0, to = 0;
  double r = 0.0, x = 0.0;
  double i_min = 0.0, i_max = 1.0;     // squared current magnitude, p.u.^2
};

struct GenRec {
  int node = 0;
  double p_min = 0.0, p_max = 0.0;
  double q_min = 0.0, q_max = 0.0;
  double cost_p = 0.0;                 // linear $/p.u.
  double cost_p2 = 0.0;                // quadratic (unused by cost surfaces)
};

// Radial distribution network. Branches are oriented away from the root
// (from-node closer to the root). Node/branch order is file order and fixes
// the row/column ordering of every derived matrix.
class Network {
 public:
  std::vector<NodeRec> nodes;
  std::vector<BranchRec> branches;
  std::vector<GenRec> gens;
  int pcc_id = 0;
  double base_mva = 1.0;

  // Derived topology, filled by build().
  int root = -1;                            // node index of the PCC
  std::vector<int> parent_branch;           // per node, -1 at root
  std::vector<std::vector<int>> out_branches;  // per node
  std::vector<int> from_idx, to_idx;        // per branch, node indices

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_branches() const { return static_cast<int>(branches.size()); }
  int n_gens() const { return static_cast<int>(gens.size()); }
  int n_u() const { return 2 * n_gens() + 2 * n_nodes(); }
  int n_x() const { return 3 * n_branches() + n_nodes(); }
  int n_e() const { return 2 * n_branches() + 2 * n_nodes(); }

  int node_index(int id) const {
    auto it = id_map_.find(id);
    if (it == id_map_.end()) throw input_error("unknown node id " + std::to_string(id));
    return it->second;
  }

  void build() {
    const int nN = n_nodes();
    const int nL = n_branches();
    if (nN == 0) throw input_error("network has no nodes");
    if (nL != nN - 1)
      throw input_error("network is not radial: n_branches != n_nodes - 1");
    id_map_.clear();
    for (int n = 0; n < nN; ++n) {
      if (!id_map_.emplace(nodes[n].id, n).second)
        throw input_error("duplicate node id " + std::to_string(nodes[n].id));
    }
    root = node_index(pcc_id);
    parent_branch.assign(nN, -1);
    out_branches.assign(nN, {});
    from_idx.resize(nL);
    to_idx.resize(nL);
    for (int l = 0; l < nL; ++l) {
      from_idx[l] = node_index(branches[l].from);
      to_idx[l] = node_index(branches[l].to);
      out_branches[from_idx[l]].push_back(l);
      if (to_idx[l] == root) throw input_error("branch oriented into the root");
      if (parent_branch[to_idx[l]] != -1)
        throw input_error("node " + std::to_string(branches[l].to) +
                          " has two parent branches (not a tree)");
      parent_branch[to_idx[l]] = l;
      if (branches[l].r < 0) throw input_error("negative branch resistance");
    }
    // Connectivity + orientation: walking parents from every node must reach
    // the root without revisiting.
    for (int n = 0; n < nN; ++n) {
      int cur = n, steps = 0;
      while (cur != root) {
        int pb = parent_branch[cur];
        if (pb < 0 || ++steps > nN)
          throw input_error("network is disconnected or branches are not "
                            "oriented away from the root");
        cur = from_idx[pb];
      }
    }
    for (const auto& nd : nodes) {
      if (nd.v_min > nd.v_max || nd.p_min > nd.p_max || nd.q_min > nd.q_max)
        throw input_error("node bounds reversed at id " + std::to_string(nd.id));
    }
    for (const auto& br : branches)
      if (br.i_min > br.i_max) throw input_error("branch current bounds reversed");
    for (const auto& g : gens) {
      node_index(g.node);
      if (g.p_min > g.p_max || g.q_min > g.q_max)
        throw input_error("generator bounds reversed");
    }
  }

  // State vector layout: x = [P_L, Q_L, V, I]; the two trailing slack entries
  // of the extended state sit on the root balance rows.
  int ixP(int l) const { return l; }
  int ixQ(int l) const { return n_branches() + l; }
  int ixV(int n) const { return 2 * n_branches() + n; }
  int ixI(int l) const { return 2 * n_branches() + n_nodes() + l; }
  int ixSigP() const { return n_x(); }
  int ixSigQ() const { return n_x() + 1; }

  // Residual row layout: [P balance per node, Q balance, voltage drop, current def].
  int rowP(int n) const { return n; }
  int rowQ(int n) const { return n_nodes() + n; }
  int rowV(int l) const { return 2 * n_nodes() + l; }
  int rowI(int l) const { return 2 * n_nodes() + n_branches() + l; }

  Vec u_min() const { return u_bound(true); }
  Vec u_max() const { return u_bound(false); }

  Mat K1() const {
    Mat k = Mat::Zero(n_e(), 2);
    k(rowP(root), 0) = 1.0;
    k(rowQ(root), 1) = 1.0;
    return k;
  }

  Mat K2() const {
    const int nG = n_gens(), nN = n_nodes();
    Mat k = Mat::Zero(n_e(), n_u());
    for (int g = 0; g < nG; ++g) {
      int n = node_index(gens[g].node);
      k(rowP(n), g) = 1.0;
      k(rowQ(n), nG + g) = 1.0;
    }
    for (int n = 0; n < nN; ++n) {
      k(rowP(n), 2 * nG + n) = -1.0;
      k(rowQ(n), 2 * nG + nN + n) = -1.0;
    }
    return k;
  }

 private:
  std::map<int, int> id_map_;

  Vec u_bound(bool lower) const {
    const int nG = n_gens(), nN = n_nodes();
    Vec b(n_u());
    for (int g = 0; g < nG; ++g) {
      b[g] = lower ? gens[g].p_min : gens[g].p_max;
      b[nG + g] = lower ? gens[g].q_min : gens[g].q_max;
    }
    for (int n = 0; n < nN; ++n) {
      b[2 * nG + n] = lower ? nodes[n].p_min : nodes[n].p_max;
      b[2 * nG + nN + n] = lower ? nodes[n].q_min : nodes[n].q_max;
    }
    return b;
  }
};

// Controls u = [P_G, Q_G, P_N, Q_N]; pcc = (P_PCC, Q_PCC); sigma is the pair
// of root-balance slack variables carried by the extended state (zero on any
// exactly-balanced point).
struct OperatingPoint {
  Vec branch_P, branch_Q, node_V, branch_I;
  Vec controls;
  Vec pcc = Vec::Zero(2);
  Vec sigma = Vec::Zero(2);

  static OperatingPoint flat(const Network& net, double v_root = 1.0) {
    OperatingPoint pt;
    pt.branch_P = Vec::Zero(net.n_branches());
    pt.branch_Q = Vec::Zero(net.n_branches());
    pt.node_V = Vec::Constant(net.n_nodes(), v_root);
    pt.branch_I = Vec::Zero(net.n_branches());
    pt.controls = Vec::Zero(net.n_u());
    return pt;
  }

  Vec state_x(const Network& net) const {
    Vec x(net.n_x());
    x.segment(0, net.n_branches()) = branch_P;
    x.segment(net.n_branches(), net.n_branches()) = branch_Q;
    x.segment(2 * net.n_branches(), net.n_nodes()) = node_V;
    x.segment(2 * net.n_branches() + net.n_nodes(), net.n_branches()) = branch_I;
    return x;
  }

  void set_state_x(const Network& net, const Vec& x) {
    branch_P = x.segment(0, net.n_branches());
    branch_Q = x.segment(net.n_branches(), net.n_branches());
    node_V = x.segment(2 * net.n_branches(), net.n_nodes());
    branch_I = x.segment(2 * net.n_branches() + net.n_nodes(), net.n_branches());
  }
};

struct LimitReport {
  double worst_voltage_violation = 0.0;  // p.u.^2
  double worst_current_violation = 0.0;  // p.u.^2
  double worst_control_violation = 0.0;  // p.u.
  std::vector<std::string> violated_indices;

  double worst() const {
    return std::max({worst_voltage_violation, worst_current_violation,
                     worst_control_violation});
  }
  bool clean(double tol = 0.0) const { return worst() <= tol; }
};

// f(x) evaluated on the extended state (x, sigma); sigma enters only the two
// root balance rows.
inline Vec eval_f(const Network& net, const Vec& x, const Vec& sigma) {
  const int nN = net.n_nodes(), nL = net.n_branches();
  Vec f = Vec::Zero(net.n_e());
  for (int n = 0; n < nN; ++n) {
    double fp = 0.0, fq = 0.0;
    for (int l : net.out_branches[n]) {
      fp += x[net.ixP(l)];
      fq += x[net.ixQ(l)];
    }
    int pb = net.parent_branch[n];
    if (pb >= 0) {
      fp -= x[net.ixP(pb)] - net.branches[pb].r * x[net.ixI(pb)];
      fq -= x[net.ixQ(pb)] - net.branches[pb].x * x[net.ixI(pb)];
    } else {
      fp -= sigma[0];
      fq -= sigma[1];
    }
    f[net.rowP(n)] = fp;
    f[net.rowQ(n)] = fq;
  }
  for (int l = 0; l < nL; ++l) {
    const auto& br = net.branches[l];
    double vi = x[net.ixV(net.from_idx[l])], vj = x[net.ixV(net.to_idx[l])];
    double p = x[net.ixP(l)], q = x[net.ixQ(l)], i = x[net.ixI(l)];
    f[net.rowV(l)] = vi - vj - 2.0 * (br.r * p + br.x * q) + (br.r * br.r + br.x * br.x) * i;
    f[net.rowI(l)] = vi * i - p * p - q * q;
  }
  return f;
}

inline Vec residual_f(const Network& net, const OperatingPoint& pt) {
  if (pt.controls.size() != net.n_u() || pt.branch_P.size() != net.n_branches() ||
      pt.node_V.size() != net.n_nodes())
    throw input_error("operating point dimensions do not match network");
  Vec f = eval_f(net, pt.state_x(net), pt.sigma);
  return f - net.K1() * pt.pcc - net.K2() * pt.controls;
}

// Gradient of f over the extended state (n_e x (n_x + 2)); the first n_x
// columns are the state Jacobian.
inline Mat jacobian_f_extended(const Network& net, const Vec& x0) {
  const int nN = net.n_nodes(), nL = net.n_branches();
  Mat J = Mat::Zero(net.n_e(), net.n_x() + 2);
  for (int n = 0; n < nN; ++n) {
    for (int l : net.out_branches[n]) {
      J(net.rowP(n), net.ixP(l)) += 1.0;
      J(net.rowQ(n), net.ixQ(l)) += 1.0;
    }
    int pb = net.parent_branch[n];
    if (pb >= 0) {
      J(net.rowP(n), net.ixP(pb)) -= 1.0;
      J(net.rowP(n), net.ixI(pb)) += net.branches[pb].r;
      J(net.rowQ(n), net.ixQ(pb)) -= 1.0;
      J(net.rowQ(n), net.ixI(pb)) += net.branches[pb].x;
    } else {
      J(net.rowP(n), net.ixSigP()) = -1.0;
      J(net.rowQ(n), net.ixSigQ()) = -1.0;
    }
  }
  for (int l = 0; l < nL; ++l) {
    const auto& br = net.branches[l];
    J(net.rowV(l), net.ixV(net.from_idx[l])) += 1.0;
    J(net.rowV(l), net.ixV(net.to_idx[l])) -= 1.0;
    J(net.rowV(l), net.ixP(l)) = -2.0 * br.r;
    J(net.rowV(l), net.ixQ(l)) = -2.0 * br.x;
    J(net.rowV(l), net.ixI(l)) = br.r * br.r + br.x * br.x;
    J(net.rowI(l), net.ixP(l)) = -2.0 * x0[net.ixP(l)];
    J(net.rowI(l), net.ixQ(l)) = -2.0 * x0[net.ixQ(l)];
    J(net.rowI(l), net.ixV(net.from_idx[l])) = x0[net.ixI(l)];
    J(net.rowI(l), net.ixI(l)) = x0[net.ixV(net.from_idx[l])];
  }
  return J;
}

inline Mat jacobian_f(const Network& net, const Vec& x0) {
  if (x0.size() != net.n_x()) throw input_error("state vector has wrong length");
  return jacobian_f_extended(net, x0).leftCols(net.n_x());
}

// Exact quadratic remainder: f(x0+dx) = f(x0) + grad f(x0) dx + [0; R~].
inline Vec second_order_residual(const Network& net, const Vec& dx) {
  if (dx.size() != net.n_x()) throw input_error("displacement has wrong length");
  const int nL = net.n_branches();
  Vec r(nL);
  for (int l = 0; l < nL; ++l) {
    double dp = dx[net.ixP(l)], dq = dx[net.ixQ(l)];
    double dv = dx[net.ixV(net.from_idx[l])], di = dx[net.ixI(l)];
    r[l] = -dp * dp - dq * dq + dv * di;
  }
  return r;
}

inline LimitReport limit_check(const Network& net, const OperatingPoint& pt) {
  LimitReport rep;
  auto note = [&rep](double lo, double hi, double v, double& worst,
                     const std::string& label) {
    double viol = std::max(0.0, std::max(lo - v, v - hi));
    if (viol > 0.0) {
      worst = std::max(worst, viol);
      rep.violated_indices.push_back(label);
    }
  };
  for (int n = 0; n < net.n_nodes(); ++n)
    note(net.nodes[n].v_min, net.nodes[n].v_max, pt.node_V[n],
         rep.worst_voltage_violation, "V[" + std::to_string(n) + "]");
  for (int l = 0; l < net.n_branches(); ++l)
    note(net.branches[l].i_min, net.branches[l].i_max, pt.branch_I[l],
         rep.worst_current_violation, "I[" + std::to_string(l) + "]");
  Vec lo = net.u_min(), hi = net.u_max();
  for (int k = 0; k < net.n_u(); ++k)
    note(lo[k], hi[k], pt.controls[k], rep.worst_control_violation,
         "u[" + std::to_string(k) + "]");
  return rep;
}

enum class PccMode { Free, Fixed };

struct NewtonOptions {
  double tol = 1e-8;
  int max_iter = 50;
  double v_root = 1.0;  // squared root voltage, held as a parameter
};

struct NewtonResult {
  bool converged = false;
  OperatingPoint point;
  double residual_norm = kInf;
  int iterations = 0;
};

// Square Newton system on the unknowns
//   free-PCC:  [P_L, Q_L, V(non-root), I, P_PCC, Q_PCC], sigma = 0
//   fixed-PCC: [P_L, Q_L, V(non-root), I, sigma_P, sigma_Q], pcc given
// with V at the root pinned to opts.v_root. Damped steps (up to 10 halvings
// when the residual norm does not decrease).
inline NewtonResult newton_solve(const Network& net, const Vec& u, PccMode mode,
                                 const Vec& u_pcc_fixed = Vec(),
                                 const std::optional<OperatingPoint>& x_init = std::nullopt,
                                 const NewtonOptions& opts = {}) {
  const int nL = net.n_branches(), nN = net.n_nodes(), ne = net.n_e();
  if (u.size() != net.n_u()) throw input_error("control vector has wrong length");
  if (mode == PccMode::Fixed && u_pcc_fixed.size() != 2)
    throw input_error("fixed-PCC solve requires a PCC pair");

  OperatingPoint pt = x_init ? *x_init : OperatingPoint::flat(net, opts.v_root);
  pt.controls = u;
  pt.node_V[net.root] = opts.v_root;
  if (mode == PccMode::Fixed) {
    pt.pcc = u_pcc_fixed;
  } else {
    pt.sigma.setZero();
  }

  // Unknown k -> extended-state column (or PCC column encoded as -1/-2).
  std::vector<int> cols;
  cols.reserve(ne);
  for (int l = 0; l < nL; ++l) cols.push_back(net.ixP(l));
  for (int l = 0; l < nL; ++l) cols.push_back(net.ixQ(l));
  for (int n = 0; n < nN; ++n)
    if (n != net.root) cols.push_back(net.ixV(n));
  for (int l = 0; l < nL; ++l) cols.push_back(net.ixI(l));
  if (mode == PccMode::Free) {
    cols.push_back(-1);
    cols.push_back(-2);
  } else {
    cols.push_back(net.ixSigP());
    cols.push_back(net.ixSigQ());
  }
  if (static_cast<int>(cols.size()) != ne)
    throw internal_error("newton system is not square");

  const Mat K1 = net.K1();
  NewtonResult res;
  Vec r = residual_f(net, pt);
  double rn = r.lpNorm<Eigen::Infinity>();

  for (int it = 0; it < opts.max_iter; ++it) {
    if (rn <= opts.tol) {
      res.converged = true;
      break;
    }
    Vec x = pt.state_x(net);
    Mat Jx = jacobian_f_extended(net, x);
    Mat A(ne, ne);
    for (int k = 0; k < ne; ++k) {
      int c = cols[k];
      if (c == -1) A.col(k) = -K1.col(0);
      else if (c == -2) A.col(k) = -K1.col(1);
      else A.col(k) = Jx.col(c);
    }
    Eigen::FullPivLU<Mat> lu(A);
    if (!lu.isInvertible()) throw singular_error("singular Newton system");
    Vec step = lu.solve(-r);

    double scale = 1.0;
    OperatingPoint trial;
    Vec rt;
    double rtn = kInf;
    for (int h = 0; h <= 10; ++h) {
      trial = pt;
      Vec xt = trial.state_x(net);
      for (int k = 0; k < ne; ++k) {
        double d = scale * step[k];
        int c = cols[k];
        if (c == -1) trial.pcc[0] += d;
        else if (c == -2) trial.pcc[1] += d;
        else if (c == net.ixSigP()) trial.sigma[0] += d;
        else if (c == net.ixSigQ()) trial.sigma[1] += d;
        else xt[c] += d;
      }
      trial.set_state_x(net, xt);
      rt = residual_f(net, trial);
      rtn = rt.lpNorm<Eigen::Infinity>();
      if (rtn < rn) break;
      scale *= 0.5;
    }
    pt = trial;
    r = rt;
    rn = rtn;
    res.iterations = it + 1;
    if (!(rn < kInf)) break;  // NaN or blow-up
  }
  if (rn <= opts.tol) res.converged = true;
  res.point = pt;
  res.residual_norm = rn;
  return res;
}

}  // namespace vppreg
