#pragma once

// Test-side oracles, deliberately independent of the library's Newton solver.

#include <random>

#include "vppreg/network.hpp"

namespace testutil {

using vppreg::Network;
using vppreg::OperatingPoint;
using vppreg::Vec;

// Backward/forward sweep on the radial net at fixed controls: iterate branch
// flows (with loss terms), voltage drops and squared currents until
// self-consistent. Returns false if the iteration does not settle.
inline bool sweep_solve(const Network& net, const Vec& u, OperatingPoint& out,
                        double v_root = 1.0, int max_iter = 500, double tol = 1e-13) {
  const int nN = net.n_nodes(), nL = net.n_branches(), nG = net.n_gens();
  Vec dem_p(nN), dem_q(nN), gen_p = Vec::Zero(nN), gen_q = Vec::Zero(nN);
  for (int n = 0; n < nN; ++n) {
    dem_p[n] = u[2 * nG + n];
    dem_q[n] = u[2 * nG + nN + n];
  }
  for (int g = 0; g < nG; ++g) {
    int n = net.node_index(net.gens[g].node);
    gen_p[n] += u[g];
    gen_q[n] += u[nG + g];
  }
  // Branches in root-to-leaf order (parents before children).
  std::vector<int> order;
  {
    std::vector<int> stack = {net.root};
    while (!stack.empty()) {
      int n = stack.back();
      stack.pop_back();
      for (int l : net.out_branches[n]) {
        order.push_back(l);
        stack.push_back(net.to_idx[l]);
      }
    }
  }
  Vec P = Vec::Zero(nL), Q = Vec::Zero(nL), I = Vec::Zero(nL);
  Vec V = Vec::Constant(nN, v_root);
  for (int it = 0; it < max_iter; ++it) {
    Vec Pn = Vec::Zero(nL), Qn = Vec::Zero(nL);
    for (auto rit = order.rbegin(); rit != order.rend(); ++rit) {
      int l = *rit;
      int j = net.to_idx[l];
      double p = dem_p[j] - gen_p[j] + net.branches[l].r * I[l];
      double q = dem_q[j] - gen_q[j] + net.branches[l].x * I[l];
      for (int c : net.out_branches[j]) {
        p += Pn[c];
        q += Qn[c];
      }
      Pn[l] = p;
      Qn[l] = q;
    }
    Vec Vn = Vec::Constant(nN, v_root);
    Vec In = Vec::Zero(nL);
    for (int l : order) {
      const auto& br = net.branches[l];
      double vf = Vn[net.from_idx[l]];
      Vn[net.to_idx[l]] = vf - 2.0 * (br.r * Pn[l] + br.x * Qn[l]) +
                          (br.r * br.r + br.x * br.x) * I[l];
      if (vf <= 1e-6) return false;
      In[l] = (Pn[l] * Pn[l] + Qn[l] * Qn[l]) / vf;
    }
    double delta = (Pn - P).lpNorm<Eigen::Infinity>() +
                   (Qn - Q).lpNorm<Eigen::Infinity>() +
                   (In - I).lpNorm<Eigen::Infinity>() +
                   (Vn - V).lpNorm<Eigen::Infinity>();
    P = Pn;
    Q = Qn;
    I = In;
    V = Vn;
    if (delta < tol) {
      out.branch_P = P;
      out.branch_Q = Q;
      out.branch_I = I;
      out.node_V = V;
      out.controls = u;
      out.sigma = Vec::Zero(2);
      double ppcc = dem_p[net.root] - gen_p[net.root];
      double qpcc = dem_q[net.root] - gen_q[net.root];
      for (int l : net.out_branches[net.root]) {
        ppcc += P[l];
        qpcc += Q[l];
      }
      out.pcc = Vec(2);
      out.pcc << ppcc, qpcc;
      return true;
    }
  }
  return false;
}

inline Vec nominal_u(const Network& net) {
  return 0.5 * (net.u_min() + net.u_max());
}

inline Vec random_u(const Network& net, std::mt19937_64& rng) {
  Vec lo = net.u_min(), hi = net.u_max(), u(net.n_u());
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (int k = 0; k < net.n_u(); ++k) u[k] = lo[k] + d(rng) * (hi[k] - lo[k]);
  return u;
}

}  // namespace testutil
