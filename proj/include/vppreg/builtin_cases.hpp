#pragma once

#include <array>
#include <cmath>

#include "vppreg/network.hpp"

namespace vppreg {

// MATPOWER-style ingestion: branch rows in ohms, loads in kW/kvar, converted
// to per-unit on (base_mva, base_kv). Loads are attached as fixed demand at
// the branch's to-node.
struct MatpowerBranchRow {
  int from, to;
  double r_ohm, x_ohm;
  double p_load_kw, q_load_kvar;  // load at the to-node
};

inline Network network_from_matpower_tables(const MatpowerBranchRow* rows, int n_rows,
                                            double base_mva, double base_kv,
                                            int pcc_id, double v_min = 0.81,
                                            double v_max = 1.21, double i_max = 1.0) {
  const double z_base = base_kv * base_kv / base_mva;
  Network net;
  net.base_mva = base_mva;
  net.pcc_id = pcc_id;
  NodeRec rootn;
  rootn.id = pcc_id;
  rootn.v_min = v_min;
  rootn.v_max = v_max;
  net.nodes.push_back(rootn);
  for (int k = 0; k < n_rows; ++k) {
    const auto& row = rows[k];
    NodeRec nd;
    nd.id = row.to;
    nd.v_min = v_min;
    nd.v_max = v_max;
    nd.p_min = nd.p_max = row.p_load_kw / (1000.0 * base_mva);
    nd.q_min = nd.q_max = row.q_load_kvar / (1000.0 * base_mva);
    net.nodes.push_back(nd);
    BranchRec br;
    br.from = row.from;
    br.to = row.to;
    br.r = row.r_ohm / z_base;
    br.x = row.x_ohm / z_base;
    br.i_min = 0.0;
    br.i_max = i_max;
    net.branches.push_back(br);
  }
  net.build();
  return net;
}

// Two-node feeder: root + one load node over a 0.1 + j0.1 p.u. branch.
inline Network two_bus_case(double load_p = 0.1, double load_q = 0.0,
                            bool with_der = false) {
  Network net;
  net.pcc_id = 1;
  net.base_mva = 1.0;
  NodeRec n1;
  n1.id = 1;
  net.nodes.push_back(n1);
  NodeRec n2;
  n2.id = 2;
  n2.p_min = n2.p_max = load_p;
  n2.q_min = n2.q_max = load_q;
  net.nodes.push_back(n2);
  BranchRec b;
  b.from = 1;
  b.to = 2;
  b.r = 0.1;
  b.x = 0.1;
  b.i_max = 1.0;
  net.branches.push_back(b);
  if (with_der) {
    GenRec g;
    g.node = 2;
    g.p_min = 0.0;
    g.p_max = 0.2;
    g.q_min = -0.1;
    g.q_max = 0.1;
    g.cost_p = 1.0;
    net.gens.push_back(g);
  }
  net.build();
  return net;
}

// Six-node synthetic radial net with one branching point, a flexible load
// and two generators.
inline Network six_bus_case() {
  Network net;
  net.pcc_id = 1;
  net.base_mva = 1.0;
  auto node = [&](int id, double pl, double ph, double ql, double qh) {
    NodeRec n;
    n.id = id;
    n.p_min = pl;
    n.p_max = ph;
    n.q_min = ql;
    n.q_max = qh;
    net.nodes.push_back(n);
  };
  node(1, 0, 0, 0, 0);
  node(2, 0.05, 0.05, 0.02, 0.02);
  node(3, 0.08, 0.08, 0.03, 0.03);
  node(4, 0.04, 0.12, 0.00, 0.05);
  node(5, 0.06, 0.06, 0.02, 0.02);
  node(6, 0.05, 0.05, 0.02, 0.02);
  auto branch = [&](int f, int t, double r, double x) {
    BranchRec b;
    b.from = f;
    b.to = t;
    b.r = r;
    b.x = x;
    b.i_max = 1.0;
    net.branches.push_back(b);
  };
  branch(1, 2, 0.04, 0.03);
  branch(2, 3, 0.05, 0.04);
  branch(3, 4, 0.06, 0.04);
  branch(2, 5, 0.05, 0.03);
  branch(5, 6, 0.04, 0.03);
  auto gen = [&](int n, double pmax, double qr, double c) {
    GenRec g;
    g.node = n;
    g.p_min = 0.0;
    g.p_max = pmax;
    g.q_min = -qr;
    g.q_max = qr;
    g.cost_p = c;
    net.gens.push_back(g);
  };
  gen(4, 0.3, 0.15, 1.0);
  gen(6, 0.25, 0.12, 1.5);
  net.build();
  return net;
}

// IEEE 33-bus feeder (12.66 kV), canonical branch table in ohms and loads in
// kW/kvar, on a 10 MVA base. DER units are added at four remote buses to give
// the feeder a two-dimensional transfer range.
inline Network ieee33_case() {
  static const std::array<MatpowerBranchRow, 32> rows = {{
      {1, 2, 0.0922, 0.0477, 100, 60},    {2, 3, 0.4930, 0.2511, 90, 40},
      {3, 4, 0.3660, 0.1864, 120, 80},    {4, 5, 0.3811, 0.1941, 60, 30},
      {5, 6, 0.8190, 0.7070, 60, 20},     {6, 7, 0.1872, 0.6188, 200, 100},
      {7, 8, 1.7114, 1.2351, 200, 100},   {8, 9, 1.0300, 0.7400, 60, 20},
      {9, 10, 1.0400, 0.7400, 60, 20},    {10, 11, 0.1966, 0.0650, 45, 30},
      {11, 12, 0.3744, 0.1238, 60, 35},   {12, 13, 1.4680, 1.1550, 60, 35},
      {13, 14, 0.5416, 0.7129, 120, 80},  {14, 15, 0.5910, 0.5260, 60, 10},
      {15, 16, 0.7463, 0.5450, 60, 20},   {16, 17, 1.2890, 1.7210, 60, 20},
      {17, 18, 0.7320, 0.5740, 90, 40},   {2, 19, 0.1640, 0.1565, 90, 40},
      {19, 20, 1.5042, 1.3554, 90, 40},   {20, 21, 0.4095, 0.4784, 90, 40},
      {21, 22, 0.7089, 0.9373, 90, 40},   {3, 23, 0.4512, 0.3083, 90, 50},
      {23, 24, 0.8980, 0.7091, 420, 200}, {24, 25, 0.8960, 0.7011, 420, 200},
      {6, 26, 0.2030, 0.1034, 60, 25},    {26, 27, 0.2842, 0.1447, 60, 25},
      {27, 28, 1.0590, 0.9337, 60, 20},   {28, 29, 0.8042, 0.7006, 120, 70},
      {29, 30, 0.5075, 0.2585, 200, 600}, {30, 31, 0.9744, 0.9630, 150, 70},
      {31, 32, 0.3105, 0.3619, 210, 100}, {32, 33, 0.3410, 0.5302, 60, 40},
  }};
  Network net = network_from_matpower_tables(rows.data(), rows.size(), 10.0, 12.66, 1);
  auto gen = [&](int n, double pmax, double qr) {
    GenRec g;
    g.node = n;
    g.p_min = 0.0;
    g.p_max = pmax;
    g.q_min = -qr;
    g.q_max = qr;
    g.cost_p = 1.0;
    net.gens.push_back(g);
  };
  gen(18, 0.12, 0.06);
  gen(22, 0.12, 0.06);
  gen(25, 0.12, 0.06);
  gen(33, 0.12, 0.06);
  net.build();
  return net;
}

// Deterministic synthetic feeder with a main trunk and short laterals,
// parameterized by node count (used at 136 nodes as a stand-in for a large
// distribution system).
inline Network synthetic_feeder_case(int n_nodes) {
  if (n_nodes < 3) throw input_error("synthetic feeder needs >= 3 nodes");
  Network net;
  net.pcc_id = 1;
  net.base_mva = 10.0;
  NodeRec rootn;
  rootn.id = 1;
  net.nodes.push_back(rootn);
  int trunk_len = n_nodes / 3;
  int next_id = 2;
  int trunk_prev = 1;
  std::vector<int> trunk_ids;
  auto add_node = [&](int id, int parent, double r, double x, double pl, double ql) {
    NodeRec nd;
    nd.id = id;
    nd.p_min = nd.p_max = pl;
    nd.q_min = nd.q_max = ql;
    net.nodes.push_back(nd);
    BranchRec b;
    b.from = parent;
    b.to = id;
    b.r = r;
    b.x = x;
    b.i_max = 1.0;
    net.branches.push_back(b);
  };
  for (int k = 0; k < trunk_len && next_id <= n_nodes; ++k) {
    add_node(next_id, trunk_prev, 0.010 + 0.002 * (k % 5), 0.008 + 0.002 * (k % 3),
             0.004 + 0.001 * (k % 4), 0.002);
    trunk_ids.push_back(next_id);
    trunk_prev = next_id++;
  }
  // Laterals of length 1-3 hanging off the trunk, round-robin.
  int t = 0;
  while (next_id <= n_nodes) {
    int attach = trunk_ids[t % trunk_ids.size()];
    int len = 1 + (t % 3);
    int prev = attach;
    for (int k = 0; k < len && next_id <= n_nodes; ++k) {
      add_node(next_id, prev, 0.012 + 0.003 * ((t + k) % 4),
               0.009 + 0.002 * ((t + k) % 3), 0.003 + 0.001 * ((t + k) % 5), 0.0015);
      prev = next_id++;
    }
    ++t;
  }
  // Generators at the far end of the trunk and on a few laterals.
  auto gen = [&](int n, double pmax, double qr) {
    GenRec g;
    g.node = n;
    g.p_min = 0.0;
    g.p_max = pmax;
    g.q_min = -qr;
    g.q_max = qr;
    g.cost_p = 1.0;
    net.gens.push_back(g);
  };
  gen(trunk_ids.back(), 0.15, 0.08);
  gen(n_nodes, 0.15, 0.08);
  gen(trunk_ids[trunk_ids.size() / 2], 0.10, 0.05);
  net.build();
  return net;
}

}  // namespace vppreg
