#pragma once

#include <random>

#include "vppreg/geometry.hpp"
#include "vppreg/network.hpp"

namespace vppreg {

// The linear response is built over the reduced extended state
//   x~ = [P_L, Q_L, V (non-root), I, sigma_P, sigma_Q]
// with the root voltage pinned (it is a grid-side parameter, not a degree of
// freedom). The reduced dimension equals n_e, so the sensitivity system is
// square and the mapped solution keeps the physical root voltage.
//
// The self-mapping argument needs the invariant box to cover every state
// coordinate the quadratic remainder reads, so the monitored rows are the
// whole reduced state, in the same order.
inline std::vector<int> reduced_columns(const Network& net) {
  std::vector<int> cols;
  cols.reserve(net.n_e());
  for (int l = 0; l < net.n_branches(); ++l) cols.push_back(net.ixP(l));
  for (int l = 0; l < net.n_branches(); ++l) cols.push_back(net.ixQ(l));
  for (int n = 0; n < net.n_nodes(); ++n)
    if (n != net.root) cols.push_back(net.ixV(n));
  for (int l = 0; l < net.n_branches(); ++l) cols.push_back(net.ixI(l));
  cols.push_back(net.ixSigP());
  cols.push_back(net.ixSigQ());
  return cols;
}

inline int n_monitored(const Network& net) { return net.n_e(); }

inline int monitor_p_row(const Network& net, int l) {
  (void)net;
  return l;
}
inline int monitor_q_row(const Network& net, int l) {
  return net.n_branches() + l;
}
// Row of a non-root node's voltage among the monitored rows.
inline int monitor_v_row(const Network& net, int n) {
  if (n == net.root) throw input_error("root voltage is not monitored");
  return 2 * net.n_branches() + (n < net.root ? n : n - 1);
}
inline int monitor_i_row(const Network& net, int l) {
  return 2 * net.n_branches() + (net.n_nodes() - 1) + l;
}

inline Mat monitor_selector(const Network& net) {
  return Mat::Identity(net.n_e(), net.n_e());
}

// Linear response around a solved anchor:
//   x~ = F_upcc u~pcc + F_u u~ + F_x [0; R~]
// with the quadratic-row restriction L, its sign split, and the row
// normalizers H.
struct FixedPointModel {
  Vec anchor_x0;      // n_x
  Vec anchor_sigma0;  // 2
  Vec anchor_u0;      // n_u
  Vec anchor_upcc0;   // 2

  Mat F_upcc;  // n_e x 2
  Mat F_u;     // n_e x n_u
  Mat F_x;     // n_e x n_e

  Mat L_plus, L_minus, M_plus;  // nR x n_L
  Mat L_u;                      // nR x (2 + n_u)
  Vec H;                        // nR, all > 0

  int n_rows() const { return static_cast<int>(H.size()); }
};

// Box around the anchor for the monitored quantities, all relative to the
// anchor values (contains zero componentwise). V entries follow the
// monitored (non-root) node order.
struct BrouwerBox {
  Vec P_lo, P_hi;      // n_L
  Vec Q_lo, Q_hi;      // n_L
  Vec V_lo, V_hi;      // n_N - 1
  Vec I_lo, I_hi;      // n_L
  Vec sig_lo, sig_hi;  // 2

  Vec lo_stack() const {
    Vec s(P_lo.size() + Q_lo.size() + V_lo.size() + I_lo.size() + 2);
    s << P_lo, Q_lo, V_lo, I_lo, sig_lo;
    return s;
  }
  Vec hi_stack() const {
    Vec s(P_hi.size() + Q_hi.size() + V_hi.size() + I_hi.size() + 2);
    s << P_hi, Q_hi, V_hi, I_hi, sig_hi;
    return s;
  }
};

struct BrouwerCheck {
  bool holds = false;
  Vec slack;  // per row; holds iff min >= -1e-12
};

namespace detail {
constexpr double kSignSplitTol = 1e-14;
constexpr double kCondGuard = 1e12;
constexpr double kProbeTol = 1e-8;
}  // namespace detail

inline FixedPointModel build_fixed_point_model(const Network& net,
                                               const OperatingPoint& anchor) {
  const int ne = net.n_e(), nL = net.n_branches();
  Vec r0 = residual_f(net, anchor);
  if (r0.lpNorm<Eigen::Infinity>() > 1e-6)
    throw input_error("anchor point is not solved");

  Vec x0 = anchor.state_x(net);
  Mat Gfull = jacobian_f_extended(net, x0);  // n_e x (n_x+2)
  auto cols = reduced_columns(net);
  Mat G(ne, ne);
  for (int k = 0; k < ne; ++k) G.col(k) = Gfull.col(cols[k]);
  Mat J = G * G.transpose();

  Eigen::JacobiSVD<Mat> svd(J);
  double smax = svd.singularValues()(0);
  double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (!(smin > 0.0) || smax / smin > detail::kCondGuard)
    throw singular_error("anchor sensitivity system is ill-conditioned");

  Eigen::PartialPivLU<Mat> lu(J);
  Mat K1 = net.K1(), K2 = net.K2();

  FixedPointModel m;
  m.anchor_x0 = x0;
  m.anchor_sigma0 = anchor.sigma;
  m.anchor_u0 = anchor.controls;
  m.anchor_upcc0 = anchor.pcc;
  m.F_upcc = G.transpose() * lu.solve(K1);
  m.F_u = G.transpose() * lu.solve(K2);
  m.F_x = -(G.transpose() * lu.solve(Mat::Identity(ne, ne)));

  // Verify the inverse identity G x~ = K1 y1 + K2 y2 - r on random probes;
  // refuse anchors where the linear recovery fails.
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int t = 0; t < 5; ++t) {
    Vec y1(2), y2(net.n_u()), r(ne);
    for (int k = 0; k < 2; ++k) y1[k] = d(rng);
    for (int k = 0; k < net.n_u(); ++k) y2[k] = d(rng);
    for (int k = 0; k < ne; ++k) r[k] = d(rng);
    Vec xt = m.F_upcc * y1 + m.F_u * y2 + m.F_x * r;
    Vec lhs = G * xt;
    Vec rhs = K1 * y1 + K2 * y2 - r;
    if ((lhs - rhs).lpNorm<Eigen::Infinity>() > detail::kProbeTol)
      throw singular_error("anchor linear-recovery probe failed");
  }

  const int nR = n_monitored(net);
  Mat L(nR, nL);
  for (int l = 0; l < nL; ++l) L.col(l) = m.F_x.col(net.rowI(l));
  m.L_plus = Mat::Zero(nR, nL);
  m.L_minus = Mat::Zero(nR, nL);
  for (int i = 0; i < nR; ++i)
    for (int l = 0; l < nL; ++l) {
      double v = L(i, l);
      if (v > detail::kSignSplitTol) m.L_plus(i, l) = v;
      else if (v < -detail::kSignSplitTol) m.L_minus(i, l) = v;
    }
  m.M_plus = m.L_plus - m.L_minus;

  m.L_u.resize(nR, 2 + net.n_u());
  m.L_u.leftCols(2) = m.F_upcc;
  m.L_u.rightCols(net.n_u()) = m.F_u;

  m.H.resize(nR);
  for (int i = 0; i < nR; ++i) m.H[i] = std::max(m.L_u.row(i).norm(), 1e-12);
  return m;
}

// Rowwise contraction condition: lo - hi <= M_plus (Rmin - Rmax).
inline BrouwerCheck check_brouwer_condition(const FixedPointModel& m,
                                            const BrouwerBox& box,
                                            const Vec& Rmin, const Vec& Rmax) {
  if (Rmin.size() != Rmax.size() || ((Rmax - Rmin).minCoeff() < 0.0))
    throw input_error("second-order bounds reversed");
  Vec lhs = box.lo_stack() - box.hi_stack();
  Vec rhs = m.M_plus * (Rmin - Rmax);
  BrouwerCheck c;
  c.slack = rhs - lhs;
  c.holds = c.slack.minCoeff() >= -1e-12;
  return c;
}

// H-representation of the admissible control deviations (u~pcc, u~):
// region rows b_min <= L_u y <= b_max, plus the control box.
inline Polytope build_omega_polytope(const FixedPointModel& m,
                                     const BrouwerBox& box, const Vec& Rmin,
                                     const Vec& Rmax, const Network& net) {
  if (!check_brouwer_condition(m, box, Rmin, Rmax).holds)
    throw input_error("contraction condition violated; region box rejected");
  const int nR = m.n_rows(), nu = net.n_u(), d = 2 + nu;
  Vec b_min = box.lo_stack() - m.L_minus * Rmax - m.L_plus * Rmin;
  Vec b_max = box.hi_stack() - m.L_plus * Rmax - m.L_minus * Rmin;

  Polytope p;
  p.A = Mat::Zero(2 * nR + 2 * nu, d);
  p.b.resize(2 * nR + 2 * nu);
  p.A.topRows(nR) = m.L_u;
  p.b.head(nR) = b_max;
  p.A.middleRows(nR, nR) = -m.L_u;
  p.b.segment(nR, nR) = -b_min;
  Vec ulo = net.u_min() - m.anchor_u0, uhi = net.u_max() - m.anchor_u0;
  for (int k = 0; k < nu; ++k) {
    p.A(2 * nR + k, 2 + k) = 1.0;
    p.b[2 * nR + k] = uhi[k];
    p.A(2 * nR + nu + k, 2 + k) = -1.0;
    p.b[2 * nR + nu + k] = -ulo[k];
  }
  return p;
}

}  // namespace vppreg
