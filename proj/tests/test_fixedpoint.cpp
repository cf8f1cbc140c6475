#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "vppreg/builtin_cases.hpp"
#include "vppreg/fixedpoint.hpp"
#include "vppreg/optim.hpp"

#include "helpers.hpp"

using namespace vppreg;

namespace {

OperatingPoint solved_anchor(const Network& net, const Vec& u) {
  auto r = newton_solve(net, u, PccMode::Free);
  REQUIRE(r.converged);
  return r.point;
}

BrouwerBox symmetric_box(const Network& net, double wv, double wi, double ws) {
  BrouwerBox b;
  b.P_lo = Vec::Constant(net.n_branches(), -wi);
  b.P_hi = Vec::Constant(net.n_branches(), wi);
  b.Q_lo = Vec::Constant(net.n_branches(), -wi);
  b.Q_hi = Vec::Constant(net.n_branches(), wi);
  b.V_lo = Vec::Constant(net.n_nodes() - 1, -wv);
  b.V_hi = Vec::Constant(net.n_nodes() - 1, wv);
  b.I_lo = Vec::Constant(net.n_branches(), -wi);
  b.I_hi = Vec::Constant(net.n_branches(), wi);
  b.sig_lo = Vec::Constant(2, -ws);
  b.sig_hi = Vec::Constant(2, ws);
  return b;
}

}  // namespace

TEST_CASE("model build and sign split", "[fixedpoint]") {
  Network net = two_bus_case(0.1, 0.0, true);
  auto anchor = solved_anchor(net, testutil::nominal_u(net));
  auto m = build_fixed_point_model(net, anchor);

  const int nR = n_monitored(net);
  CHECK(m.n_rows() == nR);
  CHECK(m.L_plus.minCoeff() >= 0.0);
  CHECK(m.L_minus.maxCoeff() <= 0.0);
  CHECK(m.M_plus.minCoeff() >= 0.0);
  CHECK(m.H.minCoeff() > 0.0);

  // exact reconstruction of the monitored response to the quadratic rows
  Mat AF = monitor_selector(net) * m.F_x;
  for (int l = 0; l < net.n_branches(); ++l) {
    Vec col = AF.col(net.rowI(l));
    Vec rec = m.L_plus.col(l) + m.L_minus.col(l);
    for (int i = 0; i < nR; ++i) {
      if (std::abs(col[i]) < 1e-14) CHECK(rec[i] == 0.0);
      else CHECK(rec[i] == col[i]);
    }
  }
}

TEST_CASE("linear recovery identity on random probes", "[fixedpoint]") {
  Network net = six_bus_case();
  auto anchor = solved_anchor(net, testutil::nominal_u(net));
  auto m = build_fixed_point_model(net, anchor);
  Mat Gfull = jacobian_f_extended(net, m.anchor_x0);
  auto cols = reduced_columns(net);
  Mat G(net.n_e(), net.n_e());
  for (int k = 0; k < net.n_e(); ++k) G.col(k) = Gfull.col(cols[k]);
  Mat K1 = net.K1(), K2 = net.K2();

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    Vec y1(2), y2(net.n_u()), r(net.n_e());
    for (int k = 0; k < 2; ++k) y1[k] = d(rng);
    for (int k = 0; k < net.n_u(); ++k) y2[k] = d(rng);
    for (int k = 0; k < net.n_e(); ++k) r[k] = d(rng);
    Vec xt = m.F_upcc * y1 + m.F_u * y2 + m.F_x * r;
    Vec rhs = K1 * y1 + K2 * y2 - r;
    CHECK((G * xt - rhs).lpNorm<Eigen::Infinity>() <= 1e-8);
  }
}

TEST_CASE("rebuild is deterministic", "[fixedpoint]") {
  Network net = ieee33_case();
  auto anchor = solved_anchor(net, testutil::nominal_u(net));
  auto a = build_fixed_point_model(net, anchor);
  auto b = build_fixed_point_model(net, anchor);
  CHECK(a.F_upcc == b.F_upcc);
  CHECK(a.F_u == b.F_u);
  CHECK(a.F_x == b.F_x);
  CHECK(a.M_plus == b.M_plus);
  CHECK(a.H == b.H);
}

TEST_CASE("unsolved anchor is rejected", "[fixedpoint]") {
  Network net = two_bus_case(0.1, 0.02, true);
  OperatingPoint flat = OperatingPoint::flat(net);
  flat.controls = testutil::nominal_u(net);
  CHECK_THROWS_AS(build_fixed_point_model(net, flat), input_error);
}

TEST_CASE("contraction condition arithmetic", "[fixedpoint]") {
  Network net = two_bus_case(0.1, 0.0, true);
  auto anchor = solved_anchor(net, testutil::nominal_u(net));
  auto m = build_fixed_point_model(net, anchor);
  const int nL = net.n_branches();

  SECTION("zero quadratic range always holds") {
    auto c = check_brouwer_condition(m, symmetric_box(net, 0.05, 0.05, 0.05),
                                     Vec::Zero(nL), Vec::Zero(nL));
    CHECK(c.holds);
    CHECK(c.slack.minCoeff() >= 0.0);
  }
  SECTION("zero-width box with zero range has zero slack") {
    auto c = check_brouwer_condition(m, symmetric_box(net, 0.0, 0.0, 0.0),
                                     Vec::Zero(nL), Vec::Zero(nL));
    CHECK(c.holds);
    CHECK(c.slack.lpNorm<Eigen::Infinity>() <= 1e-15);
  }
  SECTION("hand-computed violated slack") {
    FixedPointModel fake = m;
    fake.M_plus = Mat::Constant(m.n_rows(), nL, 2.0);
    auto box = symmetric_box(net, 0.01, 0.01, 0.01);
    auto c = check_brouwer_condition(fake, box, Vec::Constant(nL, -0.01),
                                     Vec::Constant(nL, 0.01));
    // each row: lhs = -0.02, rhs = 2 * (-0.02) = -0.04, slack = -0.02
    CHECK(!c.holds);
    for (int i = 0; i < c.slack.size(); ++i)
      CHECK(c.slack[i] == Catch::Approx(-0.02));
  }
  SECTION("reversed range is rejected") {
    CHECK_THROWS_AS(check_brouwer_condition(m, symmetric_box(net, 0.1, 0.1, 0.1),
                                            Vec::Ones(nL), Vec::Zero(nL)),
                    input_error);
  }
}

TEST_CASE("admissible-control polytope", "[fixedpoint]") {
  Network net = two_bus_case(0.1, 0.02, true);
  auto anchor = solved_anchor(net, testutil::nominal_u(net));
  auto m = build_fixed_point_model(net, anchor);
  const int nL = net.n_branches(), nR = m.n_rows();

  auto box = symmetric_box(net, 0.05, 0.02, 0.05);
  Vec Rmin = Vec::Constant(nL, -1e-4), Rmax = Vec::Constant(nL, 1e-4);
  REQUIRE(check_brouwer_condition(m, box, Rmin, Rmax).holds);
  Polytope p = build_omega_polytope(m, box, Rmin, Rmax, net);
  const int d = 2 + net.n_u();
  REQUIRE(p.A.cols() == d);
  REQUIRE(p.A.rows() == 2 * nR + 2 * net.n_u());

  SECTION("anchor deviation zero is admitted") {
    CHECK(p.feasible(Vec::Zero(d), 1e-9));
  }
  SECTION("row gap equals box width minus quadratic penalty") {
    Vec b_min = box.lo_stack() - m.L_minus * Rmax - m.L_plus * Rmin;
    Vec b_max = box.hi_stack() - m.L_plus * Rmax - m.L_minus * Rmin;
    Vec gap = b_max - b_min;
    Vec expect = (box.hi_stack() - box.lo_stack()) - m.M_plus * (Rmax - Rmin);
    CHECK((gap - expect).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK(gap.minCoeff() >= 0.0);
  }
  SECTION("violated precondition refuses construction") {
    auto wide = symmetric_box(net, 1e-9, 1e-9, 1e-9);
    Vec big = Vec::Constant(nL, 0.1);
    CHECK_THROWS_AS(build_omega_polytope(m, wide, -big, big, net), input_error);
  }
  SECTION("soundness chain: admitted points map into the box") {
    // gather vertices in random directions, then sample convex combinations
    std::mt19937_64 rng(2025);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<Vec> verts;
    for (int t = 0; t < 24; ++t) {
      Vec dir(d);
      for (int k = 0; k < d; ++k) dir[k] = g(rng);
      LpProblem lp = p.as_lp();
      lp.c = -dir;
      auto r = lp_solve(lp);
      REQUIRE(r.status == LpStatus::Optimal);
      verts.push_back(r.x);
    }
    Vec lo = box.lo_stack(), hi = box.hi_stack();
    Mat A1 = monitor_selector(net);
    for (int t = 0; t < 100; ++t) {
      Vec y = Vec::Zero(d);
      double wsum = 0.0;
      for (const auto& v : verts) {
        double w = u01(rng);
        y += w * v;
        wsum += w;
      }
      y /= wsum;
      REQUIRE(p.feasible(y, 1e-7));
      Vec R(nL);
      for (int l = 0; l < nL; ++l)
        R[l] = Rmin[l] + u01(rng) * (Rmax[l] - Rmin[l]);
      Vec resid = Vec::Zero(net.n_e());
      for (int l = 0; l < nL; ++l) resid[net.rowI(l)] = R[l];
      Vec xt = m.F_upcc * y.head(2) + m.F_u * y.tail(net.n_u()) + m.F_x * resid;
      Vec img = A1 * xt;
      for (int i = 0; i < img.size(); ++i) {
        CHECK(img[i] >= lo[i] - 1e-7);
        CHECK(img[i] <= hi[i] + 1e-7);
      }
    }
  }
}
