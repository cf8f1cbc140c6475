#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "vppreg/builtin_cases.hpp"
#include "vppreg/io.hpp"
#include "vppreg/network.hpp"

#include "helpers.hpp"

using namespace vppreg;

TEST_CASE("two-bus flat unloaded state has zero residual", "[network]") {
  Network net = two_bus_case(0.0);
  OperatingPoint pt = OperatingPoint::flat(net);
  Vec r = residual_f(net, pt);
  REQUIRE(r.lpNorm<Eigen::Infinity>() == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("two-bus solved state matches the sweep oracle", "[network]") {
  Network net = two_bus_case(0.1);
  OperatingPoint pt;
  REQUIRE(testutil::sweep_solve(net, testutil::nominal_u(net), pt));
  // Frozen oracle values for the R=X=0.1, P_load=0.1 feeder.
  CHECK(pt.pcc[0] == Catch::Approx(0.101021).margin(2e-6));
  CHECK(pt.pcc[1] == Catch::Approx(0.001021).margin(2e-6));
  CHECK(pt.branch_I[0] == Catch::Approx(0.010206).margin(2e-6));
  CHECK(pt.node_V[1] == Catch::Approx(0.979796).margin(2e-6));
  Vec r = residual_f(net, pt);
  CHECK(r.lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("voltage perturbation moves only the drop residual", "[network]") {
  Network net = two_bus_case(0.1);
  OperatingPoint pt;
  REQUIRE(testutil::sweep_solve(net, testutil::nominal_u(net), pt));
  Vec r0 = residual_f(net, pt);
  pt.node_V[1] += 0.01;
  Vec r1 = residual_f(net, pt);
  CHECK(std::abs(r1[net.rowV(0)] - r0[net.rowV(0)]) == Catch::Approx(0.01));
  for (int n = 0; n < net.n_nodes(); ++n) {
    CHECK(r1[net.rowP(n)] == Catch::Approx(r0[net.rowP(n)]).margin(1e-15));
    CHECK(r1[net.rowQ(n)] == Catch::Approx(r0[net.rowQ(n)]).margin(1e-15));
  }
}

TEST_CASE("voltage-drop rows are constant in the state", "[network]") {
  Network net = six_bus_case();
  std::mt19937_64 rng(7);
  std::normal_distribution<double> d(0.0, 0.5);
  Vec x1(net.n_x()), x2(net.n_x());
  for (int k = 0; k < net.n_x(); ++k) {
    x1[k] = d(rng);
    x2[k] = d(rng);
  }
  Mat J1 = jacobian_f(net, x1), J2 = jacobian_f(net, x2);
  for (int l = 0; l < net.n_branches(); ++l) {
    const auto& br = net.branches[l];
    CHECK((J1.row(net.rowV(l)) - J2.row(net.rowV(l))).norm() == Catch::Approx(0.0).margin(1e-15));
    CHECK(J1(net.rowV(l), net.ixP(l)) == Catch::Approx(-2.0 * br.r));
    CHECK(J1(net.rowV(l), net.ixQ(l)) == Catch::Approx(-2.0 * br.x));
    CHECK(J1(net.rowV(l), net.ixI(l)) == Catch::Approx(br.r * br.r + br.x * br.x));
  }
}

TEST_CASE("jacobian matches central finite differences", "[network]") {
  Network net = six_bus_case();
  std::mt19937_64 rng(11);
  std::normal_distribution<double> d(0.0, 0.5);
  Vec x0(net.n_x());
  for (int k = 0; k < net.n_x(); ++k) x0[k] = 1.0 + d(rng);
  Mat J = jacobian_f(net, x0);
  const double eps = 1e-5;
  Vec sig = Vec::Zero(2);
  for (int k = 0; k < net.n_x(); ++k) {
    Vec xp = x0, xm = x0;
    xp[k] += eps;
    xm[k] -= eps;
    Vec col = (eval_f(net, xp, sig) - eval_f(net, xm, sig)) / (2.0 * eps);
    CHECK((col - J.col(k)).lpNorm<Eigen::Infinity>() <= 1e-6);
  }
}

TEST_CASE("quadratic rows at the origin keep only structural constants", "[network]") {
  Network net = two_bus_case(0.1);
  Mat J = jacobian_f(net, Vec::Zero(net.n_x()));
  int r = net.rowI(0);
  CHECK(J(r, net.ixP(0)) == 0.0);
  CHECK(J(r, net.ixQ(0)) == 0.0);
  CHECK(J(r, net.ixV(0)) == 0.0);
  CHECK(J(r, net.ixI(0)) == 0.0);
}

TEST_CASE("second-order expansion is exact", "[network]") {
  Network net = six_bus_case();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d(0.0, 0.7);
  for (int trial = 0; trial < 1000; ++trial) {
    Vec x0(net.n_x()), dx(net.n_x());
    for (int k = 0; k < net.n_x(); ++k) {
      x0[k] = d(rng);
      dx[k] = d(rng);
    }
    Vec sig = Vec::Zero(2);
    Vec lhs = eval_f(net, x0 + dx, sig);
    Vec rhs = eval_f(net, x0, sig) + jacobian_f(net, x0) * dx;
    Vec r2 = second_order_residual(net, dx);
    for (int l = 0; l < net.n_branches(); ++l) rhs[net.rowI(l)] += r2[l];
    REQUIRE((lhs - rhs).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("second-order residual basics", "[network]") {
  Network net = two_bus_case(0.1);
  CHECK(second_order_residual(net, Vec::Zero(net.n_x())).norm() == 0.0);
  Vec dx = Vec::Zero(net.n_x());
  dx[net.ixP(0)] = 1.0;
  CHECK(second_order_residual(net, dx)[0] == Catch::Approx(-1.0));
}

TEST_CASE("newton free-PCC reproduces the sweep oracle", "[network]") {
  Network net = two_bus_case(0.1);
  Vec u = testutil::nominal_u(net);
  auto res = newton_solve(net, u, PccMode::Free);
  REQUIRE(res.converged);
  CHECK(res.point.pcc[0] == Catch::Approx(0.101021).margin(2e-6));
  CHECK(res.point.pcc[1] == Catch::Approx(0.001021).margin(2e-6));
  CHECK(res.point.node_V[1] == Catch::Approx(0.979796).margin(2e-6));

  auto flatres = newton_solve(net, Vec::Zero(net.n_u()), PccMode::Free);
  REQUIRE(flatres.converged);
  CHECK(flatres.point.pcc.norm() == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("newton fixed-PCC closes the balance with slack", "[network]") {
  Network net = two_bus_case(0.1);
  Vec u = testutil::nominal_u(net);
  Vec target(2);
  target << 0.101021, 0.001021;
  auto res = newton_solve(net, u, PccMode::Fixed, target);
  REQUIRE(res.converged);
  // sigma absorbs only the tiny offset between target and the exact transfer
  CHECK(res.point.sigma.lpNorm<Eigen::Infinity>() <= 1e-5);
  Vec r = residual_f(net, res.point);
  CHECK(r.lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("newton agrees with sweep oracle on 33-bus and 6-bus", "[network]") {
  for (const Network& net : {ieee33_case(), six_bus_case()}) {
    Vec u = testutil::nominal_u(net);
    OperatingPoint oracle;
    REQUIRE(testutil::sweep_solve(net, u, oracle));
    auto res = newton_solve(net, u, PccMode::Free);
    REQUIRE(res.converged);
    CHECK((res.point.pcc - oracle.pcc).lpNorm<Eigen::Infinity>() <= 1e-7);
    CHECK((res.point.node_V - oracle.node_V).lpNorm<Eigen::Infinity>() <= 1e-7);
  }
}

TEST_CASE("newton is deterministic", "[network]") {
  Network net = six_bus_case();
  Vec u = testutil::nominal_u(net);
  auto a = newton_solve(net, u, PccMode::Free);
  auto b = newton_solve(net, u, PccMode::Free);
  REQUIRE(a.converged);
  CHECK(a.point.state_x(net) == b.point.state_x(net));
  CHECK(a.point.pcc == b.point.pcc);
}

TEST_CASE("conservation at solved points", "[network]") {
  for (const Network& net : {two_bus_case(0.1), six_bus_case(), ieee33_case()}) {
    Vec u = testutil::nominal_u(net);
    auto res = newton_solve(net, u, PccMode::Free);
    REQUIRE(res.converged);
    const int nG = net.n_gens(), nN = net.n_nodes();
    double load = 0, gen = 0, loss = 0;
    for (int n = 0; n < nN; ++n) load += u[2 * nG + n];
    for (int g = 0; g < nG; ++g) gen += u[g];
    for (int l = 0; l < net.n_branches(); ++l)
      loss += net.branches[l].r * res.point.branch_I[l];
    CHECK(res.point.pcc[0] == Catch::Approx(load - gen + loss).margin(1e-8));
  }
}

TEST_CASE("limit_check reports violations", "[network]") {
  Network net = two_bus_case(0.1);
  OperatingPoint pt = OperatingPoint::flat(net);
  pt.controls = testutil::nominal_u(net);
  CHECK(limit_check(net, pt).clean());

  pt.node_V[1] = net.nodes[1].v_min - 0.02;
  auto rep = limit_check(net, pt);
  CHECK(rep.worst_voltage_violation == Catch::Approx(0.02));
  CHECK(!rep.violated_indices.empty());

  Network tight = two_bus_case(0.1);
  tight.branches[0].i_max = 0.005;
  tight.build();
  OperatingPoint sol;
  REQUIRE(testutil::sweep_solve(tight, testutil::nominal_u(tight), sol));
  auto rep2 = limit_check(tight, sol);
  CHECK(rep2.worst_current_violation == Catch::Approx(0.005206).margin(2e-6));
}

TEST_CASE("network file round-trip and schema flag", "[network][io]") {
  Network net = six_bus_case();
  json j = network_to_json(net);
  Network back = network_from_json(j);
  CHECK(back.n_nodes() == net.n_nodes());
  CHECK(back.branches[2].r == net.branches[2].r);
  CHECK(back.gens[1].q_max == net.gens[1].q_max);

  j.erase("voltage_convention");
  CHECK_THROWS_AS(network_from_json(j), input_error);
}

TEST_CASE("network validation rejects malformed graphs", "[network]") {
  Network net = two_bus_case(0.1);
  net.branches[0].from = 2;
  net.branches[0].to = 1;
  CHECK_THROWS_AS(net.build(), input_error);

  Network cyc = six_bus_case();
  cyc.branches.push_back({4, 6, 0.01, 0.01, 0.0, 1.0});
  CHECK_THROWS_AS(cyc.build(), input_error);
}
