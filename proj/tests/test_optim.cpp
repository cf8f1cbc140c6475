#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "vppreg/optim.hpp"

using namespace vppreg;

TEST_CASE("trivial one-variable LPs", "[optim]") {
  LpProblem p = LpProblem::make(1);
  p.c << 1.0;
  p.add_row(Vec::Ones(1), RowSense::GE, 1.0);
  auto r = lp_solve(p);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.x[0] == Catch::Approx(1.0));
  CHECK(r.value == Catch::Approx(1.0));
  CHECK(r.duality_gap <= 1e-8);

  LpProblem q = LpProblem::make(1);
  q.c << 1.0;
  q.lo << 0.0;
  q.add_row(Vec::Ones(1), RowSense::LE, -1.0);
  CHECK(lp_solve(q).status == LpStatus::Infeasible);

  LpProblem u = LpProblem::make(1);
  u.c << 1.0;
  CHECK(lp_solve(u).status == LpStatus::Unbounded);
}

TEST_CASE("facet optimum resolved deterministically", "[optim]") {
  LpProblem p = LpProblem::make(2);
  p.c << -1.0, -1.0;
  p.lo << 0.0, 0.0;
  Vec row(2);
  row << 1.0, 1.0;
  p.add_row(row, RowSense::LE, 1.0);
  auto r = lp_solve(p);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.value == Catch::Approx(-1.0));
  CHECK(r.x[0] == Catch::Approx(1.0));  // Bland picks the lowest-index column
  CHECK(r.x[1] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("bounded and free variables", "[optim]") {
  // min x - y, -2 <= x <= 3, y free, y <= x + 1, y >= -4
  LpProblem p = LpProblem::make(2);
  p.c << 1.0, -1.0;
  p.lo[0] = -2.0;
  p.hi[0] = 3.0;
  Vec row(2);
  row << -1.0, 1.0;
  p.add_row(row, RowSense::LE, 1.0);
  p.add_row((Vec(2) << 0.0, 1.0).finished(), RowSense::GE, -4.0);
  auto r = lp_solve(p);
  REQUIRE(r.status == LpStatus::Optimal);
  // objective = x - y >= x - (x+1) = -1 for any x; optimum -1
  CHECK(r.value == Catch::Approx(-1.0));
  CHECK(r.x[1] == Catch::Approx(r.x[0] + 1.0));
}

TEST_CASE("LP random instances certify small duality gap", "[optim]") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  int solved = 0;
  for (int t = 0; t < 100; ++t) {
    int n = 2 + static_cast<int>(rng() % 5), m = 1 + static_cast<int>(rng() % 6);
    LpProblem p = LpProblem::make(n);
    for (int k = 0; k < n; ++k) {
      p.c[k] = d(rng);
      p.lo[k] = -1.0 - std::abs(d(rng));
      p.hi[k] = 1.0 + std::abs(d(rng));
    }
    for (int i = 0; i < m; ++i) {
      Vec row(n);
      for (int k = 0; k < n; ++k) row[k] = d(rng);
      RowSense s = (t % 3 == 0) ? RowSense::EQ : (rng() % 2 ? RowSense::LE : RowSense::GE);
      p.add_row(row, s, d(rng));
    }
    auto r = lp_solve(p);
    if (r.status == LpStatus::Optimal) {
      ++solved;
      CHECK(r.duality_gap <= 1e-8);
      // primal feasibility
      for (int i = 0; i < m; ++i) {
        double ax = p.A.row(i).dot(r.x);
        if (p.sense[i] == RowSense::LE) CHECK(ax <= p.b[i] + 1e-7);
        else if (p.sense[i] == RowSense::GE) CHECK(ax >= p.b[i] - 1e-7);
        else CHECK(ax == Catch::Approx(p.b[i]).margin(1e-7));
      }
      for (int k = 0; k < n; ++k) {
        CHECK(r.x[k] >= p.lo[k] - 1e-7);
        CHECK(r.x[k] <= p.hi[k] + 1e-7);
      }
    }
  }
  CHECK(solved > 30);
}

TEST_CASE("LP determinism", "[optim]") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  LpProblem p = LpProblem::make(6);
  for (int k = 0; k < 6; ++k) {
    p.c[k] = d(rng);
    p.lo[k] = -2.0;
    p.hi[k] = 2.0;
  }
  for (int i = 0; i < 4; ++i) {
    Vec row(6);
    for (int k = 0; k < 6; ++k) row[k] = d(rng);
    p.add_row(row, RowSense::LE, 0.5);
  }
  auto a = lp_solve(p), b = lp_solve(p);
  REQUIRE(a.status == LpStatus::Optimal);
  CHECK(a.x == b.x);
}

TEST_CASE("MILP basics", "[optim]") {
  MilpProblem p;
  p.core = LpProblem::make(1);
  p.core.c << 1.0;
  p.core.add_row(Vec::Ones(1), RowSense::GE, 0.5);
  p.binaries = {0};
  auto r = milp_solve(p);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.x[0] == Catch::Approx(1.0));

  // two binaries, sum = 1, pick the cheaper
  MilpProblem q;
  q.core = LpProblem::make(2);
  q.core.c << 3.0, 2.0;
  Vec row(2);
  row << 1.0, 1.0;
  q.core.add_row(row, RowSense::EQ, 1.0);
  q.binaries = {0, 1};
  auto r2 = milp_solve(q);
  REQUIRE(r2.status == LpStatus::Optimal);
  CHECK(r2.x[1] == Catch::Approx(1.0));
  CHECK(r2.value == Catch::Approx(2.0));

  // infeasible branches
  MilpProblem z;
  z.core = LpProblem::make(1);
  z.core.c << 1.0;
  z.core.add_row(Vec::Ones(1), RowSense::GE, 0.4);
  z.core.add_row(Vec::Ones(1), RowSense::LE, 0.6);
  z.binaries = {0};
  CHECK(milp_solve(z).status == LpStatus::Infeasible);
}

TEST_CASE("MILP equals binary enumeration on random instances", "[optim]") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    int nb = 1 + static_cast<int>(rng() % 4);
    int nc = 1 + static_cast<int>(rng() % 4);
    int n = nb + nc;
    MilpProblem p;
    p.core = LpProblem::make(n);
    for (int k = 0; k < n; ++k) p.core.c[k] = d(rng);
    for (int k = nb; k < n; ++k) {
      p.core.lo[k] = -1.5;
      p.core.hi[k] = 1.5;
    }
    for (int k = 0; k < nb; ++k) p.binaries.push_back(k);
    int m = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < m; ++i) {
      Vec row(n);
      for (int k = 0; k < n; ++k) row[k] = d(rng);
      p.core.add_row(row, rng() % 2 ? RowSense::LE : RowSense::GE, 0.5 * d(rng));
    }
    auto r = milp_solve(p);

    // enumeration oracle
    double best = kInf;
    for (unsigned mask = 0; mask < (1u << nb); ++mask) {
      LpProblem sub = p.core;
      for (int k = 0; k < nb; ++k) {
        double v = (mask >> k) & 1 ? 1.0 : 0.0;
        sub.lo[k] = sub.hi[k] = v;
      }
      auto lr = lp_solve(sub);
      if (lr.status == LpStatus::Optimal) best = std::min(best, lr.value);
    }
    if (best >= kInf / 2) {
      CHECK(r.status == LpStatus::Infeasible);
    } else {
      REQUIRE(r.status == LpStatus::Optimal);
      CHECK(r.value == Catch::Approx(best).margin(1e-6));
    }
  }
}
