#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <random>

#include "vppreg/builtin_cases.hpp"
#include "vppreg/io.hpp"

#include "helpers.hpp"

using namespace vppreg;

TEST_CASE("atlas round-trips through its file form", "[io]") {
  Network net = two_bus_case(0.1, 0.02, true);
  ExploreConfig cfg;
  cfg.max_iterations = 2;
  cfg.max_subregions = 4;
  RegionAtlas atlas = explore(net, cfg);
  REQUIRE(!atlas.subregions.empty());

  std::string path = "atlas_roundtrip_test.json";
  save_atlas(path, atlas);
  RegionAtlas back = load_atlas(path);
  std::remove(path.c_str());

  REQUIRE(back.subregions.size() == atlas.subregions.size());
  CHECK(back.iterations == atlas.iterations);
  CHECK(back.termination == atlas.termination);
  REQUIRE(back.visited_points.size() == atlas.visited_points.size());
  for (size_t k = 0; k < atlas.visited_points.size(); ++k)
    CHECK(back.visited_points[k] == atlas.visited_points[k]);
  for (size_t s = 0; s < atlas.subregions.size(); ++s) {
    const SubRegion& a = atlas.subregions[s];
    const SubRegion& b = back.subregions[s];
    CHECK(a.anchor.controls == b.anchor.controls);
    CHECK(a.anchor.pcc == b.anchor.pcc);
    CHECK(a.omega.A == b.omega.A);
    CHECK(a.omega.b == b.omega.b);
    CHECK(a.polygon.Ah == b.polygon.Ah);
    CHECK(a.polygon.bh == b.polygon.bh);
    REQUIRE(a.polygon.vertices.size() == b.polygon.vertices.size());
    for (size_t k = 0; k < a.polygon.vertices.size(); ++k) {
      CHECK(a.polygon.vertices[k] == b.polygon.vertices[k]);
      CHECK(a.polygon.liftings[k] == b.polygon.liftings[k]);
    }
    CHECK(a.box.sig_lo == b.box.sig_lo);
    CHECK(a.bounds.Rmin == b.bounds.Rmin);
  }

  // a reloaded atlas still certifies its own samples
  std::mt19937_64 rng(31);
  for (const auto& sr : back.subregions)
    for (int t = 0; t < 10; ++t) {
      Vec2 p = sample_polygon(sr.polygon, rng);
      auto v = verify_point(net, sr, p);
      INFO(v.reason);
      CHECK(v.pass);
    }
}

TEST_CASE("atlas files reject foreign content", "[io]") {
  Network net = two_bus_case();
  json j = network_to_json(net);
  CHECK_THROWS_AS(atlas_from_json(j), input_error);
}

TEST_CASE("atlas vertex export is plottable", "[io]") {
  Network net = two_bus_case(0.1, 0.0, false);
  ExploreConfig cfg;
  RegionAtlas atlas = explore(net, cfg);
  auto csv = atlas_vertices_csv(atlas);
  CHECK(csv.rfind("subregion,vertex,p,q\n", 0) == 0);
  size_t total = 0;
  for (const auto& sr : atlas.subregions) total += sr.polygon.vertices.size();
  CHECK(static_cast<size_t>(std::count(csv.begin(), csv.end(), '\n')) ==
        total + 1);
}

TEST_CASE("transmission round-trip and validation", "[io]") {
  DcTransmission tx;
  tx.n_buses = 3;
  tx.reference = 0;
  tx.demand = (Vec(3) << 0.1, 0.2, 0.0).finished();
  tx.lines = {{0, 1, 3.0, 1.5}, {1, 2, 2.0, 1.0}};
  DcUnit u;
  u.bus = 0;
  u.p_min = 0.0;
  u.p_max = 2.0;
  u.cost = {{0.5, 0.0}, {1.0, -0.4}};
  tx.units = {u};
  tx.vpp_bus = {2};

  DcTransmission back = transmission_from_json(transmission_to_json(tx));
  CHECK(back.n_buses == tx.n_buses);
  CHECK(back.demand == tx.demand);
  REQUIRE(back.lines.size() == 2);
  CHECK(back.lines[1].b == 2.0);
  REQUIRE(back.units.size() == 1);
  REQUIRE(back.units[0].cost.size() == 2);
  CHECK(back.units[0].cost[1].intercept == -0.4);
  CHECK(back.vpp_bus == tx.vpp_bus);

  json j = transmission_to_json(tx);
  j["units"][0]["bus"] = 9;
  CHECK_THROWS_AS(transmission_from_json(j), input_error);
}

TEST_CASE("dispatch export carries the decision", "[io]") {
  DispatchResult r;
  r.feasible = true;
  r.value = 1.25;
  r.unit_p = (Vec(1) << 2.25).finished();
  r.theta = Vec::Zero(1);
  r.vpp_pcc = {Vec2(2.25, 0.5)};
  r.chosen = {1};
  r.vpp_cost = {0.25};
  json j = dispatch_to_json(r);
  CHECK(j["feasible"] == true);
  CHECK(j["value"] == 1.25);
  CHECK(j["vpps"][0]["chosen"] == 1);
  CHECK(j["vpps"][0]["cost"] == 0.25);

  DispatchResult bad;
  json jb = dispatch_to_json(bad);
  CHECK(jb["feasible"] == false);
  CHECK(!jb.contains("value"));
}
