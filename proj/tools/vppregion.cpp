#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vppreg/io.hpp"

using namespace vppreg;

namespace {

int cmd_characterize(const std::string& network_path, const std::string& out,
                     ExploreConfig cfg) {
  Network net = load_network(network_path);
  cfg.log = [](const std::string& s) { std::cout << s << "\n"; };
  RegionAtlas atlas = explore(net, cfg);
  save_atlas(out, atlas);
  std::cout << "subregions: " << atlas.subregions.size() << "\n"
            << "termination: " << to_string(atlas.termination) << "\n"
            << "atlas written to " << out << "\n";
  return 0;
}

int cmd_verify(const std::string& network_path, const std::string& atlas_path,
               int samples, unsigned seed) {
  Network net = load_network(network_path);
  RegionAtlas atlas = load_atlas(atlas_path);
  if (samples == 0)
    std::cout << "warning: 0 samples requested; vacuous pass\n";
  std::mt19937_64 rng(seed);
  bool all_pass = true;
  for (size_t s = 0; s < atlas.subregions.size(); ++s) {
    const SubRegion& sr = atlas.subregions[s];
    int ok = 0;
    for (int t = 0; t < samples; ++t) {
      Vec2 p = sample_polygon(sr.polygon, rng);
      auto v = verify_point(net, sr, p);
      if (v.pass) {
        ++ok;
      } else {
        all_pass = false;
        std::cout << "subregion " << s << " FAIL at (" << p.x() << ", "
                  << p.y() << "): " << v.reason << "\n";
      }
    }
    std::cout << "subregion " << s << ": " << ok << "/" << samples
              << " samples verified\n";
  }
  std::cout << (all_pass ? "overall: pass" : "overall: fail") << "\n";
  return all_pass ? 0 : 1;
}

int cmd_coordinate(const std::string& tx_path,
                   const std::vector<std::string>& atlas_paths,
                   const std::vector<std::string>& network_paths,
                   const std::string& mode, const std::string& out) {
  DcTransmission tx = load_transmission(tx_path);
  CoordinationProblem cp;
  cp.tx = tx;
  if (!network_paths.empty() && network_paths.size() != atlas_paths.size())
    throw input_error("need one network per atlas for cost surfaces");
  for (size_t a = 0; a < atlas_paths.size(); ++a) {
    RegionAtlas atlas = load_atlas(atlas_paths[a]);
    std::vector<VppOption> opts;
    for (const auto& sr : atlas.subregions) {
      if (network_paths.empty()) {
        VppOption o;
        o.A = sr.polygon.Ah;
        o.B = sr.polygon.bh;
        opts.push_back(o);
      } else {
        Network net = load_network(network_paths[a]);
        opts.push_back(make_vpp_option(net, sr));
      }
    }
    cp.vpps.push_back(opts);
  }
  cp.check();

  DispatchResult result;
  if (mode == "etp") {
    result = solve_etp(cp);
  } else if (mode == "tp-oracle") {
    result = solve_tp_enumerate(cp);
  } else if (mode == "both") {
    DispatchResult tp = solve_tp_enumerate(cp);
    DispatchResult et = solve_etp(cp);
    if (tp.feasible != et.feasible)
      throw internal_error("enumeration and big-M solve disagree on feasibility");
    if (tp.feasible) {
      double gap = std::abs(tp.value - et.value);
      std::cout << "value gap: " << gap << "\n";
      if (gap > 1e-6)
        throw internal_error("enumeration and big-M values differ beyond 1e-6");
    }
    result = et;
  } else {
    throw input_error("mode must be etp, tp-oracle, or both");
  }
  if (!result.feasible) {
    std::cout << "coordination infeasible: no sub-region assignment satisfies "
                 "the transmission balance, line limits, and unit bounds\n";
    return 1;
  }
  save_json_file(out, dispatch_to_json(result));
  std::cout << "value: " << result.value << "\n"
            << "dispatch written to " << out << "\n";
  return 0;
}

int cmd_oracle(const std::string& network_path, const std::string& atlas_path,
               double p_min, double p_max, double q_min, double q_max,
               int resolution, long budget, const std::string& out) {
  Network net = load_network(network_path);
  FeasibleGrid g =
      brute_force_region(net, p_min, p_max, q_min, q_max, resolution, 5, budget);
  std::ofstream os(out);
  if (!os) throw input_error("cannot write " + out);
  os << g.to_csv();
  std::cout << "verified cells: " << g.verified_count() << "\n"
            << "grid written to " << out << "\n";
  if (!atlas_path.empty()) {
    RegionAtlas atlas = load_atlas(atlas_path);
    std::vector<PccPolygon> polys;
    for (const auto& sr : atlas.subregions) polys.push_back(sr.polygon);
    std::vector<Vec2> verified;
    for (int qi = 0; qi < g.resolution; ++qi)
      for (int pi = 0; pi < g.resolution; ++pi)
        if (g.status[qi * g.resolution + pi])
          verified.push_back(Vec2(g.witnesses[qi * g.resolution + pi].pcc[0],
                                  g.witnesses[qi * g.resolution + pi].pcc[1]));
    std::cout << "coverage: " << union_coverage(polys, verified) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"inner-approximation of VPP power-transfer regions"};
  app.require_subcommand(1);
  if (const char* th = std::getenv("VPPREGION_THREADS"))
    (void)th;  // modules are sequential; accepted for interface stability

  std::string network, atlas, transmission, out, mode = "both";
  std::vector<std::string> atlases, networks;
  ExploreConfig cfg;
  int samples = 200, resolution = 51;
  unsigned seed = 7;
  long budget = 4000000L;
  double p_min = -0.5, p_max = 0.5, q_min = -0.5, q_max = 0.5;

  auto* ch = app.add_subcommand("characterize", "build a sub-region atlas");
  ch->add_option("--network", network)->required();
  ch->add_option("--out", out)->default_val("atlas.json");
  ch->add_option("--max-subregions", cfg.max_subregions);
  ch->add_option("--max-points", cfg.max_points);
  ch->add_option("--iterations", cfg.max_iterations);

  auto* ve = app.add_subcommand("verify", "sample-check an atlas");
  ve->add_option("--network", network)->required();
  ve->add_option("--atlas", atlas)->required();
  ve->add_option("--samples", samples);
  ve->add_option("--seed", seed);

  auto* co = app.add_subcommand("coordinate", "transmission-level dispatch");
  co->add_option("--transmission", transmission)->required();
  co->add_option("--atlas", atlases)->required();
  co->add_option("--network", networks);
  co->add_option("--mode", mode)
      ->check(CLI::IsMember({"etp", "tp-oracle", "both"}));
  co->add_option("--out", out)->default_val("dispatch.json");

  auto* orc = app.add_subcommand("oracle", "brute-force feasibility grid");
  orc->add_option("--network", network)->required();
  orc->add_option("--atlas", atlas);
  orc->add_option("--resolution", resolution);
  orc->add_option("--budget", budget);
  orc->add_option("--pmin", p_min);
  orc->add_option("--pmax", p_max);
  orc->add_option("--qmin", q_min);
  orc->add_option("--qmax", q_max);
  orc->add_option("--out", out)->default_val("grid.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(ch)) return cmd_characterize(network, out, cfg);
    if (app.got_subcommand(ve)) return cmd_verify(network, atlas, samples, seed);
    if (app.got_subcommand(co))
      return cmd_coordinate(transmission, atlases, networks, mode, out);
    if (app.got_subcommand(orc))
      return cmd_oracle(network, atlas, p_min, p_max, q_min, q_max, resolution,
                        budget, out);
  } catch (const input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
