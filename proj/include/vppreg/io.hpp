#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "vppreg/coordination.hpp"
#include "vppreg/network.hpp"

namespace vppreg {

using json = nlohmann::json;

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw input_error("parse error in " + path + ": " + e.what());
  }
  return j;
}

inline void save_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

inline Network network_from_json(const json& j) {
  // V and I are squared magnitudes; refuse files that do not declare it.
  if (j.value("voltage_convention", "") != std::string("squared_pu"))
    throw input_error("network file must declare voltage_convention = squared_pu");
  Network net;
  net.base_mva = j.value("base_mva", 1.0);
  net.pcc_id = j.at("pcc").get<int>();
  for (const auto& n : j.at("nodes")) {
    NodeRec r;
    r.id = n.at("id").get<int>();
    r.v_min = n.value("vmin", 0.81);
    r.v_max = n.value("vmax", 1.21);
    r.p_min = n.value("pmin", 0.0);
    r.p_max = n.value("pmax", 0.0);
    r.q_min = n.value("qmin", 0.0);
    r.q_max = n.value("qmax", 0.0);
    net.nodes.push_back(r);
  }
  for (const auto& b : j.at("branches")) {
    BranchRec r;
    r.from = b.at("from").get<int>();
    r.to = b.at("to").get<int>();
    r.r = b.at("r").get<double>();
    r.x = b.at("x").get<double>();
    r.i_min = b.value("imin", 0.0);
    r.i_max = b.value("imax", 1.0);
    net.branches.push_back(r);
  }
  if (j.contains("generators")) {
    for (const auto& g : j.at("generators")) {
      GenRec r;
      r.node = g.at("node").get<int>();
      r.p_min = g.value("pmin", 0.0);
      r.p_max = g.value("pmax", 0.0);
      r.q_min = g.value("qmin", 0.0);
      r.q_max = g.value("qmax", 0.0);
      r.cost_p = g.value("cost_p", 0.0);
      r.cost_p2 = g.value("cost_p2", 0.0);
      net.gens.push_back(r);
    }
  }
  net.build();
  return net;
}

inline Network load_network(const std::string& path) {
  return network_from_json(load_json_file(path));
}

inline json network_to_json(const Network& net) {
  json j;
  j["voltage_convention"] = "squared_pu";
  j["base_mva"] = net.base_mva;
  j["pcc"] = net.pcc_id;
  j["nodes"] = json::array();
  for (const auto& n : net.nodes)
    j["nodes"].push_back({{"id", n.id}, {"vmin", n.v_min}, {"vmax", n.v_max},
                          {"pmin", n.p_min}, {"pmax", n.p_max},
                          {"qmin", n.q_min}, {"qmax", n.q_max}});
  j["branches"] = json::array();
  for (const auto& b : net.branches)
    j["branches"].push_back({{"from", b.from}, {"to", b.to}, {"r", b.r},
                             {"x", b.x}, {"imin", b.i_min}, {"imax", b.i_max}});
  j["generators"] = json::array();
  for (const auto& g : net.gens)
    j["generators"].push_back({{"node", g.node}, {"pmin", g.p_min}, {"pmax", g.p_max},
                               {"qmin", g.q_min}, {"qmax", g.q_max},
                               {"cost_p", g.cost_p}, {"cost_p2", g.cost_p2}});
  return j;
}

inline void save_network(const std::string& path, const Network& net) {
  save_json_file(path, network_to_json(net));
}

namespace detail {

inline json vec_to_json(const Vec& v) {
  json a = json::array();
  for (int k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

inline Vec vec_from_json(const json& a) {
  Vec v(a.size());
  for (size_t k = 0; k < a.size(); ++k) v[static_cast<int>(k)] = a[k].get<double>();
  return v;
}

inline json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) rows.push_back(vec_to_json(m.row(r)));
  return rows;
}

inline Mat mat_from_json(const json& rows) {
  if (rows.empty()) return Mat(0, 0);
  Mat m(rows.size(), rows[0].size());
  for (size_t r = 0; r < rows.size(); ++r)
    m.row(static_cast<int>(r)) = vec_from_json(rows[r]).transpose();
  return m;
}

}  // namespace detail

// ---- region atlas ----------------------------------------------------------

inline json subregion_to_json(const SubRegion& sr) {
  json j;
  j["iteration"] = sr.iteration;
  j["anchor"] = {{"branch_P", detail::vec_to_json(sr.anchor.branch_P)},
                 {"branch_Q", detail::vec_to_json(sr.anchor.branch_Q)},
                 {"node_V", detail::vec_to_json(sr.anchor.node_V)},
                 {"branch_I", detail::vec_to_json(sr.anchor.branch_I)},
                 {"controls", detail::vec_to_json(sr.anchor.controls)},
                 {"pcc", detail::vec_to_json(sr.anchor.pcc)},
                 {"sigma", detail::vec_to_json(sr.anchor.sigma)}};
  j["omega"] = {{"A", detail::mat_to_json(sr.omega.A)},
                {"b", detail::vec_to_json(sr.omega.b)}};
  json poly;
  poly["vertices"] = json::array();
  for (const auto& v : sr.polygon.vertices)
    poly["vertices"].push_back({v.x(), v.y()});
  poly["Ah"] = detail::mat_to_json(sr.polygon.Ah);
  poly["bh"] = detail::vec_to_json(sr.polygon.bh);
  poly["anchor"] = {sr.polygon.anchor.x(), sr.polygon.anchor.y()};
  poly["liftings"] = json::array();
  for (const auto& l : sr.polygon.liftings)
    poly["liftings"].push_back(detail::vec_to_json(l));
  j["polygon"] = poly;
  j["box"] = {{"P_lo", detail::vec_to_json(sr.box.P_lo)},
              {"P_hi", detail::vec_to_json(sr.box.P_hi)},
              {"Q_lo", detail::vec_to_json(sr.box.Q_lo)},
              {"Q_hi", detail::vec_to_json(sr.box.Q_hi)},
              {"V_lo", detail::vec_to_json(sr.box.V_lo)},
              {"V_hi", detail::vec_to_json(sr.box.V_hi)},
              {"I_lo", detail::vec_to_json(sr.box.I_lo)},
              {"I_hi", detail::vec_to_json(sr.box.I_hi)},
              {"sig_lo", detail::vec_to_json(sr.box.sig_lo)},
              {"sig_hi", detail::vec_to_json(sr.box.sig_hi)}};
  j["bounds"] = {{"Rmin", detail::vec_to_json(sr.bounds.Rmin)},
                 {"Rmax", detail::vec_to_json(sr.bounds.Rmax)}};
  return j;
}

inline SubRegion subregion_from_json(const json& j) {
  SubRegion sr;
  sr.iteration = j.value("iteration", 0);
  const json& a = j.at("anchor");
  sr.anchor.branch_P = detail::vec_from_json(a.at("branch_P"));
  sr.anchor.branch_Q = detail::vec_from_json(a.at("branch_Q"));
  sr.anchor.node_V = detail::vec_from_json(a.at("node_V"));
  sr.anchor.branch_I = detail::vec_from_json(a.at("branch_I"));
  sr.anchor.controls = detail::vec_from_json(a.at("controls"));
  sr.anchor.pcc = detail::vec_from_json(a.at("pcc"));
  sr.anchor.sigma = detail::vec_from_json(a.at("sigma"));
  sr.omega.A = detail::mat_from_json(j.at("omega").at("A"));
  sr.omega.b = detail::vec_from_json(j.at("omega").at("b"));
  const json& p = j.at("polygon");
  for (const auto& v : p.at("vertices"))
    sr.polygon.vertices.push_back(Vec2(v[0].get<double>(), v[1].get<double>()));
  sr.polygon.Ah = detail::mat_from_json(p.at("Ah"));
  sr.polygon.bh = detail::vec_from_json(p.at("bh"));
  sr.polygon.anchor =
      Vec2(p.at("anchor")[0].get<double>(), p.at("anchor")[1].get<double>());
  for (const auto& l : p.at("liftings"))
    sr.polygon.liftings.push_back(detail::vec_from_json(l));
  const json& b = j.at("box");
  sr.box.P_lo = detail::vec_from_json(b.at("P_lo"));
  sr.box.P_hi = detail::vec_from_json(b.at("P_hi"));
  sr.box.Q_lo = detail::vec_from_json(b.at("Q_lo"));
  sr.box.Q_hi = detail::vec_from_json(b.at("Q_hi"));
  sr.box.V_lo = detail::vec_from_json(b.at("V_lo"));
  sr.box.V_hi = detail::vec_from_json(b.at("V_hi"));
  sr.box.I_lo = detail::vec_from_json(b.at("I_lo"));
  sr.box.I_hi = detail::vec_from_json(b.at("I_hi"));
  sr.box.sig_lo = detail::vec_from_json(b.at("sig_lo"));
  sr.box.sig_hi = detail::vec_from_json(b.at("sig_hi"));
  sr.bounds.Rmin = detail::vec_from_json(j.at("bounds").at("Rmin"));
  sr.bounds.Rmax = detail::vec_from_json(j.at("bounds").at("Rmax"));
  return sr;
}

inline json atlas_to_json(const RegionAtlas& atlas) {
  json j;
  j["type"] = "vpp_region_atlas";
  j["iterations"] = atlas.iterations;
  j["termination"] = to_string(atlas.termination);
  j["visited_points"] = json::array();
  for (const auto& p : atlas.visited_points)
    j["visited_points"].push_back({p.x(), p.y()});
  j["subregions"] = json::array();
  for (const auto& sr : atlas.subregions)
    j["subregions"].push_back(subregion_to_json(sr));
  return j;
}

inline RegionAtlas atlas_from_json(const json& j) {
  if (j.value("type", "") != std::string("vpp_region_atlas"))
    throw input_error("not a region atlas file");
  RegionAtlas atlas;
  atlas.iterations = j.value("iterations", 0);
  std::string term = j.value("termination", "no-new-vertices");
  if (term == "max-subregions")
    atlas.termination = ExploreStop::MaxSubregions;
  else if (term == "max-points")
    atlas.termination = ExploreStop::MaxPoints;
  else if (term == "no-new-vertices")
    atlas.termination = ExploreStop::NoNewVertices;
  else
    throw input_error("unknown termination reason " + term);
  for (const auto& p : j.at("visited_points"))
    atlas.visited_points.push_back(Vec2(p[0].get<double>(), p[1].get<double>()));
  for (const auto& s : j.at("subregions"))
    atlas.subregions.push_back(subregion_from_json(s));
  return atlas;
}

inline void save_atlas(const std::string& path, const RegionAtlas& atlas) {
  save_json_file(path, atlas_to_json(atlas));
}

inline RegionAtlas load_atlas(const std::string& path) {
  return atlas_from_json(load_json_file(path));
}

// CSV of the atlas polygons for plotting: one vertex per line.
inline std::string atlas_vertices_csv(const RegionAtlas& atlas) {
  std::ostringstream os;
  os << "subregion,vertex,p,q\n";
  for (size_t s = 0; s < atlas.subregions.size(); ++s) {
    const auto& vs = atlas.subregions[s].polygon.vertices;
    for (size_t k = 0; k < vs.size(); ++k)
      os << s << "," << k << "," << vs[k].x() << "," << vs[k].y() << "\n";
  }
  return os.str();
}

// ---- transmission and dispatch --------------------------------------------

inline DcTransmission transmission_from_json(const json& j) {
  DcTransmission tx;
  tx.n_buses = j.at("n_buses").get<int>();
  tx.reference = j.value("reference", 0);
  tx.demand = detail::vec_from_json(j.at("demand"));
  for (const auto& l : j.value("lines", json::array())) {
    DcLine r;
    r.from = l.at("from").get<int>();
    r.to = l.at("to").get<int>();
    r.b = l.at("b").get<double>();
    r.limit = l.value("limit", kInf);
    tx.lines.push_back(r);
  }
  for (const auto& u : j.value("units", json::array())) {
    DcUnit r;
    r.bus = u.at("bus").get<int>();
    r.p_min = u.value("pmin", 0.0);
    r.p_max = u.value("pmax", 0.0);
    for (const auto& c : u.value("cost", json::array()))
      r.cost.push_back({c.at("slope").get<double>(),
                        c.value("intercept", 0.0)});
    tx.units.push_back(r);
  }
  for (const auto& b : j.value("vpp_buses", json::array()))
    tx.vpp_bus.push_back(b.get<int>());
  tx.check();
  return tx;
}

inline json transmission_to_json(const DcTransmission& tx) {
  json j;
  j["n_buses"] = tx.n_buses;
  j["reference"] = tx.reference;
  j["demand"] = detail::vec_to_json(tx.demand);
  j["lines"] = json::array();
  for (const auto& l : tx.lines)
    j["lines"].push_back(
        {{"from", l.from}, {"to", l.to}, {"b", l.b}, {"limit", l.limit}});
  j["units"] = json::array();
  for (const auto& u : tx.units) {
    json cost = json::array();
    for (const auto& c : u.cost)
      cost.push_back({{"slope", c.slope}, {"intercept", c.intercept}});
    j["units"].push_back({{"bus", u.bus}, {"pmin", u.p_min},
                          {"pmax", u.p_max}, {"cost", cost}});
  }
  j["vpp_buses"] = tx.vpp_bus;
  return j;
}

inline DcTransmission load_transmission(const std::string& path) {
  return transmission_from_json(load_json_file(path));
}

inline json dispatch_to_json(const DispatchResult& r) {
  json j;
  j["type"] = "dispatch";
  j["feasible"] = r.feasible;
  if (!r.feasible) return j;
  j["value"] = r.value;
  j["unit_p"] = detail::vec_to_json(r.unit_p);
  j["theta"] = detail::vec_to_json(r.theta);
  j["vpps"] = json::array();
  for (size_t v = 0; v < r.vpp_pcc.size(); ++v)
    j["vpps"].push_back({{"u_pcc", {r.vpp_pcc[v].x(), r.vpp_pcc[v].y()}},
                         {"chosen", r.chosen[v]},
                         {"cost", r.vpp_cost[v]}});
  return j;
}

}  // namespace vppreg
