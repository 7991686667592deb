#pragma once

// JSON interchange for polyhedra, PWA functions and decompositions.
// Requires nlohmann/json (vendored as json.hpp).

#include "pwadc/decomposition.hpp"
#include "pwadc/pwa.hpp"

#include "json.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

namespace pwadc::io {

using nlohmann::json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline json to_json(const VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline VectorXd vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw FormatError(std::string(what) + ": expected an array");
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw FormatError(std::string(what) + ": expected numbers");
    v[static_cast<Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline json to_json(const Polyhedron& P) {
  json V = json::array();
  for (Index r = 0; r < P.rows(); ++r) V.push_back(to_json(VectorXd(P.V().row(r).transpose())));
  return {{"V", V}, {"w", to_json(P.w())}};
}

inline Polyhedron polyhedron_from_json(const json& j) {
  if (!j.is_object() || !j.contains("V") || !j.contains("w")) throw FormatError("polyhedron: needs \"V\" and \"w\"");
  const json& V = j.at("V");
  if (!V.is_array() || V.empty()) throw FormatError("polyhedron: \"V\" must be a nonempty array of rows");
  const VectorXd w = vector_from_json(j.at("w"), "polyhedron w");
  const VectorXd r0 = vector_from_json(V[0], "polyhedron row");
  MatrixXd M(static_cast<Index>(V.size()), r0.size());
  for (std::size_t r = 0; r < V.size(); ++r) {
    const VectorXd row = vector_from_json(V[r], "polyhedron row");
    if (row.size() != r0.size()) throw FormatError("polyhedron: ragged rows");
    M.row(static_cast<Index>(r)) = row.transpose();
  }
  try {
    return {std::move(M), w};
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

inline json to_json(const PwaFunction& f) {
  json pieces = json::array();
  for (const auto& p : f.pieces) pieces.push_back({{"a", to_json(p.a)}, {"b", p.b}});
  json regions = json::array();
  for (const auto& R : f.regions) regions.push_back(to_json(R));
  json out = {{"n", f.n}, {"domain", to_json(f.domain)}, {"pieces", pieces}, {"regions", regions}};
  if (!f.arrangement.empty()) {
    json hps = json::array();
    for (const auto& h : f.arrangement) hps.push_back({{"normal", to_json(h.normal)}, {"offset", h.offset}});
    out["arrangement"] = hps;
  }
  return out;
}

inline PwaFunction pwa_from_json(const json& j) {
  for (const char* key : {"n", "domain", "pieces", "regions"})
    if (!j.contains(key)) throw FormatError(std::string("pwa: missing \"") + key + "\"");
  PwaFunction f;
  f.n = j.at("n").get<Index>();
  f.domain = polyhedron_from_json(j.at("domain"));
  for (const auto& p : j.at("pieces")) {
    if (!p.contains("a") || !p.contains("b")) throw FormatError("pwa: piece needs \"a\" and \"b\"");
    f.pieces.push_back({vector_from_json(p.at("a"), "piece a"), p.at("b").get<double>()});
  }
  for (const auto& r : j.at("regions")) f.regions.push_back(polyhedron_from_json(r));
  if (j.contains("arrangement"))
    for (const auto& h : j.at("arrangement"))
      f.arrangement.push_back({vector_from_json(h.at("normal"), "hyperplane normal"), h.at("offset").get<double>()});
  try {
    f.check_shape();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return f;
}

inline json to_json(const Decomposition& d) {
  json out = {{"method", to_string(d.method)},
              {"g", to_json(d.g)},
              {"h", to_json(d.h)},
              {"stats",
               {{"cells_g", d.stats.cells_g},
                {"cells_h", d.stats.cells_h},
                {"lp_calls", d.stats.lp_calls},
                {"wall_time", d.stats.wall_time}}}};
  if (d.method == Method::Optim) out["regularized"] = d.regularized;
  if (!d.objective.empty()) out["objective"] = d.objective;
  if (d.arrangement) out["arrangement"] = {{"hyperplanes", d.arrangement->hyperplanes}, {"cells", d.arrangement->cells}};
  if (!d.convex_domain) out["convex_domain"] = false;
  return out;
}

inline Decomposition decomposition_from_json(const json& j) {
  for (const char* key : {"method", "g", "h"})
    if (!j.contains(key)) throw FormatError(std::string("decomposition: missing \"") + key + "\"");
  Decomposition d;
  try {
    d.method = method_from_string(j.at("method").get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  d.g = pwa_from_json(j.at("g"));
  d.h = pwa_from_json(j.at("h"));
  if (j.contains("stats")) {
    const json& s = j.at("stats");
    d.stats.cells_g = s.value("cells_g", d.g.size());
    d.stats.cells_h = s.value("cells_h", d.h.size());
    d.stats.lp_calls = s.value("lp_calls", 0L);
    d.stats.wall_time = s.value("wall_time", 0.0);
  }
  d.regularized = j.value("regularized", false);
  d.objective = j.value("objective", std::string());
  if (j.contains("arrangement"))
    d.arrangement = ArrangementInfo{j.at("arrangement").at("hyperplanes").get<std::size_t>(),
                                    j.at("arrangement").at("cells").get<std::size_t>()};
  d.convex_domain = j.value("convex_domain", true);
  return d;
}

inline json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

inline void write_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(1) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace pwadc::io
