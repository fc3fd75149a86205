#pragma once

#include "dcfem/mesh.hpp"
#include "dcfem/partition.hpp"
#include "dcfem/postprocess.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace dcfem {

/// Configuration or validation failure of a scenario; maps to exit code 2.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Edge reference by grid coordinates: lattice coordinates of the lower
/// endpoint plus the axis the edge points along.
struct EdgeRef {
  int axis = 0;  // 0=x, 1=y, 2=z
  int i = 0, j = 0, k = 0;
  int sign = 1;
};

struct SourceConfig {
  std::vector<EdgeRef> edges;
  Real amplitude_a = 1;
  Real frequency_hz = 0;
};

struct ProbeConfig {
  std::string name;
  std::vector<EdgeRef> edges;
};

struct PartitionConfig {
  int layers = -1;  // -1: one layer per z slab
  std::vector<std::pair<int, int>> z_ranges;  // used when non-empty
};

struct ValidationConfig {
  std::optional<Real> analytic_capacitance_f;
};

inline const std::set<std::string>& known_methods() {
  static const std::set<std::string> methods{"direct",     "modal",  "dc-projected",
                                             "dc-layered", "schur2", "eigtable"};
  return methods;
}

struct ScenarioConfig {
  std::string name;
  GridSpec grid;
  BoundarySpec bc;
  std::vector<MaterialRegion> materials;
  SourceConfig source;
  PartitionConfig partition;
  std::vector<ProbeConfig> probes;
  std::vector<std::string> methods;  // canonical, "all" already expanded
  std::string output_dir = "out";
  ValidationConfig validation;

  bool lossy() const {
    for (const auto& r : materials)
      if (r.sigma > 0) return true;
    return false;
  }
};

namespace detail {

using nlohmann::json;

inline void expect_keys(const json& obj, const std::set<std::string>& allowed,
                        const std::string& ctx) {
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ScenarioError("unknown key \"" + key + "\" in " + ctx);
}

inline std::vector<Real> spacing_list(const json& v, int count, const std::string& ctx) {
  std::vector<Real> out;
  if (v.is_number()) {
    out.assign(static_cast<size_t>(count), Real(v.get<double>()));
  } else if (v.is_array()) {
    for (const auto& e : v) out.push_back(Real(e.get<double>()));
  } else {
    throw ScenarioError(ctx + " must be a number or an array of numbers");
  }
  return out;
}

inline FaceCondition face_condition(const std::string& s, const std::string& ctx) {
  if (s == "PEC") return FaceCondition::PEC;
  if (s == "PMC") return FaceCondition::PMC;
  if (s == "NATURAL") return FaceCondition::Natural;
  throw ScenarioError(ctx + ": condition must be PEC, PMC or NATURAL, got \"" + s + "\"");
}

inline int axis_index(const std::string& s, const std::string& ctx) {
  if (s == "x") return 0;
  if (s == "y") return 1;
  if (s == "z") return 2;
  throw ScenarioError(ctx + ": axis must be x, y or z");
}

inline EdgeRef parse_edge(const json& e, const std::string& ctx) {
  expect_keys(e, {"axis", "i", "j", "k", "sign"}, ctx);
  EdgeRef ref;
  ref.axis = axis_index(e.at("axis").get<std::string>(), ctx);
  ref.i = e.at("i").get<int>();
  ref.j = e.at("j").get<int>();
  ref.k = e.at("k").get<int>();
  if (e.contains("sign")) ref.sign = e.at("sign").get<int>();
  if (ref.sign != 1 && ref.sign != -1) throw ScenarioError(ctx + ": sign must be +-1");
  return ref;
}

inline json edge_to_json(const EdgeRef& e) {
  return json{{"axis", std::string(1, "xyz"[e.axis])}, {"i", e.i}, {"j", e.j}, {"k", e.k},
              {"sign", e.sign}};
}

}  // namespace detail

/// Parses and validates a scenario from JSON text. Unknown keys anywhere are
/// hard errors; all physical quantities carry SI unit suffixes.
inline ScenarioConfig parse_scenario(const std::string& text) {
  using detail::expect_keys;
  using nlohmann::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    expect_keys(root,
                {"name", "grid", "boundaries", "materials", "source", "partition", "probes",
                 "methods", "output_dir", "validation"},
                "config");
    ScenarioConfig cfg;
    cfg.name = root.value("name", "scenario");

    const json& g = root.at("grid");
    expect_keys(g, {"nx", "ny", "nz", "dx_m", "dy_m", "dz_m", "origin_m"}, "grid");
    cfg.grid.nx = g.at("nx").get<int>();
    cfg.grid.ny = g.at("ny").get<int>();
    cfg.grid.nz = g.at("nz").get<int>();
    cfg.grid.dx = detail::spacing_list(g.at("dx_m"), cfg.grid.nx, "grid.dx_m");
    cfg.grid.dy = detail::spacing_list(g.at("dy_m"), cfg.grid.ny, "grid.dy_m");
    cfg.grid.dz = detail::spacing_list(g.at("dz_m"), cfg.grid.nz, "grid.dz_m");
    if (g.contains("origin_m")) {
      const auto o = g.at("origin_m");
      if (!o.is_array() || o.size() != 3) throw ScenarioError("grid.origin_m must have 3 entries");
      for (int d = 0; d < 3; ++d) cfg.grid.origin[d] = Real(o[d].get<double>());
    }
    cfg.grid.validate();

    if (root.contains("boundaries")) {
      const json& b = root.at("boundaries");
      expect_keys(b, {"xmin", "xmax", "ymin", "ymax", "zmin", "zmax"}, "boundaries");
      const char* names[6] = {"xmin", "xmax", "ymin", "ymax", "zmin", "zmax"};
      for (int f = 0; f < 6; ++f)
        if (b.contains(names[f]))
          cfg.bc.set(static_cast<Face>(f),
                     detail::face_condition(b.at(names[f]).get<std::string>(), "boundaries"));
    }

    if (root.contains("materials")) {
      for (const auto& r : root.at("materials")) {
        expect_keys(r, {"cells", "eps_r", "mu_r", "sigma_s_per_m"}, "materials[]");
        const json& c = r.at("cells");
        expect_keys(c, {"i", "j", "k"}, "materials[].cells");
        MaterialRegion reg;
        auto range = [&](const char* key) -> std::array<int, 2> {
          const auto v = c.at(key);
          if (!v.is_array() || v.size() != 2)
            throw ScenarioError("materials[].cells ranges must be [first, last]");
          return {v[0].get<int>(), v[1].get<int>()};
        };
        reg.i_range = range("i");
        reg.j_range = range("j");
        reg.k_range = range("k");
        reg.eps_r = Real(r.value("eps_r", 1.0));
        reg.mu_r = Real(r.value("mu_r", 1.0));
        reg.sigma = Real(r.value("sigma_s_per_m", 0.0));
        cfg.materials.push_back(reg);
      }
    }
    resolve_cell_materials(cfg.grid, cfg.materials);  // bounds/overlap validation

    const json& s = root.at("source");
    expect_keys(s, {"edges", "amplitude_a", "frequency_hz"}, "source");
    cfg.source.amplitude_a = Real(s.value("amplitude_a", 1.0));
    cfg.source.frequency_hz = Real(s.at("frequency_hz").get<double>());
    if (!(cfg.source.frequency_hz >= 0)) throw ScenarioError("source.frequency_hz must be >= 0");
    for (const auto& e : s.at("edges")) cfg.source.edges.push_back(detail::parse_edge(e, "source.edges[]"));
    if (cfg.source.edges.empty()) throw ScenarioError("source.edges must not be empty");

    if (root.contains("partition")) {
      const json& p = root.at("partition");
      expect_keys(p, {"layers", "z_ranges"}, "partition");
      if (p.contains("layers") && p.contains("z_ranges"))
        throw ScenarioError("partition: give either layers or z_ranges, not both");
      if (p.contains("layers")) cfg.partition.layers = p.at("layers").get<int>();
      if (p.contains("z_ranges"))
        for (const auto& zr : p.at("z_ranges")) {
          if (!zr.is_array() || zr.size() != 2)
            throw ScenarioError("partition.z_ranges entries must be [begin, end)");
          cfg.partition.z_ranges.emplace_back(zr[0].get<int>(), zr[1].get<int>());
        }
    }

    if (root.contains("probes")) {
      for (const auto& p : root.at("probes")) {
        expect_keys(p, {"name", "edges"}, "probes[]");
        ProbeConfig probe;
        probe.name = p.value("name", "probe");
        for (const auto& e : p.at("edges")) probe.edges.push_back(detail::parse_edge(e, "probes[].edges[]"));
        cfg.probes.push_back(std::move(probe));
      }
    }

    if (root.contains("methods")) {
      for (const auto& m : root.at("methods")) {
        const std::string name = m.get<std::string>();
        if (name == "all") {
          for (const auto& known : known_methods()) cfg.methods.push_back(known);
          continue;
        }
        if (!known_methods().count(name)) throw ScenarioError("unknown method \"" + name + "\"");
        cfg.methods.push_back(name);
      }
    }
    if (cfg.methods.empty()) cfg.methods = {"direct"};
    std::sort(cfg.methods.begin(), cfg.methods.end());
    cfg.methods.erase(std::unique(cfg.methods.begin(), cfg.methods.end()), cfg.methods.end());

    if (root.contains("output_dir")) cfg.output_dir = root.at("output_dir").get<std::string>();

    if (root.contains("validation")) {
      const json& v = root.at("validation");
      expect_keys(v, {"analytic_capacitance_f"}, "validation");
      if (v.contains("analytic_capacitance_f"))
        cfg.validation.analytic_capacitance_f = Real(v.at("analytic_capacitance_f").get<double>());
    }

    if (cfg.lossy())
      for (const auto& m : cfg.methods)
        if (m == "modal")
          throw ScenarioError("method \"modal\" requires a lossless scenario (sigma = 0)");

    return cfg;
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("config error: ") + e.what());
  }
}

inline ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

/// Canonical JSON form of a config; the manifest hashes this string.
inline std::string scenario_to_canonical_json(const ScenarioConfig& cfg) {
  using nlohmann::json;
  json root;
  root["name"] = cfg.name;
  root["grid"] = {{"nx", cfg.grid.nx}, {"ny", cfg.grid.ny}, {"nz", cfg.grid.nz}};
  auto dump_spacings = [](const std::vector<Real>& v) {
    json arr = json::array();
    for (Real h : v) arr.push_back(static_cast<double>(h));
    return arr;
  };
  root["grid"]["dx_m"] = dump_spacings(cfg.grid.dx);
  root["grid"]["dy_m"] = dump_spacings(cfg.grid.dy);
  root["grid"]["dz_m"] = dump_spacings(cfg.grid.dz);
  root["grid"]["origin_m"] = {static_cast<double>(cfg.grid.origin[0]),
                              static_cast<double>(cfg.grid.origin[1]),
                              static_cast<double>(cfg.grid.origin[2])};
  const char* names[6] = {"xmin", "xmax", "ymin", "ymax", "zmin", "zmax"};
  const char* conds[] = {"PEC", "PMC", "NATURAL"};
  for (int f = 0; f < 6; ++f)
    root["boundaries"][names[f]] = conds[static_cast<int>(cfg.bc.faces[f])];
  root["materials"] = nlohmann::json::array();
  for (const auto& r : cfg.materials)
    root["materials"].push_back(
        {{"cells", {{"i", {r.i_range[0], r.i_range[1]}}, {"j", {r.j_range[0], r.j_range[1]}},
                    {"k", {r.k_range[0], r.k_range[1]}}}},
         {"eps_r", static_cast<double>(r.eps_r)},
         {"mu_r", static_cast<double>(r.mu_r)},
         {"sigma_s_per_m", static_cast<double>(r.sigma)}});
  root["source"] = {{"amplitude_a", static_cast<double>(cfg.source.amplitude_a)},
                    {"frequency_hz", static_cast<double>(cfg.source.frequency_hz)}};
  root["source"]["edges"] = nlohmann::json::array();
  for (const auto& e : cfg.source.edges) root["source"]["edges"].push_back(detail::edge_to_json(e));
  if (!cfg.partition.z_ranges.empty()) {
    root["partition"]["z_ranges"] = nlohmann::json::array();
    for (const auto& [b, e] : cfg.partition.z_ranges)
      root["partition"]["z_ranges"].push_back({b, e});
  } else {
    root["partition"]["layers"] = cfg.partition.layers;
  }
  root["probes"] = nlohmann::json::array();
  for (const auto& p : cfg.probes) {
    nlohmann::json probe{{"name", p.name}};
    probe["edges"] = nlohmann::json::array();
    for (const auto& e : p.edges) probe["edges"].push_back(detail::edge_to_json(e));
    root["probes"].push_back(probe);
  }
  root["methods"] = cfg.methods;
  root["output_dir"] = cfg.output_dir;
  if (cfg.validation.analytic_capacitance_f)
    root["validation"]["analytic_capacitance_f"] =
        static_cast<double>(*cfg.validation.analytic_capacitance_f);
  return root.dump(2);
}

/// Resolves an EdgeRef to a mesh edge id, checking coordinate bounds.
inline int resolve_edge(const Mesh& m, const EdgeRef& e) {
  const int nx = m.grid.nx, ny = m.grid.ny, nz = m.grid.nz;
  const int imax = e.axis == 0 ? nx - 1 : nx;
  const int jmax = e.axis == 1 ? ny - 1 : ny;
  const int kmax = e.axis == 2 ? nz - 1 : nz;
  if (e.i < 0 || e.i > imax || e.j < 0 || e.j > jmax || e.k < 0 || e.k > kmax)
    throw ScenarioError("edge reference (" + std::string(1, "xyz"[e.axis]) + "," +
                        std::to_string(e.i) + "," + std::to_string(e.j) + "," +
                        std::to_string(e.k) + ") is outside the grid");
  return m.edge_index(e.axis, e.i, e.j, e.k);
}

/// The lossless parallel plate: 1 x 4 x 100 um, 3 x 4 x 5 cells, PEC plates
/// at the two x faces, vacuum fill, 1 A source across the gap at the near
/// end, probes at both ends, 5 z layers, 2 GHz.
inline ScenarioConfig builtin_parallel_plate() {
  ScenarioConfig cfg;
  cfg.name = "parallel_plate";
  cfg.grid = GridSpec::uniform(3, 4, 5, 1e-6L / 3.0L, 1e-6L, 20e-6L);
  cfg.bc.set(Face::XMin, FaceCondition::PEC);
  cfg.bc.set(Face::XMax, FaceCondition::PEC);
  cfg.source.amplitude_a = 1.0L;
  cfg.source.frequency_hz = 2e9L;
  for (int i = 0; i < 3; ++i) cfg.source.edges.push_back({0, i, 2, 0, 1});
  cfg.partition.layers = 5;
  ProbeConfig far{"far_end", {}};
  for (int i = 0; i < 3; ++i) far.edges.push_back({0, i, 2, 5, 1});
  ProbeConfig near{"near_end", {}};
  for (int i = 0; i < 3; ++i) near.edges.push_back({0, i, 2, 0, 1});
  cfg.probes = {far, near};
  cfg.methods = {"dc-layered", "dc-projected", "direct", "eigtable", "modal", "schur2"};
  cfg.validation.analytic_capacitance_f = eps0 * (4e-6L * 100e-6L) / 1e-6L;
  return cfg;
}

/// A lossy two-bus pair: two copper bars (1 x 2 um cross-section, sigma =
/// 5.8e7 S/m) running the full 500 um length of a 4 x 4 um duct, dielectric
/// 4.1 around them, PEC lids at the x faces, PMC side walls, open ends.
/// 12 z layers, 10 GHz source bridging the bars at the near end. The
/// cross-section dimensions are representative, chosen for a desk-scale
/// demonstration.
inline ScenarioConfig builtin_two_bus() {
  ScenarioConfig cfg;
  cfg.name = "two_bus";
  cfg.grid = GridSpec::uniform(4, 4, 12, 1e-6L, 1e-6L, 500e-6L / 12.0L);
  cfg.bc.set(Face::XMin, FaceCondition::PEC);
  cfg.bc.set(Face::XMax, FaceCondition::PEC);
  cfg.bc.set(Face::YMin, FaceCondition::PMC);
  cfg.bc.set(Face::YMax, FaceCondition::PMC);

  auto box = [](int i0, int i1, int j0, int j1, Real eps, Real sigma) {
    MaterialRegion r;
    r.i_range = {i0, i1};
    r.j_range = {j0, j1};
    r.k_range = {0, 11};
    r.eps_r = eps;
    r.sigma = sigma;
    return r;
  };
  const Real sigma_cu = 5.8e7L;
  cfg.materials = {
      box(1, 2, 0, 0, 1.0L, sigma_cu),  // bus A
      box(1, 2, 3, 3, 1.0L, sigma_cu),  // bus B
      box(0, 3, 1, 2, 4.1L, 0.0L),      // dielectric between and around
      box(0, 0, 0, 0, 4.1L, 0.0L),
      box(3, 3, 0, 0, 4.1L, 0.0L),
      box(0, 0, 3, 3, 4.1L, 0.0L),
      box(3, 3, 3, 3, 4.1L, 0.0L),
  };

  cfg.source.amplitude_a = 1.0L;
  cfg.source.frequency_hz = 10e9L;
  for (int j = 1; j <= 2; ++j) cfg.source.edges.push_back({1, 2, j, 0, 1});
  cfg.partition.layers = 12;
  ProbeConfig far{"far_end", {}};
  for (int j = 1; j <= 2; ++j) far.edges.push_back({1, 2, j, 12, 1});
  ProbeConfig near{"near_end", {}};
  for (int j = 1; j <= 2; ++j) near.edges.push_back({1, 2, j, 0, 1});
  cfg.probes = {far, near};
  cfg.methods = {"dc-layered", "dc-projected", "direct", "schur2"};
  return cfg;
}

inline ScenarioConfig builtin_scenario(const std::string& name) {
  if (name == "parallel_plate") return builtin_parallel_plate();
  if (name == "two_bus") return builtin_two_bus();
  throw ScenarioError("unknown builtin scenario \"" + name +
                      "\" (available: parallel_plate, two_bus)");
}

}  // namespace dcfem
