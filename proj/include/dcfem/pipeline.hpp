#pragma once

#include "dcfem/assembly.hpp"
#include "dcfem/dc_solver.hpp"
#include "dcfem/io.hpp"
#include "dcfem/postprocess.hpp"
#include "dcfem/scenario.hpp"
#include "dcfem/spectral.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

namespace dcfem {

struct RunOptions {
  std::vector<std::string> methods_override;
  std::optional<Real> freq_override_hz;
  std::optional<int> layers_override;
  std::string out_dir_override;  // --out flag or DCFEM_OUT
  bool check = false;
  bool dump_mesh = false;
  int jobs = 1;
};

struct CheckResult {
  std::string name;
  double value = 0;
  double bound = 0;
  bool pass = false;
};

struct RunResult {
  ScenarioConfig config;  // effective config after overrides
  std::filesystem::path run_dir;
  std::vector<SolveReport<Real>> reports;
  ValidationReport validation;
  std::vector<CheckResult> checks;

  bool checks_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  }
};

namespace detail {

inline ScenarioConfig apply_overrides(ScenarioConfig cfg, const RunOptions& opt) {
  if (!opt.methods_override.empty()) {
    cfg.methods.clear();
    for (const auto& m : opt.methods_override) {
      if (m == "all") {
        for (const auto& known : known_methods()) cfg.methods.push_back(known);
      } else if (known_methods().count(m)) {
        cfg.methods.push_back(m);
      } else {
        throw ScenarioError("unknown method \"" + m + "\"");
      }
    }
    std::sort(cfg.methods.begin(), cfg.methods.end());
    cfg.methods.erase(std::unique(cfg.methods.begin(), cfg.methods.end()), cfg.methods.end());
  }
  if (opt.freq_override_hz) {
    if (!(*opt.freq_override_hz >= 0)) throw ScenarioError("--freq must be >= 0");
    cfg.source.frequency_hz = *opt.freq_override_hz;
  }
  if (opt.layers_override) {
    cfg.partition.z_ranges.clear();
    cfg.partition.layers = *opt.layers_override;
  }
  if (!opt.out_dir_override.empty()) cfg.output_dir = opt.out_dir_override;
  if (cfg.lossy()) {
    auto it = std::find(cfg.methods.begin(), cfg.methods.end(), "modal");
    if (it != cfg.methods.end()) cfg.methods.erase(it);  // lossless references only
  }
  return cfg;
}

inline LayerPartition make_partition(const Mesh& mesh, const PartitionConfig& p) {
  if (!p.z_ranges.empty()) return partition_layers(mesh, p.z_ranges);
  return partition_layers(mesh, p.layers);
}

inline std::filesystem::path make_run_dir(const std::filesystem::path& base,
                                          const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(base, ec);
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm_utc);
  for (int suffix = 0;; ++suffix) {
    std::string dir = name + "-" + stamp;
    if (suffix > 0) dir += "-" + std::to_string(suffix);
    const auto path = base / dir;
    if (!std::filesystem::exists(path)) {
      std::filesystem::create_directories(path);
      return path;
    }
  }
}

/// Per-layer standalone eigensolves; independent, so they may run on up to
/// `jobs` worker threads. Results land in indexed slots, keeping the outcome
/// identical for any worker count.
inline std::vector<NullspaceBasis<Real>> layer_bases(const Mesh& mesh, const LayerPartition& part,
                                                     const std::vector<MaterialRegion>& regions,
                                                     int jobs) {
  const int m = part.num_layers();
  std::vector<NullspaceBasis<Real>> bases(static_cast<size_t>(m));
  std::vector<std::string> failures(static_cast<size_t>(m));
  auto work = [&](int l) {
    try {
      bases[l] = nullspace_of_standalone(assemble_standalone_layer<Real>(mesh, part, l, regions), l);
      restrict_rows(bases[l], part, l);
    } catch (const std::exception& e) {
      failures[l] = e.what();
    }
  };
  jobs = std::max(1, jobs);
  if (jobs == 1 || m == 1) {
    for (int l = 0; l < m; ++l) work(l);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < std::min(jobs, m); ++t)
      pool.emplace_back([&] {
        for (int l = next.fetch_add(1); l < m; l = next.fetch_add(1)) work(l);
      });
    for (auto& th : pool) th.join();
  }
  for (int l = 0; l < m; ++l)
    if (!failures[l].empty())
      throw std::runtime_error("layer " + std::to_string(l) + ": " + failures[l]);
  return bases;
}

}  // namespace detail

/// Mesh/partition summary without any solve.
inline std::string describe_scenario(const ScenarioConfig& raw, const RunOptions& opt = {}) {
  const ScenarioConfig cfg = detail::apply_overrides(raw, opt);
  const Mesh mesh = build_mesh(cfg.grid, cfg.bc, cfg.materials);
  const LayerPartition part = detail::make_partition(mesh, cfg.partition);
  const FrequencyWindow window = frequency_window(mesh, cfg.materials);

  std::ostringstream out;
  out << "scenario: " << cfg.name << "\n";
  out << "unknowns: " << mesh.num_unknowns() << "; layers: ";
  for (int l = 0; l < part.num_layers(); ++l)
    out << (l ? "," : "") << part.layers[l].owned.size();
  out << "; conductors: " << mesh.conductor_count << "\n";
  out << "layers: " << part.num_layers() << "\n";
  out << "standalone sizes: ";
  for (int l = 0; l < part.num_layers(); ++l)
    out << (l ? "," : "") << part.layers[l].standalone.size();
  out << "\n";
  char buf[128];
  std::snprintf(buf, sizeof(buf), "frequency window: [%.4e, %.4e] Hz\n",
                static_cast<double>(window.f_low), static_cast<double>(window.f_high));
  out << buf;
  std::snprintf(buf, sizeof(buf), "source: f=%.4e Hz, I=%.4e A, %zu edges\n",
                static_cast<double>(cfg.source.frequency_hz),
                static_cast<double>(cfg.source.amplitude_a), cfg.source.edges.size());
  out << buf;
  return out.str();
}

/// Runs the requested solution methods, writes the report files, and (with
/// `check`) evaluates the scenario's internal consistency bounds.
inline RunResult run_scenario(const ScenarioConfig& raw, const RunOptions& opt = {}) {
  RunResult result;
  result.config = detail::apply_overrides(raw, opt);
  const ScenarioConfig& cfg = result.config;
  const auto has_method = [&](const std::string& m) {
    return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
  };

  detail::Stopwatch total_sw;
  std::vector<std::pair<std::string, double>> timings;
  detail::Stopwatch sw;

  const Mesh mesh = build_mesh(cfg.grid, cfg.bc, cfg.materials);
  const LayerPartition part = detail::make_partition(mesh, cfg.partition);
  timings.emplace_back("mesh", sw.lap());

  const auto sys = assemble<Real>(mesh, cfg.materials);
  const Real omega = 2 * pi * cfg.source.frequency_hz;
  const MatC a = system_matrix(sys, omega);
  SourceSpec src;
  src.current = cfg.source.amplitude_a;
  src.omega = omega;
  for (const auto& e : cfg.source.edges) src.path.emplace_back(resolve_edge(mesh, e), e.sign);
  const Excitation excitation = assemble_rhs(mesh, src);
  timings.emplace_back("assemble", sw.lap());

  const bool needs_dc = has_method("dc-projected") || has_method("dc-layered") || has_method("schur2");
  const bool needs_solve = needs_dc || has_method("direct") || has_method("modal");

  // Per-layer nullspace bases.
  std::vector<NullspaceBasis<Real>> bases;
  GlobalNullspace<Real> v0;
  if (needs_dc || has_method("eigtable")) {
    bases = detail::layer_bases(mesh, part, cfg.materials, opt.jobs);
    v0 = build_global_V0(bases, part);
    timings.emplace_back("layer_nullspaces", sw.lap());
  }

  std::optional<SolveReport<Real>> direct, modal, projected, layered;
  std::optional<VecC> schur_x2;
  std::vector<int> schur_rows1, schur_rows2;
  int schur_split = 0;

  if (needs_solve) {
    direct = solve_direct(a, excitation.b);
    timings.emplace_back("direct", sw.lap());
  }
  if (has_method("modal")) {
    const auto dec = generalized_eig(sys.S, sys.T);
    SolveReport<Real> rep;
    rep.method = "modal";
    rep.x = modal_solution(dec, excitation.b, omega);
    rep.rel_errors["direct"] = relative_error(rep.x, direct->x);
    modal = std::move(rep);
    timings.emplace_back("modal", sw.lap());
  }
  if (has_method("dc-projected")) {
    projected = solve_dc_projected(a, v0, excitation.b);
    projected->rel_errors["direct"] = relative_error(projected->x, direct->x);
    if (modal) projected->rel_errors["modal"] = relative_error(projected->x, modal->x);
    timings.emplace_back("dc_projected", sw.lap());
  }
  if (has_method("dc-layered")) {
    layered = solve_dc_layered(a, v0, excitation.b);
    layered->rel_errors["direct"] = relative_error(layered->x, direct->x);
    if (modal) layered->rel_errors["modal"] = relative_error(layered->x, modal->x);
    if (projected) layered->rel_errors["dc-projected"] = relative_error(layered->x, projected->x);
    timings.emplace_back("dc_layered", sw.lap());
  }
  if (has_method("schur2") && part.num_layers() >= 2) {
    schur_split = part.num_layers() / 2;
    const MatR v02 = v0.dense_for_layers(schur_split, part.num_layers(), schur_rows2);
    v0.dense_for_layers(0, schur_split, schur_rows1);
    schur_x2 = solve_dc_schur2(a, excitation.b, schur_rows1, schur_rows2, v02);
    timings.emplace_back("schur2", sw.lap());
  }

  // Validation rows.
  if (needs_dc || has_method("eigtable")) {
    for (int l = 0; l < part.num_layers(); ++l) {
      const Mesh slab = extract_slab_mesh(mesh, part.layers[l].z_begin, part.layers[l].z_end);
      int free_nodes = 0;
      for (int n = 0; n < slab.num_nodes(); ++n)
        if (slab.node_component[n] < 0) ++free_nodes;
      const int oracle = free_nodes + slab.conductor_count - 1;
      ValidationRow row;
      row.name = "layer" + std::to_string(l) + "_nullspace_dim";
      row.measured = bases[static_cast<size_t>(l)].k;
      row.expected = oracle;
      row.deviation = std::abs(row.measured - row.expected);
      row.provenance = "gap detection vs node-count oracle";
      row.pass = bases[static_cast<size_t>(l)].k == oracle;
      result.validation.rows.push_back(row);
    }
  }
  std::vector<std::pair<std::string, Complex>> probe_voltages;
  if (direct && !cfg.probes.empty()) {
    for (const auto& p : cfg.probes) {
      ProbePath path;
      path.name = p.name;
      for (const auto& e : p.edges) path.edges.emplace_back(resolve_edge(mesh, e), e.sign);
      probe_voltages.emplace_back(p.name, extract_voltage(mesh, direct->x, path));
    }
    if (cfg.validation.analytic_capacitance_f && omega > 0) {
      const auto cap = capacitance(cfg.source.amplitude_a, probe_voltages.front().second, omega);
      ValidationRow row;
      row.name = "capacitance_f";
      row.measured = static_cast<double>(cap.real_part);
      row.expected = static_cast<double>(*cfg.validation.analytic_capacitance_f);
      row.deviation = std::abs(row.measured - row.expected) / std::abs(row.expected);
      row.provenance = "field solve vs analytic eps*A/d";
      row.pass = row.deviation <= 0.01;
      result.validation.rows.push_back(row);
    }
  }

  // Report files.
  const char* env_out = std::getenv("DCFEM_OUT");
  const std::filesystem::path base = !opt.out_dir_override.empty() ? opt.out_dir_override
                                     : env_out                     ? std::string(env_out)
                                                                   : cfg.output_dir;
  result.run_dir = detail::make_run_dir(base, cfg.name);
  std::vector<std::string> outputs;
  auto emit = [&](const std::string& name, auto&& writer) {
    writer(result.run_dir / name);
    outputs.push_back(name);
  };

  emit("mesh.csv", [&](const auto& p) { write_mesh_summary_csv(p, mesh, part); });
  if (opt.dump_mesh) emit("mesh_listing.txt", [&](const auto& p) { write_mesh_listing(p, mesh); });
  emit("excitation.csv", [&](const auto& p) { write_excitation_csv(p, excitation.b); });
  emit("S.mtx", [&](const auto& p) { write_matrix_market(p, sys.S, true); });
  emit("T.mtx", [&](const auto& p) { write_matrix_market(p, sys.T, true); });
  if (sys.lossy) emit("R.mtx", [&](const auto& p) { write_matrix_market(p, sys.R, true); });

  if (has_method("eigtable")) {
    // First layer's standalone spectrum; the k smallest magnitudes form the
    // DC column, both columns keep the ascending signed order.
    const auto& b0 = bases.front();
    std::vector<double> all(static_cast<size_t>(b0.eigenvalues.size()));
    for (Index i = 0; i < b0.eigenvalues.size(); ++i)
      all[static_cast<size_t>(i)] = static_cast<double>(b0.eigenvalues(i));
    std::vector<int> idx(all.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int x, int y) { return std::abs(all[x]) < std::abs(all[y]); });
    std::vector<char> is_dc(all.size(), 0);
    for (int i = 0; i < b0.k; ++i) is_dc[static_cast<size_t>(idx[i])] = 1;
    std::vector<double> dc_col, high_col;
    for (size_t i = 0; i < all.size(); ++i) (is_dc[i] ? dc_col : high_col).push_back(all[i]);
    emit("eigentable.csv", [&](const auto& p) { write_eigentable_csv(p, dc_col, high_col); });
  }

  std::vector<ErrorRow> error_rows;
  auto push_report = [&](const SolveReport<Real>& rep) {
    result.reports.push_back(rep);
    ErrorRow row;
    row.method = rep.method;
    if (auto it = rep.rel_errors.find("direct"); it != rep.rel_errors.end())
      row.vs_direct = static_cast<double>(it->second);
    if (auto it = rep.rel_errors.find("modal"); it != rep.rel_errors.end())
      row.vs_modal = static_cast<double>(it->second);
    error_rows.push_back(row);
    emit("solution_" + rep.method + ".csv", [&](const auto& p) { write_solution_csv(p, rep.x); });
  };
  if (direct && has_method("direct")) push_report(*direct);
  if (modal) push_report(*modal);
  if (projected) push_report(*projected);
  if (layered) push_report(*layered);
  if (schur_x2) {
    SolveReport<Real> rep;
    rep.method = "schur2";
    rep.x = *schur_x2;
    rep.rel_errors["direct"] =
        relative_error(*schur_x2, gather_rows(direct->x, schur_rows2).eval());
    push_report(rep);
  }
  emit("errors.csv", [&](const auto& p) { write_errors_csv(p, error_rows); });
  emit("validation.csv", [&](const auto& p) { write_validation_csv(p, result.validation); });
  if (!probe_voltages.empty())
    emit("probes.csv", [&](const auto& p) {
      auto out = open_output(p);
      out << "probe,real,imag,magnitude\n";
      for (const auto& [name, v] : probe_voltages)
        out << name << "," << format17(static_cast<double>(v.real())) << ","
            << format17(static_cast<double>(v.imag())) << ","
            << format17(static_cast<double>(std::abs(v))) << "\n";
    });

  // Manifest: configuration hash and the produced files, no wall-clock data.
  {
    nlohmann::json manifest;
    const std::string canonical = scenario_to_canonical_json(cfg);
    char hex[24];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical)));
    manifest["scenario"] = cfg.name;
    manifest["config_hash_fnv1a64"] = hex;
    manifest["unknowns"] = mesh.num_unknowns();
    manifest["conductors"] = mesh.conductor_count;
    nlohmann::json sizes = nlohmann::json::array();
    for (int l = 0; l < part.num_layers(); ++l) sizes.push_back(part.layers[l].owned.size());
    manifest["layer_owned_sizes"] = sizes;
    manifest["methods"] = cfg.methods;
    std::sort(outputs.begin(), outputs.end());
    manifest["outputs"] = outputs;
    auto out = open_output(result.run_dir / "manifest.json");
    out << manifest.dump(2) << "\n";
  }
  timings.emplace_back("reports", sw.lap());
  timings.emplace_back("total", total_sw.lap());
  write_timings_txt(result.run_dir / "timings.txt", timings);

  // Internal consistency checks.
  if (opt.check) {
    auto add_check = [&](const std::string& name, double value, double bound) {
      result.checks.push_back({name, value, bound, value <= bound});
    };
    if (direct) add_check("direct_residual", static_cast<double>(direct->residual), 1e-10);
    if (modal) add_check("modal_vs_direct", static_cast<double>(modal->rel_errors.at("direct")), 1e-10);
    if (projected)
      add_check("dc_projected_vs_direct", static_cast<double>(projected->rel_errors.at("direct")),
                1e-3);
    if (projected && modal)
      add_check("dc_projected_vs_modal", static_cast<double>(projected->rel_errors.at("modal")),
                1e-3);
    if (layered && projected)
      add_check("dc_layered_vs_dc_projected",
                static_cast<double>(layered->rel_errors.at("dc-projected")), 1e-10);
    if (layered)
      add_check("dc_layered_vs_direct", static_cast<double>(layered->rel_errors.at("direct")), 1e-3);
    if (schur_x2)
      add_check("schur2_vs_direct_region2",
                static_cast<double>(
                    relative_error(*schur_x2, gather_rows(direct->x, schur_rows2).eval())),
                1e-3);
    for (const auto& row : result.validation.rows)
      result.checks.push_back({row.name, row.measured, row.expected, row.pass});
  }
  return result;
}

}  // namespace dcfem
