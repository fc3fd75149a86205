#pragma once

#include "dcfem/dc_solver.hpp"
#include "dcfem/mesh.hpp"
#include "dcfem/partition.hpp"
#include "dcfem/postprocess.hpp"
#include "dcfem/spectral.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dcfem {

/// Fixed 17-significant-digit scientific formatting for every number that
/// lands in a report file; the schemas promise byte-stable output.
inline std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

/// FNV-1a, used for the config hash in the run manifest.
inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Eigenvalue table: "DC" column for the zero block, "High order" for the
/// rest, row-indexed from 1; short columns leave blanks.
inline void write_eigentable_csv(const std::filesystem::path& path, const std::vector<double>& dc,
                                 const std::vector<double>& high) {
  auto out = open_output(path);
  out << "row,DC,High order\n";
  const size_t rows = std::max(dc.size(), high.size());
  for (size_t r = 0; r < rows; ++r) {
    out << (r + 1) << ",";
    if (r < dc.size()) out << format17(dc[r]);
    out << ",";
    if (r < high.size()) out << format17(high[r]);
    out << "\n";
  }
}

struct ErrorRow {
  std::string method;
  std::optional<double> vs_direct;
  std::optional<double> vs_modal;
};

inline void write_errors_csv(const std::filesystem::path& path, const std::vector<ErrorRow>& rows) {
  auto out = open_output(path);
  out << "method,rel_err_vs_direct,rel_err_vs_modal\n";
  for (const auto& r : rows) {
    out << r.method << ",";
    if (r.vs_direct) out << format17(*r.vs_direct);
    out << ",";
    if (r.vs_modal) out << format17(*r.vs_modal);
    out << "\n";
  }
}

inline void write_validation_csv(const std::filesystem::path& path, const ValidationReport& report) {
  auto out = open_output(path);
  out << "name,measured,expected,relative_deviation,provenance,pass\n";
  for (const auto& r : report.rows)
    out << r.name << "," << format17(r.measured) << "," << format17(r.expected) << ","
        << format17(r.deviation) << "," << r.provenance << "," << (r.pass ? "yes" : "no") << "\n";
}

inline void write_solution_csv(const std::filesystem::path& path, const VecC& x) {
  auto out = open_output(path);
  out << "index,real,imag\n";
  for (Index i = 0; i < x.size(); ++i)
    out << i << "," << format17(static_cast<double>(x(i).real())) << ","
        << format17(static_cast<double>(x(i).imag())) << "\n";
}

inline void write_excitation_csv(const std::filesystem::path& path, const VecC& b) {
  write_solution_csv(path, b);
}

inline void write_mesh_summary_csv(const std::filesystem::path& path, const Mesh& m,
                                   const LayerPartition& part) {
  auto out = open_output(path);
  out << "quantity,value\n";
  out << "nodes," << m.num_nodes() << "\n";
  out << "edges," << m.num_edges() << "\n";
  out << "unknowns," << m.num_unknowns() << "\n";
  out << "conductors," << m.conductor_count << "\n";
  out << "layers," << part.num_layers() << "\n";
  for (int l = 0; l < part.num_layers(); ++l) {
    out << "layer" << l << "_owned," << part.layers[l].owned.size() << "\n";
    out << "layer" << l << "_standalone," << part.layers[l].standalone.size() << "\n";
  }
}

/// Plain-text node/edge listing for debugging.
inline void write_mesh_listing(const std::filesystem::path& path, const Mesh& m) {
  auto out = open_output(path);
  out << "# nodes: id x y z component\n";
  for (int n = 0; n < m.num_nodes(); ++n) {
    const auto p = m.node_position(n);
    out << n << " " << format17(static_cast<double>(p[0])) << " "
        << format17(static_cast<double>(p[1])) << " " << format17(static_cast<double>(p[2])) << " "
        << m.node_component[static_cast<size_t>(n)] << "\n";
  }
  out << "# edges: id axis n0 n1 length unknown\n";
  for (int e = 0; e < m.num_edges(); ++e) {
    const Edge& ed = m.edges[static_cast<size_t>(e)];
    out << e << " " << "xyz"[ed.axis] << " " << ed.n0 << " " << ed.n1 << " "
        << format17(static_cast<double>(ed.length)) << " " << m.edge_unknown[static_cast<size_t>(e)]
        << "\n";
  }
}

/// Matrix Market coordinate export. Symmetric matrices store the lower
/// triangle; zeros are skipped.
template <typename Scalar>
void write_matrix_market(const std::filesystem::path& path, const Mat<Scalar>& m, bool symmetric) {
  auto out = open_output(path);
  out << "%%MatrixMarket matrix coordinate real " << (symmetric ? "symmetric" : "general") << "\n";
  std::vector<std::string> lines;
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = symmetric ? c : Index(0); r < m.rows(); ++r)
      if (m(r, c) != Scalar(0))
        lines.push_back(std::to_string(r + 1) + " " + std::to_string(c + 1) + " " +
                        format17(static_cast<double>(m(r, c))));
  out << m.rows() << " " << m.cols() << " " << lines.size() << "\n";
  for (const auto& l : lines) out << l << "\n";
}

template <typename Scalar>
void write_matrix_market_complex(const std::filesystem::path& path,
                                 const Mat<std::complex<Scalar>>& m, bool symmetric) {
  auto out = open_output(path);
  out << "%%MatrixMarket matrix coordinate complex " << (symmetric ? "symmetric" : "general")
      << "\n";
  std::vector<std::string> lines;
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = symmetric ? c : Index(0); r < m.rows(); ++r)
      if (m(r, c) != std::complex<Scalar>(0))
        lines.push_back(std::to_string(r + 1) + " " + std::to_string(c + 1) + " " +
                        format17(static_cast<double>(m(r, c).real())) + " " +
                        format17(static_cast<double>(m(r, c).imag())));
  out << m.rows() << " " << m.cols() << " " << lines.size() << "\n";
  for (const auto& l : lines) out << l << "\n";
}

inline void write_timings_txt(const std::filesystem::path& path,
                              const std::vector<std::pair<std::string, double>>& timings) {
  auto out = open_output(path);
  out << "# wall-clock seconds per phase (excluded from the determinism contract)\n";
  for (const auto& [name, s] : timings) out << name << " " << s << "\n";
}

}  // namespace dcfem
