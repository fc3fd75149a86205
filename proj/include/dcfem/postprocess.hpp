#pragma once

#include "dcfem/mesh.hpp"
#include "dcfem/types.hpp"

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dcfem {

/// Signed edge path from one conductor to another; the voltage probe.
struct ProbePath {
  std::string name;
  std::vector<std::pair<int, int>> edges;  // (edge id, sign)
};

/// Line integral of E along the path: V = -sum sign(e) * x[e]. Coefficients
/// are edge voltages (unit-line-integral bases); PEC-eliminated edges
/// contribute zero. Errors out when both endpoints sit on the same
/// conductor.
inline Complex extract_voltage(const Mesh& m, const VecC& x, const ProbePath& path) {
  if (path.edges.empty()) throw std::invalid_argument("extract_voltage: empty path");
  int prev_head = -1, start = -1;
  Complex drop(0, 0);
  for (const auto& [edge, sign] : path.edges) {
    if (edge < 0 || edge >= m.num_edges())
      throw std::invalid_argument("extract_voltage: bad edge id");
    const Edge& e = m.edges[static_cast<size_t>(edge)];
    const int tail = sign > 0 ? e.n0 : e.n1;
    const int head = sign > 0 ? e.n1 : e.n0;
    if (start < 0) start = tail;
    if (prev_head >= 0 && tail != prev_head)
      throw std::invalid_argument("extract_voltage: path edges are not connected");
    prev_head = head;
    const int u = m.edge_unknown[edge];
    if (u >= 0) drop += Real(sign) * x(u);
  }
  const int c0 = m.node_component[static_cast<size_t>(start)];
  const int c1 = m.node_component[static_cast<size_t>(prev_head)];
  if (c0 >= 0 && c0 == c1)
    throw std::invalid_argument("extract_voltage: path endpoints lie on the same conductor");
  return -drop;
}

struct CapacitanceResult {
  Complex value{0, 0};  // farads, complex
  Real real_part = 0;
  Real loss_tangent = 0;
};

/// C = I / (j omega V).
inline CapacitanceResult capacitance(Real current, Complex voltage, Real omega) {
  if (!(omega > Real(0))) throw std::invalid_argument("capacitance: omega must be > 0");
  if (voltage == Complex(0, 0)) throw std::invalid_argument("capacitance: zero voltage");
  CapacitanceResult res;
  res.value = Complex(current, 0) / (Complex(0, omega) * voltage);
  res.real_part = res.value.real();
  res.loss_tangent = res.real_part != Real(0) ? -res.value.imag() / res.real_part : Real(0);
  return res;
}

/// Analytic parallel-plate capacitance eps * A / d.
inline Real analytic_parallel_plate(Real area, Real separation, Real permittivity) {
  if (!(area > 0 && separation > 0 && permittivity > 0))
    throw std::invalid_argument("analytic_parallel_plate: inputs must be > 0");
  return permittivity * area / separation;
}

/// Guidance band for quasi-static operation. The ceiling keeps a 10x margin
/// under the first structural resonance (largest physical dimension); the
/// floor is a heuristic fraction of the mesh resolution limit (smallest
/// spacing) and is not a physical bound.
struct FrequencyWindow {
  Real f_low = 0;             // Hz
  Real f_high = 0;            // Hz
  Real first_resonance = 0;   // Hz, c/(2 L_max sqrt(eps_r mu_r))
  Real mesh_limit = 0;        // Hz, c/(2 h_min sqrt(eps_r mu_r))
};

inline FrequencyWindow frequency_window(const Mesh& m, const std::vector<MaterialRegion>& regions = {}) {
  Real eps_max = 1, mu_max = 1;
  const auto cells = resolve_cell_materials(m.grid, regions);
  for (const auto& c : cells) {
    eps_max = std::max(eps_max, c.eps_r);
    mu_max = std::max(mu_max, c.mu_r);
  }
  const Real lx = m.xs.back() - m.xs.front();
  const Real ly = m.ys.back() - m.ys.front();
  const Real lz = m.zs.back() - m.zs.front();
  const Real l_max = std::max({lx, ly, lz});
  Real h_min = m.grid.dx.front();
  for (Real h : m.grid.dx) h_min = std::min(h_min, h);
  for (Real h : m.grid.dy) h_min = std::min(h_min, h);
  for (Real h : m.grid.dz) h_min = std::min(h_min, h);

  const Real slow = std::sqrt(eps_max * mu_max);
  FrequencyWindow w;
  w.first_resonance = c0 / (2 * l_max * slow);
  w.mesh_limit = c0 / (2 * h_min * slow);
  w.f_high = Real(0.1L) * w.first_resonance;
  w.f_low = Real(1e-6L) * w.mesh_limit;
  return w;
}

/// One validation line: a measured quantity against its expectation.
struct ValidationRow {
  std::string name;
  double measured = 0;
  double expected = 0;
  double deviation = 0;  // |measured - expected| / |expected| where sensible
  std::string provenance;  // "measured" vs "analytic" pairing note
  bool pass = true;
};

struct ValidationReport {
  std::vector<ValidationRow> rows;
  bool all_pass() const {
    for (const auto& r : rows)
      if (!r.pass) return false;
    return true;
  }
};

}  // namespace dcfem
