#pragma once

#include "dcfem/element.hpp"
#include "dcfem/mesh.hpp"
#include "dcfem/partition.hpp"

#include <complex>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dcfem {

/// Assembled system over the free unknowns. S is geometry/mu_r only; eps_r
/// enters T and sigma enters R, so meshes reassembled with different
/// dielectrics or conductivities share S bit for bit.
template <typename Scalar>
struct SystemMatrices {
  Mat<Scalar> S, T, R;
  Index n = 0;
  bool lossy = false;  // true iff R has a nonzero entry
};

template <typename Scalar = Real>
SystemMatrices<Scalar> assemble(const Mesh& m, const std::vector<MaterialRegion>& regions = {}) {
  const auto materials = resolve_cell_materials(m.grid, regions);
  const int n = m.num_unknowns();

  SystemMatrices<Scalar> sys;
  sys.n = n;
  sys.S = Mat<Scalar>::Zero(n, n);
  sys.T = Mat<Scalar>::Zero(n, n);
  sys.R = Mat<Scalar>::Zero(n, n);

  for (int cz = 0; cz < m.grid.nz; ++cz)
    for (int cy = 0; cy < m.grid.ny; ++cy)
      for (int cx = 0; cx < m.grid.nx; ++cx) {
        const int c = m.cell_index(cx, cy, cz);
        const CellMaterial& mat = materials[static_cast<size_t>(c)];
        const auto em = local_matrices<Scalar>(
            Scalar(m.grid.dx[cx]), Scalar(m.grid.dy[cy]), Scalar(m.grid.dz[cz]),
            Scalar(mat.eps_r), Scalar(mat.mu_r), Scalar(mat.sigma));
        if (mat.sigma > Real(0)) sys.lossy = true;
        const auto& ce = m.cell_edges[static_cast<size_t>(c)];
        for (int r = 0; r < 12; ++r) {
          const int ur = m.edge_unknown[ce[r]];
          if (ur < 0) continue;
          for (int s = 0; s < 12; ++s) {
            const int us = m.edge_unknown[ce[s]];
            if (us < 0) continue;
            sys.S(ur, us) += em.Se(r, s);
            sys.T(ur, us) += em.Te(r, s);
            sys.R(ur, us) += em.Re(r, s);
          }
        }
      }
  return sys;
}

/// Standalone stiffness of one layer: assembly over the layer's cells only,
/// restricted to its standalone index set (both bounding surfaces treated as
/// unshared). Stiffness only, so the block is independent of eps_r and sigma.
template <typename Scalar = Real>
Mat<Scalar> assemble_standalone_layer(const Mesh& m, const LayerPartition& part, int layer,
                                      const std::vector<MaterialRegion>& regions = {}) {
  if (layer < 0 || layer >= part.num_layers())
    throw std::invalid_argument("assemble_standalone_layer: bad layer index");
  const auto materials = resolve_cell_materials(m.grid, regions);
  const auto& lay = part.layers[static_cast<size_t>(layer)];

  std::vector<int> local(static_cast<size_t>(m.num_unknowns()), -1);
  for (size_t p = 0; p < lay.standalone.size(); ++p) local[lay.standalone[p]] = static_cast<int>(p);

  const int ns = static_cast<int>(lay.standalone.size());
  Mat<Scalar> s0 = Mat<Scalar>::Zero(ns, ns);
  for (int cz = lay.z_begin; cz < lay.z_end; ++cz)
    for (int cy = 0; cy < m.grid.ny; ++cy)
      for (int cx = 0; cx < m.grid.nx; ++cx) {
        const int c = m.cell_index(cx, cy, cz);
        const CellMaterial& mat = materials[static_cast<size_t>(c)];
        const auto em = local_matrices<Scalar>(
            Scalar(m.grid.dx[cx]), Scalar(m.grid.dy[cy]), Scalar(m.grid.dz[cz]),
            Scalar(1), Scalar(mat.mu_r), Scalar(0));
        const auto& ce = m.cell_edges[static_cast<size_t>(c)];
        for (int r = 0; r < 12; ++r) {
          const int gr = m.edge_unknown[ce[r]];
          if (gr < 0 || local[gr] < 0) continue;
          for (int s = 0; s < 12; ++s) {
            const int gs = m.edge_unknown[ce[s]];
            if (gs < 0 || local[gs] < 0) continue;
            s0(local[gr], local[gs]) += em.Se(r, s);
          }
        }
      }
  return s0;
}

/// Impressed line current along a contiguous edge path.
struct SourceSpec {
  std::vector<std::pair<int, int>> path;  // (edge id, sign in {-1, +1})
  Real current = 0;                       // amperes
  Real omega = 0;                         // rad/s
};

struct Excitation {
  VecC b;
  Real omega = 0;
};

/// Weak-form source b[e] = -j omega mu0 I sign(e) on the path edges.
inline Excitation assemble_rhs(const Mesh& m, const SourceSpec& src) {
  Excitation ex;
  ex.omega = src.omega;
  ex.b = VecC::Zero(m.num_unknowns());
  int prev_head = -1;
  for (const auto& [edge, sign] : src.path) {
    if (edge < 0 || edge >= m.num_edges()) throw std::invalid_argument("assemble_rhs: bad edge id");
    if (sign != 1 && sign != -1) throw std::invalid_argument("assemble_rhs: path sign must be +-1");
    const int u = m.edge_unknown[edge];
    if (u < 0) throw std::invalid_argument("assemble_rhs: path edge is not a free unknown");
    const Edge& e = m.edges[static_cast<size_t>(edge)];
    const int tail = sign > 0 ? e.n0 : e.n1;
    const int head = sign > 0 ? e.n1 : e.n0;
    if (prev_head >= 0 && tail != prev_head)
      throw std::invalid_argument("assemble_rhs: path edges are not connected end-to-end");
    prev_head = head;
    ex.b(u) += Complex(0, -src.omega * mu0 * src.current * Real(sign));
  }
  return ex;
}

/// A = S + j omega R - omega^2 T (complex symmetric; real when lossless).
template <typename Scalar>
Mat<std::complex<Scalar>> system_matrix(const SystemMatrices<Scalar>& sys, Scalar omega) {
  if (omega < Scalar(0)) throw std::invalid_argument("system_matrix: omega must be >= 0");
  Mat<std::complex<Scalar>> a = sys.S.template cast<std::complex<Scalar>>();
  a -= (omega * omega) * sys.T.template cast<std::complex<Scalar>>();
  if (sys.lossy) a += std::complex<Scalar>(0, 1) * omega * sys.R.template cast<std::complex<Scalar>>();
  return a;
}

/// Dense gather of A(rows, cols).
template <typename Derived>
Mat<typename Derived::Scalar> gather(const Eigen::MatrixBase<Derived>& a, const std::vector<int>& rows,
                                     const std::vector<int>& cols) {
  Mat<typename Derived::Scalar> out(rows.size(), cols.size());
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < cols.size(); ++c) out(r, c) = a(rows[r], cols[c]);
  return out;
}

template <typename Derived>
Vec<typename Derived::Scalar> gather_rows(const Eigen::MatrixBase<Derived>& v, const std::vector<int>& rows) {
  Vec<typename Derived::Scalar> out(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) out(r) = v(rows[r]);
  return out;
}

}  // namespace dcfem
