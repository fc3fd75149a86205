#pragma once

#include "dcfem/types.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcfem {

enum class FaceCondition { PEC, PMC, Natural };

/// Box faces in fixed order: x-min, x-max, y-min, y-max, z-min, z-max.
enum class Face : int { XMin = 0, XMax, YMin, YMax, ZMin, ZMax };

struct BoundarySpec {
  std::array<FaceCondition, 6> faces{FaceCondition::Natural, FaceCondition::Natural,
                                     FaceCondition::Natural, FaceCondition::Natural,
                                     FaceCondition::Natural, FaceCondition::Natural};

  FaceCondition at(Face f) const { return faces[static_cast<int>(f)]; }
  void set(Face f, FaceCondition c) { faces[static_cast<int>(f)] = c; }
  bool is_pec(Face f) const { return at(f) == FaceCondition::PEC; }
};

/// Structured brick grid with per-axis (possibly nonuniform) spacings.
struct GridSpec {
  int nx = 0, ny = 0, nz = 0;        // cell counts
  std::vector<Real> dx, dy, dz;      // spacings, meters; sizes nx/ny/nz
  std::array<Real, 3> origin{0, 0, 0};

  static GridSpec uniform(int nx, int ny, int nz, Real hx, Real hy, Real hz) {
    GridSpec g;
    g.nx = nx;
    g.ny = ny;
    g.nz = nz;
    g.dx.assign(static_cast<size_t>(std::max(nx, 0)), hx);
    g.dy.assign(static_cast<size_t>(std::max(ny, 0)), hy);
    g.dz.assign(static_cast<size_t>(std::max(nz, 0)), hz);
    return g;
  }

  void validate() const {
    if (nx < 1 || ny < 1 || nz < 1)
      throw std::invalid_argument("GridSpec: cell counts must be >= 1");
    if (dx.size() != static_cast<size_t>(nx) || dy.size() != static_cast<size_t>(ny) ||
        dz.size() != static_cast<size_t>(nz))
      throw std::invalid_argument("GridSpec: spacing sequence lengths must match cell counts");
    auto positive = [](const std::vector<Real>& v) {
      return std::all_of(v.begin(), v.end(), [](Real h) { return h > Real(0); });
    };
    if (!positive(dx) || !positive(dy) || !positive(dz))
      throw std::invalid_argument("GridSpec: all spacings must be > 0");
  }
};

/// Axis-aligned cell box with homogeneous material. Ranges are inclusive
/// cell-index ranges; uncovered cells default to vacuum.
struct MaterialRegion {
  std::array<int, 2> i_range{0, -1};
  std::array<int, 2> j_range{0, -1};
  std::array<int, 2> k_range{0, -1};
  Real eps_r = 1;
  Real mu_r = 1;
  Real sigma = 0;  // S/m

  bool contains(int i, int j, int k) const {
    return i >= i_range[0] && i <= i_range[1] && j >= j_range[0] && j <= j_range[1] &&
           k >= k_range[0] && k <= k_range[1];
  }
};

struct CellMaterial {
  Real eps_r = 1;
  Real mu_r = 1;
  Real sigma = 0;
};

/// Validates regions against the grid (bounds, overlap, parameter signs) and
/// returns the per-cell material table, vacuum where uncovered.
inline std::vector<CellMaterial> resolve_cell_materials(const GridSpec& grid,
                                                        const std::vector<MaterialRegion>& regions) {
  const size_t ncells = static_cast<size_t>(grid.nx) * grid.ny * grid.nz;
  std::vector<CellMaterial> cells(ncells);
  std::vector<char> covered(ncells, 0);
  auto cell_index = [&](int i, int j, int k) {
    return static_cast<size_t>(i) + static_cast<size_t>(grid.nx) * (j + static_cast<size_t>(grid.ny) * k);
  };
  for (const auto& r : regions) {
    if (r.eps_r <= 0 || r.mu_r <= 0 || r.sigma < 0)
      throw std::invalid_argument("MaterialRegion: need eps_r > 0, mu_r > 0, sigma >= 0");
    if (r.i_range[0] < 0 || r.i_range[1] >= grid.nx || r.j_range[0] < 0 || r.j_range[1] >= grid.ny ||
        r.k_range[0] < 0 || r.k_range[1] >= grid.nz || r.i_range[0] > r.i_range[1] ||
        r.j_range[0] > r.j_range[1] || r.k_range[0] > r.k_range[1])
      throw std::invalid_argument("MaterialRegion: cell box out of grid bounds");
    for (int k = r.k_range[0]; k <= r.k_range[1]; ++k)
      for (int j = r.j_range[0]; j <= r.j_range[1]; ++j)
        for (int i = r.i_range[0]; i <= r.i_range[1]; ++i) {
          const size_t c = cell_index(i, j, k);
          if (covered[c]) throw std::invalid_argument("MaterialRegion: regions overlap");
          covered[c] = 1;
          cells[c] = {r.eps_r, r.mu_r, r.sigma};
        }
  }
  return cells;
}

/// One grid edge. (i,j,k) are the lattice coordinates of the lower endpoint;
/// the edge points in +axis direction (axis: 0=x, 1=y, 2=z).
struct Edge {
  int axis;
  int i, j, k;
  int n0, n1;   // node ids, n0 -> n1 along +axis
  Real length;  // meters
};

/// Structured brick mesh with edge/node enumeration, PEC elimination and
/// conductor labeling. Immutable after build_mesh.
struct Mesh {
  GridSpec grid;
  BoundarySpec bc;
  std::vector<Real> xs, ys, zs;  // node coordinates per axis (sizes n+1)

  std::vector<Edge> edges;
  std::vector<std::array<int, 12>> cell_edges;  // local order: 4 x-, 4 y-, 4 z-edges
  std::vector<int> edge_unknown;                // edge -> unknown id, -1 if PEC-eliminated
  std::vector<int> unknown_edge;                // unknown id -> edge
  std::vector<int> node_component;              // node -> PEC component id, -1 if free
  int conductor_count = 0;

  int num_nodes() const { return (grid.nx + 1) * (grid.ny + 1) * (grid.nz + 1); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  int num_unknowns() const { return static_cast<int>(unknown_edge.size()); }
  int num_cells() const { return grid.nx * grid.ny * grid.nz; }

  int node_index(int i, int j, int k) const {
    return i + (grid.nx + 1) * (j + (grid.ny + 1) * k);
  }
  std::array<Real, 3> node_position(int n) const {
    const int sx = grid.nx + 1, sy = grid.ny + 1;
    const int i = n % sx, j = (n / sx) % sy, k = n / (sx * sy);
    return {xs[i], ys[j], zs[k]};
  }

  int num_x_edges() const { return grid.nx * (grid.ny + 1) * (grid.nz + 1); }
  int num_y_edges() const { return (grid.nx + 1) * grid.ny * (grid.nz + 1); }
  int num_z_edges() const { return (grid.nx + 1) * (grid.ny + 1) * grid.nz; }

  int x_edge_index(int i, int j, int k) const { return i + grid.nx * (j + (grid.ny + 1) * k); }
  int y_edge_index(int i, int j, int k) const {
    return num_x_edges() + i + (grid.nx + 1) * (j + grid.ny * k);
  }
  int z_edge_index(int i, int j, int k) const {
    return num_x_edges() + num_y_edges() + i + (grid.nx + 1) * (j + (grid.ny + 1) * k);
  }
  int edge_index(int axis, int i, int j, int k) const {
    switch (axis) {
      case 0: return x_edge_index(i, j, k);
      case 1: return y_edge_index(i, j, k);
      default: return z_edge_index(i, j, k);
    }
  }

  int cell_index(int cx, int cy, int cz) const { return cx + grid.nx * (cy + grid.ny * cz); }

  bool node_on_face(int i, int j, int k, Face f) const {
    switch (f) {
      case Face::XMin: return i == 0;
      case Face::XMax: return i == grid.nx;
      case Face::YMin: return j == 0;
      case Face::YMax: return j == grid.ny;
      case Face::ZMin: return k == 0;
      default: return k == grid.nz;
    }
  }
};

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<int> parent_;
};

}  // namespace detail

/// Builds the mesh: node/edge enumeration, PEC edge elimination, unknown
/// numbering and PEC conductor components. `regions` are validated here
/// (out-of-bounds or overlapping boxes are errors) but stored nowhere; the
/// assembly takes them again.
inline Mesh build_mesh(const GridSpec& grid, const BoundarySpec& bc,
                       const std::vector<MaterialRegion>& regions = {}) {
  grid.validate();
  resolve_cell_materials(grid, regions);  // validation only

  Mesh m;
  m.grid = grid;
  m.bc = bc;

  auto cumulative = [](Real o, const std::vector<Real>& d) {
    std::vector<Real> v(d.size() + 1);
    v[0] = o;
    for (size_t i = 0; i < d.size(); ++i) v[i + 1] = v[i] + d[i];
    return v;
  };
  m.xs = cumulative(grid.origin[0], grid.dx);
  m.ys = cumulative(grid.origin[1], grid.dy);
  m.zs = cumulative(grid.origin[2], grid.dz);

  const int nx = grid.nx, ny = grid.ny, nz = grid.nz;

  // Edge enumeration: all x-edges, then y, then z; lexicographic (i fastest).
  m.edges.resize(static_cast<size_t>(m.num_x_edges() + m.num_y_edges() + m.num_z_edges()));
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i < nx; ++i)
        m.edges[m.x_edge_index(i, j, k)] =
            Edge{0, i, j, k, m.node_index(i, j, k), m.node_index(i + 1, j, k), grid.dx[i]};
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i <= nx; ++i)
        m.edges[m.y_edge_index(i, j, k)] =
            Edge{1, i, j, k, m.node_index(i, j, k), m.node_index(i, j + 1, k), grid.dy[j]};
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i)
        m.edges[m.z_edge_index(i, j, k)] =
            Edge{2, i, j, k, m.node_index(i, j, k), m.node_index(i, j, k + 1), grid.dz[k]};

  // Cell -> 12 edge incidence. Local order: x-edges (jy + 2*kz), y-edges
  // (4 + ix + 2*kz), z-edges (8 + ix + 2*jy). All orientations are +axis,
  // so every incidence sign is +1.
  m.cell_edges.resize(static_cast<size_t>(m.num_cells()));
  for (int cz = 0; cz < nz; ++cz)
    for (int cy = 0; cy < ny; ++cy)
      for (int cx = 0; cx < nx; ++cx) {
        auto& ce = m.cell_edges[m.cell_index(cx, cy, cz)];
        for (int k = 0; k < 2; ++k)
          for (int j = 0; j < 2; ++j) ce[j + 2 * k] = m.x_edge_index(cx, cy + j, cz + k);
        for (int k = 0; k < 2; ++k)
          for (int i = 0; i < 2; ++i) ce[4 + i + 2 * k] = m.y_edge_index(cx + i, cy, cz + k);
        for (int j = 0; j < 2; ++j)
          for (int i = 0; i < 2; ++i) ce[8 + i + 2 * j] = m.z_edge_index(cx + i, cy + j, cz);
      }

  // PEC faces eliminate their in-plane (tangential) edges.
  std::vector<char> eliminated(m.edges.size(), 0);
  auto edge_in_face_plane = [&](const Edge& e, Face f) {
    switch (f) {
      case Face::XMin: return e.axis != 0 && e.i == 0;
      case Face::XMax: return e.axis != 0 && e.i == nx;
      case Face::YMin: return e.axis != 1 && e.j == 0;
      case Face::YMax: return e.axis != 1 && e.j == ny;
      case Face::ZMin: return e.axis != 2 && e.k == 0;
      default: return e.axis != 2 && e.k == nz;
    }
  };
  for (int f = 0; f < 6; ++f)
    if (bc.is_pec(static_cast<Face>(f)))
      for (size_t e = 0; e < m.edges.size(); ++e)
        if (edge_in_face_plane(m.edges[e], static_cast<Face>(f))) eliminated[e] = 1;

  m.edge_unknown.assign(m.edges.size(), -1);
  for (size_t e = 0; e < m.edges.size(); ++e)
    if (!eliminated[e]) {
      m.edge_unknown[e] = static_cast<int>(m.unknown_edge.size());
      m.unknown_edge.push_back(static_cast<int>(e));
    }

  // PEC conductor components: nodes of one PEC face are connected; faces
  // sharing nodes merge. Component ids are assigned by smallest node id.
  detail::UnionFind uf(m.num_nodes());
  std::vector<char> pec_node(static_cast<size_t>(m.num_nodes()), 0);
  for (int f = 0; f < 6; ++f) {
    if (!bc.is_pec(static_cast<Face>(f))) continue;
    int anchor = -1;
    for (int k = 0; k <= nz; ++k)
      for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) {
          if (!m.node_on_face(i, j, k, static_cast<Face>(f))) continue;
          const int n = m.node_index(i, j, k);
          pec_node[n] = 1;
          if (anchor < 0)
            anchor = n;
          else
            uf.unite(anchor, n);
        }
  }
  m.node_component.assign(static_cast<size_t>(m.num_nodes()), -1);
  std::vector<int> root_to_comp(static_cast<size_t>(m.num_nodes()), -1);
  int comp = 0;
  for (int n = 0; n < m.num_nodes(); ++n) {
    if (!pec_node[n]) continue;
    const int r = uf.find(n);
    if (root_to_comp[r] < 0) root_to_comp[r] = comp++;
    m.node_component[n] = root_to_comp[r];
  }
  m.conductor_count = comp;

  return m;
}

struct ConductorComponents {
  int count = 0;
  std::vector<int> node_component;  // -1 for non-PEC nodes
};

inline ConductorComponents conductor_components(const Mesh& m) {
  return {m.conductor_count, m.node_component};
}

/// Discrete gradient map G: one column per potential degree of freedom
/// (free nodes first, then PEC components, minus one dropped reference
/// column), one row per unknown edge. Edge (p -> q) gets +1 in q's column
/// and -1 in p's column; edge bases have unit line integral, so G*phi holds
/// the edge coefficients of the gradient field with node potentials phi.
/// The reference is the lowest potential dof (lowest free node, or
/// component 0 if every node is PEC).
inline MatR discrete_gradient(const Mesh& m) {
  const int n_nodes = m.num_nodes();
  std::vector<int> dof(static_cast<size_t>(n_nodes), -1);
  int n_free = 0;
  for (int n = 0; n < n_nodes; ++n)
    if (m.node_component[n] < 0) dof[n] = n_free++;
  for (int n = 0; n < n_nodes; ++n)
    if (m.node_component[n] >= 0) dof[n] = n_free + m.node_component[n];

  const int n_pot = n_free + m.conductor_count;
  if (n_pot < 1) throw std::logic_error("discrete_gradient: mesh has no potential dofs");

  MatR g = MatR::Zero(m.num_unknowns(), n_pot - 1);
  for (int u = 0; u < m.num_unknowns(); ++u) {
    const Edge& e = m.edges[static_cast<size_t>(m.unknown_edge[u])];
    const int dq = dof[e.n1], dp = dof[e.n0];
    if (dq > 0) g(u, dq - 1) += Real(1);
    if (dp > 0) g(u, dp - 1) -= Real(1);
  }
  return g;
}

/// Extracts cells [k0, k1) as a standalone mesh: same x/y spacing and
/// boundary conditions, natural z faces. Edge enumeration order of the slab
/// matches the relative order of the parent's edges restricted to it.
inline Mesh extract_slab_mesh(const Mesh& m, int k0, int k1) {
  if (k0 < 0 || k1 > m.grid.nz || k0 >= k1)
    throw std::invalid_argument("extract_slab_mesh: bad slab range");
  GridSpec g = m.grid;
  g.nz = k1 - k0;
  g.dz.assign(m.grid.dz.begin() + k0, m.grid.dz.begin() + k1);
  g.origin[2] = m.zs[static_cast<size_t>(k0)];
  BoundarySpec bc = m.bc;
  bc.set(Face::ZMin, FaceCondition::Natural);
  bc.set(Face::ZMax, FaceCondition::Natural);
  return build_mesh(g, bc);
}

}  // namespace dcfem
