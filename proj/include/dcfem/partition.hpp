#pragma once

#include "dcfem/mesh.hpp"

#include <stdexcept>
#include <utility>
#include <vector>

namespace dcfem {

/// z-layer ownership map. Each layer owns a contiguous slab of cells.
/// Unknowns on the interface plane between layers i and i+1 are owned by
/// layer i, so the first layer owns surface-volume-surface and every later
/// layer owns volume-surface. A layer's standalone set is its owned set
/// plus the neighboring interface plane(s), i.e. the full free-edge set of
/// its slab.
struct LayerPartition {
  struct Layer {
    int z_begin = 0, z_end = 0;  // cell slab [z_begin, z_end)
    std::vector<int> standalone_surface;  // owned boundary-plane unknowns (first/last layer)
    std::vector<int> volume;              // owned volume + interior-plane unknowns
    std::vector<int> coupled_surface;     // owned interface-plane unknowns
    std::vector<int> owned;               // sorted union of the three groups
    std::vector<int> standalone;          // owned + neighbor interface plane, sorted
  };
  std::vector<Layer> layers;
  int n_unknowns = 0;

  int num_layers() const { return static_cast<int>(layers.size()); }
};

inline LayerPartition partition_layers(const Mesh& m, const std::vector<std::pair<int, int>>& z_ranges) {
  const int nz = m.grid.nz;
  if (z_ranges.empty()) throw std::invalid_argument("partition_layers: no layer ranges");
  if (z_ranges.size() > 1 && nz < 2)
    throw std::invalid_argument("partition_layers: multiple layers require nz >= 2");
  int expect = 0;
  for (const auto& [b, e] : z_ranges) {
    if (b != expect || e <= b) throw std::invalid_argument("partition_layers: ranges must tile [0, nz)");
    expect = e;
  }
  if (expect != nz) throw std::invalid_argument("partition_layers: ranges must cover [0, nz)");

  LayerPartition part;
  part.n_unknowns = m.num_unknowns();
  part.layers.resize(z_ranges.size());
  const int last = static_cast<int>(z_ranges.size()) - 1;
  for (int l = 0; l <= last; ++l) {
    part.layers[l].z_begin = z_ranges[l].first;
    part.layers[l].z_end = z_ranges[l].second;
  }

  // slab k -> layer
  std::vector<int> slab_layer(static_cast<size_t>(nz));
  for (int l = 0; l <= last; ++l)
    for (int k = part.layers[l].z_begin; k < part.layers[l].z_end; ++k) slab_layer[k] = l;

  for (int u = 0; u < m.num_unknowns(); ++u) {
    const Edge& e = m.edges[static_cast<size_t>(m.unknown_edge[u])];
    if (e.axis == 2) {
      part.layers[slab_layer[e.k]].volume.push_back(u);
      continue;
    }
    // In-plane edge on node plane k.
    const int k = e.k;
    if (k == 0) {
      part.layers[0].standalone_surface.push_back(u);
    } else if (k == nz) {
      part.layers[last].standalone_surface.push_back(u);
    } else {
      const int l = slab_layer[k - 1];  // plane k bounds slab k-1 from above
      if (k == part.layers[l].z_end && l != last)
        part.layers[l].coupled_surface.push_back(u);
      else if (k == part.layers[l].z_end)  // k == nz handled above; unreachable
        part.layers[l].standalone_surface.push_back(u);
      else
        part.layers[l].volume.push_back(u);
    }
  }

  for (int l = 0; l <= last; ++l) {
    auto& lay = part.layers[l];
    lay.owned.reserve(lay.standalone_surface.size() + lay.volume.size() + lay.coupled_surface.size());
    lay.owned.insert(lay.owned.end(), lay.standalone_surface.begin(), lay.standalone_surface.end());
    lay.owned.insert(lay.owned.end(), lay.volume.begin(), lay.volume.end());
    lay.owned.insert(lay.owned.end(), lay.coupled_surface.begin(), lay.coupled_surface.end());
    std::sort(lay.owned.begin(), lay.owned.end());

    // Standalone set = every free edge whose plane/slab lies in the slab range.
    for (int u = 0; u < m.num_unknowns(); ++u) {
      const Edge& e = m.edges[static_cast<size_t>(m.unknown_edge[u])];
      const bool inside = (e.axis == 2) ? (e.k >= lay.z_begin && e.k < lay.z_end)
                                        : (e.k >= lay.z_begin && e.k <= lay.z_end);
      if (inside) lay.standalone.push_back(u);
    }
  }
  return part;
}

/// Equal split of the nz cell slabs into n_layers layers (remainder spread
/// over the leading layers). Default is one slab per layer.
inline LayerPartition partition_layers(const Mesh& m, int n_layers = -1) {
  if (n_layers < 0) n_layers = m.grid.nz;
  if (n_layers < 1) throw std::invalid_argument("partition_layers: need at least one layer");
  if (n_layers > m.grid.nz)
    throw std::invalid_argument("partition_layers: more layers than z slabs");
  std::vector<std::pair<int, int>> ranges;
  int begin = 0;
  for (int l = 0; l < n_layers; ++l) {
    const int size = m.grid.nz / n_layers + (l < m.grid.nz % n_layers ? 1 : 0);
    ranges.emplace_back(begin, begin + size);
    begin += size;
  }
  return partition_layers(m, ranges);
}

}  // namespace dcfem
