#include "mtgan/morphology.hpp"

#include "mtgan/error.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <set>
#include <tuple>

namespace mtgan {

CellCounts cell_counts(const VoxelGrid& grid) {
  const auto nx = grid.dims[0], ny = grid.dims[1], nz = grid.dims[2];
  // zero border of one voxel on every side; padded voxel (x, y, z) is grid voxel (x-1, y-1, z-1)
  const auto px = nx + 2, py = ny + 2, pz = nz + 2;
  std::vector<std::uint8_t> pad(static_cast<std::size_t>(px * py * pz), 0);
  auto at = [&](std::int64_t x, std::int64_t y, std::int64_t z) -> std::uint8_t& {
    return pad[static_cast<std::size_t>((x * py + y) * pz + z)];
  };
  CellCounts c;
  for (std::int64_t x = 0; x < nx; ++x)
    for (std::int64_t y = 0; y < ny; ++y)
      for (std::int64_t z = 0; z < nz; ++z)
        if (grid.at(x, y, z)) {
          at(x + 1, y + 1, z + 1) = 1;
          ++c.n3;
        }
  // lattice point (x, y, z), 0 <= x <= nx, touches padded voxels x..x+1 (grid voxels x-1..x)
  for (std::int64_t x = 0; x <= nx; ++x)
    for (std::int64_t y = 0; y <= ny; ++y)
      for (std::int64_t z = 0; z <= nz; ++z) {
        const std::uint8_t v000 = at(x, y, z), v100 = at(x + 1, y, z), v010 = at(x, y + 1, z),
                           v001 = at(x, y, z + 1), v110 = at(x + 1, y + 1, z), v101 = at(x + 1, y, z + 1),
                           v011 = at(x, y + 1, z + 1), v111 = at(x + 1, y + 1, z + 1);
        if (v000 | v100 | v010 | v001 | v110 | v101 | v011 | v111) ++c.n0;
        // edge from this point along +x lies between padded x+1 voxels, y/z in {y, y+1} x {z, z+1}
        if (x < nx && (v100 | v110 | v101 | v111)) ++c.n1;
        if (y < ny && (v010 | v110 | v011 | v111)) ++c.n1;
        if (z < nz && (v001 | v101 | v011 | v111)) ++c.n1;
        // face normal to x at this point spans padded y+1, z+1 and separates padded x and x+1
        if (y < ny && z < nz) {
          const int k = at(x, y + 1, z + 1) + v111;
          if (k) ++c.n2;
          if (k == 1) ++c.boundary_faces;
        }
        if (x < nx && z < nz) {
          const int k = at(x + 1, y, z + 1) + v111;
          if (k) ++c.n2;
          if (k == 1) ++c.boundary_faces;
        }
        if (x < nx && y < ny) {
          const int k = at(x + 1, y + 1, z) + v111;
          if (k) ++c.n2;
          if (k == 1) ++c.boundary_faces;
        }
      }
  return c;
}

CellCounts cell_counts_bruteforce(const VoxelGrid& grid) {
  // cells keyed by doubled coordinates of their centers
  using Key = std::array<std::int64_t, 3>;
  std::set<Key> vertices, edges;
  std::map<Key, int> faces;
  CellCounts c;
  for (std::int64_t x = 0; x < grid.dims[0]; ++x)
    for (std::int64_t y = 0; y < grid.dims[1]; ++y)
      for (std::int64_t z = 0; z < grid.dims[2]; ++z) {
        if (!grid.at(x, y, z)) continue;
        ++c.n3;
        for (int dx = 0; dx <= 2; ++dx)
          for (int dy = 0; dy <= 2; ++dy)
            for (int dz = 0; dz <= 2; ++dz) {
              const Key k{2 * x + dx, 2 * y + dy, 2 * z + dz};
              const int odd = (dx == 1) + (dy == 1) + (dz == 1);
              if (odd == 0) vertices.insert(k);
              if (odd == 1) edges.insert(k);
              if (odd == 2) ++faces[k];
            }
      }
  c.n0 = static_cast<std::int64_t>(vertices.size());
  c.n1 = static_cast<std::int64_t>(edges.size());
  c.n2 = static_cast<std::int64_t>(faces.size());
  for (const auto& [k, mult] : faces)
    if (mult == 1) ++c.boundary_faces;
  return c;
}

Minkowski minkowski_from_counts(const CellCounts& c, double a) {
  Minkowski m;
  m.volume = static_cast<double>(c.n3) * a * a * a;
  m.surface_area = static_cast<double>(c.boundary_faces) * a * a;
  m.mean_breadth = a * static_cast<double>(3 * c.n3 - 2 * c.n2 + c.n1) / 2.0;
  m.euler = static_cast<double>(c.n0 - c.n1 + c.n2 - c.n3);
  return m;
}

Minkowski minkowski(const VoxelGrid& grid) { return minkowski_from_counts(cell_counts(grid), grid.voxel_size); }

double minkowski_value(const Minkowski& m, const std::string& name) {
  if (name == "volume") return m.volume;
  if (name == "surface_area") return m.surface_area;
  if (name == "mean_breadth") return m.mean_breadth;
  if (name == "euler") return m.euler;
  throw ConfigError("unknown morphology statistic: " + name);
}

std::vector<StatisticSample> batch_statistics(const std::vector<VoxelGrid>& grids,
                                              const std::vector<std::string>& selected,
                                              const std::map<std::string, std::vector<double>>& external) {
  if (grids.empty()) throw DataError("batch statistics need at least one grid");
  std::vector<Minkowski> ms;
  bool need_counts = false;
  for (const auto& s : selected) need_counts |= !external.contains(s);
  if (need_counts)
    for (const auto& g : grids) ms.push_back(minkowski(g));
  std::vector<StatisticSample> out;
  for (const auto& name : selected) {
    StatisticSample s{name, {}};
    if (auto it = external.find(name); it != external.end()) {
      if (it->second.size() != grids.size())
        throw DataError("column " + name + " has " + std::to_string(it->second.size()) + " values for " +
                        std::to_string(grids.size()) + " grids");
      s.values = it->second;
    } else if (name == "permeability") {
      throw DataError("permeability is not computed here; supply it as an external column");
    } else {
      for (const auto& m : ms) s.values.push_back(minkowski_value(m, name));
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_morphology_csv(const std::vector<std::string>& paths, const std::vector<Minkowski>& rows,
                          const std::filesystem::path& out, const std::vector<double>& permeability) {
  if (paths.size() != rows.size()) throw DataError("morphology CSV: path and row counts differ");
  if (!permeability.empty() && permeability.size() != rows.size())
    throw DataError("morphology CSV: permeability column length differs");
  std::ofstream f(out);
  if (!f) throw DataError("cannot write " + out.string());
  f << "path,volume,surface_area,mean_breadth,euler";
  if (!permeability.empty()) f << ",permeability";
  f << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& m = rows[i];
    f << paths[i] << ',' << m.volume << ',' << m.surface_area << ',' << m.mean_breadth << ',' << m.euler;
    if (!permeability.empty()) f << ',' << permeability[i];
    f << '\n';
  }
}

}  // namespace mtgan
