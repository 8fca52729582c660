#pragma once

#include "mtgan/evaluation.hpp"
#include "mtgan/io.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mtgan {

/// Cells of the union of closed unit cubes of the occupied voxels (shared cells counted once).
struct CellCounts {
  std::int64_t n0 = 0;  // vertices
  std::int64_t n1 = 0;  // edges
  std::int64_t n2 = 0;  // faces
  std::int64_t n3 = 0;  // cubes
  std::int64_t boundary_faces = 0;  // faces of exactly one occupied cube

  friend bool operator==(const CellCounts&, const CellCounts&) = default;
};

/// Single pass over the lattice: a vertex/edge/face exists when any of its 8/4/2 incident voxels is occupied.
CellCounts cell_counts(const VoxelGrid& grid);

/// Reference enumerator: inserts every cell of every occupied cube into ordered sets.
CellCounts cell_counts_bruteforce(const VoxelGrid& grid);

struct Minkowski {
  double volume = 0.0;        // n3 a^3
  double surface_area = 0.0;  // boundary faces a^2
  double mean_breadth = 0.0;  // a (3 n3 - 2 n2 + n1) / 2
  double euler = 0.0;         // n0 - n1 + n2 - n3
};

/// Mean breadth uses the convention that gives (p + q + r) / 2 for a solid p x q x r box.
Minkowski minkowski_from_counts(const CellCounts& c, double voxel_size);
Minkowski minkowski(const VoxelGrid& grid);

inline const std::vector<std::string>& minkowski_names() {
  static const std::vector<std::string> names{"volume", "surface_area", "mean_breadth", "euler"};
  return names;
}

double minkowski_value(const Minkowski& m, const std::string& name);

/// One StatisticSample per selected name. "permeability" must come from `external`
/// (values per grid, computed elsewhere); other external columns are passed through.
std::vector<StatisticSample> batch_statistics(const std::vector<VoxelGrid>& grids,
                                              const std::vector<std::string>& selected,
                                              const std::map<std::string, std::vector<double>>& external = {});

/// CSV with columns path, volume, surface_area, mean_breadth, euler[, permeability].
void write_morphology_csv(const std::vector<std::string>& paths, const std::vector<Minkowski>& rows,
                          const std::filesystem::path& out, const std::vector<double>& permeability = {});

}  // namespace mtgan
