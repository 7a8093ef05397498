#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mlpolar {

/// One atomic electoral unit (precinct, county, synthetic voter).
///
/// `value` holds a scalar opinion as a length-1 vector, or a d-vector opinion.
/// Coordinates are planar; the first coordinate is split first by the k-d tree.
struct GeoUnit {
  std::string id;
  std::array<double, 2> coords{0.0, 0.0};
  double population = 1.0;
  std::vector<double> value;

  std::size_t dimension() const { return value.size(); }
  double scalar() const { return value.at(0); }
};

/// Throws InputError if population is negative or coordinates/values are not finite.
void validate_unit(const GeoUnit& unit);

/// Nested partition of units into regions at N scales.
///
/// Level index 0 is scale 1 (finest); level N-1 is scale N (coarsest). Region ids
/// within a level are dense, 0..region_count-1. Nesting is enforced at
/// construction: two units sharing a region at level k share a region at every
/// level above k.
class RegionTree {
 public:
  RegionTree() = default;

  /// `levels[k][u]` is the region of unit u at level k. `names` optionally gives a
  /// label per region per level (used for administrative hierarchies).
  explicit RegionTree(std::vector<std::vector<std::uint32_t>> levels,
                      std::vector<std::vector<std::string>> names = {});

  std::size_t num_levels() const { return levels_.size(); }
  std::size_t num_units() const { return levels_.empty() ? 0 : levels_.front().size(); }
  std::size_t region_count(std::size_t level) const { return counts_.at(level); }
  std::span<const std::uint32_t> level(std::size_t k) const { return levels_.at(k); }
  std::uint32_t region_of(std::size_t unit, std::size_t level) const { return levels_.at(level).at(unit); }

  /// Region `r` at level k lies inside parent(k, r) at level k+1. Requires k+1 < num_levels().
  std::uint32_t parent(std::size_t level, std::uint32_t region) const { return parents_.at(level).at(region); }

  /// Label of a region; falls back to the decimal id when no names were given.
  std::string region_name(std::size_t level, std::uint32_t region) const;

  /// Sum of member unit populations for every region of a level.
  std::vector<double> region_populations(std::span<const GeoUnit> units, std::size_t level) const;

  /// Same tree with an extra finest level in which every unit is its own region.
  RegionTree with_unit_level() const;

  /// Same regions listed in a different unit order: new unit i is old unit order[i].
  RegionTree permuted(std::span<const std::size_t> order) const;

  bool operator==(const RegionTree& other) const { return levels_ == other.levels_; }

 private:
  std::vector<std::vector<std::uint32_t>> levels_;
  std::vector<std::vector<std::string>> names_;
  std::vector<std::size_t> counts_;
  std::vector<std::vector<std::uint32_t>> parents_;
};

/// Equal-count k-d tree. Each split sorts the current block by (coordinate, id)
/// on the axis for that depth (axis 0 at the root, alternating) and gives the
/// lower floor(m/2) units to the first child. Produces `depth` levels; the
/// coarsest has 2 regions and the finest 2^depth.
RegionTree build_kdtree_hierarchy(std::span<const GeoUnit> units, int depth);

/// Geography-free baseline: units are shuffled with `seed`, then the level with
/// 2^l regions assigns shuffled position p to block floor(p * 2^l / n).
RegionTree build_random_hierarchy(std::span<const GeoUnit> units, int depth, std::uint64_t seed);

/// CSV with columns unit_id, level_1 ... level_N (level_1 is the finest).
void write_assignment_csv(std::ostream& out, const RegionTree& tree, std::span<const GeoUnit> units);

}  // namespace mlpolar
