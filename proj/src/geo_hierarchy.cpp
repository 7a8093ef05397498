#include "mlpolar/geo_hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "mlpolar/csv.hpp"
#include "mlpolar/errors.hpp"

namespace mlpolar {

void validate_unit(const GeoUnit& unit) {
  if (!(unit.population >= 0.0) || !std::isfinite(unit.population)) {
    detail::throw_input("unit '" + unit.id + "': population must be finite and nonnegative");
  }
  if (!std::isfinite(unit.coords[0]) || !std::isfinite(unit.coords[1])) {
    detail::throw_input("unit '" + unit.id + "': coordinates must be finite");
  }
  for (double v : unit.value) {
    if (!std::isfinite(v)) detail::throw_input("unit '" + unit.id + "': value must be finite");
  }
}

RegionTree::RegionTree(std::vector<std::vector<std::uint32_t>> levels,
                       std::vector<std::vector<std::string>> names)
    : levels_(std::move(levels)), names_(std::move(names)) {
  if (levels_.empty()) detail::throw_input("region tree needs at least one level");
  const std::size_t n = levels_.front().size();
  if (n == 0) detail::throw_input("region tree needs at least one unit");
  counts_.resize(levels_.size());
  for (std::size_t k = 0; k < levels_.size(); ++k) {
    if (levels_[k].size() != n) detail::throw_input("region tree level sizes differ");
    std::uint32_t max_id = 0;
    for (auto r : levels_[k]) max_id = std::max(max_id, r);
    std::vector<char> seen(static_cast<std::size_t>(max_id) + 1, 0);
    for (auto r : levels_[k]) seen[r] = 1;
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
      detail::throw_input("region ids at level " + std::to_string(k + 1) + " are not dense");
    }
    counts_[k] = seen.size();
  }
  if (!names_.empty()) {
    if (names_.size() != levels_.size()) detail::throw_input("region names must cover every level");
    for (std::size_t k = 0; k < levels_.size(); ++k) {
      if (names_[k].size() != counts_[k]) detail::throw_input("region names must cover every region");
    }
  }
  constexpr std::uint32_t kUnset = ~std::uint32_t{0};
  parents_.resize(levels_.size() - 1);
  for (std::size_t k = 0; k + 1 < levels_.size(); ++k) {
    auto& parent = parents_[k];
    parent.assign(counts_[k], kUnset);
    for (std::size_t u = 0; u < n; ++u) {
      const auto child = levels_[k][u];
      const auto up = levels_[k + 1][u];
      if (parent[child] == kUnset) {
        parent[child] = up;
      } else if (parent[child] != up) {
        detail::throw_input("nesting violated: region " + region_name(k, child) + " at level " +
                            std::to_string(k + 1) + " lies in both " + region_name(k + 1, parent[child]) +
                            " and " + region_name(k + 1, up) + " at level " + std::to_string(k + 2));
      }
    }
  }
}

std::string RegionTree::region_name(std::size_t level, std::uint32_t region) const {
  if (!names_.empty()) return names_.at(level).at(region);
  return std::to_string(region);
}

std::vector<double> RegionTree::region_populations(std::span<const GeoUnit> units, std::size_t level) const {
  if (units.size() != num_units()) detail::throw_input("unit count does not match region tree");
  std::vector<double> pop(region_count(level), 0.0);
  const auto& assign = levels_.at(level);
  for (std::size_t u = 0; u < units.size(); ++u) pop[assign[u]] += units[u].population;
  return pop;
}

RegionTree RegionTree::with_unit_level() const {
  std::vector<std::vector<std::uint32_t>> levels;
  levels.reserve(levels_.size() + 1);
  std::vector<std::uint32_t> own(num_units());
  std::iota(own.begin(), own.end(), 0u);
  levels.push_back(std::move(own));
  levels.insert(levels.end(), levels_.begin(), levels_.end());
  std::vector<std::vector<std::string>> names;
  if (!names_.empty()) {
    std::vector<std::string> unit_names(num_units());
    for (std::size_t u = 0; u < num_units(); ++u) unit_names[u] = "unit" + std::to_string(u);
    names.push_back(std::move(unit_names));
    names.insert(names.end(), names_.begin(), names_.end());
  }
  return RegionTree(std::move(levels), std::move(names));
}

RegionTree RegionTree::permuted(std::span<const std::size_t> order) const {
  if (order.size() != num_units()) detail::throw_input("permutation size does not match region tree");
  std::vector<bool> seen(order.size(), false);
  for (auto o : order) {
    if (o >= order.size() || seen[o]) detail::throw_input("order is not a permutation of the units");
    seen[o] = true;
  }
  auto levels = levels_;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    for (std::size_t i = 0; i < order.size(); ++i) levels[k][i] = levels_[k].at(order[i]);
  }
  return RegionTree(std::move(levels), names_);
}

namespace {

void check_build_args(std::span<const GeoUnit> units, int depth) {
  if (units.empty()) detail::throw_input("cannot build a hierarchy over zero units");
  if (depth < 1) detail::throw_input("hierarchy depth must be at least 1");
  if (depth >= 63 || (std::size_t{1} << depth) > units.size()) {
    detail::throw_input("depth " + std::to_string(depth) + " needs at least 2^depth units, have " +
                        std::to_string(units.size()));
  }
  for (const auto& u : units) validate_unit(u);
}

}  // namespace

RegionTree build_kdtree_hierarchy(std::span<const GeoUnit> units, int depth) {
  check_build_args(units, depth);
  const std::size_t n = units.size();
  const auto d = static_cast<std::size_t>(depth);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Blocks of `order` that form the regions at the current depth, as [begin, end).
  std::vector<std::pair<std::size_t, std::size_t>> blocks{{0, n}};
  std::vector<std::vector<std::uint32_t>> levels(d, std::vector<std::uint32_t>(n));

  for (std::size_t depth_from_root = 0; depth_from_root < d; ++depth_from_root) {
    const std::size_t axis = depth_from_root % 2;
    std::vector<std::pair<std::size_t, std::size_t>> next;
    next.reserve(blocks.size() * 2);
    for (auto [begin, end] : blocks) {
      std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(begin),
                       order.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                         const double ca = units[a].coords[axis];
                         const double cb = units[b].coords[axis];
                         if (ca != cb) return ca < cb;
                         return units[a].id < units[b].id;
                       });
      const std::size_t mid = begin + (end - begin) / 2;
      next.emplace_back(begin, mid);
      next.emplace_back(mid, end);
    }
    blocks = std::move(next);
    // blocks.size() == 2^(depth_from_root+1); this is level index d-1-depth_from_root.
    auto& level = levels[d - 1 - depth_from_root];
    for (std::size_t r = 0; r < blocks.size(); ++r) {
      for (std::size_t i = blocks[r].first; i < blocks[r].second; ++i) {
        level[order[i]] = static_cast<std::uint32_t>(r);
      }
    }
  }
  return RegionTree(std::move(levels));
}

RegionTree build_random_hierarchy(std::span<const GeoUnit> units, int depth, std::uint64_t seed) {
  check_build_args(units, depth);
  const std::size_t n = units.size();
  const auto d = static_cast<std::size_t>(depth);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<std::uint32_t>> levels(d, std::vector<std::uint32_t>(n));
  for (std::size_t depth_from_root = 1; depth_from_root <= d; ++depth_from_root) {
    const std::size_t groups = std::size_t{1} << depth_from_root;
    auto& level = levels[d - depth_from_root];
    for (std::size_t p = 0; p < n; ++p) level[order[p]] = static_cast<std::uint32_t>(p * groups / n);
  }
  return RegionTree(std::move(levels));
}

void write_assignment_csv(std::ostream& out, const RegionTree& tree, std::span<const GeoUnit> units) {
  if (units.size() != tree.num_units()) detail::throw_input("unit count does not match region tree");
  std::vector<std::string> header{"unit_id"};
  for (std::size_t k = 0; k < tree.num_levels(); ++k) header.push_back("level_" + std::to_string(k + 1));
  csv::write_row(out, header);
  for (std::size_t u = 0; u < units.size(); ++u) {
    std::vector<std::string> row{units[u].id};
    for (std::size_t k = 0; k < tree.num_levels(); ++k) row.push_back(tree.region_name(k, tree.region_of(u, k)));
    csv::write_row(out, row);
  }
}

}  // namespace mlpolar
