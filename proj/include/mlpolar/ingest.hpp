#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mlpolar/election.hpp"
#include "mlpolar/geo_hierarchy.hpp"

namespace mlpolar {

enum class ShareDenominator {
  /// votes_a / total_votes (third-party votes count against a)
  kTotalVotes,
  /// votes_a / (votes_a + votes_b)
  kTwoParty,
};

/// Column mapping for a returns CSV.
///
/// A config file is a list of `key = value` lines; `#` starts a comment. Keys:
///   id, latitude, longitude, votes_a, votes_b, total_votes   column names
///   levels        comma-separated region columns, finest first (e.g. county,state)
///   denominator   total | two_party
///   strict        true | false
struct ReturnsSchema {
  std::string id_column = "id";
  std::string latitude_column = "lat";
  std::string longitude_column = "lon";
  std::string votes_a_column = "votes_a";
  std::string votes_b_column = "votes_b";
  std::string total_column = "total_votes";
  std::vector<std::string> level_columns;
  ShareDenominator denominator = ShareDenominator::kTotalVotes;
  /// Abort on the first bad row; otherwise skip it and record a diagnostic.
  bool strict = true;
};

ReturnsSchema load_schema_config(const std::string& path);
ReturnsSchema parse_schema_config(std::istream& in);

struct ReturnsRow {
  std::string id;
  double latitude = 0.0;
  double longitude = 0.0;
  std::int64_t votes_a = 0;
  std::int64_t votes_b = 0;
  std::int64_t total_votes = 0;
  /// Region ids in schema level order.
  std::vector<std::string> regions;
};

struct RowDiagnostic {
  std::size_t line = 0;
  std::string message;
};

struct ReturnsTable {
  std::vector<ReturnsRow> rows;
  /// value = share of a, population = the share denominator, coords = (longitude, latitude).
  std::vector<GeoUnit> units;
  std::vector<RowDiagnostic> rejected;
};

/// Checks vote counts and coordinate ranges; returns an empty string when valid.
std::string check_row(const ReturnsRow& row);

GeoUnit to_unit(const ReturnsRow& row, ShareDenominator denominator);

ReturnsTable load_returns(const std::string& path, const ReturnsSchema& schema = {});
ReturnsTable load_returns(std::istream& in, const ReturnsSchema& schema = {});

/// Writes rows under the schema's column names; load_returns reads them back unchanged.
void write_returns(std::ostream& out, const std::vector<ReturnsRow>& rows, const ReturnsSchema& schema = {});

/// RegionTree from pre-assigned region columns (finest first). Region ids are
/// numbered in sorted name order, so row order does not matter. Throws InputError
/// naming the ids when a region maps to two parents.
RegionTree load_assigned_hierarchy(const std::vector<ReturnsRow>& rows, const std::vector<std::string>& level_names = {});

/// Generic unit table: id, x, y, population, v0 .. v{d-1}.
void write_units(std::ostream& out, const std::vector<GeoUnit>& units);
std::vector<GeoUnit> load_units(const std::string& path);
std::vector<GeoUnit> load_units(std::istream& in);

enum class SynthMode { kMixed, kSegregated };

struct SynthConfig {
  SynthMode mode = SynthMode::kMixed;
  std::size_t locales = 16;
  std::size_t per_locale = 64;
  Mixture2 mixture = Mixture2::symmetric(1.0, 0.5);
  std::uint64_t seed = 1;
};

struct SynthGeography {
  std::vector<GeoUnit> units;
  /// One level: the locale of each unit.
  RegionTree tree;
};

/// Synthetic electorate of `locales` locales with `per_locale` unit-population
/// voters each. Mixed: every voter draws from the mixture. Segregated: the first
/// round(pi_a * locales) locales draw from N(mu_a, sigma), the rest from
/// N(mu_b, sigma), so the overall mixture weights are kept. Locale l sits at grid
/// cell (l mod side, l / side) with voters jittered inside the cell.
SynthGeography synth_geography(const SynthConfig& config);

}  // namespace mlpolar
