#include "mlpolar/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "mlpolar/csv.hpp"
#include "mlpolar/errors.hpp"

namespace mlpolar {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  detail::throw_input("config key '" + key + "': expected true or false, got '" + v + "'");
}

}  // namespace

ReturnsSchema parse_schema_config(std::istream& in) {
  ReturnsSchema schema;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) detail::throw_input("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "id") {
      schema.id_column = value;
    } else if (key == "latitude") {
      schema.latitude_column = value;
    } else if (key == "longitude") {
      schema.longitude_column = value;
    } else if (key == "votes_a") {
      schema.votes_a_column = value;
    } else if (key == "votes_b") {
      schema.votes_b_column = value;
    } else if (key == "total_votes") {
      schema.total_column = value;
    } else if (key == "levels") {
      schema.level_columns.clear();
      for (auto& f : csv::split_line(value)) {
        if (!f.empty()) schema.level_columns.push_back(f);
      }
    } else if (key == "denominator") {
      if (value == "total") {
        schema.denominator = ShareDenominator::kTotalVotes;
      } else if (value == "two_party") {
        schema.denominator = ShareDenominator::kTwoParty;
      } else {
        detail::throw_input("config key 'denominator': expected total or two_party, got '" + value + "'");
      }
    } else if (key == "strict") {
      schema.strict = parse_bool(value, key);
    } else {
      detail::throw_input("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  return schema;
}

ReturnsSchema load_schema_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) detail::throw_input("cannot open config '" + path + "'");
  return parse_schema_config(in);
}

std::string check_row(const ReturnsRow& row) {
  if (row.id.empty()) return "empty unit id";
  if (row.votes_a < 0) return "votes_a is negative";
  if (row.votes_b < 0) return "votes_b is negative";
  if (row.total_votes <= 0) return "total_votes must be positive";
  if (row.votes_a + row.votes_b > row.total_votes) return "votes_a + votes_b exceeds total_votes";
  if (!(row.latitude >= -90.0 && row.latitude <= 90.0)) return "latitude outside [-90, 90]";
  if (!(row.longitude >= -180.0 && row.longitude <= 180.0)) return "longitude outside [-180, 180]";
  return {};
}

GeoUnit to_unit(const ReturnsRow& row, ShareDenominator denominator) {
  GeoUnit u;
  u.id = row.id;
  u.coords = {row.longitude, row.latitude};
  const std::int64_t denom =
      denominator == ShareDenominator::kTotalVotes ? row.total_votes : row.votes_a + row.votes_b;
  if (denom <= 0) detail::throw_input("unit '" + row.id + "': share undefined (zero denominator)");
  u.population = static_cast<double>(denom);
  u.value = {static_cast<double>(row.votes_a) / static_cast<double>(denom)};
  return u;
}

ReturnsTable load_returns(std::istream& in, const ReturnsSchema& schema) {
  const auto table = csv::read_stream(in);
  std::vector<std::string> missing;
  auto col = [&](const std::string& name) {
    const int c = table.column(name);
    if (c < 0) missing.push_back(name);
    return c;
  };
  const int c_id = col(schema.id_column);
  const int c_lat = col(schema.latitude_column);
  const int c_lon = col(schema.longitude_column);
  const int c_a = col(schema.votes_a_column);
  const int c_b = col(schema.votes_b_column);
  const int c_total = col(schema.total_column);
  std::vector<int> c_levels;
  for (const auto& l : schema.level_columns) c_levels.push_back(col(l));
  if (!missing.empty()) {
    std::string msg = "returns file is missing column(s):";
    for (const auto& m : missing) msg += " " + m;
    detail::throw_input(msg);
  }
  if (table.rows.empty()) detail::throw_input("returns file has no data rows");

  ReturnsTable out;
  for (const auto& [line, fields] : table.rows) {
    std::string error;
    ReturnsRow row;
    auto field = [&](int c) -> const std::string& {
      static const std::string empty;
      return static_cast<std::size_t>(c) < fields.size() ? fields[static_cast<std::size_t>(c)] : empty;
    };
    auto number = [&](int c, const char* what, double& v) {
      if (error.empty() && !csv::parse_double(field(c), v)) error = std::string("unparsable ") + what + " '" + field(c) + "'";
    };
    auto integer = [&](int c, const char* what, std::int64_t& v) {
      if (error.empty() && !csv::parse_int64(field(c), v)) error = std::string("unparsable ") + what + " '" + field(c) + "'";
    };
    row.id = field(c_id);
    number(c_lat, "latitude", row.latitude);
    number(c_lon, "longitude", row.longitude);
    integer(c_a, "votes_a", row.votes_a);
    integer(c_b, "votes_b", row.votes_b);
    integer(c_total, "total_votes", row.total_votes);
    for (std::size_t k = 0; k < c_levels.size() && error.empty(); ++k) {
      row.regions.push_back(field(c_levels[k]));
      if (row.regions.back().empty()) error = "empty region id for level '" + schema.level_columns[k] + "'";
    }
    if (error.empty()) error = check_row(row);
    if (error.empty() && schema.denominator == ShareDenominator::kTwoParty && row.votes_a + row.votes_b == 0) {
      error = "two-party share undefined (no votes for either party)";
    }
    if (!error.empty()) {
      if (schema.strict) detail::throw_input("line " + std::to_string(line) + ": " + error);
      out.rejected.push_back({line, error});
      continue;
    }
    out.units.push_back(to_unit(row, schema.denominator));
    out.rows.push_back(std::move(row));
  }
  if (out.rows.empty()) detail::throw_input("returns file has no valid rows");
  return out;
}

ReturnsTable load_returns(const std::string& path, const ReturnsSchema& schema) {
  std::ifstream in(path);
  if (!in) detail::throw_input("cannot open returns file '" + path + "'");
  return load_returns(in, schema);
}

void write_returns(std::ostream& out, const std::vector<ReturnsRow>& rows, const ReturnsSchema& schema) {
  std::vector<std::string> header{schema.id_column,      schema.latitude_column, schema.longitude_column,
                                  schema.votes_a_column, schema.votes_b_column,  schema.total_column};
  header.insert(header.end(), schema.level_columns.begin(), schema.level_columns.end());
  csv::write_row(out, header);
  for (const auto& r : rows) {
    if (r.regions.size() != schema.level_columns.size()) detail::throw_input("row region count does not match schema levels");
    std::vector<std::string> f{r.id,
                               csv::format_double(r.latitude),
                               csv::format_double(r.longitude),
                               std::to_string(r.votes_a),
                               std::to_string(r.votes_b),
                               std::to_string(r.total_votes)};
    f.insert(f.end(), r.regions.begin(), r.regions.end());
    csv::write_row(out, f);
  }
}

RegionTree load_assigned_hierarchy(const std::vector<ReturnsRow>& rows, const std::vector<std::string>& level_names) {
  if (rows.empty()) detail::throw_input("no rows to build a hierarchy from");
  const std::size_t levels = rows.front().regions.size();
  if (levels == 0) detail::throw_input("rows carry no region columns");
  for (const auto& r : rows) {
    if (r.regions.size() != levels) detail::throw_input("unit '" + r.id + "' lacks some region ids");
  }
  std::vector<std::vector<std::uint32_t>> assign(levels, std::vector<std::uint32_t>(rows.size()));
  std::vector<std::vector<std::string>> names(levels);
  for (std::size_t k = 0; k < levels; ++k) {
    std::map<std::string, std::uint32_t> ids;
    for (const auto& r : rows) ids.emplace(r.regions[k], 0);
    std::uint32_t next = 0;
    for (auto& [name, id] : ids) {
      id = next++;
      names[k].push_back(name);
    }
    for (std::size_t u = 0; u < rows.size(); ++u) assign[k][u] = ids.at(rows[u].regions[k]);
  }
  try {
    return RegionTree(std::move(assign), std::move(names));
  } catch (const InputError& e) {
    if (level_names.empty()) throw;
    std::string levels_desc;
    for (const auto& l : level_names) levels_desc += (levels_desc.empty() ? "" : ",") + l;
    detail::throw_input(std::string(e.what()) + " (levels: " + levels_desc + ")");
  }
}

void write_units(std::ostream& out, const std::vector<GeoUnit>& units) {
  const std::size_t d = units.empty() ? 1 : units.front().dimension();
  std::vector<std::string> header{"id", "x", "y", "population"};
  for (std::size_t a = 0; a < d; ++a) header.push_back("v" + std::to_string(a));
  csv::write_row(out, header);
  for (const auto& u : units) {
    if (u.dimension() != d) detail::throw_input("units differ in value dimension");
    std::vector<std::string> f{u.id, csv::format_double(u.coords[0]), csv::format_double(u.coords[1]),
                               csv::format_double(u.population)};
    for (double v : u.value) f.push_back(csv::format_double(v));
    csv::write_row(out, f);
  }
}

std::vector<GeoUnit> load_units(std::istream& in) {
  const auto table = csv::read_stream(in);
  const int c_id = table.column("id");
  const int c_x = table.column("x");
  const int c_y = table.column("y");
  const int c_pop = table.column("population");
  if (c_id < 0 || c_x < 0 || c_y < 0 || c_pop < 0) detail::throw_input("unit table needs columns id, x, y, population");
  std::vector<int> c_vals;
  for (std::size_t a = 0;; ++a) {
    const int c = table.column("v" + std::to_string(a));
    if (c < 0) break;
    c_vals.push_back(c);
  }
  if (c_vals.empty()) detail::throw_input("unit table needs value columns v0, v1, ...");
  std::vector<GeoUnit> units;
  for (const auto& [line, fields] : table.rows) {
    auto get = [&](int c) -> double {
      double v = 0.0;
      if (static_cast<std::size_t>(c) >= fields.size() || !csv::parse_double(fields[static_cast<std::size_t>(c)], v)) {
        detail::throw_input("line " + std::to_string(line) + ": unparsable number");
      }
      return v;
    };
    GeoUnit u;
    u.id = static_cast<std::size_t>(c_id) < fields.size() ? fields[static_cast<std::size_t>(c_id)] : "";
    u.coords = {get(c_x), get(c_y)};
    u.population = get(c_pop);
    for (int c : c_vals) u.value.push_back(get(c));
    try {
      validate_unit(u);
    } catch (const InputError& e) {
      detail::throw_input("line " + std::to_string(line) + ": " + e.what());
    }
    units.push_back(std::move(u));
  }
  if (units.empty()) detail::throw_input("unit table has no rows");
  return units;
}

std::vector<GeoUnit> load_units(const std::string& path) {
  std::ifstream in(path);
  if (!in) detail::throw_input("cannot open unit table '" + path + "'");
  return load_units(in);
}

SynthGeography synth_geography(const SynthConfig& config) {
  if (config.locales < 2) detail::throw_input("synthetic geography needs at least 2 locales");
  if (config.per_locale < 2) detail::throw_input("synthetic geography needs at least 2 voters per locale");
  const auto& mix = config.mixture;
  if (!(mix.sigma >= 0.0) || !(mix.pi_a >= 0.0 && mix.pi_a <= 1.0)) detail::throw_input("invalid mixture parameters");

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(config.locales))));
  const auto a_locales = static_cast<std::size_t>(std::llround(mix.pi_a * static_cast<double>(config.locales)));

  SynthGeography g;
  std::vector<std::uint32_t> locale_of;
  g.units.reserve(config.locales * config.per_locale);
  for (std::size_t l = 0; l < config.locales; ++l) {
    const double cx = static_cast<double>(l % side);
    const double cy = static_cast<double>(l / side);
    for (std::size_t k = 0; k < config.per_locale; ++k) {
      bool is_a = false;
      if (config.mode == SynthMode::kMixed) {
        is_a = uni(rng) < mix.pi_a;
      } else {
        is_a = l < a_locales;
      }
      const double value = (is_a ? mix.mu_a : mix.mu_b) + mix.sigma * normal(rng);
      GeoUnit u;
      u.id = "l" + std::to_string(l) + "_" + std::to_string(k);
      u.coords = {cx + 0.1 + 0.8 * uni(rng), cy + 0.1 + 0.8 * uni(rng)};
      u.population = 1.0;
      u.value = {value};
      g.units.push_back(std::move(u));
      locale_of.push_back(static_cast<std::uint32_t>(l));
    }
  }
  g.tree = RegionTree({std::move(locale_of)});
  return g;
}

}  // namespace mlpolar
