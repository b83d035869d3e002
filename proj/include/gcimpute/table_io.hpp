#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gcimpute/marginals.hpp"
#include "gcimpute/synth.hpp"

namespace gcimpute {

/// A CSV table: named columns, optional kinds, NaN for empty cells.
struct Table {
  std::vector<std::string> names;
  /// Empty when the file had no kind directive.
  std::vector<ColumnKind> kinds;
  Eigen::MatrixXd values;
};

/// Comma-separated kind tokens, e.g. "cont,ord5,bin".
std::vector<ColumnKind> parse_schema(std::string_view text);
std::string format_schema(const std::vector<ColumnKind>& kinds);

/// Reads a header row of column names followed by numeric rows. Lines
/// starting with '#' are comments, except a "#kind:" directive which sets
/// the kinds. Errors carry the 1-based line number.
Table read_table(std::istream& in);
Table read_table_file(const std::string& path);

/// Writes optional '#' comment lines, the kind directive (when kinds are
/// set), the header and the rows. Doubles use the shortest round-trip form.
void write_table(std::ostream& out, const Table& table,
                 const std::vector<std::string>& comments = {});
void write_table_file(const std::string& path, const Table& table,
                      const std::vector<std::string>& comments = {});

/// Checks every non-missing cell against its column kind.
void check_against_schema(const Table& table, const std::vector<ColumnKind>& kinds);

Table mask_table(const Mask& mask, const std::vector<std::string>& names);
Mask table_to_mask(const Table& table);

/// 64-bit FNV-1a, used to fingerprint run configurations.
std::uint64_t fnv1a(std::string_view text);
/// "gcimpute config=<16 hex digits> seed=<seed>" (without the '#').
std::string provenance_line(std::string_view config_text, std::uint64_t seed);

std::string format_double(double v);

}  // namespace gcimpute
