#include "gcimpute/table_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "gcimpute/errors.hpp"

namespace gcimpute {

namespace {

constexpr std::string_view kKindDirective = "#kind:";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_cell(std::string_view cell, std::size_t line) {
  if (cell.empty()) return kMissing;
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v))
    throw ParseError(line, "not a finite number: '" + std::string(cell) + "'");
  return v;
}

}  // namespace

std::vector<ColumnKind> parse_schema(std::string_view text) {
  std::vector<ColumnKind> kinds;
  for (auto tok : split(trim(text))) kinds.push_back(ColumnKind::parse(tok));
  return kinds;
}

std::string format_schema(const std::vector<ColumnKind>& kinds) {
  std::string s;
  for (std::size_t j = 0; j < kinds.size(); ++j) {
    if (j) s += ',';
    s += kinds[j].to_string();
  }
  return s;
}

Table read_table(std::istream& in) {
  Table t;
  std::vector<std::vector<double>> rows;
  bool have_header = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      if (view.starts_with(kKindDirective)) {
        if (have_header) throw ParseError(lineno, "kind directive after the header");
        try {
          t.kinds = parse_schema(view.substr(kKindDirective.size()));
        } catch (const SchemaError& e) {
          throw ParseError(lineno, e.what());
        }
      }
      continue;
    }
    const auto cells = split(view);
    if (!have_header) {
      for (auto c : cells) t.names.emplace_back(c);
      if (!t.kinds.empty() && t.kinds.size() != t.names.size())
        throw ParseError(lineno, "header has " + std::to_string(t.names.size()) +
                                     " columns but the kind directive lists " +
                                     std::to_string(t.kinds.size()));
      have_header = true;
      continue;
    }
    if (cells.size() != t.names.size())
      throw ParseError(lineno, "expected " + std::to_string(t.names.size()) + " fields, got " +
                                   std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const double v = parse_cell(cells[j], lineno);
      if (!t.kinds.empty() && !is_missing(v) && !t.kinds[j].is_valid_level(v))
        throw ParseError(lineno, "value " + std::string(cells[j]) + " is not a level of column " +
                                     t.names[j] + " (" + t.kinds[j].to_string() + ")");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (!have_header) throw ParseError(lineno, "missing header row");
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < t.names.size(); ++j)
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return t;
}

Table read_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path);
  return read_table(in);
}

std::string format_double(double v) {
  if (is_missing(v)) return {};
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

void write_table(std::ostream& out, const Table& table, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  if (!table.kinds.empty()) out << kKindDirective << ' ' << format_schema(table.kinds) << '\n';
  for (std::size_t j = 0; j < table.names.size(); ++j) out << (j ? "," : "") << table.names[j];
  out << '\n';
  std::string line;
  for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
    line.clear();
    for (Eigen::Index j = 0; j < table.values.cols(); ++j) {
      if (j) line += ',';
      line += format_double(table.values(i, j));
    }
    out << line << '\n';
  }
}

void write_table_file(const std::string& path, const Table& table,
                      const std::vector<std::string>& comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write " + path);
  write_table(out, table, comments);
  if (!out) throw SchemaError("write failed for " + path);
}

void check_against_schema(const Table& table, const std::vector<ColumnKind>& kinds) {
  if (kinds.size() != static_cast<std::size_t>(table.values.cols()))
    throw SchemaError("schema lists " + std::to_string(kinds.size()) + " columns, data has " +
                      std::to_string(table.values.cols()));
  for (Eigen::Index i = 0; i < table.values.rows(); ++i)
    for (Eigen::Index j = 0; j < table.values.cols(); ++j) {
      const double v = table.values(i, j);
      if (!is_missing(v) && !kinds[static_cast<std::size_t>(j)].is_valid_level(v))
        throw SchemaError("data row " + std::to_string(i + 1) + ": value " + format_double(v) +
                          " is not valid for column " + table.names[static_cast<std::size_t>(j)]);
    }
}

Table mask_table(const Mask& mask, const std::vector<std::string>& names) {
  Table t;
  t.names = names;
  t.values = mask.cast<double>();
  return t;
}

Mask table_to_mask(const Table& table) {
  for (Eigen::Index i = 0; i < table.values.size(); ++i) {
    const double v = table.values.data()[i];
    if (v != 0.0 && v != 1.0) throw SchemaError("mask cells must be 0 or 1");
  }
  return table.values.array() != 0.0;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string provenance_line(std::string_view config_text, std::uint64_t seed) {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(config_text)));
  return std::string("gcimpute config=") + hex + " seed=" + std::to_string(seed);
}

}  // namespace gcimpute
