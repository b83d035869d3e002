#include "gcimpute/snapshot.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "gcimpute/errors.hpp"
#include "gcimpute/table_io.hpp"

namespace gcimpute {

namespace {

constexpr const char* kMagic = "gcimpute-snapshot";
constexpr int kVersion = 1;

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next line split as "<key> <rest>"; the key must match.
  std::string expect(const std::string& key) {
    std::string line;
    if (!std::getline(in_, line)) throw ParseError(line_ + 1, "snapshot ends before '" + key + "'");
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind(key, 0) != 0 || (line.size() > key.size() && line[key.size()] != ' '))
      throw ParseError(line_, "expected '" + key + "'");
    return line.size() > key.size() ? line.substr(key.size() + 1) : std::string{};
  }

  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

std::vector<double> parse_doubles(const std::string& text, std::size_t line) {
  std::vector<double> out;
  const char* p = text.data();
  const char* end = p + text.size();
  while (p < end) {
    while (p < end && *p == ' ') ++p;
    if (p == end) break;
    double v = 0.0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc{}) throw ParseError(line, "bad number in snapshot");
    out.push_back(v);
    p = next;
  }
  return out;
}

std::uint64_t parse_count(const std::string& text, std::size_t line) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ParseError(line, "bad count '" + text + "'");
  return v;
}

std::string join(auto begin, auto end) {
  std::string s;
  for (auto it = begin; it != end; ++it) {
    if (!s.empty()) s += ' ';
    s += format_double(*it);
  }
  return s;
}

}  // namespace

void save_snapshot(std::ostream& out, const OnlineEmState& state) {
  const auto& m = state.model;
  const auto p = static_cast<Eigen::Index>(m.dim());
  out << kMagic << ' ' << kVersion << '\n';
  out << "p " << p << '\n';
  out << "t " << state.t << '\n';
  out << "schedule " << (state.schedule.is_constant() ? "constant " : "decaying ")
      << format_double(state.schedule.parameter()) << ' '
      << (state.schedule.full_first_step() ? 1 : 0) << '\n';
  out << "update_marginals " << (state.update_marginals ? 1 : 0) << '\n';
  out << "kinds " << format_schema(m.kinds()) << '\n';
  for (Eigen::Index i = 0; i < p; ++i) {
    std::vector<double> row(m.sigma.row(i).begin(), m.sigma.row(i).end());
    out << "sigma " << join(row.begin(), row.end()) << '\n';
  }
  for (const auto& mg : m.marginals) {
    out << "name " << mg.name() << '\n';
    out << "window " << mg.capacity() << ' ' << mg.observed_count() << '\n';
    out << "values " << join(mg.window().begin(), mg.window().end()) << '\n';
  }
  out << "end\n";
}

OnlineEmState load_snapshot(std::istream& in) {
  LineReader r(in);
  const auto version = r.expect(kMagic);
  if (version != std::to_string(kVersion))
    throw ParseError(r.line(), "unsupported snapshot version " + version);
  const auto p = parse_count(r.expect("p"), r.line());
  const auto t = parse_count(r.expect("t"), r.line());

  std::istringstream sched(r.expect("schedule"));
  std::string type;
  double param = 0.0;
  int full = 0;
  if (!(sched >> type >> param >> full) || (type != "constant" && type != "decaying"))
    throw ParseError(r.line(), "bad schedule");
  auto schedule = type == "constant" ? StepSchedule::constant(param) : StepSchedule::decaying(param);
  schedule.with_full_first_step(full != 0);
  const bool update_marginals = parse_count(r.expect("update_marginals"), r.line()) != 0;

  std::vector<ColumnKind> kinds;
  try {
    kinds = parse_schema(r.expect("kinds"));
  } catch (const SchemaError& e) {
    throw ParseError(r.line(), e.what());
  }
  if (kinds.size() != p) throw ParseError(r.line(), "kind count differs from p");

  const auto n = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd sigma(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = parse_doubles(r.expect("sigma"), r.line());
    if (row.size() != p) throw ParseError(r.line(), "sigma row has the wrong length");
    for (Eigen::Index j = 0; j < n; ++j) sigma(i, j) = row[static_cast<std::size_t>(j)];
  }

  std::vector<MarginalModel> marginals;
  for (std::size_t j = 0; j < p; ++j) {
    auto name = r.expect("name");
    std::istringstream win(r.expect("window"));
    std::size_t capacity = 0;
    std::uint64_t observed = 0;
    if (!(win >> capacity >> observed)) throw ParseError(r.line(), "bad window line");
    const auto values = parse_doubles(r.expect("values"), r.line());
    try {
      marginals.push_back(
          MarginalModel::restore(kinds[j], capacity, std::move(name), observed, values));
    } catch (const Error& e) {
      throw ParseError(r.line(), e.what());
    }
  }
  r.expect("end");

  OnlineEmState state{CopulaModel{std::move(sigma), std::move(marginals)}, t, schedule,
                      update_marginals};
  try {
    state.model.validate();
  } catch (const DomainError& e) {
    throw ParseError(r.line(), std::string("snapshot correlation invalid: ") + e.what());
  }
  return state;
}

void save_snapshot_file(const std::string& path, const OnlineEmState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write " + path);
  save_snapshot(out, state);
}

OnlineEmState load_snapshot_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path);
  return load_snapshot(in);
}

}  // namespace gcimpute
