// gcimpute: simulate mixed-type streams, impute them with the Gaussian copula,
// and flag correlation change points.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gcimpute/copula_em.hpp"
#include "gcimpute/cpd.hpp"
#include "gcimpute/errors.hpp"
#include "gcimpute/metrics.hpp"
#include "gcimpute/snapshot.hpp"
#include "gcimpute/synth.hpp"
#include "gcimpute/table_io.hpp"

namespace fs = std::filesystem;
using namespace gcimpute;

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kNumerical = 4 };

// Bad flags or flag combinations, as opposed to bad input data.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string input;
  std::string schema;
  std::string out_dir = ".";
  std::size_t window = kDefaultWindow;
  std::size_t batch = 0;
  std::optional<double> gamma;
  std::optional<double> gamma_c;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string snapshot_in;
  std::string snapshot_out;
};

struct SimulateOpts {
  SynthConfig cfg;
  std::string mechanism = "mcar";
  std::string out_dir = ".";
};

struct ImputeOpts {
  Common c;
  std::string mode = "online";
  std::size_t passes = 1;
  std::string truth;
  std::string mask;
};

struct DetectOpts {
  Common c;
  std::size_t mc_samples = 99;
  double alpha = 0.05;
  std::size_t burn_in = 3;
  std::size_t warmup = 5;
  bool biased_p = false;
};

void add_common(CLI::App* app, Common& c, const char* batch_help) {
  app->add_option("-i,--input", c.input, "input CSV (empty cell = missing)")->required();
  app->add_option("--schema", c.schema,
                  "column kinds, e.g. cont,ord5,bin (overrides the #kind: line)");
  app->add_option("-o,--out-dir", c.out_dir, "output directory")->capture_default_str();
  app->add_option("--window", c.window, "marginal window size")->capture_default_str();
  app->add_option("--batch", c.batch, batch_help);
  app->add_option("--gamma", c.gamma, "constant step size in (0,1)");
  app->add_option("--gamma-c", c.gamma_c, "decaying step size c/(t+c)");
  app->add_option("--seed", c.seed, "random seed")->capture_default_str();
  app->add_option("--workers", c.workers, "worker threads")->capture_default_str();
  app->add_option("--snapshot-in", c.snapshot_in, "resume from a saved state");
  app->add_option("--snapshot-out", c.snapshot_out, "save the final state");
}

std::string header_line(const std::string& config_text, std::uint64_t seed) {
  return provenance_line(config_text, seed);
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
}

std::vector<std::string> column_names(std::size_t p) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

StepSchedule schedule_from(const Common& c, StepSchedule fallback) {
  if (c.gamma && c.gamma_c) throw ConfigError("--gamma and --gamma-c are exclusive");
  try {
    if (c.gamma) return StepSchedule::constant(*c.gamma);
    if (c.gamma_c) return StepSchedule::decaying(*c.gamma_c);
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  return fallback;
}

// Loads the input table and settles its column kinds.
Table load_input(const Common& c) {
  std::vector<ColumnKind> flag_kinds;
  if (!c.schema.empty()) {
    try {
      flag_kinds = parse_schema(c.schema);
    } catch (const SchemaError& e) {
      throw ConfigError(std::string("--schema: ") + e.what());
    }
  }
  Table t = read_table_file(c.input);
  if (!flag_kinds.empty()) {
    check_against_schema(t, flag_kinds);
    t.kinds = flag_kinds;
  }
  if (t.kinds.empty())
    throw ConfigError("no column kinds: pass --schema or add a '#kind:' line to the input");
  return t;
}

std::string describe(const Common& c, const std::string& extra) {
  std::ostringstream os;
  os << extra << " window=" << c.window << " batch=" << c.batch
     << " gamma=" << (c.gamma ? std::to_string(*c.gamma) : "-")
     << " gamma_c=" << (c.gamma_c ? std::to_string(*c.gamma_c) : "-")
     << " schema=" << c.schema << " snapshot_in=" << c.snapshot_in;
  return os.str();
}

OnlineEmState initial_state(const Common& c, const std::vector<ColumnKind>& kinds,
                            StepSchedule schedule) {
  if (c.snapshot_in.empty()) {
    OnlineEmState st{CopulaModel::cold_start(kinds, c.window)};
    st.schedule = schedule;
    return st;
  }
  auto st = load_snapshot_file(c.snapshot_in);
  if (st.model.kinds() != kinds)
    throw SchemaError("snapshot kinds " + format_schema(st.model.kinds()) +
                      " do not match the input " + format_schema(kinds));
  if (c.gamma || c.gamma_c) st.schedule = schedule;
  return st;
}

Table sigma_trace_table(const std::vector<std::pair<std::size_t, Eigen::MatrixXd>>& trace,
                        std::size_t p) {
  Table t;
  t.names.push_back("t");
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b)
      t.names.push_back("s" + std::to_string(a + 1) + "_" + std::to_string(b + 1));
  t.values.resize(static_cast<Eigen::Index>(trace.size()), static_cast<Eigen::Index>(p * p + 1));
  for (std::size_t r = 0; r < trace.size(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    t.values(row, 0) = static_cast<double>(trace[r].first);
    const auto& s = trace[r].second;
    for (Eigen::Index a = 0; a < s.rows(); ++a)
      for (Eigen::Index b = 0; b < s.cols(); ++b) t.values(row, 1 + a * s.cols() + b) = s(a, b);
  }
  return t;
}

int cmd_simulate(SimulateOpts& o) {
  if (o.mechanism == "mcar")
    o.cfg.mechanism = Mechanism::mcar;
  else if (o.mechanism == "mnar")
    o.cfg.mechanism = Mechanism::mnar;
  else
    throw ConfigError("--mechanism must be mcar or mnar");
  try {
    o.cfg.validate();
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  ensure_dir(o.out_dir);
  const auto s = generate_stream(o.cfg);

  std::ostringstream cfg;
  cfg << "simulate p_cont=" << o.cfg.p_cont << " p_ord=" << o.cfg.p_ord
      << " p_bin=" << o.cfg.p_bin << " levels=" << o.cfg.ordinal_levels
      << " n_per_segment=" << o.cfg.n_per_segment << " segments=" << o.cfg.segments
      << " missing_ratio=" << format_double(o.cfg.missing_ratio) << " mechanism=" << o.mechanism;
  const std::vector<std::string> head{header_line(cfg.str(), o.cfg.seed)};
  const auto names = column_names(o.cfg.dim());

  write_table_file(join_path(o.out_dir, "data.csv"), Table{names, s.kinds, s.observed}, head);
  write_table_file(join_path(o.out_dir, "truth.csv"), Table{names, s.kinds, s.truth}, head);
  write_table_file(join_path(o.out_dir, "mask.csv"), mask_table(s.mask, names), head);
  Table labels;
  labels.names = {"segment"};
  labels.values.resize(static_cast<Eigen::Index>(s.segment.size()), 1);
  for (std::size_t i = 0; i < s.segment.size(); ++i)
    labels.values(static_cast<Eigen::Index>(i), 0) = s.segment[i];
  write_table_file(join_path(o.out_dir, "labels.csv"), labels, head);
  std::cerr << "wrote " << s.truth.rows() << " rows x " << s.truth.cols() << " columns to "
            << o.out_dir << "\n";
  return kOk;
}

int cmd_impute(ImputeOpts& o) {
  auto& c = o.c;
  if (o.mode != "online" && o.mode != "minibatch" && o.mode != "offline")
    throw ConfigError("--mode must be online, minibatch or offline");
  if (c.batch == 0) c.batch = o.mode == "online" ? 40 : 100;
  if (o.truth.empty() != o.mask.empty())
    throw ConfigError("--truth and --mask go together");
  if (!c.snapshot_in.empty() && o.mode != "online")
    throw ConfigError("--snapshot-in needs --mode online");
  if (!c.snapshot_out.empty() && o.mode == "offline")
    throw ConfigError("--snapshot-out is not available for --mode offline");
  if (c.window == 0) throw ConfigError("--window must be positive");
  if (o.passes == 0) throw ConfigError("--passes must be positive");

  const Table input = load_input(c);
  const auto& kinds = input.kinds;
  const auto p = kinds.size();
  if (c.batch <= p)
    throw ConfigError("--batch " + std::to_string(c.batch) + " must exceed the " +
                      std::to_string(p) + " columns");
  const auto n = static_cast<std::size_t>(input.values.rows());
  if (n < c.batch && o.mode != "offline")
    throw ConfigError("input has fewer rows than one batch");

  std::optional<Eigen::MatrixXd> truth;
  std::optional<Mask> mask;
  if (!o.truth.empty()) {
    truth = read_table_file(o.truth).values;
    mask = table_to_mask(read_table_file(o.mask));
    if (truth->rows() != input.values.rows() || truth->cols() != input.values.cols() ||
        mask->rows() != truth->rows() || mask->cols() != truth->cols())
      throw SchemaError("truth and mask must have the shape of the input");
  }

  const Executor exec(c.workers);
  const std::string cfg_text =
      describe(c, "impute mode=" + o.mode + " passes=" + std::to_string(o.passes));
  const std::vector<std::string> head{header_line(cfg_text, c.seed)};
  ensure_dir(c.out_dir);

  Eigen::MatrixXd imputed(input.values.rows(), input.values.cols());
  std::vector<std::pair<std::size_t, Eigen::MatrixXd>> trace;
  const auto batches = partition_batches(n, c.batch, p);
  std::vector<std::pair<std::size_t, std::size_t>> scored_batches;
  std::optional<OnlineEmState> final_state;

  if (o.mode == "online") {
    auto st = initial_state(c, kinds, schedule_from(c, StepSchedule::constant(0.5)));
    for (const auto& [b, e] : batches) {
      const auto rows = static_cast<Eigen::Index>(e - b);
      const auto block = input.values.middleRows(static_cast<Eigen::Index>(b), rows);
      online_update(st, block, exec);
      imputed.middleRows(static_cast<Eigen::Index>(b), rows) = impute(st.model, block, exec);
      trace.emplace_back(st.t, st.model.sigma);
    }
    scored_batches = batches;
    final_state = std::move(st);
  } else if (o.mode == "minibatch") {
    OnlineEmState st;
    st.model.marginals = fit_marginals(input.values, kinds);
    st.model.sigma = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p),
                                               static_cast<Eigen::Index>(p));
    st.schedule = schedule_from(c, StepSchedule::decaying(5.0));
    st.update_marginals = false;
    for (std::size_t pass = 0; pass < o.passes; ++pass)
      for (const auto& [b, e] : batches) {
        online_update(st,
                      input.values.middleRows(static_cast<Eigen::Index>(b),
                                              static_cast<Eigen::Index>(e - b)),
                      exec);
        trace.emplace_back(st.t, st.model.sigma);
      }
    imputed = impute(st.model, input.values, exec);
    final_state = std::move(st);
  } else {
    int iters = 0;
    const auto model = fit_offline(input.values, kinds, {}, exec, &iters);
    trace.emplace_back(static_cast<std::size_t>(iters), model.sigma);
    imputed = impute(model, input.values, exec);
  }

  write_table_file(join_path(c.out_dir, "imputed.csv"), Table{input.names, kinds, imputed},
                   head);
  write_table_file(join_path(c.out_dir, "sigma_trace.csv"), sigma_trace_table(trace, p), head);
  if (!c.snapshot_out.empty() && final_state) save_snapshot_file(c.snapshot_out, *final_state);

  if (truth) {
    // Per-batch scores use each batch's own observed cells as the median reference.
    std::ofstream per(join_path(c.out_dir, "batch_scores.csv"));
    per << "# " << head[0] << "\n";
    per << "batch,first_row," << ScoreReport::delimited_header() << "\n";
    for (std::size_t k = 0; k < scored_batches.size(); ++k) {
      const auto [b, e] = scored_batches[k];
      const auto r0 = static_cast<Eigen::Index>(b);
      const auto rows = static_cast<Eigen::Index>(e - b);
      const Mask m = mask->middleRows(r0, rows);
      if (!m.any()) continue;
      const auto rep = score(imputed.middleRows(r0, rows), truth->middleRows(r0, rows), m, kinds,
                             input.values.middleRows(r0, rows), m);
      per << k + 1 << ',' << b << ',' << rep.delimited() << "\n";
    }
    const auto total = score(imputed, *truth, *mask, kinds, input.values, *mask);
    std::ofstream kv(join_path(c.out_dir, "scores.txt"));
    kv << "# " << head[0] << "\n" << total.key_values();
    std::cout << ScoreReport::delimited_header() << "\n" << total.delimited() << "\n";
  }
  return kOk;
}

int cmd_detect(DetectOpts& o) {
  auto& c = o.c;
  if (c.batch == 0) c.batch = 40;
  if (o.mc_samples == 0) throw ConfigError("--mc-samples must be positive");
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw ConfigError("--alpha must lie in (0, 1)");
  if (c.window == 0) throw ConfigError("--window must be positive");
  const Table input = load_input(c);
  const auto p = input.kinds.size();
  if (c.batch <= p)
    throw ConfigError("--batch " + std::to_string(c.batch) + " must exceed the " +
                      std::to_string(p) + " columns");
  if (c.snapshot_in.empty() && o.warmup == 0)
    throw ConfigError("--warmup must be at least 1 without --snapshot-in (marginals start empty)");

  DetectorConfig dc;
  dc.alpha = o.alpha;
  dc.burn_in = o.burn_in;
  dc.warmup = o.warmup;
  dc.test.replicates = o.mc_samples;
  dc.test.biased_p_value = o.biased_p;
  dc.test.seed = c.seed;

  std::ostringstream extra;
  extra << "detect B=" << o.mc_samples << " alpha=" << format_double(o.alpha)
        << " burn_in=" << o.burn_in << " warmup=" << o.warmup << " biased_p=" << o.biased_p;
  const std::string head = header_line(describe(c, extra.str()), c.seed);
  ensure_dir(c.out_dir);

  const Executor exec(c.workers);
  OnlineChangeDetector detector(
      initial_state(c, input.kinds, schedule_from(c, StepSchedule::constant(0.5))), dc, exec);
  std::ofstream report(join_path(c.out_dir, "detections.csv"));
  report << "# " << head << "\n";
  report << "t,first_row,statistic,p_value,alpha_t,decision\n";
  const double resolution = 1.0 / (static_cast<double>(o.mc_samples) + 1.0);
  std::size_t flagged = 0;
  for (const auto& [b, e] : partition_batches(static_cast<std::size_t>(input.values.rows()),
                                              c.batch, p)) {
    const auto d = detector.process(input.values.middleRows(static_cast<Eigen::Index>(b),
                                                            static_cast<Eigen::Index>(e - b)));
    if (d.alpha_below_resolution)
      std::cerr << "warning: batch " << d.t << ": alpha_t=" << format_double(*d.alpha_t)
                << " is below the smallest attainable p-value " << format_double(resolution)
                << "\n";
    report << d.t << ',' << b << ',' << format_double(d.statistic) << ','
           << (d.p_value ? format_double(*d.p_value) : "") << ','
           << (d.alpha_t ? format_double(*d.alpha_t) : "") << ',' << (d.decision ? 1 : 0)
           << "\n";
    if (d.decision) {
      ++flagged;
      std::cout << "change at batch " << d.t << " (row " << b << "), p=" << *d.p_value << "\n";
    }
  }
  if (!c.snapshot_out.empty()) save_snapshot_file(c.snapshot_out, detector.state());
  std::cerr << flagged << " change point(s) flagged\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian copula imputation and change-point detection for mixed data streams"};
  app.require_subcommand(1);

  SimulateOpts sim;
  auto* s = app.add_subcommand("simulate", "write a synthetic stream with planted changes");
  s->add_option("-o,--out-dir", sim.out_dir, "output directory")->capture_default_str();
  s->add_option("--p-cont", sim.cfg.p_cont)->capture_default_str();
  s->add_option("--p-ord", sim.cfg.p_ord)->capture_default_str();
  s->add_option("--p-bin", sim.cfg.p_bin)->capture_default_str();
  s->add_option("--levels", sim.cfg.ordinal_levels, "ordinal levels")->capture_default_str();
  s->add_option("--rows-per-segment", sim.cfg.n_per_segment)->capture_default_str();
  s->add_option("--segments", sim.cfg.segments, "each segment gets a new correlation")
      ->capture_default_str();
  s->add_option("--missing-ratio", sim.cfg.missing_ratio, "MCAR rate")->capture_default_str();
  s->add_option("--mechanism", sim.mechanism, "mcar or mnar")->capture_default_str();
  s->add_option("--seed", sim.cfg.seed)->capture_default_str();

  ImputeOpts imp;
  auto* i = app.add_subcommand("impute", "fill missing cells");
  add_common(i, imp.c, "rows per batch (default 40 online, 100 minibatch)");
  i->add_option("--mode", imp.mode, "online, minibatch or offline")->capture_default_str();
  i->add_option("--passes", imp.passes, "minibatch passes over the data")->capture_default_str();
  i->add_option("--truth", imp.truth, "ground truth CSV for scoring");
  i->add_option("--mask", imp.mask, "mask CSV (1 = masked) for scoring");

  DetectOpts det;
  auto* d = app.add_subcommand("detect", "flag correlation change points with online FDR control");
  add_common(d, det.c, "rows per batch (default 40)");
  d->add_option("--mc-samples", det.mc_samples, "Monte Carlo replicates B")->capture_default_str();
  d->add_option("--alpha", det.alpha, "target FDR")->capture_default_str();
  d->add_option("--burn-in", det.burn_in, "batches skipped after a detection")
      ->capture_default_str();
  d->add_option("--warmup", det.warmup, "leading batches used only for training")
      ->capture_default_str();
  d->add_flag("--biased-p", det.biased_p, "use #{s<=s_j}/(B+1), which can be 0");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (s->parsed()) return cmd_simulate(sim);
    if (i->parsed()) return cmd_impute(imp);
    return cmd_detect(det);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const PreconditionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << " (diagnostic " << e.diagnostic() << ")\n";
    return kNumerical;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
}
