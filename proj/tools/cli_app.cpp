// Command-line front end: key-rate evaluation, tolerance and key-rate
// sweeps, chi_D optimization, and Monte Carlo sessions, emitted as CSV or
// JSON (12 significant digits, atomic file writes, deterministic output).

#include "cli_app.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include "cvqkd/analysis.hpp"
#include "cvqkd/rates.hpp"
#include "cvqkd/sim.hpp"
#include "cvqkd/version.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace cvqkd::cli {

namespace {

using nlohmann::ordered_json;

// Flag combinations that parse but make no sense; reported as usage
// errors (exit 2), unlike domain/numeric errors (exit 1).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------
// numeric formatting: everything numeric is printed with 12 significant
// digits; JSON carries doubles rounded to that precision (non-finite
// values become null).

std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

ordered_json num12(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::strtod(fmt12(v).c_str(), nullptr);
}

// ---------------------------------------------------------------------
// output sink: stdout by default; with --output, an atomic write
// (temp file + rename) under CVQKD_OUTPUT_DIR for relative paths.

std::filesystem::path resolve_output(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv("CVQKD_OUTPUT_DIR"); dir && *dir) {
      p = std::filesystem::path(dir) / p;
    }
  }
  return p;
}

void write_atomic(const std::filesystem::path& path,
                  const std::string& content) {
  if (const auto parent = path.parent_path(); !parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    os << content;
    os.flush();
    if (!os) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("failed to write " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

void deliver(const std::string& content, const std::string& output_path,
             std::ostream& out) {
  if (output_path.empty()) {
    out << content;
  } else {
    write_atomic(resolve_output(output_path), content);
  }
}

// ---------------------------------------------------------------------
// common flag groups

struct ChannelFlags {
  std::optional<double> T, loss_db, epsilon, chi_c;
};

void add_channel_flags(CLI::App* cmd, ChannelFlags& f) {
  cmd->add_option("--T", f.T, "channel transmittivity in (0,1]");
  cmd->add_option("--loss-db", f.loss_db,
                  "channel loss in dB (T = 10^(-dB/10))");
  cmd->add_option("--epsilon", f.epsilon,
                  "excess noise above the pure-loss floor (SNU)");
  cmd->add_option("--chi-c", f.chi_c,
                  "total added channel noise referred to the input (SNU)");
}

ChannelModel build_channel(const ChannelFlags& f) {
  if (f.T.has_value() == f.loss_db.has_value()) {
    throw UsageError("specify exactly one of --T and --loss-db");
  }
  if (f.epsilon.has_value() == f.chi_c.has_value()) {
    throw UsageError("specify exactly one of --epsilon and --chi-c");
  }
  const double T = f.T ? *f.T : std::pow(10.0, -*f.loss_db / 10.0);
  return f.epsilon ? ChannelModel::from_epsilon(T, *f.epsilon)
                   : ChannelModel::from_chi_c(T, *f.chi_c);
}

ordered_json channel_meta(const ChannelModel& ch) {
  ordered_json j;
  j["T"] = num12(ch.T());
  j["loss_db"] = num12(ch.loss_db());
  j["chi_c"] = num12(ch.chi_c());
  j["epsilon"] = num12(ch.epsilon());
  return j;
}

struct ProtocolFlags {
  std::string preset;
  std::string preparation;
  std::string measurement;
  std::optional<double> chi_d;
  bool dr = false;
  bool switching = false;
};

void add_protocol_flags(CLI::App* cmd, ProtocolFlags& f) {
  cmd->add_option("--preset", f.preset,
                  "protocol preset: squeezed-homodyne, squeezed-heterodyne, "
                  "coherent-homodyne, coherent-heterodyne");
  cmd->add_option("--preparation", f.preparation, "squeezed | coherent");
  cmd->add_option("--measurement", f.measurement, "homodyne | heterodyne");
  cmd->add_option("--chi-d", f.chi_d, "Bob's added detector noise (SNU)");
  cmd->add_flag("--dr", f.dr,
                "direct reconciliation (key distilled from Alice's data)");
  cmd->add_flag("--switching", f.switching,
                "randomly switched noisy homodyne (halves all rates)");
}

ProtocolConfig build_protocol(const ProtocolFlags& f, double V) {
  ProtocolConfig cfg;
  if (!f.preset.empty()) {
    if (!f.preparation.empty() || !f.measurement.empty()) {
      throw UsageError("--preset excludes --preparation/--measurement");
    }
    const auto p = preset_from_name(f.preset);
    if (!p) throw UsageError("unknown preset '" + f.preset + "'");
    cfg = make_preset(*p, V);
    if (f.chi_d) cfg.chi_D = *f.chi_d;  // other members of the family
  } else {
    if (f.preparation.empty() || f.measurement.empty()) {
      throw UsageError("specify --preset, or both --preparation and "
                       "--measurement");
    }
    if (f.preparation == "squeezed") {
      cfg.preparation = Preparation::Squeezed;
    } else if (f.preparation == "coherent") {
      cfg.preparation = Preparation::Coherent;
    } else {
      throw UsageError("unknown preparation '" + f.preparation + "'");
    }
    if (f.measurement == "homodyne") {
      cfg.measurement = Measurement::Homodyne;
    } else if (f.measurement == "heterodyne") {
      cfg.measurement = Measurement::Heterodyne;
    } else {
      throw UsageError("unknown measurement '" + f.measurement + "'");
    }
    cfg.V = V;
    if (f.chi_d) {
      cfg.chi_D = *f.chi_d;
    } else if (cfg.preparation == Preparation::Squeezed &&
               cfg.measurement == Measurement::Heterodyne) {
      cfg.chi_D = 1.0;  // heterodyne pins chi_D = 1
    } else {
      cfg.chi_D = 0.0;
    }
  }
  if (f.dr) cfg.reconciliation = Reconciliation::Direct;
  cfg.switching = f.switching;
  return cfg;
}

ordered_json protocol_meta(const ProtocolConfig& cfg) {
  ordered_json j;
  j["preparation"] =
      cfg.preparation == Preparation::Squeezed ? "squeezed" : "coherent";
  j["measurement"] =
      cfg.measurement == Measurement::Homodyne ? "homodyne" : "heterodyne";
  j["V"] = num12(cfg.V);
  j["chi_d"] = num12(cfg.chi_D);
  j["reconciliation"] =
      cfg.reconciliation == Reconciliation::Reverse ? "reverse" : "direct";
  j["switching"] = cfg.switching;
  return j;
}

struct GridFlags {
  std::optional<double> min, max, step;
};

void add_grid_flags(CLI::App* cmd, GridFlags& g) {
  cmd->add_option("--loss-db-min", g.min, "loss grid start (dB)");
  cmd->add_option("--loss-db-max", g.max, "loss grid end (dB, inclusive)");
  cmd->add_option("--loss-db-step", g.step, "loss grid step (dB)");
}

std::vector<double> build_grid(double min, double max, double step) {
  if (!(step > 0.0) || max < min) {
    throw UsageError("loss grid needs step > 0 and max >= min");
  }
  const auto count =
      static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = min + step * static_cast<double>(i);
  }
  return grid;
}

ordered_json grid_meta(double min, double max, double step,
                       std::size_t count) {
  ordered_json j;
  j["loss_db_min"] = num12(min);
  j["loss_db_max"] = num12(max);
  j["loss_db_step"] = num12(step);
  j["points"] = count;
  return j;
}

// ---------------------------------------------------------------------
// document assembly

ordered_json tolerances_meta() {
  ordered_json j;
  j["epsilon_bisection_interval"] = kEpsilonIntervalTol;
  j["rate_root"] = kRateRootTol;
  j["epsilon_search_max"] = kEpsilonSearchMax;
  j["chi_d_golden_section"] = kChiDTol;
  j["chi_d_cap"] = kChiDCap;
  j["large_v_relative"] = kLargeVRelTol;
  return j;
}

ordered_json base_meta(const std::string& command) {
  ordered_json meta;
  meta["command"] = command;
  meta["version"] = kVersion;
  meta["inputs"] = ordered_json::object();
  meta["tolerances"] = tolerances_meta();
  return meta;
}

// Single-row outputs (keyrate, optimize, simulate): ordered key/value
// pairs rendered as a one-row CSV table or a one-point JSON array.
using Row = std::vector<std::pair<std::string, double>>;

std::string row_csv(const Row& row) {
  std::string header, line;
  for (const auto& [key, value] : row) {
    if (!header.empty()) {
      header += ',';
      line += ',';
    }
    header += key;
    line += fmt12(value);
  }
  return header + "\n" + line + "\n";
}

ordered_json row_points(const Row& row) {
  ordered_json pt = ordered_json::object();
  for (const auto& [key, value] : row) pt[key] = num12(value);
  return ordered_json::array({pt});
}

std::string sweep_csv(const SweepResult& r) {
  std::string s = "loss_db";
  for (const auto& col : r.columns) s += "," + col;
  s += '\n';
  for (const CurvePoint& pt : r.points) {
    s += fmt12(pt.loss_db);
    for (const double v : pt.values) {
      s += ',';
      s += fmt12(v);
    }
    s += '\n';
  }
  return s;
}

ordered_json sweep_points(const SweepResult& r) {
  ordered_json points = ordered_json::array();
  for (const CurvePoint& pt : r.points) {
    ordered_json j;
    j["loss_db"] = num12(pt.loss_db);
    j["T"] = num12(pt.T);
    for (std::size_t c = 0; c < r.columns.size(); ++c) {
      j[r.columns[c]] = num12(pt.values[c]);
    }
    if (!pt.error.empty()) j["error"] = pt.error;
    points.push_back(std::move(j));
  }
  return points;
}

std::string render(const std::string& format, const ordered_json& meta,
                   const std::function<std::string()>& csv,
                   const std::function<ordered_json()>& points) {
  if (format == "csv") return csv();
  ordered_json doc;
  doc["meta"] = meta;
  doc["points"] = points();
  return doc.dump(2) + "\n";
}

void check_format(const std::string& format) {
  if (format != "csv" && format != "json") {
    throw UsageError("unknown format '" + format + "' (expected csv or "
                     "json)");
  }
}

// ---------------------------------------------------------------------
// figure presets: self-contained sweep specs reproducing the standard
// tolerable-noise (2a) and key-rate/optimal-noise (2b, 4a, 4b) curves.

struct FigureSweep {
  SweepSpec spec;
  ordered_json grid;  // for the meta block
};

FigureSweep figure_sweep(const std::string& id) {
  FigureSweep f;
  SweepSpec& s = f.spec;
  const double V_fig = 40.0;
  if (id == "2a") {
    s.kind = SweepKind::Tolerance;
    s.large_V = true;
    s.loss_db = build_grid(0.0, 20.0, 1.0);
    f.grid = grid_meta(0.0, 20.0, 1.0, s.loss_db.size());
    s.columns = {
        {"eps_max_squeezed_homodyne",
         ProtocolConfig::squeezed_homodyne(V_fig)},
        {"eps_max_squeezed_heterodyne",
         ProtocolConfig::squeezed_heterodyne(V_fig)},
        {"eps_max_coherent_homodyne",
         ProtocolConfig::coherent_homodyne(V_fig)},
        {"eps_max_coherent_heterodyne",
         ProtocolConfig::coherent_heterodyne(V_fig)},
        {"eps_max_optimal", std::nullopt},
    };
  } else if (id == "2b" || id == "4a") {
    s.kind = SweepKind::KeyRates;
    s.noise_is_epsilon = true;
    s.noise = 0.5;
    s.V = V_fig;
    s.loss_db = build_grid(0.0, 25.0, 0.25);
    f.grid = grid_meta(0.0, 25.0, 0.25, s.loss_db.size());
    const SweepSpec::Column chid0{"K_chiD0",
                                  ProtocolConfig::squeezed_homodyne(V_fig)};
    const SweepSpec::Column chid1{"K_chiD1",
                                  ProtocolConfig::squeezed_heterodyne(V_fig)};
    const SweepSpec::Column opt{"K_opt", std::nullopt};
    s.columns = id == "2b"
                    ? std::vector<SweepSpec::Column>{chid0, chid1, opt}
                    : std::vector<SweepSpec::Column>{opt, chid0, chid1};
  } else if (id == "4b") {
    s.kind = SweepKind::Optimize;
    s.noise_is_epsilon = true;
    s.noise = 0.5;
    s.V = V_fig;
    s.loss_db = build_grid(0.0, 25.0, 0.25);
    f.grid = grid_meta(0.0, 25.0, 0.25, s.loss_db.size());
  } else {
    throw UsageError("unknown figure preset '" + id +
                     "' (expected 2a, 2b, 4a or 4b)");
  }
  return f;
}

// Emit a cap-breach warning for every sweep point whose optimal chi_D sits
// at the search cap.
void warn_at_cap(const SweepResult& result, std::size_t chi_d_column,
                 std::ostream& err) {
  for (const CurvePoint& pt : result.points) {
    if (pt.error.empty() && chi_d_column < pt.values.size() &&
        pt.values[chi_d_column] >= kChiDCap - 1e-3) {
      err << "warning: chi_D optimum at the search cap (" << fmt12(kChiDCap)
          << " SNU) at " << fmt12(pt.loss_db) << " dB\n";
    }
  }
}

// ---------------------------------------------------------------------
// subcommand state + handlers

struct KeyrateArgs {
  ProtocolFlags protocol;
  ChannelFlags channel;
  double V = 0.0;
  std::string format = "json";
  std::string output;
};

int cmd_keyrate(const KeyrateArgs& a, std::ostream& out) {
  check_format(a.format);
  const ChannelModel ch = build_channel(a.channel);
  const ProtocolConfig cfg = build_protocol(a.protocol, a.V);
  const RateReport rep = keyrate(cfg, ch);

  const Row row = {
      {"loss_db", ch.loss_db()}, {"T", ch.T()},
      {"I_ab", rep.I_ab},        {"holevo", rep.holevo},
      {"K", rep.K},              {"x", rep.x},
      {"y", rep.y},              {"z", rep.z},
      {"chi", rep.chi},          {"Delta", rep.Delta},
      {"D", rep.D},              {"A", rep.A},
      {"B", rep.B},              {"lambda1", rep.lambda1},
      {"lambda2", rep.lambda2},  {"lambda3", rep.lambda3},
      {"lambda4", rep.lambda4},
  };
  ordered_json meta = base_meta("keyrate");
  if (!a.protocol.preset.empty()) meta["inputs"]["preset"] = a.protocol.preset;
  meta["inputs"]["protocol"] = protocol_meta(cfg);
  meta["inputs"]["channel"] = channel_meta(ch);
  meta["inputs"]["format"] = a.format;
  deliver(render(a.format, meta, [&] { return row_csv(row); },
                 [&] { return row_points(row); }),
          a.output, out);
  return 0;
}

struct SweepArgs {
  std::string fig;
  GridFlags grid;
  std::optional<double> epsilon, chi_c;
  std::optional<double> V;
  bool large_v = false;
  std::vector<std::string> presets;
  bool optimal = false;
  std::string format = "csv";
  std::string output;
  bool tolerance_mode = false;  // true for the `tolerance` command
};

SweepSpec manual_sweep(const SweepArgs& a, ordered_json& inputs) {
  SweepSpec s;
  if (!a.grid.min || !a.grid.max || !a.grid.step) {
    throw UsageError("loss grid needs --loss-db-min, --loss-db-max and "
                     "--loss-db-step");
  }
  s.loss_db = build_grid(*a.grid.min, *a.grid.max, *a.grid.step);
  inputs["grid"] = grid_meta(*a.grid.min, *a.grid.max, *a.grid.step,
                             s.loss_db.size());
  if (a.tolerance_mode) {
    s.kind = SweepKind::Tolerance;
    if (a.epsilon || a.chi_c) {
      throw UsageError("tolerance sweeps compute the excess noise; "
                       "--epsilon/--chi-c do not apply");
    }
  } else {
    s.kind = SweepKind::KeyRates;
    if (a.epsilon.has_value() == a.chi_c.has_value()) {
      throw UsageError("specify exactly one of --epsilon and --chi-c");
    }
    s.noise_is_epsilon = a.epsilon.has_value();
    s.noise = a.epsilon ? *a.epsilon : *a.chi_c;
    inputs[s.noise_is_epsilon ? "epsilon" : "chi_c"] = num12(s.noise);
  }
  if (a.V.has_value() == a.large_v) {
    throw UsageError("specify exactly one of --V and --large-v");
  }
  s.large_V = a.large_v;
  if (a.V) s.V = *a.V;
  if (a.large_v) {
    inputs["large_V"] = true;
  } else {
    inputs["V"] = num12(s.V);
  }

  std::vector<std::string> names = a.presets;
  if (names.empty()) {
    names = a.tolerance_mode
                ? std::vector<std::string>{"squeezed-homodyne",
                                           "squeezed-heterodyne",
                                           "coherent-homodyne",
                                           "coherent-heterodyne"}
                : std::vector<std::string>{"squeezed-homodyne",
                                           "squeezed-heterodyne"};
  }
  const std::string prefix = a.tolerance_mode ? "eps_max_" : "K_";
  for (const std::string& name : names) {
    const auto p = preset_from_name(name);
    if (!p) throw UsageError("unknown preset '" + name + "'");
    std::string label = prefix + preset_name(*p);
    std::replace(label.begin(), label.end(), '-', '_');
    s.columns.push_back({std::move(label), make_preset(*p, 40.0)});
  }
  if (a.optimal) {
    s.columns.push_back(
        {a.tolerance_mode ? "eps_max_optimal" : "K_opt", std::nullopt});
  }
  inputs["presets"] = names;
  inputs["optimal"] = a.optimal;
  return s;
}

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  check_format(a.format);
  ordered_json meta = base_meta(a.tolerance_mode ? "tolerance" : "sweep");
  ordered_json& inputs = meta["inputs"];
  SweepSpec spec;
  if (!a.fig.empty()) {
    if (a.grid.min || a.grid.max || a.grid.step || a.epsilon || a.chi_c ||
        a.V || a.large_v || !a.presets.empty() || a.optimal) {
      throw UsageError("--fig presets are self-contained; drop the other "
                       "sweep flags");
    }
    FigureSweep f = figure_sweep(a.fig);
    spec = std::move(f.spec);
    inputs["fig"] = a.fig;
    inputs["grid"] = std::move(f.grid);
    if (spec.kind != SweepKind::Tolerance) {
      inputs["epsilon"] = num12(spec.noise);
    }
    if (spec.large_V) {
      inputs["large_V"] = true;
    } else {
      inputs["V"] = num12(spec.V);
    }
  } else {
    spec = manual_sweep(a, inputs);
  }

  const SweepResult result = sweep_curves(spec);
  ordered_json columns = ordered_json::array();
  for (const auto& col : result.columns) columns.push_back(col);
  inputs["columns"] = std::move(columns);
  inputs["format"] = a.format;

  if (spec.kind == SweepKind::Optimize) {
    warn_at_cap(result, 0, err);
  } else {
    for (std::size_t c = 0; c < result.columns.size(); ++c) {
      if (result.columns[c] == "chi_d_opt") warn_at_cap(result, c, err);
    }
  }
  for (const CurvePoint& pt : result.points) {
    if (!pt.error.empty()) {
      err << "warning: " << fmt12(pt.loss_db) << " dB: " << pt.error
          << "\n";
    }
  }
  deliver(render(a.format, meta, [&] { return sweep_csv(result); },
                 [&] { return sweep_points(result); }),
          a.output, out);
  return 0;
}

struct OptimizeArgs {
  ChannelFlags channel;
  double V = 0.0;
  std::string format = "json";
  std::string output;
};

int cmd_optimize(const OptimizeArgs& a, std::ostream& out,
                 std::ostream& err) {
  check_format(a.format);
  const ChannelModel ch = build_channel(a.channel);
  const ChiDOptimum opt = optimize_chi_d(a.V, ch);
  if (opt.at_cap) {
    err << "warning: chi_D optimum at the search cap (" << fmt12(kChiDCap)
        << " SNU); the unconstrained optimum may lie beyond\n";
  }
  const Row row = {
      {"loss_db", ch.loss_db()},
      {"T", ch.T()},
      {"chi_d_opt", opt.chi_d},
      {"K_opt", opt.K},
  };
  ordered_json meta = base_meta("optimize");
  meta["inputs"]["V"] = num12(a.V);
  meta["inputs"]["channel"] = channel_meta(ch);
  meta["inputs"]["format"] = a.format;
  meta["inputs"]["at_cap"] = opt.at_cap;
  deliver(render(a.format, meta, [&] { return row_csv(row); },
                 [&] { return row_points(row); }),
          a.output, out);
  return 0;
}

struct SimulateArgs {
  ChannelFlags channel;
  double V = 0.0;
  std::uint64_t n = 0;
  std::uint64_t seed = 1;
  double reveal_fraction = 0.5;
  std::string records_csv;
  std::string format = "json";
  std::string output;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  check_format(a.format);
  const ChannelModel ch = build_channel(a.channel);
  const ProtocolConfig cfg = ProtocolConfig::squeezed_heterodyne(a.V);
  const SessionResult res = run_session(static_cast<std::size_t>(a.n), cfg,
                                        ch, a.seed, a.reveal_fraction);
  if (!a.records_csv.empty()) {
    std::ostringstream records;
    write_records_csv(res, records);
    write_atomic(resolve_output(a.records_csv), records.str());
  }
  const Row row = {
      {"n", static_cast<double>(res.n)},
      {"seed", static_cast<double>(res.seed)},
      {"T_hat", res.T_hat},
      {"chi_C_hat", res.chi_C_hat},
      {"I_hat", res.I_hat},
      {"K_hat", res.K_hat},
  };
  ordered_json meta = base_meta("simulate");
  meta["inputs"]["n"] = a.n;
  meta["inputs"]["seed"] = a.seed;
  meta["inputs"]["reveal_fraction"] = num12(a.reveal_fraction);
  meta["inputs"]["protocol"] = protocol_meta(cfg);
  meta["inputs"]["channel"] = channel_meta(ch);
  meta["inputs"]["format"] = a.format;
  if (!a.records_csv.empty()) meta["inputs"]["records_csv"] = a.records_csv;
  deliver(render(a.format, meta, [&] { return row_csv(row); },
                 [&] { return row_points(row); }),
          a.output, out);
  return 0;
}

void add_output_flags(CLI::App* cmd, std::string& format,
                      std::string& output) {
  cmd->add_option("--format", format, "output format: csv | json");
  cmd->add_option("--output", output,
                  "write to this file (atomically) instead of stdout; "
                  "relative paths resolve under $CVQKD_OUTPUT_DIR");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Gaussian continuous-variable QKD key-rate toolbox"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  KeyrateArgs kr;
  CLI::App* keyrate_cmd = app.add_subcommand(
      "keyrate", "Key rate and intermediates for one protocol and channel");
  add_protocol_flags(keyrate_cmd, kr.protocol);
  add_channel_flags(keyrate_cmd, kr.channel);
  keyrate_cmd->add_option("--V", kr.V, "quadrature variance V (>= 1)")
      ->required();
  add_output_flags(keyrate_cmd, kr.format, kr.output);

  SweepArgs sw;
  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "Key-rate curves over a loss grid (or a figure preset)");
  sweep_cmd->add_option("--fig", sw.fig,
                        "figure preset: 2a | 2b | 4a | 4b (self-contained)");
  add_grid_flags(sweep_cmd, sw.grid);
  sweep_cmd->add_option("--epsilon", sw.epsilon, "excess noise (SNU)");
  sweep_cmd->add_option("--chi-c", sw.chi_c, "total added noise (SNU)");
  sweep_cmd->add_option("--V", sw.V, "quadrature variance V");
  sweep_cmd->add_flag("--large-v", sw.large_v,
                      "evaluate in the V -> infinity regime");
  sweep_cmd->add_option("--presets", sw.presets,
                        "comma-separated protocol presets")
      ->delimiter(',');
  sweep_cmd->add_flag("--optimal", sw.optimal,
                      "add the optimal-chi_D column");
  add_output_flags(sweep_cmd, sw.format, sw.output);

  SweepArgs tol;
  tol.tolerance_mode = true;
  tol.format = "csv";
  CLI::App* tolerance_cmd = app.add_subcommand(
      "tolerance", "Maximal tolerable excess noise over a loss grid");
  add_grid_flags(tolerance_cmd, tol.grid);
  tolerance_cmd->add_option("--V", tol.V, "quadrature variance V");
  tolerance_cmd->add_flag("--large-v", tol.large_v,
                          "evaluate in the V -> infinity regime");
  tolerance_cmd->add_option("--presets", tol.presets,
                            "comma-separated protocol presets")
      ->delimiter(',');
  tolerance_cmd->add_flag("--optimal", tol.optimal,
                          "add the optimal-chi_D column");
  add_output_flags(tolerance_cmd, tol.format, tol.output);

  OptimizeArgs op;
  CLI::App* optimize_cmd = app.add_subcommand(
      "optimize", "Rate-maximizing Bob detector noise for one channel");
  add_channel_flags(optimize_cmd, op.channel);
  optimize_cmd->add_option("--V", op.V, "quadrature variance V (>= 1)")
      ->required();
  add_output_flags(optimize_cmd, op.format, op.output);

  SimulateArgs sim;
  CLI::App* simulate_cmd = app.add_subcommand(
      "simulate",
      "Monte Carlo session of the squeezed-state heterodyne protocol");
  add_channel_flags(simulate_cmd, sim.channel);
  simulate_cmd->add_option("--V", sim.V, "quadrature variance V (>= 1)")
      ->required();
  simulate_cmd->add_option("--n", sim.n, "number of rounds")->required();
  simulate_cmd->add_option("--seed", sim.seed, "RNG seed (default 1)");
  simulate_cmd->add_option("--reveal-fraction", sim.reveal_fraction,
                           "fraction of rounds revealed for estimation");
  simulate_cmd->add_option("--records-csv", sim.records_csv,
                           "also dump the raw records to this CSV file");
  add_output_flags(simulate_cmd, sim.format, sim.output);

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("cvqkd");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()),
              const_cast<char**>(argv.data()));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (keyrate_cmd->parsed()) return cmd_keyrate(kr, out);
    if (sweep_cmd->parsed()) return cmd_sweep(sw, out, err);
    if (tolerance_cmd->parsed()) return cmd_sweep(tol, out, err);
    if (optimize_cmd->parsed()) return cmd_optimize(op, out, err);
    if (simulate_cmd->parsed()) return cmd_simulate(sim, out);
    err << "usage error: no command given\n";
    return 2;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace cvqkd::cli
