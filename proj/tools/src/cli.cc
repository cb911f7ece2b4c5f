#include "cli.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>

#include "CLI11.hpp"
#include "manifest.h"
#include "table.h"
#include "teal/error.h"
#include "teal/greedy.h"
#include "teal/sparse_kernel.h"
#include "teal/theory.h"
#include "teal/toy_model.h"

namespace teal::cli {

namespace {

namespace fs = std::filesystem;

// Sub-streams of RngStream(seed), so one --seed never makes calibration and
// evaluation inputs coincide.
constexpr std::uint64_t kCalibrationStream = 1;
constexpr std::uint64_t kEvalStream = 2;
constexpr std::uint64_t kTheoryMagnitudeStream = 3;
constexpr std::uint64_t kTheoryRandomStream = 4;

struct Common {
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "tsv";
};

void add_common(CLI::App* app, Common& c, bool out_required,
                const std::string& out_help) {
  app->add_option("--seed", c.seed, "RNG seed")->capture_default_str();
  auto* out = app->add_option("--out", c.out, out_help);
  if (out_required) out->required();
  app->add_option("--format", c.format, "tsv or csv")->capture_default_str();
}

RunManifest new_manifest(const std::string& subcommand, const Common& c) {
  RunManifest m;
  m.tool_version = TEAL_VERSION;
  m.subcommand = subcommand;
  m.seed = c.seed;
  m.parameters["format"] = c.format;
  return m;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError(dir, "cannot create directory");
  }
}

// Table to --out (plus manifest) or to stdout when --out is empty.
void emit_table(const Table& table, const Common& c, RunManifest& m,
                std::ostream& stdout_stream) {
  if (c.out.empty()) {
    table.write(stdout_stream);
    return;
  }
  std::ofstream f(c.out);
  if (!f) throw IoError(c.out, "cannot open for writing");
  table.write(f);
  f.close();
  if (!f) throw IoError(c.out, "write failed");
  m.outputs.push_back(c.out);
  save_manifest(manifest_path_for(c.out), m);
}

std::string histogram_path(const std::string& dir, std::size_t block, Tap tap) {
  return (fs::path(dir) / ("block" + std::to_string(block) + "." +
                           std::string(tap_name(tap)) + ".tealh"))
      .string();
}

std::string trace_path(const std::string& dir, std::size_t block) {
  return (fs::path(dir) / ("block" + std::to_string(block) + ".tealg")).string();
}

std::string config_path(const std::string& dir, double target) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "config_p%g.tealc", target);
  return (fs::path(dir) / buf).string();
}

// Per-block inputs under the dense model: result[b][k] feeds block b for
// sequence k.
std::vector<std::vector<Matrix>> dense_block_inputs(const ToyModel& model,
                                                    const std::vector<Matrix>& xs) {
  std::vector<std::vector<Matrix>> per_block(model.blocks.size() + 1);
  for (const auto& x : xs) {
    auto trace = model_forward_dense_trace(model, x);
    for (std::size_t b = 0; b < trace.size(); ++b) {
      per_block[b].push_back(std::move(trace[b]));
    }
  }
  return per_block;
}

struct CalibrationSource {
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::size_t seq = 0;
};

std::vector<Matrix> calibration_inputs(const CalibrationSource& src,
                                       std::size_t d_model) {
  return make_inputs(RngStream(src.seed).split(kCalibrationStream), src.samples,
                     src.seq, d_model);
}

CalibrationSource read_calibration_source(const std::string& dir) {
  const RunManifest m = load_manifest((fs::path(dir) / "manifest.json").string());
  if (m.subcommand != "calibrate") {
    throw ValidationError(dir + ": manifest is not from calibrate");
  }
  try {
    return {m.seed, m.parameters.at("samples").get<std::size_t>(),
            m.parameters.at("seq").get<std::size_t>()};
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(dir + ": calibrate manifest lacks " + e.what());
  }
}

std::vector<BlockCalibration> load_calibrations(const std::string& dir,
                                                std::size_t blocks) {
  std::vector<BlockCalibration> cals;
  for (std::size_t b = 0; b < blocks; ++b) {
    std::vector<ActivationHistogram> taps;
    for (std::size_t t = 0; t < kTapCount; ++t) {
      const std::string path = histogram_path(dir, b, static_cast<Tap>(t));
      taps.push_back(load_histogram(path));
      const std::string want =
          "block" + std::to_string(b) + "." + std::string(tap_name(static_cast<Tap>(t)));
      if (taps.back().layer_id() != want) {
        throw ValidationError(path + ": histogram id '" + taps.back().layer_id() +
                              "', expected '" + want + "'");
      }
    }
    cals.emplace_back(std::move(taps));
  }
  return cals;
}

// ---- gen-model -------------------------------------------------------------

struct GenModelArgs {
  Common common;
  std::size_t blocks = 4;
  BlockDims dims;
};

void cmd_gen_model(const GenModelArgs& a, std::ostream& out) {
  const ToyModel model = gen_model(a.common.seed, a.blocks, a.dims);
  save_model(a.common.out, model);
  RunManifest m = new_manifest("gen-model", a.common);
  m.parameters["blocks"] = a.blocks;
  m.parameters["d_model"] = a.dims.d_model;
  m.parameters["heads"] = a.dims.heads;
  m.parameters["d_ff"] = a.dims.d_ff;
  m.outputs.push_back(a.common.out);
  save_manifest(manifest_path_for(a.common.out), m);
  out << "wrote " << a.common.out << " (" << a.blocks << " blocks)\n";
}

// ---- calibrate -------------------------------------------------------------

struct CalibrateArgs {
  Common common;
  std::string model;
  std::size_t samples = 10;
  std::size_t seq = 128;
  std::size_t bins = kDefaultBinCount;
};

void cmd_calibrate(const CalibrateArgs& a, std::ostream& out) {
  if (a.samples == 0 || a.seq == 0) {
    throw ValidationError("--samples and --seq must be positive");
  }
  const ToyModel model = load_model(a.model);
  ensure_dir(a.common.out);
  const auto xs = calibration_inputs({a.common.seed, a.samples, a.seq},
                                     model.dims.d_model);
  const auto per_block = dense_block_inputs(model, xs);
  RunManifest m = new_manifest("calibrate", a.common);
  m.parameters["samples"] = a.samples;
  m.parameters["seq"] = a.seq;
  m.parameters["bins"] = a.bins;
  m.inputs.push_back(a.model);
  for (std::size_t b = 0; b < model.blocks.size(); ++b) {
    const BlockCalibration cal = calibrate_block(model.blocks[b], per_block[b], a.bins);
    for (std::size_t t = 0; t < kTapCount; ++t) {
      const Tap tap = static_cast<Tap>(t);
      const ActivationHistogram& h = cal.tap(tap);
      ActivationHistogram named("block" + std::to_string(b) + "." +
                                    std::string(tap_name(tap)),
                                h.bin_count(), h.hi());
      named.merge(h);
      const std::string path = histogram_path(a.common.out, b, tap);
      save_histogram(path, named);
      m.outputs.push_back(path);
    }
  }
  save_manifest((fs::path(a.common.out) / "manifest.json").string(), m);
  out << "wrote " << m.outputs.size() << " histograms to " << a.common.out << '\n';
}

// ---- greedy ----------------------------------------------------------------

struct GreedyArgs {
  Common common;
  std::string model;
  std::string hists;
  double alpha = 0.05;
  std::vector<double> targets = {0.25, 0.4, 0.5, 0.65};
};

void cmd_greedy(const GreedyArgs& a, std::ostream& out) {
  const ToyModel model = load_model(a.model);
  const auto cals = load_calibrations(a.hists, model.blocks.size());
  const CalibrationSource src = read_calibration_source(a.hists);
  const auto per_block =
      dense_block_inputs(model, calibration_inputs(src, model.dims.d_model));
  ensure_dir(a.common.out);

  RunManifest m = new_manifest("greedy", a.common);
  m.parameters["alpha"] = a.alpha;
  m.parameters["targets"] = a.targets;
  m.parameters["calibration_seed"] = src.seed;
  m.parameters["calibration_samples"] = src.samples;
  m.parameters["calibration_seq"] = src.seq;
  m.inputs = {a.model, a.hists};

  const char delim = parse_format(a.common.format);
  Table summary({"block", "target", "selected_p", "calibration_error",
                 "q", "k", "v", "o", "gate", "up", "down"}, delim);
  std::vector<std::vector<BlockSparsityConfig>> configs(a.targets.size());
  for (std::size_t b = 0; b < model.blocks.size(); ++b) {
    const GreedyTrace trace = greedy_optimize(model.blocks[b], cals[b], per_block[b],
                                              StepPolicy{a.alpha}, b);
    const std::string path = trace_path(a.common.out, b);
    save_trace(path, trace);
    validate_trace(load_trace(path), block_footprints(model.blocks[b]));
    m.outputs.push_back(path);
    for (std::size_t i = 0; i < a.targets.size(); ++i) {
      const GreedyStep* step = nullptr;
      try {
        step = &select_step(trace, a.targets[i]);
      } catch (const ValidationError& e) {
        throw ValidationError("block " + std::to_string(b) + ": " + e.what());
      }
      configs[i].push_back(cals[b].resolve(step->levels));
      std::vector<std::string> row = {format_int(b), format_double(a.targets[i]),
                                      format_double(step->block_sparsity),
                                      format_double(step->error)};
      for (double l : step->levels) row.push_back(format_double(l));
      summary.add_row(std::move(row));
    }
  }
  for (std::size_t i = 0; i < a.targets.size(); ++i) {
    const std::string path = config_path(a.common.out, a.targets[i]);
    save_configs(path, configs[i]);
    m.outputs.push_back(path);
  }
  const std::string summary_path = (fs::path(a.common.out) / "summary.tsv").string();
  {
    std::ofstream f(summary_path);
    if (!f) throw IoError(summary_path, "cannot open for writing");
    summary.write(f);
    if (!f) throw IoError(summary_path, "write failed");
  }
  m.outputs.push_back(summary_path);
  save_manifest((fs::path(a.common.out) / "manifest.json").string(), m);
  summary.write(out);
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  Common common;
  std::string model;
  std::string hists;
  std::string config;
  std::vector<double> uniform = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::size_t samples = 4;
  std::size_t seq = 128;
};

Matrix stack_rows(const std::vector<Matrix>& parts) {
  std::size_t rows = 0;
  for (const auto& p : parts) rows += p.rows();
  Matrix out(rows, parts.front().cols());
  std::size_t r = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < p.rows(); ++i, ++r) {
      std::copy(p.row(i).begin(), p.row(i).end(), out.row(r).begin());
    }
  }
  return out;
}

void cmd_eval(const EvalArgs& a, std::ostream& out) {
  if (a.samples == 0 || a.seq == 0) {
    throw ValidationError("--samples and --seq must be positive");
  }
  const ToyModel model = load_model(a.model);
  const std::size_t nb = model.blocks.size();
  const auto cals = load_calibrations(a.hists, nb);
  const auto xs = make_inputs(RngStream(a.common.seed).split(kEvalStream), a.samples,
                              a.seq, model.dims.d_model);
  const auto dense = dense_block_inputs(model, xs);

  std::vector<Matrix> mlp_in(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    std::vector<Matrix> hs;
    for (const auto& x : dense[b]) hs.push_back(mlp_input(model.blocks[b], x));
    mlp_in[b] = stack_rows(hs);
  }

  struct Setting {
    std::string name;
    std::vector<BlockSparsityConfig> configs;
    bool uniform = false;
    double p = 0.0;
  };
  std::vector<Setting> settings;
  RunManifest m = new_manifest("eval", a.common);
  m.parameters["samples"] = a.samples;
  m.parameters["seq"] = a.seq;
  m.inputs = {a.model, a.hists};
  if (!a.config.empty()) {
    auto cfgs = load_configs(a.config);
    if (cfgs.size() != nb) {
      throw ValidationError(a.config + ": " + std::to_string(cfgs.size()) +
                            " block configs for a " + std::to_string(nb) +
                            "-block model");
    }
    settings.push_back({"config", std::move(cfgs), false, 0.0});
    m.parameters["config"] = a.config;
    m.inputs.push_back(a.config);
  } else {
    for (double p : a.uniform) {
      std::vector<BlockSparsityConfig> cfgs;
      for (const auto& cal : cals) cfgs.push_back(uniform_config(cal, p));
      settings.push_back({"uniform", std::move(cfgs), true, p});
    }
    m.parameters["uniform"] = a.uniform;
  }

  Table table({"setting", "p", "block", "block_error", "model_error",
               "teal_intermediate", "cats_intermediate"},
              parse_format(a.common.format));
  for (const auto& s : settings) {
    double model_num = 0.0, model_den = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      Matrix h = xs[k];
      for (std::size_t b = 0; b < nb; ++b) {
        h = block_forward_sparse(model.blocks[b], h, s.configs[b]);
      }
      const double d = l2_distance(h, dense[nb][k]);
      const double r = l2_distance(dense[nb][k], Matrix(h.rows(), h.cols()));
      model_num += d * d;
      model_den += r * r;
    }
    const double model_error = std::sqrt(model_num / model_den);
    for (std::size_t b = 0; b < nb; ++b) {
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < xs.size(); ++k) {
        const Matrix y = block_forward_sparse(model.blocks[b], dense[b][k], s.configs[b]);
        const double d = l2_distance(y, dense[b + 1][k]);
        const double r = l2_distance(dense[b + 1][k], Matrix(y.rows(), y.cols()));
        num += d * d;
        den += r * r;
      }
      const BlockSparsityConfig& cfg = s.configs[b];
      const double up_level = cfg.level(MatrixId::kUp);
      const double p = s.uniform ? s.p : block_sparsity(cfg.levels,
                                                        block_footprints(model.blocks[b]));
      const double teal = intermediate_error_teal(model.blocks[b], mlp_in[b],
                                                  cfg.threshold(MatrixId::kUp));
      const double cats = intermediate_error_cats(model.blocks[b], mlp_in[b],
                                                  cals[b], up_level);
      table.add_row({s.name, format_double(p), format_int(b),
                     format_double(std::sqrt(num / den)), format_double(model_error),
                     format_double(teal), format_double(cats)});
    }
  }
  emit_table(table, a.common, m, out);
}

// ---- theory ----------------------------------------------------------------

struct TheoryArgs {
  Common common;
  std::vector<double> ps = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::size_t m = 1024;
  std::size_t n = 1024;
  std::size_t trials = 100;
};

void cmd_theory(const TheoryArgs& a, std::ostream& out) {
  using namespace theory;
  const RngStream root(a.common.seed);
  const auto mag = mc_relative_error_sweep(a.m, a.n, a.ps, a.trials, MaskMode::kMagnitude,
                                           root.split(kTheoryMagnitudeStream));
  const auto rnd = mc_relative_error_sweep(a.m, a.n, a.ps, a.trials, MaskMode::kRandom,
                                           root.split(kTheoryRandomStream));
  Table table({"p", "analytic_magnitude", "analytic_random", "mc_mean", "mc_stderr",
               "mc_random_mean", "mc_random_stderr"},
              parse_format(a.common.format));
  for (std::size_t i = 0; i < a.ps.size(); ++i) {
    table.add_row({format_double(a.ps[i]), format_double(relative_error_magnitude(a.ps[i])),
                   format_double(relative_error_random(a.ps[i])),
                   format_double(mag[i].mean), format_double(mag[i].stderr_),
                   format_double(rnd[i].mean), format_double(rnd[i].stderr_)});
  }
  RunManifest man = new_manifest("theory", a.common);
  man.parameters["ps"] = a.ps;
  man.parameters["m"] = a.m;
  man.parameters["n"] = a.n;
  man.parameters["trials"] = a.trials;
  emit_table(table, a.common, man, out);
}

// ---- bench -----------------------------------------------------------------

struct BenchArgs {
  Common common;
  BenchConfig config;
};

void cmd_bench(BenchArgs a, std::ostream& out) {
  a.config.seed = a.common.seed;
  const BenchResult r = bench_gemv(a.config);
  Table table({"sparsity", "median_ns", "min_ns", "dense_median_ns", "speedup",
               "weight_bytes"},
              parse_format(a.common.format));
  for (const auto& p : r.points) {
    table.add_row({format_double(p.target_sparsity), format_int(p.median_ns),
                   format_int(p.min_ns), format_int(r.dense_median_ns),
                   format_double(r.speedup(p)),
                   format_int(static_cast<std::int64_t>(p.traffic.weight_bytes_sparse))});
  }
  RunManifest m = new_manifest("bench", a.common);
  m.parameters["rows"] = a.config.rows;
  m.parameters["cols"] = a.config.cols;
  m.parameters["sparsities"] = a.config.sparsities;
  m.parameters["reps"] = a.config.reps;
  m.parameters["warmup"] = a.config.warmup;
  emit_table(table, a.common, m, out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Threshold activation sparsity toolkit", "teal"};
  app.set_version_flag("--version", TEAL_VERSION);
  app.require_subcommand(1);

  GenModelArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-model", "Write a seeded toy model");
  add_common(gen_cmd, gen.common, true, "model file");
  gen_cmd->add_option("--blocks", gen.blocks)->capture_default_str();
  gen_cmd->add_option("--d-model", gen.dims.d_model)->capture_default_str();
  gen_cmd->add_option("--heads", gen.dims.heads)->capture_default_str();
  gen_cmd->add_option("--d-ff", gen.dims.d_ff)->capture_default_str();

  CalibrateArgs cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "Record activation histograms");
  add_common(cal_cmd, cal.common, true, "output directory");
  cal_cmd->add_option("--model", cal.model)->required();
  cal_cmd->add_option("--samples", cal.samples)->capture_default_str();
  cal_cmd->add_option("--seq", cal.seq)->capture_default_str();
  cal_cmd->add_option("--bins", cal.bins)->capture_default_str();

  GreedyArgs greedy;
  auto* greedy_cmd = app.add_subcommand("greedy", "Greedy per-block allocation");
  add_common(greedy_cmd, greedy.common, true, "output directory");
  greedy_cmd->add_option("--model", greedy.model)->required();
  greedy_cmd->add_option("--hists", greedy.hists, "calibrate output directory")
      ->required();
  greedy_cmd->add_option("--alpha", greedy.alpha)->capture_default_str();
  greedy_cmd->add_option("--targets", greedy.targets)->delimiter(',')->capture_default_str();

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Error of sparse configs vs dense");
  add_common(eval_cmd, eval.common, false, "table file (default stdout)");
  eval_cmd->add_option("--model", eval.model)->required();
  eval_cmd->add_option("--hists", eval.hists)->required();
  auto* cfg_opt = eval_cmd->add_option("--config", eval.config, "TEALC1 file");
  eval_cmd->add_option("--uniform", eval.uniform, "uniform levels")
      ->delimiter(',')
      ->excludes(cfg_opt)
      ->capture_default_str();
  eval_cmd->add_option("--samples", eval.samples)->capture_default_str();
  eval_cmd->add_option("--seq", eval.seq)->capture_default_str();

  TheoryArgs th;
  auto* th_cmd = app.add_subcommand("theory", "Relative error, closed form and Monte Carlo");
  add_common(th_cmd, th.common, false, "table file (default stdout)");
  th_cmd->add_option("--ps", th.ps)->delimiter(',')->capture_default_str();
  th_cmd->add_option("--m", th.m)->capture_default_str();
  th_cmd->add_option("--n", th.n)->capture_default_str();
  th_cmd->add_option("--trials", th.trials)->capture_default_str();

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Sparse GEMV latency");
  add_common(bench_cmd, bench.common, false, "table file (default stdout)");
  bench_cmd->add_option("--rows", bench.config.rows)->capture_default_str();
  bench_cmd->add_option("--cols", bench.config.cols)->capture_default_str();
  bench_cmd->add_option("--sparsities", bench.config.sparsities)
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--reps", bench.config.reps)->capture_default_str();
  bench_cmd->add_option("--warmup", bench.config.warmup)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }

  try {
    // Every subcommand validates --format before doing any work.
    for (const Common* c : {&gen.common, &cal.common, &greedy.common, &eval.common,
                            &th.common, &bench.common}) {
      parse_format(c->format);
    }
    if (gen_cmd->parsed()) {
      cmd_gen_model(gen, out);
    } else if (cal_cmd->parsed()) {
      cmd_calibrate(cal, out);
    } else if (greedy_cmd->parsed()) {
      cmd_greedy(greedy, out);
    } else if (eval_cmd->parsed()) {
      cmd_eval(eval, out);
    } else if (th_cmd->parsed()) {
      cmd_theory(th, out);
    } else if (bench_cmd->parsed()) {
      cmd_bench(bench, out);
    }
  } catch (const ValidationError& e) {
    err << "teal: " << e.what() << '\n';
    return kExitValidation;
  } catch (const IoError& e) {
    err << "teal: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "teal: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace teal::cli
