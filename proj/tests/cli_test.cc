#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.h"
#include "manifest.h"
#include "teal/greedy.h"
#include "teal/toy_model.h"

namespace teal::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result teal(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::vector<std::vector<std::string>> parse_table(const std::string& text,
                                                  char delim = '\t') {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, delim)) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  ADD_FAILURE() << "missing column " << name;
  return 0;
}

// One small model, calibrated once, shared by the pipeline tests.
class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(fs::temp_directory_path() / "teal_cli_test");
    fs::remove_all(*dir_);
    fs::create_directories(*dir_);
    ASSERT_EQ(teal({"gen-model", "--seed", "3", "--blocks", "2", "--d-model", "64",
                    "--heads", "4", "--d-ff", "176", "--out", model()})
                  .code,
              0);
    ASSERT_EQ(teal({"calibrate", "--model", model(), "--seed", "4", "--samples", "6",
                    "--seq", "32", "--out", hists()})
                  .code,
              0);
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
  }
  static std::string model() { return (*dir_ / "model.tealm").string(); }
  static std::string hists() { return (*dir_ / "hists").string(); }
  static std::string path(const std::string& name) { return (*dir_ / name).string(); }
  static fs::path* dir_;
};
fs::path* Pipeline::dir_ = nullptr;

TEST_F(Pipeline, GenModelIsDeterministicAndLoadable) {
  const std::string again = path("again.tealm");
  ASSERT_EQ(teal({"gen-model", "--seed", "3", "--blocks", "2", "--d-model", "64",
                  "--heads", "4", "--d-ff", "176", "--out", again})
                .code,
            0);
  EXPECT_EQ(slurp(model()), slurp(again));
  EXPECT_EQ(load_model(again), gen_model(3, 2, BlockDims{64, 4, 176}));
  const RunManifest m = load_manifest(manifest_path_for(again));
  EXPECT_EQ(m.subcommand, "gen-model");
  EXPECT_EQ(m.seed, 3u);
  EXPECT_EQ(m.parameters.at("d_model"), 64);
  EXPECT_EQ(m.parameters.at("d_ff"), 176);
  EXPECT_EQ(m.outputs, std::vector<std::string>{again});
}

TEST_F(Pipeline, CalibrateIsDeterministicWithExactCounts) {
  const std::string rerun = path("hists_rerun");
  ASSERT_EQ(teal({"calibrate", "--model", model(), "--seed", "4", "--samples", "6",
                  "--seq", "32", "--out", rerun})
                .code,
            0);
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t t = 0; t < kTapCount; ++t) {
      const std::string name = "block" + std::to_string(b) + "." +
                               std::string(tap_name(static_cast<Tap>(t))) + ".tealh";
      ASSERT_EQ(slurp(fs::path(hists()) / name), slurp(fs::path(rerun) / name)) << name;
      const auto h = load_histogram((fs::path(hists()) / name).string());
      const std::size_t dim =
          (t == static_cast<std::size_t>(Tap::kIntraMlp) ||
           t == static_cast<std::size_t>(Tap::kGateAct)) ? 176 : 64;
      EXPECT_EQ(h.total(), 6u * 32 * dim) << name;
    }
  }
}

TEST_F(Pipeline, SavedHistogramsReproduceInProcessThresholds) {
  const ToyModel m = load_model(model());
  const auto xs = make_inputs(RngStream(4).split(1), 6, 32, 64);
  std::vector<Matrix> in1;
  for (const auto& x : xs) in1.push_back(block_forward_dense(m.blocks[0], x));
  const BlockCalibration cal = calibrate_block(m.blocks[1], in1);
  for (std::size_t t = 0; t < kTapCount; ++t) {
    const Tap tap = static_cast<Tap>(t);
    const auto h = load_histogram(
        (fs::path(hists()) / ("block1." + std::string(tap_name(tap)) + ".tealh")).string());
    EXPECT_NEAR(estimate_threshold(h, 0.5).value(),
                estimate_threshold(cal.tap(tap), 0.5).value(), 1e-6);
  }
}

TEST_F(Pipeline, GreedyTracesValidateAndBeatUniform) {
  const std::string out = path("greedy");
  const Result r = teal({"greedy", "--model", model(), "--hists", hists(), "--alpha",
                         "0.02", "--targets", "0.25,0.5", "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  const ToyModel m = load_model(model());
  for (std::size_t b = 0; b < 2; ++b) {
    const GreedyTrace t = load_trace((fs::path(out) / ("block" + std::to_string(b) +
                                                       ".tealg")).string());
    EXPECT_EQ(t.block_id, b);
    EXPECT_NO_THROW(validate_trace(t, block_footprints(m.blocks[b])));
    EXPECT_EQ(t.steps.front().block_sparsity, 0.0);
    for (double l : t.steps.front().levels) EXPECT_EQ(l, 0.0);
  }
  const auto cfgs = load_configs((fs::path(out) / "config_p0.5.tealc").string());
  ASSERT_EQ(cfgs.size(), 2u);
  EXPECT_TRUE(fs::exists(fs::path(out) / "manifest.json"));

  for (const std::string p : {"0.25", "0.5"}) {
    const Result g =
        teal({"eval", "--model", model(), "--hists", hists(), "--seed", "9", "--config",
              (fs::path(out) / ("config_p" + p + ".tealc")).string()});
    const Result u = teal({"eval", "--model", model(), "--hists", hists(), "--seed", "9",
                           "--uniform", p});
    ASSERT_EQ(g.code, 0) << g.err;
    ASSERT_EQ(u.code, 0) << u.err;
    const auto gt = parse_table(g.out), ut = parse_table(u.out);
    const std::size_t col = column(gt[0], "block_error");
    for (std::size_t row = 1; row <= 2; ++row) {
      EXPECT_LE(std::stod(gt[row][col]), std::stod(ut[row][col]))
          << "P=" << p << " block " << row - 1;
    }
  }
}

TEST_F(Pipeline, EvalUniformGrid) {
  const std::string out = path("eval.csv");
  const Result r = teal({"eval", "--model", model(), "--hists", hists(), "--seed", "8",
                         "--format", "csv", "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(manifest_path_for(out)));
  const auto rows = parse_table(slurp(out), ',');
  ASSERT_EQ(rows.size(), 1u + 10 * 2);
  const auto& h = rows[0];
  const std::size_t be = column(h, "block_error"), me = column(h, "model_error"),
                    te = column(h, "teal_intermediate"), ce = column(h, "cats_intermediate");
  for (std::size_t row = 1; row <= 2; ++row) {
    for (std::size_t c : {be, me, te, ce}) EXPECT_EQ(std::stod(rows[row][c]), 0.0);
  }
  for (std::size_t block = 0; block < 2; ++block) {
    for (std::size_t k = 1; k < 10; ++k) {
      const auto& prev = rows[1 + (k - 1) * 2 + block];
      const auto& cur = rows[1 + k * 2 + block];
      EXPECT_GE(std::stod(cur[be]), std::stod(prev[be]));
      EXPECT_GE(std::stod(cur[me]), std::stod(prev[me]));
    }
  }
}

TEST_F(Pipeline, EvalRejectsMismatchedConfig) {
  const std::string cfg = path("one_block.tealc");
  save_configs(cfg, {BlockSparsityConfig{}});
  const Result r = teal({"eval", "--model", model(), "--hists", hists(), "--config", cfg});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("2-block"), std::string::npos);
}

TEST(Theory, TableShapeAndAgreement) {
  const Result r = teal({"theory", "--ps", "0,0.3,0.7,1", "--m", "128", "--n", "128",
                         "--trials", "40", "--seed", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_table(r.out);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0][0], "p");
  const auto& h = rows[0];
  const std::size_t am = column(h, "analytic_magnitude"), ar = column(h, "analytic_random"),
                    mm = column(h, "mc_mean"), ms = column(h, "mc_stderr");
  EXPECT_EQ(std::stod(rows[1][am]), 0.0);
  EXPECT_EQ(std::stod(rows[1][ar]), 0.0);
  EXPECT_EQ(std::stod(rows[4][am]), 1.0);
  EXPECT_EQ(std::stod(rows[4][ar]), 1.0);
  for (std::size_t i = 2; i <= 3; ++i) {
    EXPECT_LT(std::stod(rows[i][am]), std::stod(rows[i][ar]));
    EXPECT_LE(std::fabs(std::stod(rows[i][mm]) - std::stod(rows[i][am])),
              3 * std::stod(rows[i][ms]) + 1e-3);
  }
}

TEST(Bench, SmallShape) {
  const Result r = teal({"bench", "--rows", "128", "--cols", "512", "--reps", "10",
                         "--warmup", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_table(r.out);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"sparsity", "median_ns", "min_ns",
                                               "dense_median_ns", "speedup",
                                               "weight_bytes"}));
  EXPECT_EQ(rows[1][5], "262144");
  for (std::size_t i = 2; i < rows.size(); ++i) {
    EXPECT_LT(std::stoll(rows[i][5]), std::stoll(rows[i - 1][5]));
  }
}

TEST(ExitCodes, ValidationAndIo) {
  EXPECT_EQ(teal({}).code, kExitValidation);
  EXPECT_EQ(teal({"frobnicate"}).code, kExitValidation);
  EXPECT_EQ(teal({"theory", "--format", "xml"}).code, kExitValidation);
  EXPECT_EQ(teal({"bench", "--reps", "2"}).code, kExitValidation);
  EXPECT_EQ(teal({"calibrate", "--model", "/nonexistent/model.tealm", "--out",
                  (fs::temp_directory_path() / "teal_unused").string()})
                .code,
            kExitIo);
  EXPECT_EQ(teal({"gen-model", "--out", "/nonexistent/dir/model.tealm"}).code, kExitIo);
  EXPECT_EQ(teal({"--help"}).code, kExitOk);
}

}  // namespace
}  // namespace teal::cli
