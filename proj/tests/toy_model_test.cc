#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <sstream>
#include <vector>

#include "teal/error.h"
#include "teal/greedy.h"
#include "teal/toy_model.h"

namespace teal {
namespace {

constexpr BlockDims kSmall{64, 4, 176};

bool bit_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data().data(), b.data().data(), a.size() * 4) == 0;
}

// Double-precision straight-line block used as an oracle.
std::vector<std::vector<double>> oracle_forward(const TransformerBlock& b,
                                                const Matrix& x) {
  const std::size_t seq = x.rows(), d = b.dims.d_model, ff = b.dims.d_ff;
  const std::size_t heads = b.dims.heads, dh = d / heads;
  using Rows = std::vector<std::vector<double>>;
  auto norm = [&](const Rows& in, const Vector& scale) {
    Rows out = in;
    for (auto& r : out) {
      double ss = 0;
      for (double v : r) ss += v * v;
      const double inv = 1.0 / std::sqrt(ss / r.size() + 1e-6);
      for (std::size_t c = 0; c < r.size(); ++c) r[c] *= inv * scale[c];
    }
    return out;
  };
  auto proj = [&](const Rows& in, MatrixId id) {
    const Matrix& w = b.weight(id);
    Rows out(in.size(), std::vector<double>(w.rows(), 0.0));
    for (std::size_t r = 0; r < in.size(); ++r)
      for (std::size_t o = 0; o < w.rows(); ++o)
        for (std::size_t i = 0; i < w.cols(); ++i) out[r][o] += w(o, i) * in[r][i];
    return out;
  };
  Rows xs(seq, std::vector<double>(d));
  for (std::size_t r = 0; r < seq; ++r)
    for (std::size_t c = 0; c < d; ++c) xs[r][c] = x(r, c);

  const Rows h = norm(xs, b.rms_attn);
  const Rows q = proj(h, MatrixId::kQ), k = proj(h, MatrixId::kK),
             v = proj(h, MatrixId::kV);
  Rows attn(seq, std::vector<double>(d, 0.0));
  for (std::size_t hd = 0; hd < heads; ++hd) {
    for (std::size_t t = 0; t < seq; ++t) {
      std::vector<double> s(t + 1);
      double mx = -1e300;
      for (std::size_t u = 0; u <= t; ++u) {
        double dot = 0;
        for (std::size_t c = 0; c < dh; ++c) dot += q[t][hd * dh + c] * k[u][hd * dh + c];
        s[u] = dot / std::sqrt(static_cast<double>(dh));
        mx = std::max(mx, s[u]);
      }
      double z = 0;
      for (auto& e : s) z += (e = std::exp(e - mx));
      for (std::size_t u = 0; u <= t; ++u)
        for (std::size_t c = 0; c < dh; ++c)
          attn[t][hd * dh + c] += s[u] / z * v[u][hd * dh + c];
    }
  }
  const Rows o = proj(attn, MatrixId::kO);
  Rows y = xs;
  for (std::size_t r = 0; r < seq; ++r)
    for (std::size_t c = 0; c < d; ++c) y[r][c] += o[r][c];
  const Rows h2 = norm(y, b.rms_mlp);
  const Rows g = proj(h2, MatrixId::kGate), up = proj(h2, MatrixId::kUp);
  Rows inter(seq, std::vector<double>(ff));
  for (std::size_t r = 0; r < seq; ++r)
    for (std::size_t j = 0; j < ff; ++j)
      inter[r][j] = g[r][j] / (1.0 + std::exp(-g[r][j])) * up[r][j];
  const Rows down = proj(inter, MatrixId::kDown);
  for (std::size_t r = 0; r < seq; ++r)
    for (std::size_t c = 0; c < d; ++c) y[r][c] += down[r][c];
  return y;
}

class DefaultBlock : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    block_ = new TransformerBlock(gen_block(RngStream(0), BlockDims{}));
    cal_inputs_ = new std::vector<Matrix>(make_inputs(RngStream(1), 10, 128, 256));
    held_ = new std::vector<Matrix>(make_inputs(RngStream(2), 4, 128, 256));
    cal_ = new BlockCalibration(calibrate_block(*block_, *cal_inputs_));
  }
  static void TearDownTestSuite() {
    delete block_;
    delete cal_inputs_;
    delete held_;
    delete cal_;
  }
  static TransformerBlock* block_;
  static std::vector<Matrix>* cal_inputs_;
  static std::vector<Matrix>* held_;
  static BlockCalibration* cal_;
};
TransformerBlock* DefaultBlock::block_ = nullptr;
std::vector<Matrix>* DefaultBlock::cal_inputs_ = nullptr;
std::vector<Matrix>* DefaultBlock::held_ = nullptr;
BlockCalibration* DefaultBlock::cal_ = nullptr;

TEST(GenBlock, DeterministicAndSeedSensitive) {
  const auto a = gen_block(RngStream(7), kSmall);
  EXPECT_EQ(a, gen_block(RngStream(7), kSmall));
  EXPECT_NE(a.weight(MatrixId::kQ), gen_block(RngStream(8), kSmall).weight(MatrixId::kQ));
  EXPECT_NO_THROW(a.validate());
  EXPECT_EQ(a.weight(MatrixId::kGate).rows(), 176u);
  EXPECT_EQ(a.weight(MatrixId::kDown).cols(), 176u);
  EXPECT_EQ(a.weight(MatrixId::kDown).layout(), Layout::kColMajor);
}

TEST(GenBlock, WeightScale) {
  const auto b = gen_block(RngStream(3), BlockDims{});
  double ss = 0.0;
  for (float v : b.weight(MatrixId::kQ).data()) ss += double{v} * v;
  const double sd = std::sqrt(ss / b.weight(MatrixId::kQ).size());
  EXPECT_NEAR(sd * std::sqrt(256.0), 1.0, 0.02);
}

TEST(GenBlock, RejectsBadDims) {
  EXPECT_THROW(gen_block(RngStream(0), BlockDims{10, 3, 8}), ValidationError);
  EXPECT_THROW(gen_block(RngStream(0), BlockDims{0, 1, 8}), ValidationError);
}

TEST(Forward, MatchesScalarOracle) {
  const auto b = gen_block(RngStream(11), kSmall);
  const Matrix x = make_inputs(RngStream(12), 1, 8, 64)[0];
  const Matrix y = block_forward_dense(b, x);
  const auto want = oracle_forward(b, x);
  double num = 0, den = 0;
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t c = 0; c < 64; ++c) {
      num = std::max(num, std::fabs(y(r, c) - want[r][c]));
      den = std::max(den, std::fabs(want[r][c]));
    }
  }
  EXPECT_LT(num / den, 1e-5);
}

TEST(Forward, ZeroInputGivesZero) {
  const auto b = gen_block(RngStream(13), kSmall);
  const Matrix y = block_forward_dense(b, Matrix(5, 64));
  for (float v : y.data()) ASSERT_EQ(v, 0.0f);
}

TEST(Forward, SingleTokenAttentionIsValueProjection) {
  const auto b = gen_block(RngStream(14), kSmall);
  const Matrix x = make_inputs(RngStream(15), 1, 1, 64)[0];
  Matrix attn, pre;
  block_forward_dense(b, x, [&](Tap t, const Matrix& m) {
    if (t == Tap::kIntraAttn) attn = m;
    if (t == Tap::kPreAttn) pre = m;
  });
  EXPECT_TRUE(bit_equal(attn, matmul_rows(pre, b.weight(MatrixId::kV))));
}

TEST(Forward, RejectsBadInput) {
  const auto b = gen_block(RngStream(16), kSmall);
  EXPECT_THROW(block_forward_dense(b, Matrix(3, 32)), ValidationError);
  Matrix x(2, 64);
  x(1, 3) = std::nanf("");
  EXPECT_THROW(block_forward_dense(b, x), NumericError);
}

TEST(Forward, Causal) {
  const auto b = gen_block(RngStream(17), kSmall);
  const auto cal = calibrate_block(b, make_inputs(RngStream(18), 2, 16, 64));
  const auto cfg = uniform_config(cal, 0.4);
  const Matrix x = make_inputs(RngStream(19), 1, 12, 64)[0];
  for (std::size_t t : {0u, 5u, 11u}) {
    Matrix x2 = x;
    for (std::size_t c = 0; c < 64; ++c) x2(t, c) += 1.5f;
    const Matrix d1 = block_forward_dense(b, x), d2 = block_forward_dense(b, x2);
    const Matrix s1 = block_forward_sparse(b, x, cfg), s2 = block_forward_sparse(b, x2, cfg);
    for (std::size_t r = 0; r < t; ++r) {
      for (std::size_t c = 0; c < 64; ++c) {
        ASSERT_EQ(d1(r, c), d2(r, c));
        ASSERT_EQ(s1(r, c), s2(r, c));
      }
    }
  }
}

TEST(Calibration, CountsAndDeterminism) {
  const auto b = gen_block(RngStream(20), kSmall);
  const auto xs = make_inputs(RngStream(21), 3, 10, 64);
  const auto cal = calibrate_block(b, xs);
  EXPECT_EQ(cal.tap(Tap::kPreAttn).total(), 3u * 10 * 64);
  EXPECT_EQ(cal.tap(Tap::kIntraAttn).total(), 3u * 10 * 64);
  EXPECT_EQ(cal.tap(Tap::kPreMlp).total(), 3u * 10 * 64);
  EXPECT_EQ(cal.tap(Tap::kIntraMlp).total(), 3u * 10 * 176);
  EXPECT_EQ(cal.tap(Tap::kGateAct).total(), 3u * 10 * 176);
  EXPECT_EQ(cal.taps(), calibrate_block(b, xs).taps());
  EXPECT_THROW(calibrate_block(b, {}), ValidationError);
}

TEST(Calibration, ResolveEndpoints) {
  const auto b = gen_block(RngStream(22), kSmall);
  const auto cal = calibrate_block(b, make_inputs(RngStream(23), 2, 8, 64));
  EXPECT_EQ(cal.resolve(MatrixId::kQ, 0.0).value(), 0.0);
  EXPECT_EQ(cal.resolve(MatrixId::kQ, 1.0).value(), Threshold::prune_all().value());
  EXPECT_THROW(cal.resolve(MatrixId::kQ, 1.1), ValidationError);
}

TEST(MatrixNames, RoundTrip) {
  for (MatrixId id : kAllMatrices) EXPECT_EQ(parse_matrix_name(matrix_name(id)), id);
  EXPECT_THROW(parse_matrix_name("w_q"), ValidationError);
  EXPECT_EQ(input_tap(MatrixId::kV), Tap::kPreAttn);
  EXPECT_EQ(input_tap(MatrixId::kO), Tap::kIntraAttn);
  EXPECT_EQ(input_tap(MatrixId::kUp), Tap::kPreMlp);
  EXPECT_EQ(input_tap(MatrixId::kDown), Tap::kIntraMlp);
}

TEST_F(DefaultBlock, SparseAllZeroIsBitIdentical) {
  const auto cfg = uniform_config(*cal_, 0.0);
  for (const auto& x : *held_) {
    EXPECT_TRUE(bit_equal(block_forward_sparse(*block_, x, cfg),
                          block_forward_dense(*block_, x)));
  }
}

TEST_F(DefaultBlock, SparseAllOneIsResidualOnly) {
  const auto cfg = uniform_config(*cal_, 1.0);
  const Matrix& x = (*held_)[0];
  EXPECT_TRUE(bit_equal(block_forward_sparse(*block_, x, cfg), x));
}

TEST_F(DefaultBlock, QuarterSparsityErrorIsSmall) {
  const auto cfg = uniform_config(*cal_, 0.25);
  const Matrix& x = (*held_)[0];
  EXPECT_LT(relative_l2_error(block_forward_sparse(*block_, x, cfg),
                              block_forward_dense(*block_, x)),
            0.15);
}

TEST_F(DefaultBlock, MonotoneDegradation) {
  const Matrix& x = (*held_)[0];
  const Matrix dense = block_forward_dense(*block_, x);
  double prev = -1.0;
  for (int i = 0; i <= 9; ++i) {
    const double e = l2_distance(
        block_forward_sparse(*block_, x, uniform_config(*cal_, i / 10.0)), dense);
    EXPECT_GE(e, prev) << "p=" << i / 10.0;
    prev = e;
  }
}

TEST_F(DefaultBlock, UniformThresholdsReproduceSparsity) {
  const auto cfg = uniform_config(*cal_, 0.4);
  for (MatrixId id : kAllMatrices) {
    const Vector acts = collect_tap(*block_, *held_, input_tap(id));
    EXPECT_NEAR(realized_sparsity(acts, cfg.threshold(id)), 0.4, 0.01)
        << matrix_name(id);
  }
}

TEST_F(DefaultBlock, CatsEndpoints) {
  const Matrix h = mlp_input(*block_, (*held_)[0]);
  EXPECT_TRUE(bit_equal(mlp_forward_cats(*block_, h, Threshold(0.0)),
                        mlp_forward_dense(*block_, h)));
  EXPECT_TRUE(bit_equal(mlp_forward_cats(*block_, h, *cal_, 0.0),
                        mlp_forward_dense(*block_, h)));
  const Matrix zero = mlp_forward_cats(*block_, h, *cal_, 1.0);
  for (float v : zero.data()) ASSERT_EQ(v, 0.0f);
}

TEST_F(DefaultBlock, CatsRealizedSparsity) {
  double pruned = 0, total = 0;
  const Threshold t = estimate_threshold(cal_->tap(Tap::kGateAct), 0.5);
  for (const auto& x : *held_) {
    const Matrix h = mlp_input(*block_, x);
    const double s = cats_intermediate_sparsity(*block_, h, t);
    pruned += s * h.rows();
    total += h.rows();
  }
  const double s = pruned / total;
  EXPECT_GE(s, 0.49);
  EXPECT_LE(s, 0.51);
}

TEST_F(DefaultBlock, IntermediateErrorEndpoints) {
  const Matrix h = mlp_input(*block_, (*held_)[0]);
  EXPECT_EQ(intermediate_error_teal(*block_, h, *cal_, 0.0), 0.0);
  EXPECT_EQ(intermediate_error_cats(*block_, h, *cal_, 0.0), 0.0);
  EXPECT_NEAR(intermediate_error_teal(*block_, h, *cal_, 1.0), 1.0, 1e-12);
  EXPECT_NEAR(intermediate_error_cats(*block_, h, *cal_, 1.0), 1.0, 1e-12);
  EXPECT_THROW(intermediate_error_teal(*block_, Matrix(3, 256), *cal_, 0.5),
               ValidationError);
}

TEST_F(DefaultBlock, TapShapesFollowGaussianAndLaplace) {
  const Vector pre = collect_tap(*block_, *cal_inputs_, Tap::kPreAttn);
  const Vector mlp = collect_tap(*block_, *cal_inputs_, Tap::kIntraMlp);
  EXPECT_LT(fit_distribution(pre, Family::kGaussian).neg_log_likelihood,
            fit_distribution(pre, Family::kLaplace).neg_log_likelihood);
  EXPECT_LT(fit_distribution(mlp, Family::kLaplace).neg_log_likelihood,
            fit_distribution(mlp, Family::kGaussian).neg_log_likelihood);
}

TEST(ModelIo, RoundTripAndDeterminism) {
  const ToyModel m = gen_model(5, 2, kSmall);
  EXPECT_EQ(m.blocks[1], gen_block(RngStream(5).split(1), kSmall));
  std::stringstream a, b;
  write_model(a, m);
  write_model(b, gen_model(5, 2, kSmall));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().rfind("TEALM1 2 64 4 176\n", 0), 0u);
  EXPECT_EQ(read_model(a), m);

  std::stringstream truncated(b.str().substr(0, b.str().size() / 2));
  EXPECT_THROW(read_model(truncated), ValidationError);
  EXPECT_THROW(load_model("/nonexistent/dir/model.tealm"), IoError);
}

TEST(ModelTrace, FeedsBlocksInOrder) {
  const ToyModel m = gen_model(6, 3, kSmall);
  const Matrix x = make_inputs(RngStream(7), 1, 4, 64)[0];
  const auto trace = model_forward_dense_trace(m, x);
  ASSERT_EQ(trace.size(), 4u);
  EXPECT_TRUE(bit_equal(trace[0], x));
  for (std::size_t b = 0; b < 3; ++b) {
    EXPECT_TRUE(bit_equal(trace[b + 1], block_forward_dense(m.blocks[b], trace[b])));
  }
}

}  // namespace
}  // namespace teal
