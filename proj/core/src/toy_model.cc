#include "teal/toy_model.h"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "teal/error.h"
#include "teal/sparse_kernel.h"

namespace teal {

namespace {

constexpr std::array<std::string_view, kMatrixCount> kMatrixNames = {
    "q", "k", "v", "o", "gate", "up", "down"};
constexpr std::array<std::string_view, kTapCount> kTapNames = {
    "pre_attn", "intra_attn", "pre_mlp", "intra_mlp", "gate_act"};

void check_finite(const Matrix& m, std::string_view where) {
  if (!all_finite(m.data())) {
    throw NumericError("non-finite activation at " + std::string(where));
  }
}

void observe(const TapObserver& observer, Tap tap, const Matrix& m) {
  check_finite(m, tap_name(tap));
  if (observer) observer(tap, m);
}

Matrix project(const TransformerBlock& block, MatrixId id, const Matrix& in,
               const BlockSparsityConfig* cfg) {
  if (cfg == nullptr) return matmul_rows(in, block.weight(id));
  return sparse_matmul_rows(in, cfg->threshold(id), block.weight(id));
}

float silu(float v) { return v / (1.0f + std::exp(-v)); }

Matrix silu(const Matrix& g) {
  Matrix out = g;
  for (float& v : out.data()) v = silu(v);
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  Matrix out = a;
  auto od = out.data();
  auto bd = b.data();
  for (std::size_t k = 0; k < od.size(); ++k) od[k] *= bd[k];
  return out;
}

// Causal multi-head softmax attention over row-major seq x d_model inputs.
Matrix causal_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                        const BlockDims& dims) {
  const std::size_t seq = q.rows();
  const std::size_t dh = dims.d_head();
  const float scale = 1.0f / std::sqrt(static_cast<float>(dh));
  Matrix out(seq, dims.d_model);
  std::vector<float> weights(seq);
  for (std::size_t h = 0; h < dims.heads; ++h) {
    const std::size_t off = h * dh;
    for (std::size_t t = 0; t < seq; ++t) {
      const float* qt = q.row(t).data() + off;
      float max_score = -INFINITY;
      for (std::size_t u = 0; u <= t; ++u) {
        const float* ku = k.row(u).data() + off;
        float dot = 0.0f;
        for (std::size_t c = 0; c < dh; ++c) dot += qt[c] * ku[c];
        weights[u] = dot * scale;
        max_score = std::max(max_score, weights[u]);
      }
      float denom = 0.0f;
      for (std::size_t u = 0; u <= t; ++u) {
        weights[u] = std::exp(weights[u] - max_score);
        denom += weights[u];
      }
      float* ot = out.row(t).data() + off;
      for (std::size_t u = 0; u <= t; ++u) {
        const float a = weights[u] / denom;
        const float* vu = v.row(u).data() + off;
        for (std::size_t c = 0; c < dh; ++c) ot[c] += a * vu[c];
      }
    }
  }
  return out;
}

Matrix forward(const TransformerBlock& block, const Matrix& x,
               const BlockSparsityConfig* cfg, const TapObserver& observer) {
  if (x.cols() != block.dims.d_model || x.layout() != Layout::kRowMajor) {
    throw ValidationError("block input must be row-major seq x " +
                          std::to_string(block.dims.d_model));
  }
  check_finite(x, "block input");

  const Matrix h = rms_norm(x, block.rms_attn);
  observe(observer, Tap::kPreAttn, h);
  const Matrix q = project(block, MatrixId::kQ, h, cfg);
  const Matrix k = project(block, MatrixId::kK, h, cfg);
  const Matrix v = project(block, MatrixId::kV, h, cfg);
  const Matrix attn = causal_attention(q, k, v, block.dims);
  observe(observer, Tap::kIntraAttn, attn);
  const Matrix o = project(block, MatrixId::kO, attn, cfg);

  Matrix y = x;
  {
    auto yd = y.data();
    auto od = o.data();
    for (std::size_t i = 0; i < yd.size(); ++i) yd[i] += od[i];
  }

  const Matrix h2 = rms_norm(y, block.rms_mlp);
  observe(observer, Tap::kPreMlp, h2);
  const Matrix gate_act = silu(project(block, MatrixId::kGate, h2, cfg));
  observe(observer, Tap::kGateAct, gate_act);
  const Matrix up = project(block, MatrixId::kUp, h2, cfg);
  const Matrix inter = hadamard(gate_act, up);
  observe(observer, Tap::kIntraMlp, inter);
  const Matrix down = project(block, MatrixId::kDown, inter, cfg);
  {
    auto yd = y.data();
    auto dd = down.data();
    for (std::size_t i = 0; i < yd.size(); ++i) yd[i] += dd[i];
  }
  check_finite(y, "block output");
  return y;
}

double frobenius(const Matrix& m) {
  double s = 0.0;
  for (float v : m.data()) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

double normalized_ratio(const Matrix& err, const Matrix& ref) {
  const double denom = frobenius(ref);
  if (!(denom > 0.0)) {
    throw ValidationError("unsparsified product has zero norm");
  }
  return frobenius(err) / denom;
}

Matrix pruned_part(const Matrix& h, Threshold t) {
  Matrix r(h.rows(), h.cols());
  auto hd = h.data();
  auto rd = r.data();
  for (std::size_t i = 0; i < hd.size(); ++i) {
    if (t.prunes(hd[i])) rd[i] = hd[i];
  }
  return r;
}

void check_level(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError("sparsity level must lie in [0, 1]");
  }
}

}  // namespace

std::string_view matrix_name(MatrixId id) {
  return kMatrixNames[static_cast<std::size_t>(id)];
}

MatrixId parse_matrix_name(std::string_view name) {
  for (std::size_t i = 0; i < kMatrixCount; ++i) {
    if (kMatrixNames[i] == name) return static_cast<MatrixId>(i);
  }
  throw ValidationError("unknown matrix name '" + std::string(name) + "'");
}

std::string_view tap_name(Tap tap) {
  return kTapNames[static_cast<std::size_t>(tap)];
}

Tap input_tap(MatrixId id) {
  switch (id) {
    case MatrixId::kQ:
    case MatrixId::kK:
    case MatrixId::kV:
      return Tap::kPreAttn;
    case MatrixId::kO:
      return Tap::kIntraAttn;
    case MatrixId::kGate:
    case MatrixId::kUp:
      return Tap::kPreMlp;
    case MatrixId::kDown:
      return Tap::kIntraMlp;
  }
  return Tap::kPreAttn;
}

void BlockDims::validate() const {
  if (d_model == 0 || heads == 0 || d_ff == 0) {
    throw ValidationError("block dimensions must be positive");
  }
  if (d_model % heads != 0) {
    throw ValidationError("d_model (" + std::to_string(d_model) +
                          ") must be divisible by heads (" +
                          std::to_string(heads) + ")");
  }
}

void TransformerBlock::validate() const {
  dims.validate();
  const std::size_t d = dims.d_model;
  const std::size_t f = dims.d_ff;
  for (MatrixId id : kAllMatrices) {
    std::size_t rows = d, cols = d;
    if (id == MatrixId::kGate || id == MatrixId::kUp) rows = f;
    if (id == MatrixId::kDown) cols = f;
    const Matrix& w = weight(id);
    if (w.rows() != rows || w.cols() != cols) {
      throw ValidationError("matrix " + std::string(matrix_name(id)) +
                            " has shape " + std::to_string(w.rows()) + "x" +
                            std::to_string(w.cols()) + ", expected " +
                            std::to_string(rows) + "x" + std::to_string(cols));
    }
    if (w.layout() != Layout::kColMajor) {
      throw ValidationError("matrix " + std::string(matrix_name(id)) +
                            " must be ColMajor");
    }
  }
  if (rms_attn.size() != d || rms_mlp.size() != d) {
    throw ValidationError("norm scale vectors must have length d_model");
  }
}

TransformerBlock gen_block(const RngStream& rng, const BlockDims& dims) {
  dims.validate();
  TransformerBlock block;
  block.dims = dims;
  for (MatrixId id : kAllMatrices) {
    std::size_t rows = dims.d_model, cols = dims.d_model;
    if (id == MatrixId::kGate || id == MatrixId::kUp) rows = dims.d_ff;
    if (id == MatrixId::kDown) cols = dims.d_ff;
    RngStream stream = rng.split(static_cast<std::uint64_t>(id));
    block.weight(id) =
        sample_gaussian_matrix(stream, rows, cols,
                               1.0 / std::sqrt(static_cast<double>(cols)),
                               Layout::kColMajor);
  }
  block.rms_attn.assign(dims.d_model, 1.0f);
  block.rms_mlp.assign(dims.d_model, 1.0f);
  return block;
}

BlockCalibration::BlockCalibration(std::vector<ActivationHistogram> taps)
    : taps_(std::move(taps)) {
  if (taps_.size() != kTapCount) {
    throw ValidationError("block calibration needs " +
                          std::to_string(kTapCount) + " tap histograms");
  }
}

Threshold BlockCalibration::resolve(MatrixId id, double level) const {
  check_level(level);
  if (level == 1.0) return Threshold::prune_all();
  return estimate_threshold(tap(input_tap(id)), level);
}

BlockSparsityConfig BlockCalibration::resolve(
    const std::array<double, kMatrixCount>& levels) const {
  BlockSparsityConfig cfg;
  cfg.levels = levels;
  for (MatrixId id : kAllMatrices) {
    const auto i = static_cast<std::size_t>(id);
    cfg.thresholds[i] = resolve(id, levels[i]);
  }
  return cfg;
}

Matrix rms_norm(const Matrix& x, std::span<const float> scale) {
  if (scale.size() != x.cols()) throw ValidationError("rms_norm: scale length");
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto in = x.row(r);
    double ss = 0.0;
    for (float v : in) ss += static_cast<double>(v) * v;
    const float inv = static_cast<float>(
        1.0 / std::sqrt(ss / static_cast<double>(in.size()) + kRmsNormEps));
    auto o = out.row(r);
    for (std::size_t c = 0; c < in.size(); ++c) o[c] = in[c] * inv * scale[c];
  }
  return out;
}

Matrix block_forward_dense(const TransformerBlock& block, const Matrix& x,
                           const TapObserver& observer) {
  return forward(block, x, nullptr, observer);
}

Matrix block_forward_sparse(const TransformerBlock& block, const Matrix& x,
                            const BlockSparsityConfig& cfg) {
  return forward(block, x, &cfg, {});
}

Matrix mlp_input(const TransformerBlock& block, const Matrix& x) {
  Matrix result;
  forward(block, x, nullptr, [&](Tap tap, const Matrix& m) {
    if (tap == Tap::kPreMlp) result = m;
  });
  return result;
}

Matrix mlp_forward_dense(const TransformerBlock& block, const Matrix& h) {
  const Matrix gate_act = silu(matmul_rows(h, block.weight(MatrixId::kGate)));
  const Matrix up = matmul_rows(h, block.weight(MatrixId::kUp));
  return matmul_rows(hadamard(gate_act, up), block.weight(MatrixId::kDown));
}

Matrix mlp_forward_cats(const TransformerBlock& block, const Matrix& h,
                        Threshold gate_threshold) {
  Matrix gate_act = silu(matmul_rows(h, block.weight(MatrixId::kGate)));
  sparsify_inplace(gate_act.data(), gate_threshold);

  // Output sparsity on W_up: only rows j with a surviving mask entry are
  // computed, each as a dot product in ascending input order.
  const Matrix up_rows = to_layout(block.weight(MatrixId::kUp), Layout::kRowMajor);
  Matrix inter(h.rows(), block.dims.d_ff);
  for (std::size_t r = 0; r < h.rows(); ++r) {
    const auto x = h.row(r);
    const auto s = gate_act.row(r);
    auto out = inter.row(r);
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (s[j] == 0.0f) continue;
      const auto wj = up_rows.row(j);
      float acc = 0.0f;
      for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * wj[i];
      out[j] = s[j] * acc;
    }
  }
  // Input sparsity on W_down follows from the zeros of the intermediate.
  return sparse_matmul_rows(inter, Threshold(0.0), block.weight(MatrixId::kDown));
}

Matrix mlp_forward_cats(const TransformerBlock& block, const Matrix& h,
                        const BlockCalibration& cal, double p) {
  check_level(p);
  const Threshold t = p == 1.0 ? Threshold::prune_all()
                               : estimate_threshold(cal.tap(Tap::kGateAct), p);
  return mlp_forward_cats(block, h, t);
}

double intermediate_error_teal(const TransformerBlock& block, const Matrix& h,
                               Threshold up_threshold) {
  const Matrix gate_act = silu(matmul_rows(h, block.weight(MatrixId::kGate)));
  const Matrix& w_up = block.weight(MatrixId::kUp);
  const Matrix err =
      hadamard(matmul_rows(pruned_part(h, up_threshold), w_up), gate_act);
  const Matrix ref = hadamard(matmul_rows(h, w_up), gate_act);
  return normalized_ratio(err, ref);
}

double intermediate_error_cats(const TransformerBlock& block, const Matrix& h,
                               Threshold gate_threshold) {
  const Matrix gate_act = silu(matmul_rows(h, block.weight(MatrixId::kGate)));
  const Matrix up = matmul_rows(h, block.weight(MatrixId::kUp));
  const Matrix err = hadamard(up, pruned_part(gate_act, gate_threshold));
  const Matrix ref = hadamard(up, gate_act);
  return normalized_ratio(err, ref);
}

double intermediate_error_teal(const TransformerBlock& block, const Matrix& h,
                               const BlockCalibration& cal, double p) {
  return intermediate_error_teal(block, h, cal.resolve(MatrixId::kUp, p));
}

double intermediate_error_cats(const TransformerBlock& block, const Matrix& h,
                               const BlockCalibration& cal, double p) {
  check_level(p);
  const Threshold t = p == 1.0 ? Threshold::prune_all()
                               : estimate_threshold(cal.tap(Tap::kGateAct), p);
  return intermediate_error_cats(block, h, t);
}

double cats_intermediate_sparsity(const TransformerBlock& block,
                                  const Matrix& h, Threshold gate_threshold) {
  const Matrix gate_act = silu(matmul_rows(h, block.weight(MatrixId::kGate)));
  return realized_sparsity(gate_act.data(), gate_threshold);
}

BlockCalibration calibrate_block(const TransformerBlock& block,
                                 const std::vector<Matrix>& samples,
                                 std::size_t bins) {
  if (samples.empty()) {
    throw ValidationError("calibrate_block: need at least one sample sequence");
  }
  std::vector<std::optional<ActivationHistogram>> hists(kTapCount);
  for (const Matrix& sample : samples) {
    block_forward_dense(block, sample, [&](Tap tap, const Matrix& m) {
      auto& slot = hists[static_cast<std::size_t>(tap)];
      if (!slot) {
        slot = ActivationHistogram::for_batch(std::string(tap_name(tap)),
                                              m.data(), bins);
      }
      slot->record(m.data());
    });
  }
  std::vector<ActivationHistogram> taps;
  for (auto& h : hists) taps.push_back(std::move(*h));
  return BlockCalibration(std::move(taps));
}

Vector collect_tap(const TransformerBlock& block,
                   const std::vector<Matrix>& samples, Tap tap) {
  Vector out;
  for (const Matrix& sample : samples) {
    block_forward_dense(block, sample, [&](Tap t, const Matrix& m) {
      if (t == tap) out.insert(out.end(), m.data().begin(), m.data().end());
    });
  }
  return out;
}

std::vector<Matrix> make_inputs(const RngStream& rng, std::size_t count,
                                std::size_t seq, std::size_t d_model) {
  std::vector<Matrix> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    RngStream stream = rng.split(k);
    out.push_back(sample_gaussian_matrix(stream, seq, d_model, 1.0,
                                         Layout::kRowMajor));
  }
  return out;
}

double l2_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError("l2_distance: shape mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double d = static_cast<double>(a(i, j)) - b(i, j);
      s += d * d;
    }
  }
  return std::sqrt(s);
}

double relative_l2_error(const Matrix& approx, const Matrix& reference) {
  const double denom = frobenius(reference);
  if (!(denom > 0.0)) throw ValidationError("reference output has zero norm");
  return l2_distance(approx, reference) / denom;
}

ToyModel gen_model(std::uint64_t seed, std::size_t blocks,
                   const BlockDims& dims) {
  if (blocks == 0) throw ValidationError("model needs at least one block");
  ToyModel model;
  model.dims = dims;
  const RngStream root(seed);
  for (std::size_t b = 0; b < blocks; ++b) {
    model.blocks.push_back(gen_block(root.split(b), dims));
  }
  return model;
}

std::vector<Matrix> model_forward_dense_trace(const ToyModel& model,
                                              const Matrix& x) {
  std::vector<Matrix> trace{x};
  for (const TransformerBlock& block : model.blocks) {
    trace.push_back(block_forward_dense(block, trace.back()));
  }
  return trace;
}

}  // namespace teal
