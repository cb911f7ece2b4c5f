#ifndef TEAL_TOY_MODEL_H_
#define TEAL_TOY_MODEL_H_

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "teal/histogram.h"
#include "teal/rng.h"
#include "teal/sparsifier.h"
#include "teal/tensor.h"

namespace teal {

// The seven sparsifiable projections of a block, in canonical order. This
// order is also the greedy tie-break order and the on-disk order.
enum class MatrixId { kQ = 0, kK, kV, kO, kGate, kUp, kDown };
inline constexpr std::size_t kMatrixCount = 7;
inline constexpr std::array<MatrixId, kMatrixCount> kAllMatrices = {
    MatrixId::kQ,    MatrixId::kK,  MatrixId::kV,   MatrixId::kO,
    MatrixId::kGate, MatrixId::kUp, MatrixId::kDown};

std::string_view matrix_name(MatrixId id);
MatrixId parse_matrix_name(std::string_view name);

// Hidden-state positions at which activations are recorded. The first four
// feed the seven projections (q/k/v share PreAttn, gate/up share PreMlp);
// kGateAct is SiLU(x W_gate^T), used only to calibrate the CATS baseline.
enum class Tap { kPreAttn = 0, kIntraAttn, kPreMlp, kIntraMlp, kGateAct };
inline constexpr std::size_t kTapCount = 5;

std::string_view tap_name(Tap tap);
Tap input_tap(MatrixId id);

struct BlockDims {
  std::size_t d_model = 256;
  std::size_t heads = 4;
  std::size_t d_ff = 704;

  std::size_t d_head() const { return d_model / heads; }
  void validate() const;
  bool operator==(const BlockDims&) const = default;
};

inline constexpr float kRmsNormEps = 1e-6f;

// One pre-norm Llama-style block: causal multi-head attention followed by a
// SwiGLU MLP, no positional encoding. Projections are stored column-major
// (out x in) so that input-sparse products can skip whole columns.
struct TransformerBlock {
  BlockDims dims;
  std::array<Matrix, kMatrixCount> weights;
  Vector rms_attn;
  Vector rms_mlp;

  const Matrix& weight(MatrixId id) const {
    return weights[static_cast<std::size_t>(id)];
  }
  Matrix& weight(MatrixId id) { return weights[static_cast<std::size_t>(id)]; }

  // Element count of a projection (its memory footprint in elements).
  std::size_t footprint(MatrixId id) const { return weight(id).size(); }

  // Throws ValidationError unless every matrix and norm vector matches dims.
  void validate() const;

  bool operator==(const TransformerBlock&) const = default;
};

// Weights i.i.d. N(0, 1/d_in) with d_in the matrix's column count; norm
// scales are 1. Matrix k is drawn from rng.split(k).
TransformerBlock gen_block(const RngStream& rng, const BlockDims& dims);

// Per-matrix sparsity levels and the thresholds resolved for them.
struct BlockSparsityConfig {
  std::array<double, kMatrixCount> levels{};
  std::array<Threshold, kMatrixCount> thresholds{};

  double level(MatrixId id) const { return levels[static_cast<std::size_t>(id)]; }
  Threshold threshold(MatrixId id) const {
    return thresholds[static_cast<std::size_t>(id)];
  }
};

// Calibration histograms, one per Tap.
class BlockCalibration {
 public:
  explicit BlockCalibration(std::vector<ActivationHistogram> taps);

  const ActivationHistogram& tap(Tap t) const {
    return taps_[static_cast<std::size_t>(t)];
  }
  const std::vector<ActivationHistogram>& taps() const { return taps_; }

  // Threshold for `id` at `level`; level 1 maps to Threshold::prune_all() so
  // that values in the overflow bucket are pruned too.
  Threshold resolve(MatrixId id, double level) const;
  BlockSparsityConfig resolve(const std::array<double, kMatrixCount>& levels) const;

 private:
  std::vector<ActivationHistogram> taps_;
};

// Observer called with each tap's activation (seq x dim) during a forward.
using TapObserver = std::function<void(Tap, const Matrix&)>;

Matrix rms_norm(const Matrix& x, std::span<const float> scale);
Matrix block_forward_dense(const TransformerBlock& block, const Matrix& x,
                           const TapObserver& observer = {});
// Every projection input is sparsified with its own threshold first.
Matrix block_forward_sparse(const TransformerBlock& block, const Matrix& x,
                            const BlockSparsityConfig& cfg);

// MLP-level helpers. `h` is the MLP input, i.e. rms_norm of the residual.
Matrix mlp_forward_dense(const TransformerBlock& block, const Matrix& h);
// CATS-style: SiLU(h W_gate^T) is thresholded; W_up gets output sparsity
// from that mask and W_down input sparsity from the sparse product.
Matrix mlp_forward_cats(const TransformerBlock& block, const Matrix& h,
                        Threshold gate_threshold);
Matrix mlp_forward_cats(const TransformerBlock& block, const Matrix& h,
                        const BlockCalibration& cal, double p);

// Intermediate-state errors, normalized by ||h W_up^T (.) SiLU(h W_gate^T)||:
//   input sparsity on W_up:  ||(h - s(h)) W_up^T (.) SiLU(h W_gate^T)||
//   CATS output sparsity:    ||h W_up^T (.) [SiLU(g) - s'(SiLU(g))]||
double intermediate_error_teal(const TransformerBlock& block, const Matrix& h,
                               Threshold up_threshold);
double intermediate_error_cats(const TransformerBlock& block, const Matrix& h,
                               Threshold gate_threshold);
double intermediate_error_teal(const TransformerBlock& block, const Matrix& h,
                               const BlockCalibration& cal, double p);
double intermediate_error_cats(const TransformerBlock& block, const Matrix& h,
                               const BlockCalibration& cal, double p);

// Realized sparsity of the CATS intermediate state at the given threshold.
double cats_intermediate_sparsity(const TransformerBlock& block,
                                  const Matrix& h, Threshold gate_threshold);

// MLP input of the block for residual stream x (dense attention half).
Matrix mlp_input(const TransformerBlock& block, const Matrix& x);

// Histograms at every tap from dense forwards over `samples`. The first
// sample fixes each histogram's range.
BlockCalibration calibrate_block(const TransformerBlock& block,
                                 const std::vector<Matrix>& samples,
                                 std::size_t bins = kDefaultBinCount);

// Signed activations at one tap, concatenated over samples.
Vector collect_tap(const TransformerBlock& block,
                   const std::vector<Matrix>& samples, Tap tap);

// `count` sequences of seq x d_model N(0, 1) entries; sequence k uses
// rng.split(k).
std::vector<Matrix> make_inputs(const RngStream& rng, std::size_t count,
                                std::size_t seq, std::size_t d_model);

// ||a - b||_F / ||b||_F accumulated in double.
double relative_l2_error(const Matrix& approx, const Matrix& reference);
double l2_distance(const Matrix& a, const Matrix& b);

struct ToyModel {
  BlockDims dims;
  std::vector<TransformerBlock> blocks;
  bool operator==(const ToyModel&) const = default;
};

// Block b is generated from RngStream(seed).split(b).
ToyModel gen_model(std::uint64_t seed, std::size_t blocks, const BlockDims& dims);

// Input of every block plus the final output under a dense forward:
// result[b] feeds block b, result[blocks] is the model output.
std::vector<Matrix> model_forward_dense_trace(const ToyModel& model,
                                              const Matrix& x);

// Model file:
//   TEALM1 <blocks> <d_model> <heads> <d_ff>\n
//   per block: q k v o gate up down weight sections, then rms_attn and
//   rms_mlp as 1 x d_model weight sections.
void write_model(std::ostream& out, const ToyModel& model);
ToyModel read_model(std::istream& in);
void save_model(const std::string& path, const ToyModel& model);
ToyModel load_model(const std::string& path);

}  // namespace teal

#endif  // TEAL_TOY_MODEL_H_
