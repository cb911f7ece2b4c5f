#ifndef TEAL_GREEDY_H_
#define TEAL_GREEDY_H_

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "teal/toy_model.h"

namespace teal {

struct StepPolicy {
  // Base step; layer i moves by alpha * F / f_i per commit.
  double alpha = 0.05;
  double cap = 1.0;

  void validate() const;
};

struct GreedyStep {
  double block_sparsity = 0.0;
  std::array<double, kMatrixCount> levels{};
  // Empty for the initial all-zero record.
  std::optional<MatrixId> chosen;
  // ||Y_gt - Y_hat||_F over the calibration set after this commit.
  double error = 0.0;
};

struct GreedyTrace {
  std::size_t block_id = 0;
  double alpha = 0.0;
  std::vector<GreedyStep> steps;
};

using Footprints = std::array<std::uint64_t, kMatrixCount>;

Footprints block_footprints(const TransformerBlock& block);

// sum_i p_i f_i / F
double block_sparsity(const std::array<double, kMatrixCount>& levels,
                      const Footprints& footprints);

// One record of the generic allocator; `chosen` indexes the footprint list.
struct AllocationStep {
  double total_sparsity = 0.0;
  std::vector<double> levels;
  std::optional<std::size_t> chosen;
  double error = 0.0;
};

// Error of a candidate level vector (lower is better).
using LevelEvaluator = std::function<double(std::span<const double>)>;

// The greedy search over any number of matrices: each round raises every
// uncapped matrix i by alpha * F / f_i in turn, scores the candidate with the
// others at their committed levels, commits the lowest-error one (earliest
// index on ties), and records the footprint-weighted total. Stops once the
// total reaches 1. The first record is the all-zero start.
std::vector<AllocationStep> greedy_allocate(
    std::span<const std::uint64_t> footprints, const StepPolicy& policy,
    const LevelEvaluator& evaluate);

// Footprint-weighted greedy allocation for one block. Starting from all
// levels at zero, each round tentatively raises every uncapped layer by
// alpha * F / f_i (clamped to the cap) with the other layers held at their
// committed levels, evaluates the sparse block on `calibration_inputs`, and
// commits the candidate with the smallest Frobenius error against the dense
// output. Ties go to the earlier layer in q,k,v,o,gate,up,down order. Runs
// until the block-level sparsity reaches 1. The first trace record is the
// all-zero configuration.
GreedyTrace greedy_optimize(const TransformerBlock& block,
                            const BlockCalibration& calibration,
                            const std::vector<Matrix>& calibration_inputs,
                            const StepPolicy& policy, std::size_t block_id = 0);

BlockSparsityConfig uniform_config(const BlockCalibration& calibration, double p);

// First record whose block sparsity reaches target_p (within 1e-9, which
// absorbs rounding in the footprint sum). Throws if no record does.
const GreedyStep& select_step(const GreedyTrace& trace, double target_p);
BlockSparsityConfig select_config(const GreedyTrace& trace,
                                  const BlockCalibration& calibration,
                                  double target_p);

// Throws ValidationError unless P is strictly increasing, every level is
// non-decreasing and within [0, 1], and P = sum p_i f_i / F to `tolerance`.
void validate_trace(const GreedyTrace& trace, const Footprints& footprints,
                    double tolerance = 1e-9);

// Forward passes needed by the greedy search: ceil(samples * n^2 / alpha).
std::uint64_t cost_estimate(std::uint64_t n_matrices, double alpha,
                            std::uint64_t samples);

// Trace file:
//   TEALG1 <block_id> <alpha>
//   P p_q p_k p_v p_o p_gate p_up p_down chosen error
void write_trace(std::ostream& out, const GreedyTrace& trace);
GreedyTrace read_trace(std::istream& in);
void save_trace(const std::string& path, const GreedyTrace& trace);
GreedyTrace load_trace(const std::string& path);

// Config file:
//   TEALC1 <blocks>
//   <name> <level> <threshold>     (seven lines per block, canonical order)
void write_configs(std::ostream& out,
                   const std::vector<BlockSparsityConfig>& configs);
std::vector<BlockSparsityConfig> read_configs(std::istream& in);
void save_configs(const std::string& path,
                  const std::vector<BlockSparsityConfig>& configs);
std::vector<BlockSparsityConfig> load_configs(const std::string& path);

}  // namespace teal

#endif  // TEAL_GREEDY_H_
