#include "teal/greedy.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "teal/error.h"

namespace teal {

namespace {

constexpr double kSelectSlack = 1e-9;

double calibration_error(const TransformerBlock& block,
                         const std::vector<Matrix>& inputs,
                         const std::vector<Matrix>& ground_truth,
                         const BlockSparsityConfig& cfg) {
  double ss = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const double d = l2_distance(block_forward_sparse(block, inputs[k], cfg),
                                 ground_truth[k]);
    ss += d * d;
  }
  return std::sqrt(ss);
}

}  // namespace

void StepPolicy::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ValidationError("step size alpha must lie in (0, 1]");
  }
  if (cap != 1.0) throw ValidationError("level cap must be 1.0");
}

Footprints block_footprints(const TransformerBlock& block) {
  Footprints f{};
  for (MatrixId id : kAllMatrices) {
    f[static_cast<std::size_t>(id)] = block.footprint(id);
  }
  return f;
}

double block_sparsity(const std::array<double, kMatrixCount>& levels,
                      const Footprints& footprints) {
  double num = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < kMatrixCount; ++i) {
    num += levels[i] * static_cast<double>(footprints[i]);
    total += static_cast<double>(footprints[i]);
  }
  return num / total;
}

std::vector<AllocationStep> greedy_allocate(
    std::span<const std::uint64_t> footprints, const StepPolicy& policy,
    const LevelEvaluator& evaluate) {
  policy.validate();
  if (footprints.empty()) throw ValidationError("greedy: no matrices");
  double total = 0.0;
  for (auto f : footprints) {
    if (f == 0) throw ValidationError("greedy: zero-size matrix");
    total += static_cast<double>(f);
  }
  const auto weighted = [&](const std::vector<double>& levels) {
    double num = 0.0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
      num += levels[i] * static_cast<double>(footprints[i]);
    }
    return num / total;
  };

  std::vector<double> levels(footprints.size(), 0.0);
  std::vector<AllocationStep> steps;
  steps.push_back({0.0, levels, std::nullopt, 0.0});
  double reached = 0.0;
  while (reached < 1.0) {
    std::optional<std::size_t> best;
    double best_error = std::numeric_limits<double>::infinity();
    double best_level = 0.0;
    std::vector<double> trial = levels;
    for (std::size_t i = 0; i < levels.size(); ++i) {
      if (levels[i] >= policy.cap) continue;
      const double delta =
          policy.alpha * total / static_cast<double>(footprints[i]);
      trial[i] = std::min(policy.cap, levels[i] + delta);
      const double err = evaluate(trial);
      trial[i] = levels[i];
      if (!best || err < best_error) {
        best = i;
        best_error = err;
        best_level = std::min(policy.cap, levels[i] + delta);
      }
    }
    if (!best) break;
    levels[*best] = best_level;
    reached = weighted(levels);
    steps.push_back({reached, levels, best, best_error});
  }
  return steps;
}

GreedyTrace greedy_optimize(const TransformerBlock& block,
                            const BlockCalibration& calibration,
                            const std::vector<Matrix>& calibration_inputs,
                            const StepPolicy& policy, std::size_t block_id) {
  if (calibration_inputs.empty()) {
    throw ValidationError("greedy_optimize: no calibration inputs");
  }
  const Footprints f = block_footprints(block);

  std::vector<Matrix> ground_truth;
  ground_truth.reserve(calibration_inputs.size());
  for (const Matrix& x : calibration_inputs) {
    ground_truth.push_back(block_forward_dense(block, x));
  }

  const auto steps = greedy_allocate(
      f, policy, [&](std::span<const double> trial) {
        std::array<double, kMatrixCount> levels{};
        std::copy(trial.begin(), trial.end(), levels.begin());
        return calibration_error(block, calibration_inputs, ground_truth,
                                 calibration.resolve(levels));
      });

  GreedyTrace trace;
  trace.block_id = block_id;
  trace.alpha = policy.alpha;
  for (const AllocationStep& step : steps) {
    GreedyStep out;
    out.block_sparsity = step.total_sparsity;
    std::copy(step.levels.begin(), step.levels.end(), out.levels.begin());
    if (step.chosen) out.chosen = static_cast<MatrixId>(*step.chosen);
    out.error = step.error;
    trace.steps.push_back(out);
  }
  return trace;
}

BlockSparsityConfig uniform_config(const BlockCalibration& calibration,
                                   double p) {
  std::array<double, kMatrixCount> levels;
  levels.fill(p);
  return calibration.resolve(levels);
}

const GreedyStep& select_step(const GreedyTrace& trace, double target_p) {
  if (trace.steps.empty()) throw ValidationError("select_config: empty trace");
  if (!(target_p >= 0.0 && target_p <= 1.0)) {
    throw ValidationError("select_config: target must lie in [0, 1]");
  }
  for (const GreedyStep& step : trace.steps) {
    if (step.block_sparsity >= target_p - kSelectSlack) return step;
  }
  throw ValidationError("select_config: target " + std::to_string(target_p) +
                        " beyond trace of block " +
                        std::to_string(trace.block_id) + " (max P " +
                        std::to_string(trace.steps.back().block_sparsity) + ")");
}

BlockSparsityConfig select_config(const GreedyTrace& trace,
                                  const BlockCalibration& calibration,
                                  double target_p) {
  return calibration.resolve(select_step(trace, target_p).levels);
}

void validate_trace(const GreedyTrace& trace, const Footprints& footprints,
                    double tolerance) {
  const auto fail = [&](std::size_t step, const std::string& what) {
    throw ValidationError("trace block " + std::to_string(trace.block_id) +
                          " step " + std::to_string(step) + ": " + what);
  };
  for (std::size_t s = 0; s < trace.steps.size(); ++s) {
    const GreedyStep& step = trace.steps[s];
    for (double p : step.levels) {
      if (!(p >= 0.0 && p <= 1.0)) fail(s, "level outside [0, 1]");
    }
    const double expected = block_sparsity(step.levels, footprints);
    if (std::abs(expected - step.block_sparsity) > tolerance) {
      fail(s, "P does not match footprint-weighted levels");
    }
    if (s == 0) continue;
    const GreedyStep& prev = trace.steps[s - 1];
    if (!(step.block_sparsity > prev.block_sparsity)) {
      fail(s, "P not strictly increasing");
    }
    for (std::size_t i = 0; i < kMatrixCount; ++i) {
      if (step.levels[i] < prev.levels[i]) fail(s, "level decreased");
    }
  }
}

std::uint64_t cost_estimate(std::uint64_t n_matrices, double alpha,
                            std::uint64_t samples) {
  if (n_matrices == 0 || samples == 0 || !(alpha > 0.0)) {
    throw ValidationError("cost_estimate: arguments must be positive");
  }
  const double raw = static_cast<double>(samples) *
                     static_cast<double>(n_matrices * n_matrices) / alpha;
  // alpha is rarely exact in binary; a relative 1e-12 slack keeps
  // 490 / 0.05 from rounding up to 9801.
  return static_cast<std::uint64_t>(std::ceil(raw * (1.0 - 1e-12)));
}

}  // namespace teal
