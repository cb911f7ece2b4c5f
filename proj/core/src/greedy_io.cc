#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "teal/error.h"
#include "teal/greedy.h"

namespace teal {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_trace(std::ostream& out, const GreedyTrace& trace) {
  out << "TEALG1 " << trace.block_id << ' ' << fmt17(trace.alpha) << '\n';
  for (const GreedyStep& step : trace.steps) {
    out << fmt17(step.block_sparsity);
    for (double p : step.levels) out << ' ' << fmt17(p);
    out << ' ' << (step.chosen ? matrix_name(*step.chosen) : "none") << ' '
        << fmt17(step.error) << '\n';
  }
}

GreedyTrace read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("missing TEALG1 header");
  std::istringstream header(line);
  std::string magic;
  GreedyTrace trace;
  header >> magic >> trace.block_id >> trace.alpha;
  if (magic != "TEALG1" || !header) {
    throw ValidationError("bad trace header '" + line + "'");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    GreedyStep step;
    std::string chosen;
    row >> step.block_sparsity;
    for (double& p : step.levels) row >> p;
    row >> chosen >> step.error;
    if (!row) throw ValidationError("bad trace line '" + line + "'");
    if (chosen != "none") step.chosen = parse_matrix_name(chosen);
    trace.steps.push_back(step);
  }
  return trace;
}

void save_trace(const std::string& path, const GreedyTrace& trace) {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot open for writing");
  write_trace(out, trace);
  if (!out) throw IoError(path, "write failed");
}

GreedyTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open for reading");
  return read_trace(in);
}

void write_configs(std::ostream& out,
                   const std::vector<BlockSparsityConfig>& configs) {
  out << "TEALC1 " << configs.size() << '\n';
  for (const BlockSparsityConfig& cfg : configs) {
    for (MatrixId id : kAllMatrices) {
      out << matrix_name(id) << ' ' << fmt17(cfg.level(id)) << ' '
          << fmt17(cfg.threshold(id).value()) << '\n';
    }
  }
}

std::vector<BlockSparsityConfig> read_configs(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("missing TEALC1 header");
  std::istringstream header(line);
  std::string magic;
  long long blocks = -1;
  header >> magic >> blocks;
  if (magic != "TEALC1" || !header || blocks < 0) {
    throw ValidationError("bad config header '" + line + "'");
  }
  std::vector<BlockSparsityConfig> configs(static_cast<std::size_t>(blocks));
  for (BlockSparsityConfig& cfg : configs) {
    for (MatrixId id : kAllMatrices) {
      std::string name;
      double level = -1.0, threshold = -1.0;
      if (!(in >> name >> level >> threshold)) {
        throw ValidationError("truncated config file");
      }
      if (parse_matrix_name(name) != id) {
        throw ValidationError("config line for '" + name + "' out of order");
      }
      if (!(level >= 0.0 && level <= 1.0)) {
        throw ValidationError("config level outside [0, 1]");
      }
      const auto i = static_cast<std::size_t>(id);
      cfg.levels[i] = level;
      cfg.thresholds[i] = Threshold(threshold);
    }
  }
  return configs;
}

void save_configs(const std::string& path,
                  const std::vector<BlockSparsityConfig>& configs) {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot open for writing");
  write_configs(out, configs);
  if (!out) throw IoError(path, "write failed");
}

std::vector<BlockSparsityConfig> load_configs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open for reading");
  return read_configs(in);
}

}  // namespace teal
