#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "teal/error.h"
#include "teal/toy_model.h"
#include "teal/weight_io.h"

namespace teal {

namespace {

Vector read_norm(std::istream& in, std::size_t d) {
  const Matrix m = read_weights(in);
  if (m.rows() != 1 || m.cols() != d) {
    throw ValidationError("norm section must be 1 x " + std::to_string(d));
  }
  return Vector(m.data().begin(), m.data().end());
}

}  // namespace

void write_model(std::ostream& out, const ToyModel& model) {
  const BlockDims& d = model.dims;
  out << "TEALM1 " << model.blocks.size() << ' ' << d.d_model << ' ' << d.heads
      << ' ' << d.d_ff << '\n';
  for (const TransformerBlock& block : model.blocks) {
    for (MatrixId id : kAllMatrices) write_weights(out, block.weight(id));
    write_weights(out, Matrix(1, d.d_model, Layout::kRowMajor, block.rms_attn));
    write_weights(out, Matrix(1, d.d_model, Layout::kRowMajor, block.rms_mlp));
  }
}

ToyModel read_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("missing TEALM1 header");
  std::istringstream header(line);
  std::string magic;
  long long blocks = -1, d_model = -1, heads = -1, d_ff = -1;
  header >> magic >> blocks >> d_model >> heads >> d_ff;
  if (magic != "TEALM1" || !header || blocks < 1 || d_model < 1 || heads < 1 ||
      d_ff < 1) {
    throw ValidationError("bad model header '" + line + "'");
  }
  ToyModel model;
  model.dims = {static_cast<std::size_t>(d_model),
                static_cast<std::size_t>(heads), static_cast<std::size_t>(d_ff)};
  model.dims.validate();
  for (long long b = 0; b < blocks; ++b) {
    TransformerBlock block;
    block.dims = model.dims;
    for (MatrixId id : kAllMatrices) block.weight(id) = read_weights(in);
    block.rms_attn = read_norm(in, model.dims.d_model);
    block.rms_mlp = read_norm(in, model.dims.d_model);
    block.validate();
    model.blocks.push_back(std::move(block));
  }
  return model;
}

void save_model(const std::string& path, const ToyModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  write_model(out, model);
  if (!out) throw IoError(path, "write failed");
}

ToyModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  return read_model(in);
}

}  // namespace teal
