#include "teal/weight_io.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "teal/error.h"

namespace teal {

namespace {

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) |
           (v >> 24);
  }
}

}  // namespace

void write_weights(std::ostream& out, const Matrix& w) {
  out << "TEALW1 " << w.rows() << ' ' << w.cols() << ' '
      << layout_name(w.layout()) << '\n';
  std::vector<char> buf(w.size() * 4);
  std::size_t k = 0;
  for (std::size_t i = 0; i < w.rows(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      const std::uint32_t bits = to_le(std::bit_cast<std::uint32_t>(w(i, j)));
      std::memcpy(buf.data() + 4 * k++, &bits, 4);
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

Matrix read_weights(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("missing TEALW1 header");
  std::istringstream header(line);
  std::string magic, layout;
  long long rows = -1, cols = -1;
  header >> magic >> rows >> cols >> layout;
  if (magic != "TEALW1" || !header || rows < 0 || cols < 0) {
    throw ValidationError("bad weight header '" + line + "'");
  }
  const auto r = static_cast<std::size_t>(rows);
  const auto c = static_cast<std::size_t>(cols);
  Matrix w(r, c, parse_layout(layout));
  std::vector<char> buf(r * c * 4);
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
    throw ValidationError("truncated weight payload: expected " +
                          std::to_string(buf.size()) + " bytes");
  }
  std::size_t k = 0;
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      std::uint32_t bits;
      std::memcpy(&bits, buf.data() + 4 * k++, 4);
      w(i, j) = std::bit_cast<float>(to_le(bits));
    }
  }
  return w;
}

void save_weights(const std::string& path, const Matrix& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  write_weights(out, w);
  if (!out) throw IoError(path, "write failed");
}

Matrix load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  return read_weights(in);
}

}  // namespace teal
