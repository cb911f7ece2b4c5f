#ifndef TEAL_WEIGHT_IO_H_
#define TEAL_WEIGHT_IO_H_

#include <iosfwd>
#include <string>

#include "teal/tensor.h"

namespace teal {

// Weight section format:
//   TEALW1 <rows> <cols> <layout>\n
//   rows*cols little-endian float32 values in logical row-major order.
// The header records the in-memory layout; the payload order never changes.
void write_weights(std::ostream& out, const Matrix& w);
Matrix read_weights(std::istream& in);

void save_weights(const std::string& path, const Matrix& w);
Matrix load_weights(const std::string& path);

}  // namespace teal

#endif  // TEAL_WEIGHT_IO_H_
