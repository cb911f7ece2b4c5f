#ifndef TEAL_ERROR_H_
#define TEAL_ERROR_H_

#include <stdexcept>
#include <string>

namespace teal {

// Raised when arguments or file contents violate a documented contract
// (shape mismatch, out-of-range sparsity, malformed header, ...).
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what)
      : std::invalid_argument(what) {}
};

// Raised when a file cannot be opened, read, or written.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Raised when a forward pass produces NaN/Inf; names the tap where it
// first appeared.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace teal

#endif  // TEAL_ERROR_H_
