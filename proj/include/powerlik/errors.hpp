#pragma once

#include <stdexcept>
#include <string>

namespace powerlik {

// Iterative evaluation failed to converge within its iteration budget.
class numerics_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be opened, read, or written.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace powerlik
