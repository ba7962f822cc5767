#pragma once

#include <stdexcept>
#include <string>

namespace wsc {

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptySupportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InactiveCellError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedStratumError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InconclusiveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace wsc
