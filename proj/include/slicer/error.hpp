#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace slicer {

// Raised for precondition violations, malformed input files and numerical
// failures inside the learner.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename... Args>
[[noreturn]] void fail(Args&&... args) {
  std::ostringstream oss;
  (oss << ... << std::forward<Args>(args));
  throw Error(oss.str());
}

}  // namespace detail
}  // namespace slicer
