#pragma once

#include <stdexcept>
#include <string>

namespace aif {

/// Shapes or dimensions that do not fit together.
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A caller-supplied value outside its documented domain.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Data coming from the outside world (observations, files) is unusable.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace aif
