#pragma once

#include <stdexcept>
#include <string>

namespace srmap {

// Every failure raised by the library carries one of these kinds so the
// command-line front end can map it onto an exit status.
enum class ErrorKind {
  InvalidDimension,
  Format,
  EmptyMaze,
  Spec,
  Type,
  Sampling,
  Config,
  Shape,
  Symmetry,
  Index,
  InvalidState,
  UnsupportedReshape,
  Input,
  UndefinedClustering,
  Render,
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace srmap
