#pragma once

#include <stdexcept>
#include <string>

namespace kirchhoff {

enum class ErrorKind {
  invalid_mesh,
  assembly,
  shape,
  linear_solve,
  domain,
  integration,
  unsupported_law,
  no_root,
  feasibility,
  config,
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

}  // namespace kirchhoff
