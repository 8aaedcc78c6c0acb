#pragma once

#include <stdexcept>
#include <string>

namespace qsd {

// Bad configuration documents (CLI schema violations). Mapped to exit code 2.
struct config_error : std::runtime_error {
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failures: singular solves, divergent iterations, step-size blowup.
struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Structurally invalid model definitions (non-stochastic rows, bad domains).
struct model_error : std::runtime_error {
  explicit model_error(const std::string& what) : std::runtime_error(what) {}
};

// Operations invoked on objects in an unusable state (e.g. sampling an empty
// measure).
struct state_error : std::runtime_error {
  explicit state_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qsd
