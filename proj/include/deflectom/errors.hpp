#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace deflectom {

// Bad or inconsistent user configuration (schema violations, invalid
// physical parameters). CLI maps this family to exit code 1.
struct config_error : std::runtime_error {
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Laser geometry that does not describe a transverse field / valid frame.
struct geometry_error : config_error {
  explicit geometry_error(const std::string& what) : config_error(what) {}
};

// Numerical failures (integrator, eigensolver, fitter). Exit code 2.
struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

struct fit_error : numerical_error {
  explicit fit_error(const std::string& what) : numerical_error(what) {}
};

struct conditioning_error : numerical_error {
  explicit conditioning_error(const std::string& what) : numerical_error(what) {}
};

// Contract violations between modules (e.g. density matrix handed over in
// the wrong reference frame). Programming errors, not user errors.
struct frame_error : std::logic_error {
  explicit frame_error(const std::string& what) : std::logic_error(what) {}
};

// Measurement set does not determine all state parameters. Exit code 3.
struct insufficient_measurements_error : std::runtime_error {
  insufficient_measurements_error(const std::string& what,
                                  std::vector<std::string> unresolved_directions)
      : std::runtime_error(what), unresolved(std::move(unresolved_directions)) {}
  std::vector<std::string> unresolved;
};

}  // namespace deflectom
