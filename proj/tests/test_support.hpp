#pragma once

// Shared fixtures for the test suites.

#include <filesystem>
#include <string>
#include <vector>

#include "dba/dba.hpp"

namespace testsupport {

/// Two-class, two-symbol spec with an attribute-driven conditional
/// (p(x=k | y, s) = 0.9 if k == s else 0.1), balanced classes, 20%
/// minority mass. Small enough to verify every cell by hand:
///   p_tr(0,0) = 0.41   p_tr(1,0) = 0.09   (and symmetric for y=1)
///   p_te(k,y) = 0.25 everywhere
///   rho(0,0)  = 0.405/0.41
inline dba::DiscreteGenSpec worked_spec() {
  dba::DiscreteGenSpec spec;
  spec.L = 2;
  spec.K = 2;
  spec.p_m0 = 0.2;
  spec.p_y = {0.5, 0.5};
  spec.seed = 7;
  spec.cond.resize(8);
  for (int y = 0; y < 2; ++y)
    for (int s = 0; s < 2; ++s)
      for (int k = 0; k < 2; ++k) spec.cond_at(k, y, s) = (k == s) ? 0.9 : 0.1;
  return spec;
}

/// Scratch directory under the system temp root, fresh per call.
inline std::filesystem::path fresh_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("dba_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testsupport
