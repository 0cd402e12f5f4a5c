#pragma once

#include <cstddef>
#include <vector>

#include "dba/core.hpp"
#include "dba/error.hpp"

namespace dba {

/// Exact joint p(x, y) over a finite feature alphabet of size K and L
/// classes, tagged with the role whose law it describes.
struct JointTable {
  std::size_t K = 0;
  std::size_t L = 0;
  DatasetRole role = DatasetRole::Train;
  std::vector<double> p;  // K*L entries, index k*L + y

  JointTable() = default;
  JointTable(std::size_t K_, std::size_t L_, DatasetRole role_)
      : K(K_), L(L_), role(role_), p(K_ * L_, 0.0) {}

  double& at(std::size_t k, std::size_t y) { return p[k * L + y]; }
  double at(std::size_t k, std::size_t y) const { return p[k * L + y]; }

  double total() const {
    double s = 0.0;
    for (double v : p) s += v;
    return s;
  }
};

/// Per-cell probability that the attribute coincides with the label under
/// the training law, rho(x, y) in [0, 1].
struct PosteriorTable {
  std::size_t K = 0;
  std::size_t L = 0;
  std::vector<double> rho;

  PosteriorTable() = default;
  PosteriorTable(std::size_t K_, std::size_t L_) : K(K_), L(L_), rho(K_ * L_, 0.0) {}

  double& at(std::size_t k, std::size_t y) { return rho[k * L + y]; }
  double at(std::size_t k, std::size_t y) const { return rho[k * L + y]; }
};

/// Plain K x L table of weights or ratios, same indexing as JointTable.
struct RatioTable {
  std::size_t K = 0;
  std::size_t L = 0;
  std::vector<double> g;

  RatioTable() = default;
  RatioTable(std::size_t K_, std::size_t L_) : K(K_), L(L_), g(K_ * L_, 0.0) {}

  double& at(std::size_t k, std::size_t y) { return g[k * L + y]; }
  double at(std::size_t k, std::size_t y) const { return g[k * L + y]; }
};

}  // namespace dba
