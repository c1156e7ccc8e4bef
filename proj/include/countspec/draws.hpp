#pragma once

#include <vector>

#include "countspec/common.hpp"

namespace countspec {

enum class DrawGenerator { Halton, Pseudorandom };

enum class DrawUnit { Observation, Panel, Group };

/// Standard-uniform simulation draws, one matrix (units x n_draws) per
/// random dimension. Identical (seed, shape, generator) reproduces the
/// draws bit-for-bit. Grouped dimensions index one row per group so every
/// observation in a group shares the draw; with a panel column present the
/// remaining dimensions draw per panel, otherwise per observation.
struct DrawMatrix {
  DrawGenerator generator = DrawGenerator::Halton;
  std::uint64_t seed = 0;
  int n_draws = 0;
  std::vector<Mat> dims;  // dims[d] is units_d x n_draws, values in (0,1)

  int n_dims() const { return static_cast<int>(dims.size()); }
  double u(int dim, int unit, int r) const {
    return dims[static_cast<std::size_t>(dim)](unit, r);
  }
};

/// Radical-inverse Halton value for 1-based `index` in the given base.
double halton_value(int index, int base);

/// n-th prime (0-based): 2, 3, 5, ...
int nth_prime(int n);

/// Build draws for `unit_counts.size()` dimensions. Halton uses a distinct
/// prime base per dimension with the first `skip` points dropped;
/// pseudorandom streams derive from `seed`.
DrawMatrix make_draws(const std::vector<int>& unit_counts, int n_draws,
                      DrawGenerator generator, std::uint64_t seed, int skip = 50);

}  // namespace countspec
