#include "countspec/draws.hpp"

namespace countspec {

double halton_value(int index, int base) {
  double f = 1.0;
  double r = 0.0;
  int i = index;
  while (i > 0) {
    f /= base;
    r += f * (i % base);
    i /= base;
  }
  return r;
}

int nth_prime(int n) {
  static std::vector<int> primes = {2, 3};
  while (static_cast<int>(primes.size()) <= n) {
    int cand = primes.back() + 2;
    for (;; cand += 2) {
      bool ok = true;
      for (int p : primes) {
        if (p * p > cand) break;
        if (cand % p == 0) {
          ok = false;
          break;
        }
      }
      if (ok) break;
    }
    primes.push_back(cand);
  }
  return primes[static_cast<std::size_t>(n)];
}

DrawMatrix make_draws(const std::vector<int>& unit_counts, int n_draws,
                      DrawGenerator generator, std::uint64_t seed, int skip) {
  DrawMatrix dm;
  dm.generator = generator;
  dm.seed = seed;
  dm.n_draws = n_draws;
  dm.dims.reserve(unit_counts.size());

  for (std::size_t d = 0; d < unit_counts.size(); ++d) {
    const int units = unit_counts[d];
    Mat m(units, n_draws);
    if (generator == DrawGenerator::Halton) {
      const int base = nth_prime(static_cast<int>(d));
      int index = skip + 1;  // 1-based; radical inverse of 0 would be 0
      for (int u = 0; u < units; ++u)
        for (int r = 0; r < n_draws; ++r) m(u, r) = halton_value(index++, base);
    } else {
      Rng rng(seed + 0x517cc1b727220a95ULL * (d + 1));
      for (int u = 0; u < units; ++u)
        for (int r = 0; r < n_draws; ++r) m(u, r) = rng.uniform_open();
    }
    dm.dims.push_back(std::move(m));
  }
  return dm;
}

}  // namespace countspec
