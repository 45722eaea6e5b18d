// Built with relaxed floating-point flags so the inner loop vectorizes
// through the SIMD math library; see src/CMakeLists.txt.

#include <cmath>
#include <cstddef>
#include <span>

#include "prefcon/likelihood.h"

namespace prefcon {

double BlockLogLik(std::span<const double> preferred_rewards,
                   std::span<const double> dispreferred_rewards,
                   double margin) {
  const double* rj = dispreferred_rewards.data();
  const std::size_t n = dispreferred_rewards.size();
  double total = 0.0;
  for (double ri : preferred_rewards) {
    const double shift = ri - margin;
    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
    for (std::size_t j = 0; j < n; ++j) {
      // -log P = softplus(r_j - r_i + m)
      const double x = rj[j] - shift;
      acc += std::fmax(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
    }
    total -= acc;
  }
  return total;
}

}  // namespace prefcon
