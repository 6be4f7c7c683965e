#include "physguard/rng.hpp"

#include <cmath>

namespace physguard {

// Marsaglia polar method; the spare deviate is discarded so every call
// consumes a self-contained run of draws.
double standard_normal(Rng& rng) {
  for (;;) {
    const double u = 2.0 * uniform01(rng) - 1.0;
    const double v = 2.0 * uniform01(rng) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

}  // namespace physguard
