#pragma once

// Counter-based PRNG. Streams are keyed by (seed, stream id), so draws for
// path i are identical no matter how paths are scheduled across threads, and
// identical across platforms (no library distributions involved).

#include <cstdint>
#include <vector>

namespace stoptail {

uint64_t splitmix64(uint64_t x);

class CounterRng {
 public:
  CounterRng(uint64_t seed, uint64_t stream);

  uint64_t next_u64();
  // uniform on [0, 1)
  double next_double();
  // standard normal via Box-Muller (explicit, no implementation-defined paths)
  double next_normal();
  // index drawn from an unnormalized nonnegative weight row of length n
  int next_discrete(const double* w, int n);

 private:
  uint64_t state_;
};

}  // namespace stoptail
