#include "stoptail/rng.hpp"

#include <cmath>

namespace stoptail {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

CounterRng::CounterRng(uint64_t seed, uint64_t stream) {
  // fold the stream id into the seed through two mixing rounds so adjacent
  // streams are uncorrelated
  state_ = splitmix64(seed ^ splitmix64(stream ^ 0xd1b54a32d192ed03ULL));
}

uint64_t CounterRng::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  uint64_t x = state_;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double CounterRng::next_double() {
  return (next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::next_normal() {
  // Box-Muller; 1-u keeps the log argument in (0, 1]
  const double u1 = 1.0 - next_double();
  const double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

int CounterRng::next_discrete(const double* w, int n) {
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += w[i];
  double u = next_double() * total;
  for (int i = 0; i < n; ++i) {
    u -= w[i];
    if (u < 0.0) return i;
  }
  return n - 1;
}

}  // namespace stoptail
