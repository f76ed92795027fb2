#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace cea {

// xoshiro256** with splitmix64 seeding. Self-contained so that streams are
// bit-reproducible across compilers and standard libraries. A run owns one
// root Rng per seed and derives named substreams (env, agent, sta, sampler,
// replay) so that toggling one component does not perturb the others.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // uniform in [0, 1)
  double uniform();
  double uniform(double lo, double hi);
  // standard normal via Box-Muller; one spare value is cached
  double normal();
  // uniform integer in [0, n)
  std::uint64_t uniform_index(std::uint64_t n);

  // Independent stream derived from this stream's original seed and a name.
  // Derivation ignores how many values were already drawn.
  Rng substream(std::string_view name) const;

 private:
  std::array<std::uint64_t, 4> s_{};
  std::uint64_t seed_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace cea
