#pragma once

#include <cstdint>
#include <string_view>

namespace rflab {

// Counter-based 64-bit generator (splitmix64 output function over a Weyl
// counter).  Streams are value types: copying one forks the whole sequence.
// Sub-streams are derived from (key, tag, index) and are independent of the
// order in which they are created or consumed, which is what makes every
// experiment reproducible under any thread count.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : state_(key) {}

  // Child stream for (tag, index).  Derivation only hashes, it does not
  // advance this stream.
  Rng derive(std::string_view tag, std::uint64_t index = 0) const;

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double next_double();

  // Uniform on (0, 1]; safe under log().
  double next_double_pos();

  // Uniform integer in [0, n), n >= 1.
  std::uint64_t next_below(std::uint64_t n);

  // Standard normal via Box-Muller; consumes two uniforms per call.
  double next_gaussian();

  // Writes a uniform random subset of size k from {0,...,n-1} into out[0..k).
  // Partial Fisher-Yates; out must have room for k entries.
  void sample_without_replacement(std::uint64_t n, std::uint64_t k,
                                  std::uint32_t* out);

 private:
  std::uint64_t state_;
};

// splitmix64 finalizer, exposed for hashing needs.
std::uint64_t mix64(std::uint64_t z);

}  // namespace rflab
