#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace cgsim {

// splitmix64 step (Vigna, public domain). Used only to expand seeds.
inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_u64(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(x);
}

// Seeded generator with explicit stream identity (xoshiro256++ core).
//
// The pair (master seed, stream id) fully determines the draw sequence,
// independent of thread count or call site. Parallel code derives one
// stream per unit of work with fork(); aggregation order then never
// affects which numbers a trial sees.
class RandomSource {
 public:
  RandomSource(std::uint64_t master_seed, std::uint64_t stream_id)
      : master_(master_seed), stream_(stream_id) {
    std::uint64_t x = mix_u64(master_seed, stream_id);
    for (auto& w : s_) w = splitmix64(x);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  std::uint64_t master_seed() const { return master_; }
  std::uint64_t stream_id() const { return stream_; }

  // Child source on a derived stream; tags chain, so fork(a).fork(b)
  // and fork(b).fork(a) differ.
  RandomSource fork(std::uint64_t tag) const {
    return RandomSource(master_, mix_u64(stream_, tag));
  }
  RandomSource fork(std::uint64_t tag_a, std::uint64_t tag_b) const {
    return fork(tag_a).fork(tag_b);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0,1), 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, bound); bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("RandomSource::below: bound must be positive");
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < bound) {
      const std::uint64_t cutoff = (0 - bound) % bound;
      while (lo < cutoff) {
        m = static_cast<unsigned __int128>(next_u64()) * bound;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool bernoulli(double p) { return next_unit() < p; }

  // Index draw from unnormalized weights (small vectors only).
  std::size_t weighted(const std::vector<double>& w) {
    double total = 0.0;
    for (double v : w) total += v;
    if (!(total > 0.0)) throw std::invalid_argument("RandomSource::weighted: no mass");
    double u = next_unit() * total;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      u -= w[i];
      if (u < 0.0) return i;
    }
    return w.size() - 1;
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  std::uint64_t master_;
  std::uint64_t stream_;
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace cgsim
