// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace collapsim {

// SplitMix64 step; used both as a mixer and to expand seeds.
constexpr std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++ stream addressed by (master_seed, stream_index).
//
// Seeding policy (recorded in run manifests): the four state words are the
// first four outputs of SplitMix64 started at
//   master_seed + (stream_index + 1) * 0x9e3779b97f4a7c15.
// Identical (master_seed, stream_index) gives a bit-identical sequence on
// every platform; uniforms are (x >> 11) * 2^-53 in [0, 1).
class RngStream {
  public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index) noexcept {
        std::uint64_t s = master_seed + (stream_index + 1) * 0x9e3779b97f4a7c15ULL;
        for (auto& word : state_) word = splitmix64_next(s);
    }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53 random bits.
    double next_u01() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    void fill_u01(double* out, std::size_t n) noexcept {
        for (std::size_t i = 0; i < n; ++i) out[i] = next_u01();
    }

  private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

}  // namespace collapsim
