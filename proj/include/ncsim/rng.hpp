#pragma once

// Counter-based random streams (Philox4x32-10).  Every stream is keyed by a
// sub-seed derived from the experiment seed and a stream label, so any
// stream can be regenerated in isolation.

#include <array>
#include <cstdint>
#include <string_view>

namespace ncsim::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds.
Counter philox4x32(Counter ctr, Key key);

std::uint64_t mix64(std::uint64_t x);

/// Sub-seed for a labelled stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label,
                          std::uint64_t a, std::uint64_t b = 0);

class Stream {
public:
    explicit Stream(std::uint64_t key);
    Stream(std::uint64_t seed, std::string_view label)
        : Stream(derive_seed(seed, label)) {}

    std::uint32_t next_u32();
    std::uint64_t next_u64();
    /// Uniform on the open interval (0, 1).
    double uniform();
    /// Exponential variate with the given rate (> 0).
    double exponential(double rate);

private:
    Key key_;
    std::uint64_t block_ = 0;
    Counter buffer_{};
    int used_ = 4;
};

}  // namespace ncsim::rng
