#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace orderid {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace detail

/// Mixes identifiers into a single stream index so that distinct tuples map to
/// distinct, well-separated streams.
inline std::uint64_t stream_index(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = a * 0x9E3779B97F4A7C15ULL;
    s ^= detail::splitmix64(b);
    std::uint64_t t = s + 0x632BE59BD9B4E019ULL * (c + 1);
    return detail::splitmix64(t);
}

/// Counter-seeded PRNG stream (xoshiro256++ with splitmix64 expansion).
///
/// Streams are identified by a (seed, index) pair: the same pair always
/// reproduces the same draw sequence, and distinct pairs give statistically
/// independent sequences. Outputs do not depend on the standard library, so
/// sequences are bit-stable across platforms. A stream is owned by a single
/// consumer; derive substreams instead of sharing.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t index)
        : seed_(seed), index_(index) {
        std::uint64_t s = seed ^ detail::splitmix64(index);
        for (auto& word : state_) word = detail::splitmix64(s);
        has_spare_ = false;
        spare_ = 0.0;
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t index() const { return index_; }

    /// Independent stream derived from this one's identity and a salt.
    RandomStream substream(std::uint64_t salt) const {
        return RandomStream(seed_, stream_index(index_, salt, 0x5BUL));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl(state_[3], 45);
        return result;
    }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    /// Standard normal via Box-Muller; pairs are generated and cached so each
    /// stream's sequence is a deterministic function of its identity only.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u = uniform01();
        const double v = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u));
        const double a = 6.283185307179586476925286766559 * v;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Multiply-shift rejection-free mapping; bias is negligible for n << 2^64.
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

private:
    std::array<std::uint64_t, 4> state_;
    std::uint64_t seed_, index_;
    double spare_;
    bool has_spare_;
};

} // namespace orderid
