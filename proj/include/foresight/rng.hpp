// Deterministic randomness. Every stochastic choice in the library flows
// through RandomStream so that (inputs, seed) fully determine outputs.
// Distributions are implemented here instead of <random>'s, which are
// allowed to differ between standard library implementations and carry
// hidden state that would leak into checkpoints.

#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <sstream>
#include <string>

namespace foresight {

// Stateless mixer used to derive independent child seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = splitmix64(base ^ 0x6a09e667f3bcc909ULL);
    s = splitmix64(s ^ a);
    s = splitmix64(s ^ (b + 0x3c6ef372fe94f82bULL));
    s = splitmix64(s ^ (c + 0xa54ff53a5f1d36f1ULL));
    return s;
}

class RandomStream {
public:
    RandomStream() : seed_(0), engine_(0) {}
    explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    // Uniform on [0, 1) with 53 bits of precision.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Standard normal via one-value Box-Muller; no cached second value,
    // so the stream state is exactly the engine state.
    double gaussian() {
        const double u1 =
            (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; // (0, 1]
        const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        const double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    // Uniform on {0, ..., n-1}. Modulo bias is below 2^-53 for the n this
    // library uses.
    std::uint64_t uniform_index(std::uint64_t n) { return engine_() % n; }

    // Independent child stream; derivation depends on the creation seed,
    // not on how much of this stream has been consumed.
    RandomStream child(std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0) const {
        return RandomStream(derive_seed(seed_, a, b, c));
    }

    std::uint64_t seed() const { return seed_; }

    std::string serialize() const {
        std::ostringstream os;
        os << seed_ << ' ' << engine_;
        return os.str();
    }

    void deserialize(const std::string& text) {
        std::istringstream is(text);
        is >> seed_ >> engine_;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace foresight
