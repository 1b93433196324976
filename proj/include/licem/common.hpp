#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace licem {

inline constexpr const char* kVersion = "0.1.0";

// ----------------------------- errors -----------------------------
// Domain errors exit the CLI with code 1, usage errors with code 2.

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimError : Error {
    using Error::Error;
};
struct LabelError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};
struct ParseError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct TrainFault : Error {
    using Error::Error;
};
struct UsageError : Error {
    using Error::Error;
};

// ----------------------------- hashing -----------------------------

inline constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = kFnvOffset) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

std::uint64_t fnv1a_file(const std::string& path);
std::string to_hex(std::uint64_t v);

// ----------------------------- rng -----------------------------
// Hand-rolled splitmix64 so that streams are identical across platforms
// and standard-library versions. Distribution transforms are explicit
// for the same reason.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller with a cached spare.
    double normal();

    // Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    // Derived independent stream; deterministic in (this, tag).
    Rng fork(std::uint64_t tag) const {
        std::uint64_t s = state_ ^ (0x9E3779B97F4A7C15ULL * (tag + 1));
        return Rng(s);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Stateless uniform in [0,1) keyed by (seed, a, b). Coordinate decisions made
// with this are order-independent, which keeps interventions composable and
// parallel-safe.
inline double keyed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = seed;
    s ^= 0xA24BAED4963EE407ULL + a * 0x9E3779B97F4A7C15ULL;
    (void)splitmix64(s);
    s ^= 0x9FB21C651E98DF25ULL + b * 0xD1B54A32D192ED03ULL;
    std::uint64_t z = splitmix64(s);
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

} // namespace licem
