#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vlrl {

// ---------------------------------------------------------------------------
// Error types
// ---------------------------------------------------------------------------

/// Shape or width mismatch between tensors/layers. Message names both shapes.
struct DimError : std::invalid_argument {
    explicit DimError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// A caller violated an API precondition (non-scalar loss, missing grad, ...).
struct ContractError : std::logic_error {
    explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

/// Invalid run configuration; raised before any work starts.
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Checkpoint/metrics file problems.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Numeric precision selection (VLRL_PRECISION={f32,f64}, default f64)
// ---------------------------------------------------------------------------

enum class Precision { f64, f32 };

inline Precision precision_from_env() {
    const char* v = std::getenv("VLRL_PRECISION");
    if (v == nullptr || std::string_view(v).empty() || std::string_view(v) == "f64") {
        return Precision::f64;
    }
    if (std::string_view(v) == "f32") {
        return Precision::f32;
    }
    throw ConfigError("VLRL_PRECISION must be 'f32' or 'f64', got '" + std::string(v) + "'");
}

inline const char* precision_name(Precision p) {
    return p == Precision::f64 ? "f64" : "f32";
}

// ---------------------------------------------------------------------------
// Diagnostics counters
// ---------------------------------------------------------------------------

// Counts cosine-similarity evaluations that hit a zero vector (collapse
// indicator; the similarity is defined as 0 with zero gradient in that case).
struct Diagnostics {
    static std::int64_t& zero_cosine_count() {
        static std::int64_t count = 0;
        return count;
    }
    static std::int64_t& encoder_forward_count() {
        static std::int64_t count = 0;
        return count;
    }
    static void reset() {
        zero_cosine_count() = 0;
        encoder_forward_count() = 0;
    }
};

// ---------------------------------------------------------------------------
// Seeded random streams
// ---------------------------------------------------------------------------

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}
}  // namespace detail

/// Derives an independent stream seed from a base seed and a purpose label.
/// Streams for distinct labels/indices never share state, so adding or
/// removing draws on one stream cannot perturb another.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                                 std::uint64_t index = 0) {
    return detail::splitmix64(base ^ detail::splitmix64(detail::fnv1a(label) + index));
}

/// mt19937_64-backed generator with portable output mappings. The helper
/// mappings avoid std distributions on purpose: their output sequences are
/// implementation-defined, and frozen golden values in tests must survive a
/// stdlib change.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    /// Box-Muller, no cached spare (keeps the draw count predictable).
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = u01();
        while (u1 <= 0.0) u1 = u01();
        const double u2 = u01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double two_pi = 6.283185307179586476925286766559;
        return mean + stddev * r * std::cos(two_pi * u2);
    }

    /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::int64_t randint(std::int64_t n) {
        if (n <= 0) throw ContractError("Rng::randint requires n > 0");
        const std::uint64_t un = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        std::uint64_t x = gen_();
        while (x >= limit) x = gen_();
        return static_cast<std::int64_t>(x % un);
    }

    bool bernoulli(double p) { return u01() < p; }

private:
    std::mt19937_64 gen_;
};

}  // namespace vlrl
