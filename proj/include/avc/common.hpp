#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace avc {

// ---------------------------------------------------------------------------
// Error hierarchy. Every failure mode has a distinct type so callers can
// catch precisely and tests can assert on the exact class.
// ---------------------------------------------------------------------------

struct AvcError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : AvcError { using AvcError::AvcError; };
struct ConfigError : AvcError { using AvcError::AvcError; };
struct IoError : AvcError { using AvcError::AvcError; };

struct CycleError : AvcError { using AvcError::AvcError; };
struct DisconnectedError : AvcError { using AvcError::AvcError; };
struct ZeroImpedanceError : AvcError { using AvcError::AvcError; };
struct ZoneError : AvcError { using AvcError::AvcError; };
struct UnknownBus : AvcError { using AvcError::AvcError; };

struct CollapseDetected : AvcError { using AvcError::AvcError; };

// Carries the per-iteration residual trace so a failed solve can be diagnosed.
struct NonConvergence : AvcError {
    NonConvergence(const std::string& msg, std::vector<double> trace)
        : AvcError(msg), residual_trace(std::move(trace)) {}
    std::vector<double> residual_trace;
};

struct MissingColumn : AvcError { using AvcError::AvcError; };
struct NonFiniteValue : AvcError { using AvcError::AvcError; };
struct DatasetTooShort : AvcError { using AvcError::AvcError; };

struct ShapeMismatch : AvcError { using AvcError::AvcError; };
struct ConflictingFlags : AvcError { using AvcError::AvcError; };
struct EmptyTrace : AvcError { using AvcError::AvcError; };
struct NoRunsFound : AvcError { using AvcError::AvcError; };

// ---------------------------------------------------------------------------
// Deterministic RNG: xoshiro256++ seeded through splitmix64. Self-contained so
// runs are bit-reproducible independent of the standard library's
// distribution implementations.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
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

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        // Rejection-free modulo bias is negligible for desk-scale n, but the
        // multiply-shift trick is exact enough and branch-free.
        return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n)) % n;
    }

    // Standard normal via Box-Muller with cached spare.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Independent child stream: consumes nothing from this stream.
    Rng derive(std::uint64_t tag) const {
        std::uint64_t sm = s_[0] ^ (0x6a09e667f3bcc909ULL + tag * 0x9e3779b97f4a7c15ULL);
        return Rng(splitmix64(sm));
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4]{};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// ---------------------------------------------------------------------------
// Number formatting for CSV/artifact output: shortest round-trip form via
// to_chars, so identical doubles always print identically.
// ---------------------------------------------------------------------------

inline std::string fmt_double(double x) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc()) throw IoError("fmt_double: to_chars failed");
    return std::string(buf, ptr);
}

inline double parse_double(std::string_view sv) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), out);
    if (ec != std::errc() || ptr != sv.data() + sv.size())
        throw ParseError("bad floating-point literal: '" + std::string(sv) + "'");
    return out;
}

// FNV-1a, used for run ids.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex8(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string out(8, '0');
    for (int i = 7; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

}  // namespace avc
