#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ensei/errors.hpp"

namespace ensei {

/// A residue is a plain integer in [0, modulus). All modular arithmetic goes
/// through a FieldSpec, which owns the precomputed reduction constants.
using Residue = std::uint64_t;

/// Prime field context for moduli below 2^62. Every product fits a 128-bit
/// intermediate, so reduction is exact with single-limb arithmetic.
class FieldSpec {
public:
    static constexpr std::uint64_t kMaxModulus = std::uint64_t(1) << 62;

    FieldSpec() = default; // empty; build real contexts with make()

    /// Builds the context: verifies primality (deterministic Miller-Rabin),
    /// factors modulus-1, finds the smallest primitive root, and precomputes
    /// the Barrett constant floor(2^128 / modulus).
    static FieldSpec make(std::uint64_t modulus);

    std::uint64_t modulus() const { return modulus_; }
    int two_adicity() const { return two_adicity_; }
    std::uint64_t generator() const { return generator_; }
    const std::vector<std::uint64_t>& group_order_factors() const { return factors_; }

    Residue reduce(std::uint64_t x) const { return x % modulus_; }

    Residue add(Residue a, Residue b) const {
        std::uint64_t s = a + b;
        if (s >= modulus_ || s < a) s -= modulus_;
        return s;
    }
    Residue sub(Residue a, Residue b) const {
        return a >= b ? a - b : a + modulus_ - b;
    }
    Residue neg(Residue a) const { return a == 0 ? 0 : modulus_ - a; }

    /// a*b mod p via a full 128-bit product and Barrett reduction.
    Residue mul(Residue a, Residue b) const {
        return barrett_reduce(static_cast<unsigned __int128>(a) * b);
    }

    Residue pow(Residue base, std::uint64_t exp) const;
    Residue inv(Residue a) const { return pow(a, modulus_ - 2); }

    /// Reduces a 128-bit value mod p with the precomputed constant.
    Residue barrett_reduce(unsigned __int128 z) const {
        std::uint64_t z0 = static_cast<std::uint64_t>(z);
        std::uint64_t z1 = static_cast<std::uint64_t>(z >> 64);
        // qhat = floor(z * floor(2^128/p) / 2^128), off by at most 2.
        unsigned __int128 t = static_cast<unsigned __int128>(z0) * ratio_lo_;
        unsigned __int128 a = static_cast<unsigned __int128>(z0) * ratio_hi_ +
                              static_cast<std::uint64_t>(t >> 64);
        unsigned __int128 b = static_cast<unsigned __int128>(z1) * ratio_lo_ +
                              static_cast<std::uint64_t>(a);
        std::uint64_t qhat = z1 * ratio_hi_ +
                             static_cast<std::uint64_t>(a >> 64) +
                             static_cast<std::uint64_t>(b >> 64);
        std::uint64_t r = z0 - qhat * modulus_;
        while (r >= modulus_) r -= modulus_;
        return r;
    }

    bool operator==(const FieldSpec& other) const { return modulus_ == other.modulus_; }
    bool operator!=(const FieldSpec& other) const { return modulus_ != other.modulus_; }

private:
    std::uint64_t modulus_ = 0;
    std::uint64_t generator_ = 0;
    int two_adicity_ = 0;
    std::uint64_t ratio_hi_ = 0; // floor(2^128 / modulus), high word
    std::uint64_t ratio_lo_ = 0; //                          low word
    std::vector<std::uint64_t> factors_; // distinct prime factors of modulus-1
};

/// Deterministic Miller-Rabin, exact for all 64-bit inputs.
bool is_prime_u64(std::uint64_t n);

/// Distinct prime factors (trial division + Pollard rho for large cofactors).
std::vector<std::uint64_t> distinct_prime_factors(std::uint64_t n);

/// Canonical primitive order-th root of unity, generator^((p-1)/order).
/// Throws OrderNotDividing if order does not divide p-1.
Residue find_root_of_unity(std::uint64_t order, const FieldSpec& f);

/// Smallest prime p >= min_value with p ≡ residue (mod modulus).
/// Throws SearchExhausted past the 2^62 ceiling.
std::uint64_t find_prime(std::uint64_t min_value, std::uint64_t residue,
                         std::uint64_t modulus);

/// Centered signed encoding: v in (-p/2, p/2] maps to v mod p and back.
Residue encode_signed(std::int64_t v, const FieldSpec& f);
std::int64_t decode_signed(Residue r, const FieldSpec& f);

/// Seeded RNG wrapper. Draws come straight off a mt19937_64 stream so the
/// sequence is identical on every platform; no stdlib distributions involved.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, bound) by rejection on the masked word.
    std::uint64_t uniform_below(std::uint64_t bound);

    Residue uniform_residue(const FieldSpec& f) { return uniform_below(f.modulus()); }

    /// Uniform double in [0, 1) with 53 bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Discrete Gaussian of parameter sigma by rejection sampling,
    /// tail-cut at |x| <= 6*sigma.
    std::int64_t sample_gaussian(double sigma);

    /// Derives an independent stream (for per-party sub-seeding).
    Rng fork(std::uint64_t salt) const;

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_ = 0;
};

} // namespace ensei
