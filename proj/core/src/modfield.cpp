#include "ensei/modfield.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ensei {

namespace {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

u64 mulmod_raw(u64 a, u64 b, u64 m) {
    return static_cast<u64>(static_cast<u128>(a) * b % m);
}

u64 powmod_raw(u64 base, u64 exp, u64 m) {
    u64 acc = 1 % m;
    base %= m;
    while (exp) {
        if (exp & 1) acc = mulmod_raw(acc, base, m);
        base = mulmod_raw(base, base, m);
        exp >>= 1;
    }
    return acc;
}

// One Pollard rho round with Brent's cycle detection.
u64 pollard_rho(u64 n, u64 c) {
    u64 x = 2, y = 2, d = 1;
    auto step = [&](u64 v) { return (static_cast<u128>(v) * v + c) % n; };
    while (d == 1) {
        x = step(x);
        y = step(step(y));
        u64 diff = x > y ? x - y : y - x;
        if (diff == 0) return 0;
        d = std::gcd(diff, n);
    }
    return d == n ? 0 : d;
}

void factor_into(u64 n, std::vector<u64>& out) {
    if (n == 1) return;
    if (is_prime_u64(n)) {
        out.push_back(n);
        return;
    }
    for (u64 p : {u64(2), u64(3), u64(5), u64(7), u64(11), u64(13)}) {
        if (n % p == 0) {
            out.push_back(p);
            while (n % p == 0) n /= p;
            factor_into(n, out);
            return;
        }
    }
    // Trial division for small factors, rho for the rest.
    for (u64 p = 17; p < 100000 && p * p <= n; p += 2) {
        if (n % p == 0) {
            out.push_back(p);
            while (n % p == 0) n /= p;
            factor_into(n, out);
            return;
        }
    }
    if (is_prime_u64(n)) {
        out.push_back(n);
        return;
    }
    u64 d = 0;
    for (u64 c = 1; d == 0; ++c) d = pollard_rho(n, c);
    factor_into(d, out);
    u64 rest = n;
    while (rest % d == 0) rest /= d;
    factor_into(rest, out);
}

u64 mix64(u64 x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

bool is_prime_u64(u64 n) {
    if (n < 2) return false;
    for (u64 p : {u64(2), u64(3), u64(5), u64(7), u64(11), u64(13), u64(17),
                  u64(19), u64(23), u64(29), u64(31), u64(37)}) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    int r = 0;
    while ((d & 1) == 0) { d >>= 1; ++r; }
    // This witness set is exact for all n < 3.3e24, so in particular for u64.
    for (u64 a : {u64(2), u64(3), u64(5), u64(7), u64(11), u64(13), u64(17),
                  u64(19), u64(23), u64(29), u64(31), u64(37)}) {
        u64 x = powmod_raw(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool witness = true;
        for (int i = 1; i < r; ++i) {
            x = mulmod_raw(x, x, n);
            if (x == n - 1) { witness = false; break; }
        }
        if (witness) return false;
    }
    return true;
}

std::vector<u64> distinct_prime_factors(u64 n) {
    std::vector<u64> out;
    factor_into(n, out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

FieldSpec FieldSpec::make(u64 modulus) {
    if (modulus < 2 || modulus >= kMaxModulus)
        throw Error("FieldSpec: modulus out of range [2, 2^62)");
    if (!is_prime_u64(modulus))
        throw Error("FieldSpec: modulus is not prime");

    FieldSpec f;
    f.modulus_ = modulus;

    u128 ratio = ~u128(0) / modulus; // floor((2^128-1)/p) == floor(2^128/p) for odd p
    f.ratio_lo_ = static_cast<u64>(ratio);
    f.ratio_hi_ = static_cast<u64>(ratio >> 64);

    u64 order = modulus - 1;
    f.two_adicity_ = 0;
    while (((order >> f.two_adicity_) & 1) == 0) ++f.two_adicity_;

    f.factors_ = distinct_prime_factors(order);

    if (modulus == 2) {
        f.generator_ = 1;
        return f;
    }
    for (u64 g = 2; g < modulus; ++g) {
        bool primitive = true;
        for (u64 p : f.factors_) {
            if (powmod_raw(g, order / p, modulus) == 1) { primitive = false; break; }
        }
        if (primitive) {
            f.generator_ = g;
            return f;
        }
    }
    throw Error("FieldSpec: no primitive root found"); // unreachable for primes
}

Residue FieldSpec::pow(Residue base, u64 exp) const {
    Residue acc = 1 % modulus_;
    Residue b = base;
    while (exp) {
        if (exp & 1) acc = mul(acc, b);
        b = mul(b, b);
        exp >>= 1;
    }
    return acc;
}

Residue find_root_of_unity(u64 order, const FieldSpec& f) {
    if (order == 0 || (f.modulus() - 1) % order != 0)
        throw OrderNotDividing("root order does not divide modulus-1");
    return f.pow(f.generator(), (f.modulus() - 1) / order);
}

u64 find_prime(u64 min_value, u64 residue, u64 modulus) {
    if (modulus == 0) throw Error("find_prime: zero modulus");
    residue %= modulus;
    u64 c = min_value < 2 ? 2 : min_value;
    u64 rem = c % modulus;
    if (rem != residue) c += (residue >= rem ? residue - rem : modulus - rem + residue);
    for (; c < FieldSpec::kMaxModulus; c += modulus) {
        if (is_prime_u64(c)) return c;
    }
    throw SearchExhausted("find_prime: no prime below 2^62 ceiling");
}

Residue encode_signed(std::int64_t v, const FieldSpec& f) {
    std::int64_t p = static_cast<std::int64_t>(f.modulus());
    std::int64_t r = v % p;
    if (r < 0) r += p;
    return static_cast<Residue>(r);
}

std::int64_t decode_signed(Residue r, const FieldSpec& f) {
    u64 p = f.modulus();
    if (r > p / 2) return static_cast<std::int64_t>(r) - static_cast<std::int64_t>(p);
    return static_cast<std::int64_t>(r);
}

u64 Rng::uniform_below(u64 bound) {
    if (bound == 0) throw Error("uniform_below: zero bound");
    if (bound == 1) return 0;
    int bits = 64 - __builtin_clzll(bound - 1);
    u64 mask = bits == 64 ? ~u64(0) : ((u64(1) << bits) - 1);
    for (;;) {
        u64 v = next_u64() & mask;
        if (v < bound) return v;
    }
}

std::int64_t Rng::sample_gaussian(double sigma) {
    if (sigma <= 0) throw Error("sample_gaussian: sigma must be positive");
    std::int64_t tail = static_cast<std::int64_t>(std::floor(6.0 * sigma));
    u64 range = static_cast<u64>(2 * tail + 1);
    double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (;;) {
        std::int64_t k = static_cast<std::int64_t>(uniform_below(range)) - tail;
        double accept = std::exp(-static_cast<double>(k) * static_cast<double>(k) * inv2s2);
        if (next_double() < accept) return k;
    }
}

Rng Rng::fork(u64 salt) const {
    return Rng(mix64(seed_ ^ mix64(salt)));
}

} // namespace ensei
