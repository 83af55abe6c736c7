#pragma once

#include <vector>

#include "ensei/modfield.hpp"
#include "ensei/ringbfv.hpp"

namespace ensei {

/// The three moduli: image transform (p_n), secret sharing (p_a), and
/// encryption plaintext (p_e), ordered p_e >= p_a >= p_n. The unified
/// configuration sets all three to one prime, which makes slot arithmetic
/// mod p_e coincide with share arithmetic mod p_a.
struct ModulusChain {
    FieldSpec p_n, p_a, p_e;

    static ModulusChain make(const FieldSpec& p_n, const FieldSpec& p_a,
                             const FieldSpec& p_e);
    static ModulusChain unified(const FieldSpec& p);

    bool is_unified() const {
        return p_n.modulus() == p_a.modulus() && p_a.modulus() == p_e.modulus();
    }
};

/// HomShare output: Alice's share stays encrypted, Bob keeps his in the clear.
struct SharePair {
    Ciphertext alice_ct;   // decrypts to (y - s_B) mod p_a in the slots
    PlainVec bob_share;    // s_B, uniform mod p_a
    FieldSpec share_modulus;
};

/// Randomizes [y] with a fresh uniform share: ([y - s_B mod p_a], s_B).
SharePair hom_share(const Ciphertext& ct_y, const ModulusChain& chain,
                    const RlweParams& params, Rng& rng);

/// Deterministic variant with a caller-supplied share (test hook; passing
/// zeros makes Alice's share decrypt to y itself).
SharePair hom_share_with(const Ciphertext& ct_y, PlainVec s_b,
                         const ModulusChain& chain, const RlweParams& params);

/// Homomorphic recombination: [s_A + s_B mod p_a].
Ciphertext hom_rec(const Ciphertext& alice_ct, const PlainVec& bob_share,
                   const ModulusChain& chain, const RlweParams& params);

/// In-the-clear counterpart used inside the activation stub.
std::vector<Residue> recombine_clear(const std::vector<Residue>& s_a,
                                     const std::vector<Residue>& s_b,
                                     const FieldSpec& p_a);

} // namespace ensei
