#include "ensei/hss.hpp"

#include "ensei/errors.hpp"

namespace ensei {

ModulusChain ModulusChain::make(const FieldSpec& p_n, const FieldSpec& p_a,
                                const FieldSpec& p_e) {
    if (!(p_e.modulus() >= p_a.modulus() && p_a.modulus() >= p_n.modulus()))
        throw ChainViolation("moduli must satisfy p_e >= p_a >= p_n");
    ModulusChain c;
    c.p_n = p_n;
    c.p_a = p_a;
    c.p_e = p_e;
    return c;
}

ModulusChain ModulusChain::unified(const FieldSpec& p) {
    return make(p, p, p);
}

SharePair hom_share_with(const Ciphertext& ct_y, PlainVec s_b,
                         const ModulusChain& chain, const RlweParams& params) {
    if (chain.p_a.modulus() > params.p_e.modulus())
        throw ChainViolation("share modulus exceeds plaintext modulus");
    if (s_b.slots.size() != params.n)
        throw LengthMismatch("share length must equal slot count");

    // Subtraction via add_plain of (p_a - s_B): in the unified configuration
    // the decrypted share is exactly (y - s_B) mod p_a in [0, p_a).
    PlainVec mask;
    mask.slots.resize(params.n);
    for (std::size_t i = 0; i < params.n; ++i) {
        if (s_b.slots[i] >= chain.p_a.modulus())
            throw ChainViolation("share entry not reduced mod p_a");
        Residue corr = chain.p_a.modulus() - s_b.slots[i];
        mask.slots[i] = params.p_e.reduce(corr);
    }
    SharePair out{add_plain(ct_y, mask, +1, params), std::move(s_b), chain.p_a};
    return out;
}

SharePair hom_share(const Ciphertext& ct_y, const ModulusChain& chain,
                    const RlweParams& params, Rng& rng) {
    PlainVec s_b;
    s_b.slots.resize(params.n);
    for (Residue& v : s_b.slots) v = rng.uniform_residue(chain.p_a);
    return hom_share_with(ct_y, std::move(s_b), chain, params);
}

Ciphertext hom_rec(const Ciphertext& alice_ct, const PlainVec& bob_share,
                   const ModulusChain& chain, const RlweParams& params) {
    if (chain.p_a.modulus() > params.p_e.modulus())
        throw ChainViolation("share modulus exceeds plaintext modulus");
    if (bob_share.slots.size() != params.n)
        throw LengthMismatch("share length must equal slot count");
    PlainVec reduced;
    reduced.slots.resize(params.n);
    for (std::size_t i = 0; i < params.n; ++i)
        reduced.slots[i] = params.p_e.reduce(bob_share.slots[i]);
    return add_plain(alice_ct, reduced, +1, params);
}

std::vector<Residue> recombine_clear(const std::vector<Residue>& s_a,
                                     const std::vector<Residue>& s_b,
                                     const FieldSpec& p_a) {
    if (s_a.size() != s_b.size())
        throw LengthMismatch("share vectors differ in length");
    std::vector<Residue> out(s_a.size());
    for (std::size_t i = 0; i < s_a.size(); ++i)
        out[i] = p_a.add(p_a.reduce(s_a[i]), p_a.reduce(s_b[i]));
    return out;
}

} // namespace ensei
