#pragma once

#include <cstdint>
#include <vector>

#include "ensei/modfield.hpp"

namespace ensei {

enum class RingDomain : std::uint8_t { Coefficient = 0, Evaluation = 1 };

/// Negacyclic transform tables for one (modulus, n) pair: psi-twisted
/// length-n radix-2 NTT. Pointwise products in evaluation representation
/// equal negacyclic convolutions of coefficients.
struct NegacyclicPlan {
    FieldSpec field;
    std::size_t n = 0;
    Residue psi = 0;
    std::vector<Residue> psi_pow, psi_inv_pow; // psi^j and psi^{-j} * n^{-1}
    std::vector<Residue> wtab_fwd, wtab_inv;   // omega^k, omega^{-k}, k < n/2

    static NegacyclicPlan make(const FieldSpec& field, std::size_t n);

    void forward(std::vector<Residue>& x) const;  // coefficient -> evaluation
    void inverse(std::vector<Residue>& x) const;  // evaluation -> coefficient
};

/// Symmetric BFV-style parameter set over Z_q[x]/(x^n + 1).
/// Invariants: q ≡ 1 (mod 2n), p_e ≡ 1 (mod 2n), q ≡ 1 (mod p_e) so the
/// plaintext-wrap term in decryption stays below one unit, q > p_e.
struct RlweParams {
    std::size_t n = 0;
    FieldSpec q;
    FieldSpec p_e;
    double sigma = 0;
    Residue psi_q = 0, psi_p = 0; // primitive 2n-th roots
    std::uint64_t delta = 0;      // floor(q / p_e)
    NegacyclicPlan plan_q, plan_pe;

    double noise_cap() const; // q / (2 p_e), the correct-decryption ceiling
    double fresh_noise_bound() const { return 6.0 * sigma + 1.0; }
};

RlweParams make_rlwe_params(std::size_t n, std::uint64_t q_modulus,
                            std::uint64_t p_e_modulus, double sigma);

struct RingElem {
    std::vector<Residue> coeffs;
    RingDomain domain = RingDomain::Coefficient;
};

/// One slot vector mod p_e, length n.
struct PlainVec {
    std::vector<Residue> slots;
    bool operator==(const PlainVec&) const = default;
};

struct SecretKey {
    RingElem t;      // coefficient form, small centered coefficients
    RingElem t_eval; // cached evaluation form
};

/// (c0, c1) plus a conservative static noise estimate. noise_bound tracks
/// |v| in c0*t + c1 = delta*P + v; plain_mass tracks |P| / p_e. Decryption
/// is exact while noise_bound + plain_mass < noise_cap, i.e. budget > 0.
struct Ciphertext {
    RingElem c0, c1;
    double noise_bound = 0.0;
    double plain_mass = 0.0;

    RingDomain domain() const { return c0.domain; }
    double noise_budget_bits(const RlweParams& params) const;
};

/// Plaintext multiplicand prepared for repeated use: slot-encoded, centered,
/// lifted to q and transformed once. Bob builds these at setup.
struct PreparedPlain {
    RingElem w_eval;   // evaluation form over q
    double w_inf = 0;  // max |centered integer coefficient|
};

SecretKey keygen(const RlweParams& params, Rng& rng);

/// Slot packing: returns m over p_e with m(psi_p^{2i+1}) = slots[i].
RingElem encode_slots(const PlainVec& v, const RlweParams& params);
PlainVec decode_slots(const RingElem& m, const RlweParams& params);

/// c0 = -a, c1 = a*t + delta*encode(m) + e0, coefficient domain.
Ciphertext encrypt(const PlainVec& m, const SecretKey& sk,
                   const RlweParams& params, Rng& rng);

/// Builds the ciphertext directly in evaluation representation:
/// c0 = -a_hat, c1 = a_hat ∘ t_hat + NTT_q(delta*encode(m) + e0).
/// Decrypts identically to encrypt(); downstream slotwise multiplication
/// needs no ring transform on the ciphertext.
Ciphertext encrypt_freq_direct(const PlainVec& m, const SecretKey& sk,
                               const RlweParams& params, Rng& rng);

/// Accepts either domain. Rounds (p_e/q)(c0*t + c1) per coefficient,
/// then unpacks slots.
PlainVec decrypt(const Ciphertext& ct, const SecretKey& sk,
                 const RlweParams& params);

Ciphertext add_ct(const Ciphertext& a, const Ciphertext& b,
                  const RlweParams& params);

/// c1 ± delta*encode(m); decrypts to slots ± m (mod p_e).
Ciphertext add_plain(const Ciphertext& ct, const PlainVec& m, int sign,
                     const RlweParams& params);

PreparedPlain prepare_plain(const PlainVec& w, const RlweParams& params);

/// Slotwise product: decrypts to slots(ct) ∘ w (mod p_e). Coefficient-domain
/// input is converted (2 ring transforms on the ciphertext); evaluation-domain
/// input multiplies in place with zero ciphertext transforms. Output is
/// always in evaluation domain. Throws NoiseExhausted if the tracked budget
/// would close.
Ciphertext mul_plain(const Ciphertext& ct, const PreparedPlain& w,
                     const RlweParams& params);
Ciphertext mul_plain(const Ciphertext& ct, const PlainVec& w,
                     const RlweParams& params);

RingElem to_evaluation_domain(const RingElem& x, const RlweParams& params);
RingElem to_coefficient_domain(const RingElem& x, const RlweParams& params);
Ciphertext to_evaluation_domain(const Ciphertext& ct, const RlweParams& params);
Ciphertext to_coefficient_domain(const Ciphertext& ct, const RlweParams& params);

} // namespace ensei
