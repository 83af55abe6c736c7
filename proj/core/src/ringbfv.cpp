#include "ensei/ringbfv.hpp"

#include <cmath>

#include "ensei/counters.hpp"
#include "ensei/errors.hpp"
#include "ntt_kernel.hpp"

namespace ensei {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::vector<Residue> power_table(Residue base, std::size_t count, const FieldSpec& f) {
    std::vector<Residue> t(count);
    if (count == 0) return t;
    t[0] = 1;
    for (std::size_t i = 1; i < count; ++i) t[i] = f.mul(t[i - 1], base);
    return t;
}

void check_same_domain(const Ciphertext& a, const Ciphertext& b) {
    if (a.domain() != b.domain())
        throw DomainMismatch("ciphertext domains differ");
}

} // namespace

NegacyclicPlan NegacyclicPlan::make(const FieldSpec& field, std::size_t n) {
    if (!is_pow2(n)) throw Error("ring dimension must be a power of two");
    if ((field.modulus() - 1) % (2 * n) != 0)
        throw Error("modulus does not support a 2n-th root of unity");
    NegacyclicPlan p;
    p.field = field;
    p.n = n;
    p.psi = find_root_of_unity(2 * n, field);
    Residue omega = field.mul(p.psi, p.psi);
    p.psi_pow = power_table(p.psi, n, field);
    Residue psi_inv = field.inv(p.psi);
    p.psi_inv_pow = power_table(psi_inv, n, field);
    Residue n_inv = field.inv(static_cast<Residue>(n % field.modulus()));
    for (Residue& v : p.psi_inv_pow) v = field.mul(v, n_inv);
    p.wtab_fwd = power_table(omega, n / 2, field);
    p.wtab_inv = power_table(field.inv(omega), n / 2, field);
    return p;
}

void NegacyclicPlan::forward(std::vector<Residue>& x) const {
    for (std::size_t j = 0; j < n; ++j) x[j] = field.mul(x[j], psi_pow[j]);
    detail::ntt_pow2_inplace(x, wtab_fwd, field);
    transform_counters().ring_ntt += 1;
}

void NegacyclicPlan::inverse(std::vector<Residue>& x) const {
    detail::ntt_pow2_inplace(x, wtab_inv, field);
    for (std::size_t j = 0; j < n; ++j) x[j] = field.mul(x[j], psi_inv_pow[j]);
    transform_counters().ring_ntt += 1;
}

double RlweParams::noise_cap() const {
    return static_cast<double>(q.modulus()) / (2.0 * static_cast<double>(p_e.modulus()));
}

RlweParams make_rlwe_params(std::size_t n, std::uint64_t q_modulus,
                            std::uint64_t p_e_modulus, double sigma) {
    if (!is_pow2(n)) throw Error("lattice dimension must be a power of two");
    if (q_modulus <= p_e_modulus) throw Error("q must exceed p_e");
    RlweParams params;
    params.n = n;
    params.q = FieldSpec::make(q_modulus);
    params.p_e = FieldSpec::make(p_e_modulus);
    params.sigma = sigma;
    if ((q_modulus - 1) % (2 * n) != 0)
        throw Error("q must be 1 mod 2n");
    if ((p_e_modulus - 1) % (2 * n) != 0)
        throw Error("p_e must be 1 mod 2n");
    if (q_modulus % p_e_modulus != 1)
        throw Error("q must be 1 mod p_e (keeps the plaintext-wrap term small)");
    params.delta = q_modulus / p_e_modulus;
    if (params.delta < 2) throw Error("floor(q/p_e) must be at least 2");
    params.plan_q = NegacyclicPlan::make(params.q, n);
    params.plan_pe = NegacyclicPlan::make(params.p_e, n);
    params.psi_q = params.plan_q.psi;
    params.psi_p = params.plan_pe.psi;
    return params;
}

double Ciphertext::noise_budget_bits(const RlweParams& params) const {
    double load = noise_bound + plain_mass;
    if (load <= 0) return std::log2(params.noise_cap());
    return std::log2(params.noise_cap()) - std::log2(load);
}

SecretKey keygen(const RlweParams& params, Rng& rng) {
    SecretKey sk;
    sk.t.domain = RingDomain::Coefficient;
    sk.t.coeffs.resize(params.n);
    for (std::size_t i = 0; i < params.n; ++i) {
        std::int64_t v = rng.sample_gaussian(params.sigma);
        sk.t.coeffs[i] = encode_signed(v, params.q);
    }
    sk.t_eval = sk.t;
    params.plan_q.forward(sk.t_eval.coeffs);
    sk.t_eval.domain = RingDomain::Evaluation;
    return sk;
}

RingElem encode_slots(const PlainVec& v, const RlweParams& params) {
    if (v.slots.size() != params.n) throw Error("slot count must equal n");
    RingElem m;
    m.coeffs = v.slots;
    params.plan_pe.inverse(m.coeffs);
    m.domain = RingDomain::Coefficient;
    return m;
}

PlainVec decode_slots(const RingElem& m, const RlweParams& params) {
    if (m.domain != RingDomain::Coefficient)
        throw DomainMismatch("decode_slots expects coefficient form");
    PlainVec v;
    v.slots = m.coeffs;
    params.plan_pe.forward(v.slots);
    return v;
}

namespace {

// delta * m + e0 over q, coefficient form. m holds residues mod p_e.
std::vector<Residue> scale_message(const std::vector<Residue>& m,
                                   const RlweParams& params, Rng& rng) {
    std::vector<Residue> out(params.n);
    for (std::size_t i = 0; i < params.n; ++i) {
        Residue scaled = params.q.mul(params.q.reduce(m[i]), params.delta % params.q.modulus());
        Residue noise = encode_signed(rng.sample_gaussian(params.sigma), params.q);
        out[i] = params.q.add(scaled, noise);
    }
    return out;
}

std::vector<Residue> uniform_poly(const RlweParams& params, Rng& rng) {
    std::vector<Residue> a(params.n);
    for (Residue& v : a) v = rng.uniform_residue(params.q);
    return a;
}

} // namespace

Ciphertext encrypt(const PlainVec& m, const SecretKey& sk,
                   const RlweParams& params, Rng& rng) {
    RingElem enc = encode_slots(m, params);
    std::vector<Residue> payload = scale_message(enc.coeffs, params, rng);

    std::vector<Residue> a_hat = uniform_poly(params, rng);

    // c0 = -a in coefficient form
    std::vector<Residue> a = a_hat;
    params.plan_q.inverse(a);
    Ciphertext ct;
    ct.c0.domain = RingDomain::Coefficient;
    ct.c0.coeffs.resize(params.n);
    for (std::size_t i = 0; i < params.n; ++i)
        ct.c0.coeffs[i] = params.q.neg(a[i]);

    // c1 = a*t + delta*m + e0
    std::vector<Residue> at = a_hat;
    for (std::size_t i = 0; i < params.n; ++i)
        at[i] = params.q.mul(at[i], sk.t_eval.coeffs[i]);
    params.plan_q.inverse(at);
    ct.c1.domain = RingDomain::Coefficient;
    ct.c1.coeffs.resize(params.n);
    for (std::size_t i = 0; i < params.n; ++i)
        ct.c1.coeffs[i] = params.q.add(at[i], payload[i]);

    ct.noise_bound = params.fresh_noise_bound();
    ct.plain_mass = 1.0;
    return ct;
}

Ciphertext encrypt_freq_direct(const PlainVec& m, const SecretKey& sk,
                               const RlweParams& params, Rng& rng) {
    RingElem enc = encode_slots(m, params);
    std::vector<Residue> payload = scale_message(enc.coeffs, params, rng);
    params.plan_q.forward(payload);

    std::vector<Residue> a_hat = uniform_poly(params, rng);

    Ciphertext ct;
    ct.c0.domain = RingDomain::Evaluation;
    ct.c0.coeffs.resize(params.n);
    ct.c1.domain = RingDomain::Evaluation;
    ct.c1.coeffs.resize(params.n);
    for (std::size_t i = 0; i < params.n; ++i) {
        ct.c0.coeffs[i] = params.q.neg(a_hat[i]);
        ct.c1.coeffs[i] = params.q.add(params.q.mul(a_hat[i], sk.t_eval.coeffs[i]),
                                       payload[i]);
    }
    ct.noise_bound = params.fresh_noise_bound();
    ct.plain_mass = 1.0;
    return ct;
}

PlainVec decrypt(const Ciphertext& ct, const SecretKey& sk,
                 const RlweParams& params) {
    std::vector<Residue> phi(params.n);
    if (ct.domain() == RingDomain::Evaluation) {
        for (std::size_t i = 0; i < params.n; ++i)
            phi[i] = params.q.add(params.q.mul(ct.c0.coeffs[i], sk.t_eval.coeffs[i]),
                                  ct.c1.coeffs[i]);
        params.plan_q.inverse(phi);
    } else {
        std::vector<Residue> c0t = ct.c0.coeffs;
        params.plan_q.forward(c0t);
        for (std::size_t i = 0; i < params.n; ++i)
            c0t[i] = params.q.mul(c0t[i], sk.t_eval.coeffs[i]);
        params.plan_q.inverse(c0t);
        for (std::size_t i = 0; i < params.n; ++i)
            phi[i] = params.q.add(c0t[i], ct.c1.coeffs[i]);
    }
    // round(p_e * phi / q) mod p_e, per coefficient
    RingElem msg;
    msg.domain = RingDomain::Coefficient;
    msg.coeffs.resize(params.n);
    unsigned __int128 qq = params.q.modulus();
    unsigned __int128 pe = params.p_e.modulus();
    for (std::size_t i = 0; i < params.n; ++i) {
        unsigned __int128 num = pe * phi[i] + qq / 2;
        msg.coeffs[i] = static_cast<Residue>((num / qq) % pe);
    }
    return decode_slots(msg, params);
}

Ciphertext add_ct(const Ciphertext& a, const Ciphertext& b,
                  const RlweParams& params) {
    check_same_domain(a, b);
    if (a.c0.coeffs.size() != b.c0.coeffs.size())
        throw DomainMismatch("ciphertext sizes differ");
    Ciphertext out = a;
    for (std::size_t i = 0; i < params.n; ++i) {
        out.c0.coeffs[i] = params.q.add(a.c0.coeffs[i], b.c0.coeffs[i]);
        out.c1.coeffs[i] = params.q.add(a.c1.coeffs[i], b.c1.coeffs[i]);
    }
    out.noise_bound = a.noise_bound + b.noise_bound;
    out.plain_mass = a.plain_mass + b.plain_mass;
    return out;
}

Ciphertext add_plain(const Ciphertext& ct, const PlainVec& m, int sign,
                     const RlweParams& params) {
    RingElem enc = encode_slots(m, params);
    std::vector<Residue> mask(params.n);
    for (std::size_t i = 0; i < params.n; ++i) {
        Residue scaled = params.q.mul(params.q.reduce(enc.coeffs[i]),
                                      params.delta % params.q.modulus());
        mask[i] = sign >= 0 ? scaled : params.q.neg(scaled);
    }
    if (ct.domain() == RingDomain::Evaluation) params.plan_q.forward(mask);
    Ciphertext out = ct;
    for (std::size_t i = 0; i < params.n; ++i)
        out.c1.coeffs[i] = params.q.add(out.c1.coeffs[i], mask[i]);
    out.plain_mass = ct.plain_mass + 1.0;
    return out;
}

PreparedPlain prepare_plain(const PlainVec& w, const RlweParams& params) {
    RingElem enc = encode_slots(w, params);
    PreparedPlain out;
    out.w_eval.domain = RingDomain::Evaluation;
    out.w_eval.coeffs.resize(params.n);
    double w_inf = 0;
    for (std::size_t i = 0; i < params.n; ++i) {
        // centered integer lift of the p_e coefficient, embedded mod q
        std::int64_t c = decode_signed(enc.coeffs[i], params.p_e);
        out.w_eval.coeffs[i] = encode_signed(c, params.q);
        w_inf = std::max(w_inf, static_cast<double>(c < 0 ? -c : c));
    }
    params.plan_q.forward(out.w_eval.coeffs);
    out.w_inf = std::max(w_inf, 1.0);
    return out;
}

Ciphertext mul_plain(const Ciphertext& ct, const PreparedPlain& w,
                     const RlweParams& params) {
    double factor = static_cast<double>(params.n) * w.w_inf;
    double new_bound = ct.noise_bound * factor;
    double new_mass = ct.plain_mass * factor;
    if (new_bound + new_mass >= params.noise_cap())
        throw NoiseExhausted("plaintext multiplication would exhaust the noise budget");

    Ciphertext out = ct.domain() == RingDomain::Evaluation
                         ? ct
                         : to_evaluation_domain(ct, params);
    for (std::size_t i = 0; i < params.n; ++i) {
        out.c0.coeffs[i] = params.q.mul(out.c0.coeffs[i], w.w_eval.coeffs[i]);
        out.c1.coeffs[i] = params.q.mul(out.c1.coeffs[i], w.w_eval.coeffs[i]);
    }
    transform_counters().hadamard += 1;
    out.noise_bound = new_bound;
    out.plain_mass = new_mass;
    return out;
}

Ciphertext mul_plain(const Ciphertext& ct, const PlainVec& w,
                     const RlweParams& params) {
    return mul_plain(ct, prepare_plain(w, params), params);
}

RingElem to_evaluation_domain(const RingElem& x, const RlweParams& params) {
    if (x.domain == RingDomain::Evaluation) return x;
    RingElem out = x;
    params.plan_q.forward(out.coeffs);
    out.domain = RingDomain::Evaluation;
    return out;
}

RingElem to_coefficient_domain(const RingElem& x, const RlweParams& params) {
    if (x.domain == RingDomain::Coefficient) return x;
    RingElem out = x;
    params.plan_q.inverse(out.coeffs);
    out.domain = RingDomain::Coefficient;
    return out;
}

Ciphertext to_evaluation_domain(const Ciphertext& ct, const RlweParams& params) {
    if (ct.domain() == RingDomain::Evaluation) return ct;
    Ciphertext out = ct;
    out.c0 = to_evaluation_domain(ct.c0, params);
    out.c1 = to_evaluation_domain(ct.c1, params);
    transform_counters().ct_ntt += 2;
    return out;
}

Ciphertext to_coefficient_domain(const Ciphertext& ct, const RlweParams& params) {
    if (ct.domain() == RingDomain::Coefficient) return ct;
    Ciphertext out = ct;
    out.c0 = to_coefficient_domain(ct.c0, params);
    out.c1 = to_coefficient_domain(ct.c1, params);
    transform_counters().ct_ntt += 2;
    return out;
}

} // namespace ensei
