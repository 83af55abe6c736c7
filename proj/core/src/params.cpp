#include "ensei/params.hpp"

#include <cmath>
#include <sstream>

#include "ensei/errors.hpp"

namespace ensei {

namespace {

struct PresetRow {
    const char* name;
    std::uint64_t p_n, p_e;
    int lg_q_envelope;
    // the operating maxima the published table was computed for
    std::uint64_t max_u, max_w;
    PrecisionProfile profile;
};

// Candidate sets from the published table (all n = 2048, sigma = 4).
// Binary runs 8-bit activations against sign weights, so its tabulated
// p_n sits below the conservative 2^bits bound but above 255*1*9.
constexpr PresetRow kPresets[] = {
    {"binary", 2311, 12289, 45, 255, 1, {8, 1, 3, 3}},
    {"medium", 147457, 147457, 53, 255, 15, {8, 4, 3, 3}},
    {"high", 2359303, 2363393, 60, 4096, 64, {12, 6, 3, 3}},
};

constexpr std::size_t kPresetN = 2048;
constexpr double kSigma = 4.0;

std::uint64_t checked_bound(std::uint64_t max_u, std::uint64_t max_w,
                            std::uint64_t f_h, std::uint64_t f_w) {
    unsigned __int128 b = static_cast<unsigned __int128>(max_u) * max_w;
    b *= f_h;
    b *= f_w;
    if (b >= (static_cast<unsigned __int128>(1) << 62))
        throw RangeViolation("dynamic-range bound exceeds the 62-bit modulus cap");
    return static_cast<std::uint64_t>(b);
}

// Smallest q covering: one multiplication by a full-range plaintext,
// accum-way ciphertext accumulation, a handful of plaintext additions,
// one spare bit. See the noise model in ringbfv.
std::uint64_t derive_q(std::uint64_t p_e, std::size_t n, double sigma,
                       std::size_t accum) {
    double a = static_cast<double>(accum < 1 ? 1 : accum);
    double w_inf = static_cast<double>(p_e) / 2.0;
    double factor = static_cast<double>(n) * w_inf;
    double bound_after = a * factor * (6.0 * sigma + 1.0);
    double mass_after = a * factor * 4.0 + 8.0;
    double q_min = 4.0 * static_cast<double>(p_e) * (bound_after + mass_after);
    if (q_min >= std::pow(2.0, 62))
        throw SearchExhausted("required ciphertext modulus exceeds 2^62");
    std::uint64_t step = static_cast<std::uint64_t>(2 * n) * p_e;
    return find_prime(static_cast<std::uint64_t>(q_min) + 1, 1, step);
}

ParamSet assemble(const FieldSpec& p_n, const FieldSpec& p_a, const FieldSpec& p_e,
                  std::size_t n, ChainMode mode, std::size_t accum,
                  const PrecisionProfile& profile, double sigma) {
    ParamSet ps;
    ps.chain = ModulusChain::make(p_n, p_a, p_e);
    std::uint64_t q = derive_q(p_e.modulus(), n, sigma, accum);
    ps.rlwe = make_rlwe_params(n, q, p_e.modulus(), sigma);
    ps.profile = profile;
    ps.mode = mode;
    ps.insecure = n < 1024;
    return ps;
}

} // namespace

std::uint64_t min_pntt(const PrecisionProfile& profile) {
    if (profile.input_bits <= 0 || profile.filter_bits <= 0 ||
        profile.f_h <= 0 || profile.f_w <= 0)
        throw RangeViolation("profile fields must be positive");
    if (profile.input_bits > 32 || profile.filter_bits > 32)
        throw RangeViolation("bit widths above 32 are unsupported");
    return checked_bound(std::uint64_t(1) << profile.input_bits,
                         std::uint64_t(1) << profile.filter_bits,
                         profile.f_h, profile.f_w);
}

ParamSet build_params(const PrecisionProfile& profile, std::size_t n,
                      ChainMode mode, std::size_t accum_channels,
                      std::uint64_t p_n_floor, double sigma) {
    std::uint64_t bound = std::max(min_pntt(profile), p_n_floor);
    if (mode == ChainMode::Unified) {
        std::uint64_t p = find_prime(std::max<std::uint64_t>(bound, 2 * n + 1), 1, 2 * n);
        FieldSpec f = FieldSpec::make(p);
        return assemble(f, f, f, n, mode, accum_channels, profile, sigma);
    }
    // SplitPaper: small image modulus, share modulus tied to it, plaintext
    // modulus the smallest splitting prime above.
    std::uint64_t pn = find_prime(bound, 1, 4096);
    std::uint64_t pe = find_prime(std::max<std::uint64_t>(pn, 2 * n + 1), 1, 2 * n);
    // No-wrap validation: slot values reach (p_n-1)^2 + p_n after the
    // filter product and share mask; they must not wrap mod p_e.
    unsigned __int128 peak =
        static_cast<unsigned __int128>(pn - 1) * (pn - 1) + pn;
    if (peak > pe)
        throw RangeViolation(
            "split-moduli no-wrap violated: (p_n-1)^2 + p_n exceeds p_e");
    FieldSpec fn = FieldSpec::make(pn);
    FieldSpec fe = FieldSpec::make(pe);
    return assemble(fn, fn, fe, n, mode, accum_channels, profile, sigma);
}

ParamSet preset_params(const std::string& name, std::size_t accum_channels) {
    if (name == "toy") {
        PrecisionProfile profile{2, 2, 2, 2};
        FieldSpec f = FieldSpec::make(97);
        ParamSet ps = assemble(f, f, f, 16, ChainMode::Unified,
                               std::max<std::size_t>(accum_channels, 4), profile,
                               kSigma);
        ps.preset_name = "toy";
        return ps;
    }
    for (const PresetRow& row : kPresets) {
        if (name != row.name) continue;
        // The tabulated sets run unified at p = p_e: medium already has
        // p_n = p_e, and the binary/high split pairs fail the no-wrap
        // validation (see validate_paper_presets), so their p_e doubles
        // as the image modulus.
        FieldSpec f = FieldSpec::make(row.p_e);
        ParamSet ps = assemble(f, f, f, kPresetN, ChainMode::Unified,
                               accum_channels, row.profile, kSigma);
        ps.preset_name = row.name;
        return ps;
    }
    throw RangeViolation("unknown preset: " + name);
}

std::vector<std::string> preset_names() {
    return {"binary", "medium", "high", "toy"};
}

std::vector<PresetCheck> validate_paper_presets() {
    std::vector<PresetCheck> out;
    for (const PresetRow& row : kPresets) {
        PresetCheck c;
        c.name = row.name;
        c.p_n = row.p_n;
        c.p_e = row.p_e;
        c.lg_q_envelope = row.lg_q_envelope;
        c.p_n_prime = is_prime_u64(row.p_n);
        c.p_e_prime = is_prime_u64(row.p_e);
        c.p_e_splits = (row.p_e - 1) % (2 * kPresetN) == 0;
        c.bound_value = checked_bound(row.max_u, row.max_w,
                                      row.profile.f_h, row.profile.f_w);
        c.bound_ok = row.p_n >= c.bound_value;
        c.unified = row.p_n == row.p_e;
        unsigned __int128 peak =
            static_cast<unsigned __int128>(row.p_n - 1) * (row.p_n - 1) + row.p_n;
        c.split_nowrap_ok = c.unified || peak <= row.p_e;
        std::uint64_t q = derive_q(row.p_e, kPresetN, kSigma, 1);
        c.derived_lg_q = static_cast<int>(std::ceil(std::log2(static_cast<double>(q))));
        c.q_within_envelope = c.derived_lg_q <= row.lg_q_envelope;
        out.push_back(c);
    }
    return out;
}

std::string format_preset_report(const std::vector<PresetCheck>& checks) {
    std::ostringstream os;
    for (const PresetCheck& c : checks) {
        os << c.name << ": p_n=" << c.p_n << " (prime " << (c.p_n_prime ? "yes" : "NO")
           << "), p_e=" << c.p_e << " (prime " << (c.p_e_prime ? "yes" : "NO")
           << ", splits " << (c.p_e_splits ? "yes" : "NO") << ")"
           << ", bound " << c.bound_value << " " << (c.bound_ok ? "<= p_n ok" : "VIOLATED")
           << ", ";
        if (c.unified) {
            os << "unified (p_n = p_e)";
        } else {
            os << "split no-wrap " << (c.split_nowrap_ok ? "ok" : "FAILS (runs unified at p = p_e)");
        }
        os << ", derived ceil(lg q)=" << c.derived_lg_q
           << (c.q_within_envelope ? " within" : " EXCEEDS") << " envelope "
           << c.lg_q_envelope << "\n";
    }
    return os.str();
}

std::size_t run_noise_gauntlet(const ParamSet& ps, std::size_t cycles, Rng& rng) {
    const RlweParams& params = ps.rlwe;
    SecretKey sk = keygen(params, rng);
    std::size_t failures = 0;
    for (std::size_t c = 0; c < cycles; ++c) {
        PlainVec u, w;
        u.slots.resize(params.n);
        w.slots.resize(params.n);
        for (std::size_t i = 0; i < params.n; ++i) {
            u.slots[i] = rng.uniform_residue(params.p_e);
            w.slots[i] = rng.uniform_residue(params.p_e);
        }
        Ciphertext ct = encrypt(u, sk, params, rng);
        Ciphertext prod = mul_plain(ct, w, params);
        SharePair shares = hom_share(prod, ps.chain, params, rng);
        if (shares.alice_ct.noise_budget_bits(params) <= 0) {
            ++failures;
            continue;
        }
        PlainVec got = decrypt(shares.alice_ct, sk, params);
        bool ok = true;
        for (std::size_t i = 0; i < params.n; ++i) {
            // mirrors what hom_share does to the plaintext slots
            Residue masked = params.p_e.add(
                params.p_e.mul(u.slots[i], w.slots[i]),
                params.p_e.reduce(ps.chain.p_a.modulus() - shares.bob_share.slots[i]));
            if (got.slots[i] != masked) { ok = false; break; }
        }
        if (!ok) ++failures;
    }
    return failures;
}

} // namespace ensei
