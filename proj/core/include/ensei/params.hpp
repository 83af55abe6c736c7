#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ensei/hss.hpp"
#include "ensei/ringbfv.hpp"

namespace ensei {

/// Bit widths and filter dims that drive the dynamic-range bound on the
/// image transform modulus.
struct PrecisionProfile {
    int input_bits = 0;
    int filter_bits = 0;
    int f_h = 0;
    int f_w = 0;
};

/// Conservative lower bound on the image modulus:
/// 2^input_bits * 2^filter_bits * f_h * f_w.
std::uint64_t min_pntt(const PrecisionProfile& profile);

enum class ChainMode { Unified, SplitPaper };

struct ParamSet {
    ModulusChain chain;
    RlweParams rlwe;
    PrecisionProfile profile;
    ChainMode mode = ChainMode::Unified;
    std::string preset_name; // empty for profile-derived sets
    bool insecure = false;   // toy-scale lattice dimension
};

/// Builds a parameter set from a raw profile.
///   Unified: one prime p ≡ 1 (mod 2n), p >= bound; p_n = p_a = p_e = p.
///   SplitPaper: p_n = smallest prime >= bound, ≡ 1 (mod 4096) for the
///     radix-2 image transforms; p_e = smallest prime >= p_n, ≡ 1 (mod 2n);
///     p_a = p_n. The no-wrap validator requires (p_n-1)^2 + p_n <= p_e and
///     rejects otherwise (RangeViolation).
/// q is the smallest prime ≡ 1 (mod 2n*p_e) whose size covers one plaintext
/// multiplication plus accum_channels-way accumulation and the share masks,
/// with one spare bit.
ParamSet build_params(const PrecisionProfile& profile, std::size_t n,
                      ChainMode mode, std::size_t accum_channels = 1,
                      std::uint64_t p_n_floor = 0, double sigma = 4.0);

/// Named presets: "binary", "medium", "high" carry the candidate moduli from
/// the published table (run unified at p = p_e); "toy" is an insecure n = 16
/// set for exhaustive testing.
ParamSet preset_params(const std::string& name, std::size_t accum_channels = 1);
std::vector<std::string> preset_names();

/// One row of the preset validation report.
struct PresetCheck {
    std::string name;
    std::uint64_t p_n = 0, p_e = 0;
    int lg_q_envelope = 0;
    bool p_n_prime = false;
    bool p_e_prime = false;
    bool p_e_splits = false;      // p_e ≡ 1 (mod 2n)
    bool bound_ok = false;        // p_n >= max(u)*max(w)*f_h*f_w
    std::uint64_t bound_value = 0;
    bool unified = false;         // p_n == p_e
    bool split_nowrap_ok = false; // (p_n-1)^2 + p_n <= p_e
    int derived_lg_q = 0;         // ceil(lg q) of our derived q
    bool q_within_envelope = false;
};

/// Checks primality, congruence, and the dynamic-range bound for all three
/// published candidate sets, and flags the split-moduli no-wrap failures.
/// Descriptive: failures are reported, not thrown.
std::vector<PresetCheck> validate_paper_presets();

std::string format_preset_report(const std::vector<PresetCheck>& checks);

/// Empirical noise-soundness gauntlet: encrypt / multiply / share / decrypt
/// cycles against the plaintext computation. Returns the failure count.
std::size_t run_noise_gauntlet(const ParamSet& ps, std::size_t cycles, Rng& rng);

} // namespace ensei
