#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ensei/counters.hpp"
#include "ensei/hss.hpp"
#include "ensei/ntt.hpp"
#include "ensei/params.hpp"
#include "ensei/ringbfv.hpp"
#include "ensei/wire.hpp"

namespace ensei {

enum class Role { Alice, Bob };
enum class PipelineMode { Baseline, FreqDirect };
enum class LayerKind { Conv, Activation };
enum class ActivationFn { ReLU, Square, Identity };

struct LayerSpec {
    LayerKind kind = LayerKind::Conv;
    // Conv fields
    std::size_t filter_h = 0, filter_w = 0;
    ConvType conv_type = ConvType::Same;
    std::size_t channels_in = 0, channels_out = 0;
    // Activation field
    ActivationFn fn = ActivationFn::Identity;
};

struct Schedule {
    std::vector<LayerSpec> layers;
};

/// Residue matrix mod the share modulus; the shape shares and outputs
/// travel in.
struct ResMat {
    std::size_t rows = 0, cols = 0;
    std::vector<Residue> v;

    ResMat() = default;
    ResMat(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0) {}
    Residue& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    Residue at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
    bool operator==(const ResMat&) const = default;
};

/// Per-conv-layer filter bank, [out_channel][in_channel].
using LayerWeights = std::vector<std::vector<Mat>>;
/// One entry per Conv layer, in schedule order.
using NetworkWeights = std::vector<LayerWeights>;

struct ProtocolConfig {
    ParamSet params;
    PipelineMode mode = PipelineMode::Baseline;
    std::uint64_t seed = 0;
    Schedule schedule;
    std::size_t image_h = 0, image_w = 0;
};

/// Checks layer-to-layer shape consistency and the slot/noise headroom;
/// returns the per-layer geometries.
std::vector<ConvGeometry> resolve_geometries(const ProtocolConfig& config);

/// Both sides hash the shared configuration (moduli, mode, schedule shapes,
/// seed) and compare during Hello.
std::uint64_t config_digest(const ProtocolConfig& config);

/// The in-the-clear activation stand-in. Recombines the shares mod p_a,
/// lifts to the centered range, applies fn, and re-shares with fresh
/// randomness. INSECURE BY CONSTRUCTION: the caller sees the plaintext
/// activations; it exists to keep the share interface intact where a
/// garbled-circuit backend would slot in.
std::pair<ResMat, ResMat> trusted_activation(const ResMat& s_a, const ResMat& s_b,
                                             ActivationFn fn, const FieldSpec& p_a,
                                             Rng& rng);

struct PhaseTimings {
    double setup_seconds = 0;
    double online_seconds = 0;
    double encrypt_seconds = 0;   // Alice: image transform + encryption
    double filter_seconds = 0;    // Bob: ring transforms + slotwise products
    double hadamard_seconds = 0;  // Bob: slotwise products only
    double decrypt_seconds = 0;   // Alice: share decryption + inverse transform
};

struct PartyResult {
    std::vector<ResMat> output; // Alice only; per final channel, mod p_a
    Transcript transcript;
    TransformCounters online_counters;
    PhaseTimings timings;
};

/// Drives one side of the protocol to completion over the given transport.
/// Alice supplies the per-channel input image; Bob supplies the weights.
PartyResult run_alice(const ProtocolConfig& config, const std::vector<Mat>& image,
                      Transport& transport);
PartyResult run_bob(const ProtocolConfig& config, const NetworkWeights& weights,
                    Transport& transport);

/// Runs both parties on two threads over an in-process transport pair.
struct InprocRun {
    PartyResult alice;
    PartyResult bob;
};
InprocRun run_inproc(const ProtocolConfig& config, const std::vector<Mat>& image,
                     const NetworkWeights& weights);

/// Plaintext reference: conv layers via the direct convolution oracle with
/// channel accumulation, activations on centered lifts. The protocol must
/// match this output exactly.
std::vector<ResMat> reference_pipeline(const ProtocolConfig& config,
                                       const std::vector<Mat>& image,
                                       const NetworkWeights& weights);

/// Samples a weight bank for the schedule, entries uniform in
/// [-magnitude, magnitude].
NetworkWeights random_weights(const Schedule& schedule, std::int64_t magnitude,
                              Rng& rng);

} // namespace ensei
