#include "ensei/protocol.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

namespace ensei {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<PlainVec> split_blocks(const std::vector<Residue>& flat, std::size_t n) {
    std::size_t blocks = (flat.size() + n - 1) / n;
    std::vector<PlainVec> out(blocks);
    for (std::size_t b = 0; b < blocks; ++b) {
        out[b].slots.assign(n, 0);
        std::size_t base = b * n;
        std::size_t take = std::min(n, flat.size() - base);
        std::copy(flat.begin() + base, flat.begin() + base + take,
                  out[b].slots.begin());
    }
    return out;
}

std::vector<Residue> merge_blocks(const std::vector<PlainVec>& blocks,
                                  std::size_t len) {
    std::vector<Residue> out;
    out.reserve(len);
    for (const PlainVec& b : blocks) {
        for (Residue v : b.slots) {
            if (out.size() == len) break;
            out.push_back(v);
        }
    }
    if (out.size() != len)
        throw ProtocolOrderViolation("share blocks shorter than the padded grid");
    return out;
}

ResMat crop_tensor(const FreqTensor& t, const ConvGeometry& g) {
    ResMat out(g.out_h(), g.out_w());
    std::size_t r0 = g.crop_r0(), c0 = g.crop_c0();
    for (std::size_t r = 0; r < out.rows; ++r)
        for (std::size_t c = 0; c < out.cols; ++c)
            out.at(r, c) = t.at(r + r0, c + c0);
    return out;
}

Frame recv_expect(Transport& transport, MsgType expect) {
    Frame f = transport.recv_frame();
    if (f.type == MsgType::Error) {
        std::string msg(f.payload.begin(), f.payload.end());
        throw ProtocolOrderViolation("peer aborted: " + msg);
    }
    if (f.type != expect)
        throw ProtocolOrderViolation(std::string("expected ") + msg_type_name(expect) +
                                     ", got " + msg_type_name(f.type));
    return f;
}

void send_error(Transport& transport, const std::string& msg) {
    Frame f;
    f.type = MsgType::Error;
    f.payload.assign(msg.begin(), msg.end());
    try {
        transport.send_frame(f);
    } catch (const TransportError&) {
        // peer already gone; the local throw still reports the cause
    }
}

struct CtBlocksMsg {
    std::uint32_t layer = 0;
    std::vector<std::vector<Ciphertext>> per_channel; // [channel][block]
};

Frame encode_ct_blocks(MsgType type, std::uint32_t layer,
                       const std::vector<std::vector<Ciphertext>>& per_channel) {
    ByteWriter w;
    w.put_u32(layer);
    w.put_u32(static_cast<std::uint32_t>(per_channel.size()));
    w.put_u32(per_channel.empty()
                  ? 0
                  : static_cast<std::uint32_t>(per_channel.front().size()));
    for (const auto& blocks : per_channel)
        for (const Ciphertext& ct : blocks) write_ciphertext(w, ct);
    Frame f;
    f.type = type;
    f.payload = std::move(w.buf);
    return f;
}

CtBlocksMsg decode_ct_blocks(const Frame& f, const RlweParams& params,
                             std::size_t expect_channels, std::size_t expect_blocks) {
    ByteReader r(f.payload);
    CtBlocksMsg msg;
    msg.layer = r.get_u32();
    std::uint32_t channels = r.get_u32();
    std::uint32_t blocks = r.get_u32();
    if (channels != expect_channels || blocks != expect_blocks)
        throw ProtocolOrderViolation("ciphertext block layout mismatch");
    msg.per_channel.resize(channels);
    for (auto& chan : msg.per_channel) {
        chan.reserve(blocks);
        for (std::uint32_t b = 0; b < blocks; ++b)
            chan.push_back(read_ciphertext(r, params));
    }
    r.expect_end();
    return msg;
}

Frame encode_shares(MsgType type, std::uint32_t layer,
                    const std::vector<ResMat>& mats) {
    ByteWriter w;
    w.put_u32(layer);
    w.put_u32(static_cast<std::uint32_t>(mats.size()));
    w.put_u32(mats.empty() ? 0 : static_cast<std::uint32_t>(mats.front().rows));
    w.put_u32(mats.empty() ? 0 : static_cast<std::uint32_t>(mats.front().cols));
    for (const ResMat& m : mats)
        for (Residue v : m.v) w.put_u64(v);
    Frame f;
    f.type = type;
    f.payload = std::move(w.buf);
    return f;
}

std::vector<ResMat> decode_shares(const Frame& f, std::size_t expect_channels,
                                  std::size_t expect_rows, std::size_t expect_cols,
                                  std::uint64_t max_value) {
    ByteReader r(f.payload);
    r.get_u32(); // layer index, informational
    std::uint32_t channels = r.get_u32();
    std::uint32_t rows = r.get_u32();
    std::uint32_t cols = r.get_u32();
    if (channels != expect_channels || rows != expect_rows || cols != expect_cols)
        throw ProtocolOrderViolation("share layout mismatch");
    std::vector<ResMat> out(channels, ResMat(rows, cols));
    for (auto& m : out)
        for (Residue& v : m.v) {
            std::uint64_t x = r.get_u64();
            if (x >= max_value) throw MalformedPayload("share value out of range");
            v = x;
        }
    r.expect_end();
    return out;
}

/// The per-layer shape walk both parties agree on.
struct LayerPlan {
    LayerSpec spec;
    ConvGeometry geom;       // Conv layers
    std::size_t blocks = 0;  // ciphertext blocks per channel
    std::size_t in_h = 0, in_w = 0;
};

std::vector<LayerPlan> plan_layers(const ProtocolConfig& config) {
    const FieldSpec& p_n = config.params.chain.p_n;
    std::vector<LayerPlan> plans;
    std::size_t h = config.image_h, w = config.image_w;
    std::size_t channels = 0;
    bool channels_known = false;
    for (const LayerSpec& spec : config.schedule.layers) {
        LayerPlan plan;
        plan.spec = spec;
        plan.in_h = h;
        plan.in_w = w;
        if (spec.kind == LayerKind::Conv) {
            if (spec.channels_in == 0 || spec.channels_out == 0)
                throw BadGeometry("conv layer needs channel counts");
            if (channels_known && channels != spec.channels_in)
                throw BadGeometry("conv channels_in does not match previous layer");
            plan.geom = make_geometry(h, w, spec.filter_h, spec.filter_w,
                                      spec.conv_type, p_n);
            std::size_t slots = plan.geom.padded_h * plan.geom.padded_w;
            plan.blocks = (slots + config.params.rlwe.n - 1) / config.params.rlwe.n;
            h = plan.geom.out_h();
            w = plan.geom.out_w();
            channels = spec.channels_out;
            channels_known = true;
        }
        plans.push_back(plan);
    }
    if (plans.empty()) throw BadGeometry("empty schedule");
    if (plans.front().spec.kind != LayerKind::Conv)
        throw BadGeometry("schedule must start with a conv layer");
    return plans;
}

std::uint64_t hash_u64(std::uint64_t h, std::uint64_t v) {
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    return fnv1a(b, 8, h);
}

} // namespace

std::vector<ConvGeometry> resolve_geometries(const ProtocolConfig& config) {
    std::vector<ConvGeometry> out;
    for (const LayerPlan& p : plan_layers(config))
        if (p.spec.kind == LayerKind::Conv) out.push_back(p.geom);
    return out;
}

std::uint64_t config_digest(const ProtocolConfig& config) {
    std::uint64_t h = 1469598103934665603ULL;
    h = hash_u64(h, config.params.rlwe.n);
    h = hash_u64(h, config.params.rlwe.q.modulus());
    h = hash_u64(h, config.params.rlwe.p_e.modulus());
    h = hash_u64(h, config.params.chain.p_n.modulus());
    h = hash_u64(h, config.params.chain.p_a.modulus());
    h = hash_u64(h, static_cast<std::uint64_t>(config.params.rlwe.sigma * 16));
    h = hash_u64(h, config.mode == PipelineMode::Baseline ? 0 : 1);
    h = hash_u64(h, config.seed);
    h = hash_u64(h, config.image_h);
    h = hash_u64(h, config.image_w);
    for (const LayerSpec& l : config.schedule.layers) {
        h = hash_u64(h, l.kind == LayerKind::Conv ? 1 : 2);
        if (l.kind == LayerKind::Conv) {
            h = hash_u64(h, l.filter_h);
            h = hash_u64(h, l.filter_w);
            h = hash_u64(h, l.conv_type == ConvType::Same ? 1 : 2);
            h = hash_u64(h, l.channels_in);
            h = hash_u64(h, l.channels_out);
        } else {
            h = hash_u64(h, static_cast<std::uint64_t>(l.fn));
        }
    }
    return h;
}

std::pair<ResMat, ResMat> trusted_activation(const ResMat& s_a, const ResMat& s_b,
                                             ActivationFn fn, const FieldSpec& p_a,
                                             Rng& rng) {
    if (s_a.rows != s_b.rows || s_a.cols != s_b.cols)
        throw LengthMismatch("activation shares differ in shape");
    ResMat new_a(s_a.rows, s_a.cols), new_b(s_a.rows, s_a.cols);
    std::int64_t half = static_cast<std::int64_t>(p_a.modulus() / 2);
    for (std::size_t i = 0; i < s_a.v.size(); ++i) {
        Residue rec = p_a.add(p_a.reduce(s_a.v[i]), p_a.reduce(s_b.v[i]));
        std::int64_t y = decode_signed(rec, p_a);
        std::int64_t out = 0;
        switch (fn) {
            case ActivationFn::ReLU:
                out = y > 0 ? y : 0;
                break;
            case ActivationFn::Square: {
                __int128 sq = static_cast<__int128>(y) * y;
                if (sq > half)
                    throw RangeOverflow("square activation exceeds p_a/2");
                out = static_cast<std::int64_t>(sq);
                break;
            }
            case ActivationFn::Identity:
                out = y;
                break;
        }
        Residue fresh = rng.uniform_residue(p_a);
        new_b.v[i] = fresh;
        new_a.v[i] = p_a.sub(encode_signed(out, p_a), fresh);
    }
    return {std::move(new_a), std::move(new_b)};
}

namespace {

// ---------------------------------------------------------------------------
// Alice
// ---------------------------------------------------------------------------

struct AliceSession {
    const ProtocolConfig& config;
    Transport& transport;
    Rng rng;
    SecretKey sk;
    std::vector<LayerPlan> plans;
    PhaseTimings timings;

    AliceSession(const ProtocolConfig& cfg, Transport& t)
        : config(cfg), transport(t), rng(Rng(cfg.seed).fork(0xA11CE)) {
        Clock::time_point t0 = Clock::now();
        plans = plan_layers(cfg);
        sk = keygen(cfg.params.rlwe, rng);
        timings.setup_seconds = seconds_since(t0);
    }

    void hello() {
        ByteWriter w;
        w.put_u64(config_digest(config));
        Frame f;
        f.type = MsgType::Hello;
        f.payload = std::move(w.buf);
        transport.send_frame(f);
        Frame peer = recv_expect(transport, MsgType::Hello);
        ByteReader r(peer.payload);
        std::uint64_t digest = r.get_u64();
        r.expect_end();
        if (digest != config_digest(config)) {
            send_error(transport, "configuration digest mismatch");
            throw ProtocolOrderViolation("configuration digest mismatch");
        }
    }

    // Lines 1-3 / 9-10: pad, transform, flatten, split, encrypt, send.
    void send_encrypted(std::uint32_t layer_idx, const LayerPlan& plan,
                        const std::vector<ResMat>& channels) {
        Clock::time_point t0 = Clock::now();
        const RlweParams& params = config.params.rlwe;
        std::vector<std::vector<Ciphertext>> out(channels.size());
        for (std::size_t c = 0; c < channels.size(); ++c) {
            FreqTensor t = pad_residues(channels[c].v, channels[c].rows,
                                        channels[c].cols, plan.geom,
                                        config.params.chain.p_n);
            std::vector<Residue> flat = flatten(ntt_2d(t));
            for (PlainVec& block : split_blocks(flat, params.n)) {
                out[c].push_back(config.mode == PipelineMode::FreqDirect
                                     ? encrypt_freq_direct(block, sk, params, rng)
                                     : encrypt(block, sk, params, rng));
            }
        }
        transport.send_frame(
            encode_ct_blocks(MsgType::CiphertextBlocks, layer_idx, out));
        timings.encrypt_seconds += seconds_since(t0);
    }

    // Lines 5-6: decrypt, reassemble, inverse transform, crop.
    std::vector<ResMat> receive_shares(const LayerPlan& plan) {
        Frame f = recv_expect(transport, MsgType::AliceShareCiphertexts);
        std::size_t c_out = plan.spec.channels_out;
        CtBlocksMsg msg =
            decode_ct_blocks(f, config.params.rlwe, c_out, plan.blocks);
        Clock::time_point t0 = Clock::now();
        const FieldSpec& p_n = config.params.chain.p_n;
        std::size_t grid = plan.geom.padded_h * plan.geom.padded_w;
        std::vector<ResMat> shares;
        shares.reserve(c_out);
        for (std::size_t c = 0; c < c_out; ++c) {
            std::vector<PlainVec> blocks;
            blocks.reserve(plan.blocks);
            for (const Ciphertext& ct : msg.per_channel[c])
                blocks.push_back(decrypt(ct, sk, config.params.rlwe));
            std::vector<Residue> flat = merge_blocks(blocks, grid);
            for (Residue& v : flat) v = p_n.reduce(v);
            FreqTensor t = unflatten(flat, plan.geom.padded_h, plan.geom.padded_w,
                                     p_n, TensorDomain::Frequency);
            shares.push_back(crop_tensor(intt_2d(t), plan.geom));
        }
        timings.decrypt_seconds += seconds_since(t0);
        return shares;
    }

    PartyResult run(const std::vector<Mat>& image) {
        hello();
        Clock::time_point online0 = Clock::now();
        reset_transform_counters();

        const FieldSpec& p_a = config.params.chain.p_a;
        // Layer 0 input: the image itself, conceptually shared with s_B = 0.
        std::vector<ResMat> current;
        for (const Mat& ch : image) {
            ResMat m(ch.rows, ch.cols);
            for (std::size_t i = 0; i < ch.data.size(); ++i)
                m.v[i] = encode_signed(ch.data[i], p_a);
            current.push_back(std::move(m));
        }

        std::vector<ResMat> output;
        const LayerPlan* last_conv = nullptr;
        for (std::size_t li = 0; li < plans.size(); ++li) {
            const LayerPlan& plan = plans[li];
            if (plan.spec.kind == LayerKind::Conv) {
                if (current.size() != plan.spec.channels_in)
                    throw BadGeometry("input channel count mismatch");
                send_encrypted(static_cast<std::uint32_t>(li), plan, current);
                current = receive_shares(plan);
                last_conv = &plan;
            } else {
                // Activation stub, centralized here: Bob uploads his share,
                // we recombine, evaluate, and return his fresh share.
                if (last_conv == nullptr)
                    throw ProtocolOrderViolation("activation before any conv layer");
                Frame f = recv_expect(transport, MsgType::ActivationShareUp);
                std::vector<ResMat> bob = decode_shares(
                    f, current.size(), current.front().rows, current.front().cols,
                    p_a.modulus());
                std::vector<ResMat> fresh_bob;
                bool last_layer = li + 1 == plans.size();
                for (std::size_t c = 0; c < current.size(); ++c) {
                    auto [s_a, s_b] = trusted_activation(current[c], bob[c],
                                                         plan.spec.fn, p_a, rng);
                    if (last_layer) {
                        ResMat rec(s_a.rows, s_a.cols);
                        rec.v = recombine_clear(s_a.v, s_b.v, p_a);
                        output.push_back(std::move(rec));
                    }
                    current[c] = std::move(s_a);
                    fresh_bob.push_back(std::move(s_b));
                }
                if (!last_layer) {
                    transport.send_frame(encode_shares(
                        MsgType::ActivationShareDown,
                        static_cast<std::uint32_t>(li), fresh_bob));
                }
            }
        }

        if (plans.back().spec.kind == LayerKind::Conv) {
            // Final recombination: Bob uploads his share of the last conv.
            Frame f = recv_expect(transport, MsgType::ActivationShareUp);
            std::vector<ResMat> bob = decode_shares(
                f, current.size(), current.front().rows, current.front().cols,
                p_a.modulus());
            for (std::size_t c = 0; c < current.size(); ++c) {
                ResMat rec(current[c].rows, current[c].cols);
                rec.v = recombine_clear(current[c].v, bob[c].v, p_a);
                output.push_back(std::move(rec));
            }
        }

        Frame done;
        done.type = MsgType::Done;
        transport.send_frame(done);
        recv_expect(transport, MsgType::Done);

        PartyResult result;
        result.output = std::move(output);
        result.online_counters = transform_counters();
        result.timings = timings;
        result.timings.online_seconds = seconds_since(online0);
        return result;
    }
};

// ---------------------------------------------------------------------------
// Bob
// ---------------------------------------------------------------------------

struct BobSession {
    const ProtocolConfig& config;
    const NetworkWeights& weights;
    Transport& transport;
    Rng rng;
    std::vector<LayerPlan> plans;
    PhaseTimings timings;
    // prepared[conv_index][out][in][block]
    std::vector<std::vector<std::vector<std::vector<PreparedPlain>>>> prepared;

    BobSession(const ProtocolConfig& cfg, const NetworkWeights& w, Transport& t)
        : config(cfg), weights(w), transport(t), rng(Rng(cfg.seed).fork(0xB0B)) {
        plans = plan_layers(cfg);
        Clock::time_point t0 = Clock::now();
        prepare_weights();
        timings.setup_seconds = seconds_since(t0);
    }

    // Setup: pad, transform, flatten, and slot-encode every filter once.
    void prepare_weights() {
        const RlweParams& params = config.params.rlwe;
        const FieldSpec& p_n = config.params.chain.p_n;
        std::size_t conv_idx = 0;
        for (const LayerPlan& plan : plans) {
            if (plan.spec.kind != LayerKind::Conv) continue;
            if (conv_idx >= weights.size())
                throw BadGeometry("missing weights for conv layer");
            const LayerWeights& bank = weights[conv_idx];
            if (bank.size() != plan.spec.channels_out)
                throw BadGeometry("weight bank channel_out mismatch");
            std::vector<std::vector<std::vector<PreparedPlain>>> layer_prep;
            for (std::size_t o = 0; o < plan.spec.channels_out; ++o) {
                if (bank[o].size() != plan.spec.channels_in)
                    throw BadGeometry("weight bank channel_in mismatch");
                std::vector<std::vector<PreparedPlain>> per_in;
                for (std::size_t i = 0; i < plan.spec.channels_in; ++i) {
                    const Mat& filt = bank[o][i];
                    if (filt.rows != plan.spec.filter_h || filt.cols != plan.spec.filter_w)
                        throw BadGeometry("filter dims mismatch");
                    ConvGeometry fg = plan.geom;
                    std::swap(fg.image_h, fg.filter_h);
                    std::swap(fg.image_w, fg.filter_w);
                    FreqTensor t = pad_image(filt, fg, p_n);
                    std::vector<Residue> flat = flatten(ntt_2d(t));
                    std::vector<PreparedPlain> blocks;
                    for (PlainVec& block : split_blocks(flat, params.n)) {
                        for (Residue& v : block.slots)
                            v = params.p_e.reduce(v);
                        blocks.push_back(prepare_plain(block, params));
                    }
                    per_in.push_back(std::move(blocks));
                }
                layer_prep.push_back(std::move(per_in));
            }
            prepared.push_back(std::move(layer_prep));
            ++conv_idx;
        }
        if (conv_idx != weights.size())
            throw BadGeometry("extra weight banks beyond the schedule");
    }

    void hello() {
        Frame peer = recv_expect(transport, MsgType::Hello);
        ByteReader r(peer.payload);
        std::uint64_t digest = r.get_u64();
        r.expect_end();
        ByteWriter w;
        w.put_u64(config_digest(config));
        Frame f;
        f.type = MsgType::Hello;
        f.payload = std::move(w.buf);
        transport.send_frame(f);
        if (digest != config_digest(config)) {
            send_error(transport, "configuration digest mismatch");
            throw ProtocolOrderViolation("configuration digest mismatch");
        }
    }

    PartyResult run() {
        hello();
        Clock::time_point online0 = Clock::now();
        reset_transform_counters();

        const RlweParams& params = config.params.rlwe;
        const FieldSpec& p_a = config.params.chain.p_a;
        const FieldSpec& p_n = config.params.chain.p_n;

        // Bob's time-domain share of the current activations; empty before
        // the first conv layer (Alice's input is shared against zero).
        std::vector<ResMat> my_share;
        std::size_t conv_idx = 0;

        for (std::size_t li = 0; li < plans.size(); ++li) {
            const LayerPlan& plan = plans[li];
            if (plan.spec.kind == LayerKind::Conv) {
                Frame f = recv_expect(transport, MsgType::CiphertextBlocks);
                CtBlocksMsg msg = decode_ct_blocks(f, params, plan.spec.channels_in,
                                                   plan.blocks);

                // Line 11: recombine with our transformed share, if any.
                if (!my_share.empty()) {
                    for (std::size_t c = 0; c < plan.spec.channels_in; ++c) {
                        FreqTensor t = pad_residues(my_share[c].v, my_share[c].rows,
                                                    my_share[c].cols, plan.geom, p_n);
                        std::vector<Residue> flat = flatten(ntt_2d(t));
                        std::vector<PlainVec> blocks = split_blocks(flat, params.n);
                        for (std::size_t b = 0; b < plan.blocks; ++b) {
                            for (Residue& v : blocks[b].slots)
                                v = params.p_e.reduce(v);
                            msg.per_channel[c][b] =
                                hom_rec(msg.per_channel[c][b], blocks[b],
                                        config.params.chain, params);
                        }
                    }
                }

                // Filtering: evaluation-domain conversion (the baseline pays
                // two ciphertext transforms per block here; frequency-direct
                // ciphertexts arrive converted), then slotwise products.
                Clock::time_point filter0 = Clock::now();
                for (std::size_t c = 0; c < plan.spec.channels_in; ++c)
                    for (std::size_t b = 0; b < plan.blocks; ++b)
                        msg.per_channel[c][b] =
                            to_evaluation_domain(msg.per_channel[c][b], params);

                Clock::time_point had0 = Clock::now();
                std::vector<std::vector<Ciphertext>> out(plan.spec.channels_out);
                for (std::size_t o = 0; o < plan.spec.channels_out; ++o) {
                    for (std::size_t b = 0; b < plan.blocks; ++b) {
                        Ciphertext acc = mul_plain(msg.per_channel[0][b],
                                                   prepared[conv_idx][o][0][b], params);
                        for (std::size_t c = 1; c < plan.spec.channels_in; ++c)
                            acc = add_ct(acc,
                                         mul_plain(msg.per_channel[c][b],
                                                   prepared[conv_idx][o][c][b], params),
                                         params);
                        out[o].push_back(std::move(acc));
                    }
                }
                double now_had = seconds_since(had0);
                timings.filter_seconds += seconds_since(filter0);
                timings.hadamard_seconds += now_had;

                // Line 4: randomize into shares; keep ours, return Alice's.
                std::size_t grid = plan.geom.padded_h * plan.geom.padded_w;
                my_share.clear();
                for (std::size_t o = 0; o < plan.spec.channels_out; ++o) {
                    std::vector<PlainVec> mine;
                    for (std::size_t b = 0; b < plan.blocks; ++b) {
                        SharePair pair = hom_share(out[o][b], config.params.chain,
                                                   params, rng);
                        out[o][b] = std::move(pair.alice_ct);
                        mine.push_back(std::move(pair.bob_share));
                    }
                    std::vector<Residue> flat = merge_blocks(mine, grid);
                    for (Residue& v : flat) v = p_n.reduce(v);
                    FreqTensor t = unflatten(flat, plan.geom.padded_h,
                                             plan.geom.padded_w, p_n,
                                             TensorDomain::Frequency);
                    my_share.push_back(crop_tensor(intt_2d(t), plan.geom));
                }
                transport.send_frame(encode_ct_blocks(
                    MsgType::AliceShareCiphertexts,
                    static_cast<std::uint32_t>(li), out));
                ++conv_idx;
            } else {
                // Upload our share to the activation stub, receive the fresh one.
                transport.send_frame(encode_shares(
                    MsgType::ActivationShareUp, static_cast<std::uint32_t>(li),
                    my_share));
                bool last_layer = li + 1 == plans.size();
                if (!last_layer) {
                    Frame f = recv_expect(transport, MsgType::ActivationShareDown);
                    my_share = decode_shares(f, my_share.size(),
                                             my_share.front().rows,
                                             my_share.front().cols, p_a.modulus());
                }
            }
        }

        if (plans.back().spec.kind == LayerKind::Conv) {
            transport.send_frame(encode_shares(
                MsgType::ActivationShareUp,
                static_cast<std::uint32_t>(plans.size() - 1), my_share));
        }

        recv_expect(transport, MsgType::Done);
        Frame done;
        done.type = MsgType::Done;
        transport.send_frame(done);

        PartyResult result;
        result.online_counters = transform_counters();
        result.timings = timings;
        result.timings.online_seconds = seconds_since(online0);
        return result;
    }
};

// Records on top of the caller's transport without owning it.
struct BorrowTransport : Transport {
    Transport* inner;
    explicit BorrowTransport(Transport* t) : inner(t) {}
    void send_frame(const Frame& f) override { inner->send_frame(f); }
    Frame recv_frame() override { return inner->recv_frame(); }
};

} // namespace

PartyResult run_alice(const ProtocolConfig& config, const std::vector<Mat>& image,
                      Transport& transport) {
    RecordingTransport recording(std::make_unique<BorrowTransport>(&transport));
    AliceSession session(config, recording);
    PartyResult result = session.run(image);
    result.transcript = recording.transcript();
    return result;
}

PartyResult run_bob(const ProtocolConfig& config, const NetworkWeights& weights,
                    Transport& transport) {
    RecordingTransport recording(std::make_unique<BorrowTransport>(&transport));
    BobSession session(config, weights, recording);
    PartyResult result = session.run();
    result.transcript = recording.transcript();
    return result;
}

InprocRun run_inproc(const ProtocolConfig& config, const std::vector<Mat>& image,
                     const NetworkWeights& weights) {
    auto [alice_t, bob_t] = make_inproc_pair();
    InprocRun result;
    std::exception_ptr bob_error;
    std::thread bob_thread([&] {
        try {
            result.bob = run_bob(config, weights, *bob_t);
        } catch (...) {
            bob_error = std::current_exception();
        }
    });
    std::exception_ptr alice_error;
    try {
        result.alice = run_alice(config, image, *alice_t);
    } catch (...) {
        alice_error = std::current_exception();
    }
    bob_thread.join();
    if (alice_error) std::rethrow_exception(alice_error);
    if (bob_error) std::rethrow_exception(bob_error);
    return result;
}

std::vector<ResMat> reference_pipeline(const ProtocolConfig& config,
                                       const std::vector<Mat>& image,
                                       const NetworkWeights& weights) {
    const FieldSpec& p = config.params.chain.p_n;
    std::vector<LayerPlan> plans = plan_layers(config);

    std::vector<ResMat> current;
    for (const Mat& ch : image) {
        ResMat m(ch.rows, ch.cols);
        for (std::size_t i = 0; i < ch.data.size(); ++i)
            m.v[i] = encode_signed(ch.data[i], p);
        current.push_back(std::move(m));
    }

    std::size_t conv_idx = 0;
    for (const LayerPlan& plan : plans) {
        if (plan.spec.kind == LayerKind::Conv) {
            std::vector<ResMat> next;
            for (std::size_t o = 0; o < plan.spec.channels_out; ++o) {
                ResMat acc(plan.geom.out_h(), plan.geom.out_w());
                for (std::size_t c = 0; c < plan.spec.channels_in; ++c) {
                    Mat in(current[c].rows, current[c].cols);
                    for (std::size_t i = 0; i < in.data.size(); ++i)
                        in.data[i] = decode_signed(current[c].v[i], p);
                    std::vector<Residue> r =
                        conv_oracle(in, weights[conv_idx][o][c], plan.geom, p);
                    for (std::size_t i = 0; i < acc.v.size(); ++i)
                        acc.v[i] = p.add(acc.v[i], r[i]);
                }
                next.push_back(std::move(acc));
            }
            current = std::move(next);
            ++conv_idx;
        } else {
            std::int64_t half = static_cast<std::int64_t>(p.modulus() / 2);
            for (ResMat& m : current) {
                for (Residue& v : m.v) {
                    std::int64_t y = decode_signed(v, p);
                    std::int64_t out = 0;
                    switch (plan.spec.fn) {
                        case ActivationFn::ReLU: out = y > 0 ? y : 0; break;
                        case ActivationFn::Square: {
                            __int128 sq = static_cast<__int128>(y) * y;
                            if (sq > half)
                                throw RangeOverflow("square activation exceeds p_a/2");
                            out = static_cast<std::int64_t>(sq);
                            break;
                        }
                        case ActivationFn::Identity: out = y; break;
                    }
                    v = encode_signed(out, p);
                }
            }
        }
    }
    return current;
}

NetworkWeights random_weights(const Schedule& schedule, std::int64_t magnitude,
                              Rng& rng) {
    NetworkWeights out;
    for (const LayerSpec& l : schedule.layers) {
        if (l.kind != LayerKind::Conv) continue;
        LayerWeights bank(l.channels_out,
                          std::vector<Mat>(l.channels_in, Mat(l.filter_h, l.filter_w)));
        for (auto& row : bank)
            for (Mat& m : row)
                for (std::int64_t& v : m.data)
                    v = static_cast<std::int64_t>(
                            rng.uniform_below(2 * magnitude + 1)) - magnitude;
        out.push_back(std::move(bank));
    }
    return out;
}

} // namespace ensei
