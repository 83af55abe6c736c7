#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ensei/errors.hpp"
#include "ensei/ringbfv.hpp"

namespace ensei {

enum class MsgType : std::uint8_t {
    Hello = 0x01,
    CiphertextBlocks = 0x02,
    AliceShareCiphertexts = 0x03,
    ActivationShareUp = 0x04,
    ActivationShareDown = 0x05,
    Done = 0x06,
    Error = 0x07,
};

bool is_known_msg_type(std::uint8_t t);
const char* msg_type_name(MsgType t);

/// One framed message. On the wire: "ENSE" | 0x01 | type | length (8 bytes
/// little-endian) | payload. Payloads are capped at 1 GiB.
struct Frame {
    MsgType type = MsgType::Error;
    std::vector<std::uint8_t> payload;
};

constexpr std::size_t kFrameHeaderBytes = 4 + 1 + 1 + 8;
constexpr std::uint64_t kMaxPayloadBytes = std::uint64_t(1) << 30;

std::vector<std::uint8_t> encode_frame(const Frame& f);
/// Parses a complete frame from bytes. Throws MalformedPayload on any
/// violation (bad magic, version, type, length mismatch, oversize).
Frame decode_frame(const std::vector<std::uint8_t>& bytes);

/// Little-endian scratch writers/readers for payload layouts.
struct ByteWriter {
    std::vector<std::uint8_t> buf;
    void put_u8(std::uint8_t v) { buf.push_back(v); }
    void put_u32(std::uint32_t v);
    void put_u64(std::uint64_t v);
    void put_bytes(const std::uint8_t* p, std::size_t len);
};

struct ByteReader {
    const std::uint8_t* data = nullptr;
    std::size_t size = 0;
    std::size_t pos = 0;

    explicit ByteReader(const std::vector<std::uint8_t>& v)
        : data(v.data()), size(v.size()) {}
    std::uint8_t get_u8();
    std::uint32_t get_u32();
    std::uint64_t get_u64();
    void expect_end() const;
};

/// Ciphertext layout: domain tag (1) | n (8 LE) | c0 coeffs (n x 8 LE) |
/// c1 coeffs (n x 8 LE). The noise estimate is not serialized; the receiver
/// assumes a conservative fresh bound.
void write_ciphertext(ByteWriter& w, const Ciphertext& ct);
Ciphertext read_ciphertext(ByteReader& r, const RlweParams& params);
std::vector<std::uint8_t> serialize_ciphertext(const Ciphertext& ct);
Ciphertext deserialize_ciphertext(const std::vector<std::uint8_t>& bytes,
                                  const RlweParams& params);
constexpr std::size_t ciphertext_wire_bytes(std::size_t n) {
    return 1 + 8 + 2 * n * 8;
}

void write_residues(ByteWriter& w, const std::vector<Residue>& v);
std::vector<Residue> read_residues(ByteReader& r, std::uint64_t max_value);

/// Blocking, ordered, reliable frame transport.
class Transport {
public:
    virtual ~Transport() = default;
    virtual void send_frame(const Frame& f) = 0;
    virtual Frame recv_frame() = 0;
};

/// In-process pair backed by two FIFO queues.
std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>>
make_inproc_pair();

/// Plain TCP stream transport. No TLS; loopback and lab use only.
class TcpTransport : public Transport {
public:
    static std::unique_ptr<TcpTransport> listen_and_accept(std::uint16_t port);
    static std::unique_ptr<TcpTransport> connect(const std::string& host,
                                                 std::uint16_t port,
                                                 int retries = 50);
    ~TcpTransport() override;
    void send_frame(const Frame& f) override;
    Frame recv_frame() override;

private:
    explicit TcpTransport(int fd) : fd_(fd) {}
    int fd_ = -1;
};

enum class Direction { Sent, Received };

struct TranscriptEntry {
    Direction dir;
    MsgType type;
    std::uint64_t bytes; // full frame size including header
};

/// Ordered log of every frame a party sent or received, with exact sizes
/// and order-sensitive digests over the raw frame bytes, so two runs can be
/// compared for byte-identical transcripts.
struct Transcript {
    std::vector<TranscriptEntry> entries;
    std::uint64_t content_hash_sent = 1469598103934665603ULL;
    std::uint64_t content_hash_recv = 1469598103934665603ULL;

    std::uint64_t total_bytes(Direction dir) const;
    std::uint64_t total_bytes(Direction dir, MsgType type) const;
};

/// Decorates a transport with transcript recording.
class RecordingTransport : public Transport {
public:
    explicit RecordingTransport(std::unique_ptr<Transport> inner)
        : inner_(std::move(inner)) {}
    void send_frame(const Frame& f) override;
    Frame recv_frame() override;
    const Transcript& transcript() const { return transcript_; }

private:
    std::unique_ptr<Transport> inner_;
    Transcript transcript_;
};

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t len,
                    std::uint64_t seed = 1469598103934665603ULL);

} // namespace ensei
