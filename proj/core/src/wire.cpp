#include "ensei/wire.hpp"

#include <cstring>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <thread>

namespace ensei {

namespace {

constexpr std::uint8_t kMagic[4] = {'E', 'N', 'S', 'E'};
constexpr std::uint8_t kVersion = 0x01;

void put_u64_at(std::vector<std::uint8_t>& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

} // namespace

bool is_known_msg_type(std::uint8_t t) {
    return t >= 0x01 && t <= 0x07;
}

const char* msg_type_name(MsgType t) {
    switch (t) {
        case MsgType::Hello: return "Hello";
        case MsgType::CiphertextBlocks: return "CiphertextBlocks";
        case MsgType::AliceShareCiphertexts: return "AliceShareCiphertexts";
        case MsgType::ActivationShareUp: return "ActivationShareUp";
        case MsgType::ActivationShareDown: return "ActivationShareDown";
        case MsgType::Done: return "Done";
        case MsgType::Error: return "Error";
    }
    return "?";
}

std::vector<std::uint8_t> encode_frame(const Frame& f) {
    if (f.payload.size() > kMaxPayloadBytes)
        throw MalformedPayload("payload exceeds 1 GiB cap");
    std::vector<std::uint8_t> out;
    out.reserve(kFrameHeaderBytes + f.payload.size());
    out.insert(out.end(), kMagic, kMagic + 4);
    out.push_back(kVersion);
    out.push_back(static_cast<std::uint8_t>(f.type));
    put_u64_at(out, f.payload.size());
    out.insert(out.end(), f.payload.begin(), f.payload.end());
    return out;
}

Frame decode_frame(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < kFrameHeaderBytes)
        throw MalformedPayload("frame shorter than header");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw MalformedPayload("bad magic");
    if (bytes[4] != kVersion)
        throw MalformedPayload("unsupported version");
    if (!is_known_msg_type(bytes[5]))
        throw MalformedPayload("unknown message type");
    std::uint64_t len = 0;
    for (int i = 0; i < 8; ++i)
        len |= static_cast<std::uint64_t>(bytes[6 + i]) << (8 * i);
    if (len > kMaxPayloadBytes)
        throw MalformedPayload("payload length exceeds cap");
    if (bytes.size() != kFrameHeaderBytes + len)
        throw MalformedPayload("payload length mismatch");
    Frame f;
    f.type = static_cast<MsgType>(bytes[5]);
    f.payload.assign(bytes.begin() + kFrameHeaderBytes, bytes.end());
    return f;
}

void ByteWriter::put_u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::put_u64(std::uint64_t v) { put_u64_at(buf, v); }

void ByteWriter::put_bytes(const std::uint8_t* p, std::size_t len) {
    buf.insert(buf.end(), p, p + len);
}

std::uint8_t ByteReader::get_u8() {
    if (pos + 1 > size) throw MalformedPayload("truncated payload");
    return data[pos++];
}

std::uint32_t ByteReader::get_u32() {
    if (pos + 4 > size) throw MalformedPayload("truncated payload");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data[pos++]) << (8 * i);
    return v;
}

std::uint64_t ByteReader::get_u64() {
    if (pos + 8 > size) throw MalformedPayload("truncated payload");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data[pos++]) << (8 * i);
    return v;
}

void ByteReader::expect_end() const {
    if (pos != size) throw MalformedPayload("trailing bytes in payload");
}

void write_ciphertext(ByteWriter& w, const Ciphertext& ct) {
    w.put_u8(static_cast<std::uint8_t>(ct.domain()));
    w.put_u64(ct.c0.coeffs.size());
    for (Residue v : ct.c0.coeffs) w.put_u64(v);
    for (Residue v : ct.c1.coeffs) w.put_u64(v);
}

Ciphertext read_ciphertext(ByteReader& r, const RlweParams& params) {
    std::uint8_t tag = r.get_u8();
    if (tag > 1) throw MalformedPayload("bad domain tag");
    std::uint64_t n = r.get_u64();
    if (n != params.n) throw MalformedPayload("ring dimension mismatch");
    Ciphertext ct;
    ct.c0.domain = static_cast<RingDomain>(tag);
    ct.c1.domain = static_cast<RingDomain>(tag);
    ct.c0.coeffs.resize(n);
    ct.c1.coeffs.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t v = r.get_u64();
        if (v >= params.q.modulus()) throw MalformedPayload("coefficient out of range");
        ct.c0.coeffs[i] = v;
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t v = r.get_u64();
        if (v >= params.q.modulus()) throw MalformedPayload("coefficient out of range");
        ct.c1.coeffs[i] = v;
    }
    // The receiver cannot see the sender's history; assume a conservative
    // post-filter bound so downstream budget checks stay meaningful.
    ct.noise_bound = params.fresh_noise_bound();
    ct.plain_mass = 1.0;
    return ct;
}

std::vector<std::uint8_t> serialize_ciphertext(const Ciphertext& ct) {
    ByteWriter w;
    write_ciphertext(w, ct);
    return std::move(w.buf);
}

Ciphertext deserialize_ciphertext(const std::vector<std::uint8_t>& bytes,
                                  const RlweParams& params) {
    ByteReader r(bytes);
    Ciphertext ct = read_ciphertext(r, params);
    r.expect_end();
    return ct;
}

void write_residues(ByteWriter& w, const std::vector<Residue>& v) {
    w.put_u64(v.size());
    for (Residue x : v) w.put_u64(x);
}

std::vector<Residue> read_residues(ByteReader& r, std::uint64_t max_value) {
    std::uint64_t count = r.get_u64();
    if (count > kMaxPayloadBytes / 8) throw MalformedPayload("vector too long");
    std::vector<Residue> out(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        std::uint64_t v = r.get_u64();
        if (v >= max_value) throw MalformedPayload("residue out of range");
        out[i] = v;
    }
    return out;
}

namespace {

/// One direction of the in-process pair.
struct InprocQueue {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::vector<std::uint8_t>> frames;
    bool closed = false;

    void push(std::vector<std::uint8_t> bytes) {
        {
            std::lock_guard<std::mutex> lock(mu);
            frames.push_back(std::move(bytes));
        }
        cv.notify_one();
    }
    std::vector<std::uint8_t> pop() {
        std::unique_lock<std::mutex> lock(mu);
        cv.wait(lock, [&] { return !frames.empty() || closed; });
        if (frames.empty()) throw TransportError("peer closed");
        std::vector<std::uint8_t> out = std::move(frames.front());
        frames.pop_front();
        return out;
    }
    void close() {
        {
            std::lock_guard<std::mutex> lock(mu);
            closed = true;
        }
        cv.notify_all();
    }
};

class InprocTransport : public Transport {
public:
    InprocTransport(std::shared_ptr<InprocQueue> tx, std::shared_ptr<InprocQueue> rx)
        : tx_(std::move(tx)), rx_(std::move(rx)) {}
    ~InprocTransport() override { tx_->close(); }
    void send_frame(const Frame& f) override { tx_->push(encode_frame(f)); }
    Frame recv_frame() override { return decode_frame(rx_->pop()); }

private:
    std::shared_ptr<InprocQueue> tx_, rx_;
};

} // namespace

std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>>
make_inproc_pair() {
    auto ab = std::make_shared<InprocQueue>();
    auto ba = std::make_shared<InprocQueue>();
    return {std::make_unique<InprocTransport>(ab, ba),
            std::make_unique<InprocTransport>(ba, ab)};
}

TcpTransport::~TcpTransport() {
    if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<TcpTransport> TcpTransport::listen_and_accept(std::uint16_t port) {
    int srv = ::socket(AF_INET, SOCK_STREAM, 0);
    if (srv < 0) throw TransportError("socket() failed");
    int one = 1;
    ::setsockopt(srv, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(port);
    if (::bind(srv, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(srv);
        throw TransportError("bind() failed");
    }
    if (::listen(srv, 1) != 0) {
        ::close(srv);
        throw TransportError("listen() failed");
    }
    int fd = ::accept(srv, nullptr, nullptr);
    ::close(srv);
    if (fd < 0) throw TransportError("accept() failed");
    int nd = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &nd, sizeof(nd));
    return std::unique_ptr<TcpTransport>(new TcpTransport(fd));
}

std::unique_ptr<TcpTransport> TcpTransport::connect(const std::string& host,
                                                    std::uint16_t port,
                                                    int retries) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        throw TransportError("inet_pton failed for " + host);
    for (int attempt = 0;; ++attempt) {
        int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) throw TransportError("socket() failed");
        if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) {
            int nd = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &nd, sizeof(nd));
            return std::unique_ptr<TcpTransport>(new TcpTransport(fd));
        }
        ::close(fd);
        if (attempt >= retries) throw TransportError("connect() failed");
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
}

void TcpTransport::send_frame(const Frame& f) {
    std::vector<std::uint8_t> bytes = encode_frame(f);
    std::size_t sent = 0;
    while (sent < bytes.size()) {
        ssize_t k = ::send(fd_, bytes.data() + sent, bytes.size() - sent, 0);
        if (k <= 0) throw TransportError("send() failed");
        sent += static_cast<std::size_t>(k);
    }
}

namespace {

void recv_exact(int fd, std::uint8_t* p, std::size_t len) {
    std::size_t got = 0;
    while (got < len) {
        ssize_t k = ::recv(fd, p + got, len - got, 0);
        if (k <= 0) throw TransportError("recv() failed or peer closed");
        got += static_cast<std::size_t>(k);
    }
}

} // namespace

Frame TcpTransport::recv_frame() {
    std::vector<std::uint8_t> bytes(kFrameHeaderBytes);
    recv_exact(fd_, bytes.data(), kFrameHeaderBytes);
    // Validate the header before trusting the length.
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw MalformedPayload("bad magic");
    if (bytes[4] != kVersion) throw MalformedPayload("unsupported version");
    if (!is_known_msg_type(bytes[5])) throw MalformedPayload("unknown message type");
    std::uint64_t len = 0;
    for (int i = 0; i < 8; ++i)
        len |= static_cast<std::uint64_t>(bytes[6 + i]) << (8 * i);
    if (len > kMaxPayloadBytes) throw MalformedPayload("payload length exceeds cap");
    bytes.resize(kFrameHeaderBytes + len);
    recv_exact(fd_, bytes.data() + kFrameHeaderBytes, len);
    return decode_frame(bytes);
}

std::uint64_t Transcript::total_bytes(Direction dir) const {
    std::uint64_t total = 0;
    for (const TranscriptEntry& e : entries)
        if (e.dir == dir) total += e.bytes;
    return total;
}

std::uint64_t Transcript::total_bytes(Direction dir, MsgType type) const {
    std::uint64_t total = 0;
    for (const TranscriptEntry& e : entries)
        if (e.dir == dir && e.type == type) total += e.bytes;
    return total;
}

void RecordingTransport::send_frame(const Frame& f) {
    inner_->send_frame(f);
    std::vector<std::uint8_t> bytes = encode_frame(f);
    transcript_.content_hash_sent =
        fnv1a(bytes.data(), bytes.size(), transcript_.content_hash_sent);
    transcript_.entries.push_back({Direction::Sent, f.type, bytes.size()});
}

Frame RecordingTransport::recv_frame() {
    Frame f = inner_->recv_frame();
    std::vector<std::uint8_t> bytes = encode_frame(f);
    transcript_.content_hash_recv =
        fnv1a(bytes.data(), bytes.size(), transcript_.content_hash_recv);
    transcript_.entries.push_back({Direction::Received, f.type, bytes.size()});
    return f;
}

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t len, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= data[i];
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace ensei
