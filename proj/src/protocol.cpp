#include "nsmi/protocol.hpp"

#include <bit>
#include <cstring>

#include "nsmi/errors.hpp"

namespace nsmi::protocol {

static_assert(std::endian::native == std::endian::little,
              "wire encoding assumes a little-endian host");

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void put_floats(std::vector<std::uint8_t>& out, const std::vector<float>& v) {
    const std::size_t at = out.size();
    out.resize(at + v.size() * sizeof(float));
    std::memcpy(out.data() + at, v.data(), v.size() * sizeof(float));
}

std::vector<float> read_floats(ByteSource& src, std::size_t count) {
    std::vector<float> v(count);
    std::span<std::uint8_t> raw(reinterpret_cast<std::uint8_t*>(v.data()), count * sizeof(float));
    src.read_exact(raw);
    return v;
}

void check_preamble(std::span<const std::uint8_t> head, std::uint8_t expected_type) {
    if (std::memcmp(head.data(), kMagic, 4) != 0) {
        throw ProtocolError("bad magic: got " + hex_dump(head.first(4)) + ", expected 4e 53 4d 49");
    }
    if (head[4] != kVersion) {
        throw ProtocolError("unsupported protocol version " + std::to_string(head[4]) +
                            " (header " + hex_dump(head) + ")");
    }
    if (head[5] != expected_type) {
        throw ProtocolError("unexpected message type " + std::to_string(head[5]) + ", expected " +
                            std::to_string(expected_type) + " (header " + hex_dump(head) + ")");
    }
}

class SpanSource final : public ByteSource {
public:
    explicit SpanSource(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    void read_exact(std::span<std::uint8_t> out) override {
        if (pos_ + out.size() > bytes_.size()) throw ProtocolError("truncated message");
        std::memcpy(out.data(), bytes_.data() + pos_, out.size());
        pos_ += out.size();
    }

    bool exhausted() const noexcept { return pos_ == bytes_.size(); }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string hex_dump(std::span<const std::uint8_t> bytes) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        if (i) s += ' ';
        s += digits[bytes[i] >> 4];
        s += digits[bytes[i] & 0xf];
    }
    return s;
}

std::vector<std::uint8_t> encode_request(const Request& req) {
    const std::size_t pixels = static_cast<std::size_t>(req.height) * req.width;
    if (req.x_t.size() != pixels) throw ShapeError("request x_t does not match height*width");
    if (req.condition && req.condition->size() != pixels) {
        throw ShapeError("request condition does not match height*width");
    }
    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    out.reserve(kRequestHeaderSize + 2 * pixels * sizeof(float));
    out.push_back(kVersion);
    out.push_back(kRequestType);
    put_u32(out, req.t);
    out.push_back(req.condition ? 2 : 1);
    put_u32(out, req.height);
    put_u32(out, req.width);
    put_floats(out, req.x_t);
    if (req.condition) put_floats(out, *req.condition);
    return out;
}

std::vector<std::uint8_t> encode_response(const Response& resp) {
    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    out.push_back(kVersion);
    out.push_back(kResponseType);
    if (resp.ok) {
        out.push_back(kStatusOk);
        put_floats(out, resp.eps);
    } else {
        out.push_back(kStatusError);
        put_u32(out, static_cast<std::uint32_t>(resp.error.size()));
        out.insert(out.end(), resp.error.begin(), resp.error.end());
    }
    return out;
}

Request read_request(ByteSource& src) {
    std::uint8_t head[kRequestHeaderSize];
    src.read_exact(head);
    check_preamble(std::span<const std::uint8_t>(head, kRequestHeaderSize), kRequestType);
    Request req;
    req.t = get_u32(head + 6);
    const std::uint8_t channels = head[10];
    req.height = get_u32(head + 11);
    req.width = get_u32(head + 15);
    if (channels != 1 && channels != 2) {
        throw ProtocolError("n_channels must be 1 or 2, got " + std::to_string(channels) +
                            " (header " + hex_dump(head) + ")");
    }
    const std::uint64_t pixels = static_cast<std::uint64_t>(req.height) * req.width;
    if (pixels == 0 || pixels > kMaxPixels) {
        throw ProtocolError("implausible image size " + std::to_string(req.height) + "x" +
                            std::to_string(req.width) + " (header " + hex_dump(head) + ")");
    }
    req.x_t = read_floats(src, pixels);
    if (channels == 2) req.condition = read_floats(src, pixels);
    return req;
}

Response read_response(ByteSource& src, std::size_t pixels) {
    std::uint8_t head[kResponseHeaderSize];
    src.read_exact(head);
    check_preamble(std::span<const std::uint8_t>(head, kResponseHeaderSize), kResponseType);
    Response resp;
    if (head[6] == kStatusOk) {
        resp.eps = read_floats(src, pixels);
        return resp;
    }
    if (head[6] != kStatusError) {
        throw ProtocolError("unknown status byte " + std::to_string(head[6]) + " (header " +
                            hex_dump(head) + ")");
    }
    std::uint8_t len_bytes[4];
    src.read_exact(len_bytes);
    const std::uint32_t len = get_u32(len_bytes);
    if (len > kMaxErrorLength) {
        throw ProtocolError("error message length " + std::to_string(len) + " too large (bytes " +
                            hex_dump(len_bytes) + ")");
    }
    resp.ok = false;
    resp.error.resize(len);
    src.read_exact(std::span<std::uint8_t>(reinterpret_cast<std::uint8_t*>(resp.error.data()), len));
    return resp;
}

Request decode_request(std::span<const std::uint8_t> bytes) {
    SpanSource src(bytes);
    Request req = read_request(src);
    if (!src.exhausted()) throw ProtocolError("trailing bytes after request");
    return req;
}

Response decode_response(std::span<const std::uint8_t> bytes, std::size_t pixels) {
    SpanSource src(bytes);
    Response resp = read_response(src, pixels);
    if (!src.exhausted()) throw ProtocolError("trailing bytes after response");
    return resp;
}

}  // namespace nsmi::protocol
