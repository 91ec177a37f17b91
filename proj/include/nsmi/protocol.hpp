#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nsmi::protocol {

// Denoiser wire protocol v1. All integers and floats little-endian.
//
// Request : "NSMI" | version u8 | msg_type u8 = 1 | t u32 | n_channels u8 |
//           height u32 | width u32 | n_channels * H * W f32
//           (channel 0 = x_t, channel 1 = condition)
// Response: "NSMI" | version u8 | msg_type u8 = 2 | status u8 |
//           status 0: H * W f32 (eps_hat)
//           status 1: u32 length + UTF-8 message

inline constexpr std::uint8_t kMagic[4] = {'N', 'S', 'M', 'I'};
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::uint8_t kRequestType = 1;
inline constexpr std::uint8_t kResponseType = 2;
inline constexpr std::uint8_t kStatusOk = 0;
inline constexpr std::uint8_t kStatusError = 1;
inline constexpr std::size_t kRequestHeaderSize = 4 + 1 + 1 + 4 + 1 + 4 + 4;
inline constexpr std::size_t kResponseHeaderSize = 4 + 1 + 1 + 1;
/// Upper bound on H * W accepted by decoders (guards allocations on garbage headers).
inline constexpr std::uint64_t kMaxPixels = 1ull << 26;
inline constexpr std::uint32_t kMaxErrorLength = 1u << 20;

struct Request {
    std::uint32_t t = 0;
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<float> x_t;
    std::optional<std::vector<float>> condition;
};

struct Response {
    bool ok = true;
    std::vector<float> eps;
    std::string error;
};

/// Pulls exactly `n` bytes or throws (ConnectionError / TimeoutError).
class ByteSource {
public:
    virtual ~ByteSource() = default;
    virtual void read_exact(std::span<std::uint8_t> out) = 0;
};

std::vector<std::uint8_t> encode_request(const Request& req);
std::vector<std::uint8_t> encode_response(const Response& resp);

/// Decoders validate magic, version and message type and throw ProtocolError
/// quoting the offending bytes in hex.
Request read_request(ByteSource& src);
/// `pixels` is H * W of the request being answered.
Response read_response(ByteSource& src, std::size_t pixels);

Request decode_request(std::span<const std::uint8_t> bytes);
Response decode_response(std::span<const std::uint8_t> bytes, std::size_t pixels);

std::string hex_dump(std::span<const std::uint8_t> bytes);

}  // namespace nsmi::protocol
