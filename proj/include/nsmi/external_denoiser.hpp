#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>

#include <sys/types.h>

#include "nsmi/denoiser.hpp"
#include "nsmi/protocol.hpp"

namespace nsmi {

/// Bidirectional byte stream over file descriptors (socket or pipe pair).
/// Owns the descriptors and, for `exec:` endpoints, the child process.
class FdStream final : public protocol::ByteSource {
public:
    FdStream(int read_fd, int write_fd, pid_t child = -1);
    ~FdStream() override;
    FdStream(const FdStream&) = delete;
    FdStream& operator=(const FdStream&) = delete;

    /// Per-read/write deadline; a negative value waits indefinitely.
    void set_timeout(std::chrono::milliseconds timeout) { timeout_ = timeout; }

    void read_exact(std::span<std::uint8_t> out) override;
    void write_all(std::span<const std::uint8_t> bytes);

    /// Accepted forms: "unix:/path", "tcp:host:port", "host:port",
    /// "exec:<shell command>" (protocol over the child's stdin/stdout).
    static std::unique_ptr<FdStream> connect(const std::string& endpoint);

private:
    void wait_ready(int fd, short events);

    int read_fd_;
    int write_fd_;
    pid_t child_;
    std::chrono::milliseconds timeout_{30000};
};

/// Client side of the denoiser wire protocol: one request in flight per connection.
class ExternalDenoiser final : public Denoiser {
public:
    explicit ExternalDenoiser(std::unique_ptr<FdStream> stream);
    explicit ExternalDenoiser(const std::string& endpoint);

    Image predict_eps(const Image& x_t, int t, const ConditionImage* condition) override;

    FdStream& stream() noexcept { return *stream_; }

private:
    std::unique_ptr<FdStream> stream_;
};

/// Free-function form of ExternalDenoiser::predict_eps.
Image external_predict_eps(ExternalDenoiser& client, const Image& x_t, int t,
                           const ConditionImage* condition);

/// Server side: answers requests on `stream` until the peer closes it.
/// Handler exceptions become status-1 responses; framing errors end the loop.
using RequestHandler = std::function<std::vector<float>(const protocol::Request&)>;
void serve_stream(FdStream& stream, const RequestHandler& handler);

/// Accept loop on a listening endpoint ("unix:/path" or "tcp:port"), one
/// connection at a time. Returns after `max_connections` connections when > 0.
void serve_listen(const std::string& endpoint, const RequestHandler& handler,
                  int max_connections = 0);

}  // namespace nsmi
