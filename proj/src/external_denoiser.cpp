#include "nsmi/external_denoiser.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <sys/wait.h>
#include <unistd.h>

#include "nsmi/errors.hpp"

namespace nsmi {

namespace {

std::string errno_text() { return std::strerror(errno); }

int connect_unix(const std::string& path) {
    sockaddr_un addr{};
    if (path.size() >= sizeof(addr.sun_path)) throw ConnectionError("unix socket path too long");
    addr.sun_family = AF_UNIX;
    std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
    const int fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) throw ConnectionError("socket: " + errno_text());
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        const std::string msg = errno_text();
        ::close(fd);
        throw ConnectionError("connect unix:" + path + ": " + msg);
    }
    return fd;
}

int connect_tcp(const std::string& host, const std::string& port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0) {
        throw ConnectionError("resolve " + host + ":" + port + ": " + ::gai_strerror(rc));
    }
    int fd = -1;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw ConnectionError("connect tcp " + host + ":" + port + " failed");
    return fd;
}

std::pair<std::string, std::string> split_host_port(const std::string& s) {
    const auto colon = s.rfind(':');
    if (colon == std::string::npos) throw ConnectionError("endpoint '" + s + "' lacks a port");
    return {s.substr(0, colon), s.substr(colon + 1)};
}

}  // namespace

FdStream::FdStream(int read_fd, int write_fd, pid_t child)
    : read_fd_(read_fd), write_fd_(write_fd), child_(child) {}

FdStream::~FdStream() {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (child_ > 0) {
        int status = 0;
        // Closing stdin normally ends the server; give it a moment before SIGTERM.
        for (int i = 0; i < 50; ++i) {
            if (::waitpid(child_, &status, WNOHANG) == child_) return;
            ::usleep(10000);
        }
        ::kill(child_, SIGTERM);
        ::waitpid(child_, &status, 0);
    }
}

void FdStream::wait_ready(int fd, short events) {
    pollfd p{fd, events, 0};
    for (;;) {
        const int rc = ::poll(&p, 1, static_cast<int>(timeout_.count()));
        if (rc > 0) return;
        if (rc == 0) {
            throw TimeoutError("no response from denoiser within " +
                               std::to_string(timeout_.count()) + " ms");
        }
        if (errno != EINTR) throw ConnectionError("poll: " + errno_text());
    }
}

void FdStream::read_exact(std::span<std::uint8_t> out) {
    std::size_t got = 0;
    while (got < out.size()) {
        wait_ready(read_fd_, POLLIN);
        const ssize_t n = ::read(read_fd_, out.data() + got, out.size() - got);
        if (n == 0) {
            throw ConnectionError("connection closed after " + std::to_string(got) + " of " +
                                  std::to_string(out.size()) + " bytes");
        }
        if (n < 0) {
            if (errno == EINTR || errno == EAGAIN) continue;
            throw ConnectionError("read: " + errno_text());
        }
        got += static_cast<std::size_t>(n);
    }
}

void FdStream::write_all(std::span<const std::uint8_t> bytes) {
    std::size_t sent = 0;
    while (sent < bytes.size()) {
        wait_ready(write_fd_, POLLOUT);
        const ssize_t n = ::send(write_fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
        if (n < 0 && errno == ENOTSOCK) {
            const ssize_t w = ::write(write_fd_, bytes.data() + sent, bytes.size() - sent);
            if (w < 0) {
                if (errno == EINTR || errno == EAGAIN) continue;
                throw ConnectionError("write: " + errno_text());
            }
            sent += static_cast<std::size_t>(w);
            continue;
        }
        if (n < 0) {
            if (errno == EINTR || errno == EAGAIN) continue;
            throw ConnectionError("send: " + errno_text());
        }
        sent += static_cast<std::size_t>(n);
    }
}

std::unique_ptr<FdStream> FdStream::connect(const std::string& endpoint) {
    if (endpoint.rfind("unix:", 0) == 0) {
        const int fd = connect_unix(endpoint.substr(5));
        return std::make_unique<FdStream>(fd, fd);
    }
    if (endpoint.rfind("exec:", 0) == 0) {
        const std::string cmd = endpoint.substr(5);
        int to_child[2];
        int from_child[2];
        if (::pipe2(to_child, O_CLOEXEC) != 0 || ::pipe2(from_child, O_CLOEXEC) != 0) {
            throw ConnectionError("pipe: " + errno_text());
        }
        // Writes to a dead child must surface as errors, not kill the sampler.
        std::signal(SIGPIPE, SIG_IGN);
        const pid_t pid = ::fork();
        if (pid < 0) throw ConnectionError("fork: " + errno_text());
        if (pid == 0) {
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
            ::_exit(127);
        }
        ::close(to_child[0]);
        ::close(from_child[1]);
        return std::make_unique<FdStream>(from_child[0], to_child[1], pid);
    }
    std::string rest = endpoint.rfind("tcp:", 0) == 0 ? endpoint.substr(4) : endpoint;
    auto [host, port] = split_host_port(rest);
    const int fd = connect_tcp(host.empty() ? "127.0.0.1" : host, port);
    return std::make_unique<FdStream>(fd, fd);
}

ExternalDenoiser::ExternalDenoiser(std::unique_ptr<FdStream> stream) : stream_(std::move(stream)) {
    if (!stream_) throw ConnectionError("external denoiser: null stream");
}

ExternalDenoiser::ExternalDenoiser(const std::string& endpoint)
    : ExternalDenoiser(FdStream::connect(endpoint)) {}

Image ExternalDenoiser::predict_eps(const Image& x_t, int t, const ConditionImage* condition) {
    if (t < 0) throw ParameterError("external denoiser: negative timestep");
    protocol::Request req;
    req.t = static_cast<std::uint32_t>(t);
    req.height = static_cast<std::uint32_t>(x_t.height());
    req.width = static_cast<std::uint32_t>(x_t.width());
    req.x_t.assign(x_t.pixels().begin(), x_t.pixels().end());
    if (condition) {
        if (!condition->image.same_shape(x_t)) {
            throw ShapeError("condition image does not match sample dimensions");
        }
        req.condition.emplace(condition->image.pixels().begin(), condition->image.pixels().end());
    }
    stream_->write_all(protocol::encode_request(req));
    protocol::Response resp = protocol::read_response(*stream_, x_t.size());
    if (!resp.ok) throw RemoteError("denoiser reported error: " + resp.error);

    Image eps(x_t.height(), x_t.width(), 0.0, x_t.range());
    for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = static_cast<double>(resp.eps[i]);
    return eps;
}

Image external_predict_eps(ExternalDenoiser& client, const Image& x_t, int t,
                           const ConditionImage* condition) {
    return client.predict_eps(x_t, t, condition);
}

void serve_stream(FdStream& stream, const RequestHandler& handler) {
    stream.set_timeout(std::chrono::milliseconds(-1));
    for (;;) {
        protocol::Request req;
        try {
            req = protocol::read_request(stream);
        } catch (const ConnectionError&) {
            return;  // peer closed
        } catch (const TimeoutError&) {
            return;
        } catch (const ProtocolError& e) {
            protocol::Response err{false, {}, e.what()};
            try {
                stream.write_all(protocol::encode_response(err));
            } catch (const DenoiserError&) {
            }
            return;
        }
        protocol::Response resp;
        try {
            resp.eps = handler(req);
            if (resp.eps.size() != req.x_t.size()) throw ShapeError("handler output size mismatch");
        } catch (const std::exception& e) {
            resp = protocol::Response{false, {}, e.what()};
        }
        try {
            stream.write_all(protocol::encode_response(resp));
        } catch (const DenoiserError&) {
            return;
        }
    }
}

void serve_listen(const std::string& endpoint, const RequestHandler& handler,
                  int max_connections) {
    int fd = -1;
    if (endpoint.rfind("unix:", 0) == 0) {
        const std::string path = endpoint.substr(5);
        sockaddr_un addr{};
        if (path.size() >= sizeof(addr.sun_path)) throw ConnectionError("unix socket path too long");
        addr.sun_family = AF_UNIX;
        std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
        ::unlink(path.c_str());
        fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
        if (fd < 0 || ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
            const std::string msg = errno_text();
            if (fd >= 0) ::close(fd);
            throw ConnectionError("bind " + endpoint + ": " + msg);
        }
    } else {
        std::string rest = endpoint.rfind("tcp:", 0) == 0 ? endpoint.substr(4) : endpoint;
        const auto colon = rest.rfind(':');
        const std::string port = colon == std::string::npos ? rest : rest.substr(colon + 1);
        addrinfo hints{};
        hints.ai_family = AF_INET;
        hints.ai_socktype = SOCK_STREAM;
        hints.ai_flags = AI_PASSIVE;
        addrinfo* res = nullptr;
        if (::getaddrinfo("127.0.0.1", port.c_str(), &hints, &res) != 0 || !res) {
            throw ConnectionError("cannot resolve listen port " + port);
        }
        fd = ::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, res->ai_protocol);
        const int one = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        const bool ok = fd >= 0 && ::bind(fd, res->ai_addr, res->ai_addrlen) == 0;
        const std::string msg = errno_text();
        ::freeaddrinfo(res);
        if (!ok) {
            if (fd >= 0) ::close(fd);
            throw ConnectionError("bind " + endpoint + ": " + msg);
        }
    }
    if (::listen(fd, 4) != 0) {
        ::close(fd);
        throw ConnectionError("listen: " + errno_text());
    }
    std::signal(SIGPIPE, SIG_IGN);
    for (int served = 0; max_connections <= 0 || served < max_connections; ++served) {
        const int conn = ::accept4(fd, nullptr, nullptr, SOCK_CLOEXEC);
        if (conn < 0) {
            if (errno == EINTR) continue;
            ::close(fd);
            throw ConnectionError("accept: " + errno_text());
        }
        FdStream stream(conn, conn);
        serve_stream(stream, handler);
    }
    ::close(fd);
}

}  // namespace nsmi
