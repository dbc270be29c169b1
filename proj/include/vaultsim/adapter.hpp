// External-agent wire protocol. Each invocation sends one frame:
//
//   VSIM1 <brief_bytes> <sidecar_bytes>\n
//   <rendered brief><structured sidecar JSON>
//
// and reads back exactly one action line. Transport is the stdin/stdout of a
// persistent child process or a local TCP socket. A timed-out agent records
// Observe(timeout); its transport is torn down and respawned on the next
// invocation. Wall-clock timeouts make external runs exempt from the
// byte-determinism contract.
#pragma once

#include <cerrno>
#include <csignal>
#include <cstring>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "vaultsim/amount.hpp"

namespace vaultsim {

inline std::string frame_adapter_request(const std::string& brief_text,
                                         const std::string& sidecar_json) {
    std::string out = "VSIM1 " + std::to_string(brief_text.size()) + " " +
                      std::to_string(sidecar_json.size()) + "\n";
    out += brief_text;
    out += sidecar_json;
    return out;
}

struct AdapterFrame {
    std::string brief_text;
    std::string sidecar_json;
};

// Parses a frame from a buffer; used by test harness agents and servers.
inline std::optional<AdapterFrame> parse_adapter_request(const std::string& buf) {
    if (buf.rfind("VSIM1 ", 0) != 0) return std::nullopt;
    std::size_t nl = buf.find('\n');
    if (nl == std::string::npos) return std::nullopt;
    std::size_t a = 6, sp = buf.find(' ', a);
    if (sp == std::string::npos || sp > nl) return std::nullopt;
    std::size_t brief_len = std::stoull(buf.substr(a, sp - a));
    std::size_t sidecar_len = std::stoull(buf.substr(sp + 1, nl - sp - 1));
    if (buf.size() < nl + 1 + brief_len + sidecar_len) return std::nullopt;
    AdapterFrame f;
    f.brief_text = buf.substr(nl + 1, brief_len);
    f.sidecar_json = buf.substr(nl + 1 + brief_len, sidecar_len);
    return f;
}

namespace adapter_detail {

inline bool write_all(int fd, const char* data, std::size_t len) {
    while (len) {
        ssize_t n = ::write(fd, data, len);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        data += n;
        len -= std::size_t(n);
    }
    return true;
}

// Reads until '\n' or deadline; returns the line without the newline.
inline std::optional<std::string> read_line(int fd, i64 timeout_ms) {
    std::string line;
    i64 remaining = timeout_ms;
    while (true) {
        pollfd p{fd, POLLIN, 0};
        int pr = ::poll(&p, 1, int(remaining < 0 ? 0 : remaining));
        if (pr <= 0) return std::nullopt; // timeout or error
        char chunk[512];
        ssize_t n = ::read(fd, chunk, sizeof chunk);
        if (n <= 0) return std::nullopt; // eof/error
        for (ssize_t i = 0; i < n; ++i) {
            if (chunk[i] == '\n') return line;
            line.push_back(chunk[i]);
            if (line.size() > 1 << 20) return std::nullopt;
        }
    }
}

} // namespace adapter_detail

class AdapterTransport {
public:
    virtual ~AdapterTransport() = default;
    virtual bool alive() const = 0;
    // nullopt on timeout or transport failure; the caller tears this
    // transport down afterwards.
    virtual std::optional<std::string> request(const std::string& frame, i64 timeout_ms) = 0;
};

class ChildProcessTransport : public AdapterTransport {
public:
    explicit ChildProcessTransport(const std::vector<std::string>& argv) { spawn(argv); }

    ~ChildProcessTransport() override { shutdown(); }

    bool alive() const override { return pid_ > 0; }

    std::optional<std::string> request(const std::string& frame, i64 timeout_ms) override {
        if (!alive()) return std::nullopt;
        if (!adapter_detail::write_all(to_child_, frame.data(), frame.size())) {
            shutdown();
            return std::nullopt;
        }
        auto line = adapter_detail::read_line(from_child_, timeout_ms);
        if (!line) shutdown();
        return line;
    }

private:
    void spawn(const std::vector<std::string>& argv) {
        if (argv.empty()) return;
        int in_pipe[2], out_pipe[2];
        if (::pipe(in_pipe) != 0) return;
        if (::pipe(out_pipe) != 0) {
            ::close(in_pipe[0]);
            ::close(in_pipe[1]);
            return;
        }
        pid_t pid = ::fork();
        if (pid < 0) return;
        if (pid == 0) {
            ::dup2(in_pipe[0], STDIN_FILENO);
            ::dup2(out_pipe[1], STDOUT_FILENO);
            ::close(in_pipe[0]);
            ::close(in_pipe[1]);
            ::close(out_pipe[0]);
            ::close(out_pipe[1]);
            std::vector<char*> cargv;
            for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
            cargv.push_back(nullptr);
            ::execvp(cargv[0], cargv.data());
            ::_exit(127);
        }
        ::close(in_pipe[0]);
        ::close(out_pipe[1]);
        pid_ = pid;
        to_child_ = in_pipe[1];
        from_child_ = out_pipe[0];
    }

    void shutdown() {
        if (to_child_ >= 0) ::close(to_child_);
        if (from_child_ >= 0) ::close(from_child_);
        to_child_ = from_child_ = -1;
        if (pid_ > 0) {
            ::kill(pid_, SIGKILL);
            int status = 0;
            ::waitpid(pid_, &status, 0);
            pid_ = -1;
        }
    }

    pid_t pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
};

class SocketTransport : public AdapterTransport {
public:
    SocketTransport(const std::string& host, int port) { connect_to(host, port); }

    ~SocketTransport() override { shutdown(); }

    bool alive() const override { return fd_ >= 0; }

    std::optional<std::string> request(const std::string& frame, i64 timeout_ms) override {
        if (!alive()) return std::nullopt;
        if (!adapter_detail::write_all(fd_, frame.data(), frame.size())) {
            shutdown();
            return std::nullopt;
        }
        auto line = adapter_detail::read_line(fd_, timeout_ms);
        if (!line) shutdown();
        return line;
    }

private:
    void connect_to(const std::string& host, int port) {
        int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) return;
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(uint16_t(port));
        if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1 ||
            ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
            ::close(fd);
            return;
        }
        fd_ = fd;
    }

    void shutdown() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

    int fd_ = -1;
};

// One transport per vault, lazily (re)spawned.
class AdapterManager {
public:
    struct Endpoint {
        std::vector<std::string> command; // child process when non-empty
        std::string host;                 // else TCP
        int port = 0;
        i64 timeout_ms = 2000;
    };

    void configure(u64 vault_id, Endpoint ep) { endpoints_[vault_id] = std::move(ep); }

    // nullopt means timeout/failure; caller records Observe(timeout).
    std::optional<std::string> request(u64 vault_id, const std::string& brief_text,
                                       const std::string& sidecar_json) {
        auto eit = endpoints_.find(vault_id);
        if (eit == endpoints_.end()) return std::nullopt;
        auto& slot = transports_[vault_id];
        if (!slot || !slot->alive()) {
            if (!eit->second.command.empty())
                slot = std::make_unique<ChildProcessTransport>(eit->second.command);
            else
                slot = std::make_unique<SocketTransport>(eit->second.host, eit->second.port);
        }
        auto reply =
            slot->request(frame_adapter_request(brief_text, sidecar_json), eit->second.timeout_ms);
        if (!reply) slot.reset(); // respawn on the next invocation
        return reply;
    }

private:
    std::map<u64, Endpoint> endpoints_;
    std::map<u64, std::unique_ptr<AdapterTransport>> transports_;
};

} // namespace vaultsim
