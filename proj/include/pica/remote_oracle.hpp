#ifndef PICA_REMOTE_ORACLE_HPP
#define PICA_REMOTE_ORACLE_HPP

#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"

#include "pica/error.hpp"
#include "pica/oracle.hpp"
#include "pica/wire.hpp"

namespace pica {

/// Talks the line protocol to a child process over its stdin/stdout. Strictly
/// serial: one request in flight.
class SubprocessOracle final : public Oracle {
public:
    explicit SubprocessOracle(std::string command, std::chrono::milliseconds timeout = std::chrono::seconds(60))
        : command_(std::move(command)), timeout_(timeout) {
        // A dead child must surface as a TransportError, not kill us on write.
        ::signal(SIGPIPE, SIG_IGN);
        int to_child[2];
        int from_child[2];
        if (::pipe(to_child) != 0) throw TransportError(std::string("pipe: ") + std::strerror(errno));
        if (::pipe(from_child) != 0) {
            ::close(to_child[0]);
            ::close(to_child[1]);
            throw TransportError(std::string("pipe: ") + std::strerror(errno));
        }
        pid_ = ::fork();
        if (pid_ < 0) {
            for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
            throw TransportError(std::string("fork: ") + std::strerror(errno));
        }
        if (pid_ == 0) {
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
            ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
            ::_exit(127);
        }
        ::close(to_child[0]);
        ::close(from_child[1]);
        write_fd_ = to_child[1];
        read_fd_ = from_child[0];
    }

    SubprocessOracle(const SubprocessOracle&) = delete;
    SubprocessOracle& operator=(const SubprocessOracle&) = delete;

    ~SubprocessOracle() override {
        if (write_fd_ >= 0) ::close(write_fd_);
        if (read_fd_ >= 0) ::close(read_fd_);
        if (pid_ > 0) {
            int status = 0;
            for (int i = 0; i < 100; ++i) {
                if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
                std::this_thread::sleep_for(std::chrono::milliseconds(10));
            }
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, &status, 0);
        }
    }

    std::size_t max_concurrency() const noexcept override { return 1; }
    std::string describe() const override { return "subprocess:" + command_; }

protected:
    std::vector<double> query(const Image& image) override {
        std::lock_guard lock(mutex_);
        const auto id = next_id_++;
        write_all(wire::encode_request(id, image) + "\n");
        return wire::decode_reply(read_line(), id);
    }

private:
    void write_all(const std::string& data) {
        std::size_t done = 0;
        while (done < data.size()) {
            const auto n = ::write(write_fd_, data.data() + done, data.size() - done);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw TransportError("writing to oracle subprocess failed: " + std::string(std::strerror(errno)));
            }
            done += static_cast<std::size_t>(n);
        }
    }

    std::string read_line() {
        while (true) {
            if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                return line;
            }
            pollfd pfd{read_fd_, POLLIN, 0};
            const int ready = ::poll(&pfd, 1, static_cast<int>(timeout_.count()));
            if (ready == 0) throw TransportError("oracle subprocess timed out");
            if (ready < 0) {
                if (errno == EINTR) continue;
                throw TransportError(std::string("poll: ") + std::strerror(errno));
            }
            char chunk[65536];
            const auto n = ::read(read_fd_, chunk, sizeof chunk);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw TransportError(std::string("reading from oracle subprocess failed: ") + std::strerror(errno));
            }
            if (n == 0) {
                if (!buffer_.empty()) throw ProtocolError("oracle subprocess closed mid-reply (truncated line)");
                throw TransportError("oracle subprocess closed its output");
            }
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    std::string command_;
    std::chrono::milliseconds timeout_;
    pid_t pid_ = -1;
    int write_fd_ = -1;
    int read_fd_ = -1;
    std::string buffer_;
    std::uint64_t next_id_ = 1;
    std::mutex mutex_;
};

/// POSTs wire-protocol bodies to <base_url>/classify.
class HttpOracle final : public Oracle {
public:
    explicit HttpOracle(std::string base_url, std::size_t max_in_flight = 4,
                        std::chrono::milliseconds timeout = std::chrono::seconds(30))
        : base_url_(std::move(base_url)), max_in_flight_(max_in_flight == 0 ? 1 : max_in_flight), timeout_(timeout) {
        while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
    }

    std::size_t max_concurrency() const noexcept override { return max_in_flight_; }
    std::string describe() const override { return base_url_; }

protected:
    std::vector<double> query(const Image& image) override {
        const auto id = next_id_.fetch_add(1);
        httplib::Client client(base_url_);
        client.set_connection_timeout(timeout_);
        client.set_read_timeout(timeout_);
        client.set_write_timeout(timeout_);
        auto res = client.Post("/classify", wire::encode_request(id, image), "application/json");
        if (!res) {
            throw TransportError("HTTP oracle " + base_url_ + " unreachable: " + httplib::to_string(res.error()));
        }
        if (res->status != 200) {
            const auto body = nlohmann::json::parse(res->body, nullptr, false);
            if (body.is_object() && body.contains("error") && body["error"].is_string()) {
                throw OracleError("HTTP oracle returned status " + std::to_string(res->status) + ": " +
                                  body["error"].get<std::string>());
            }
            throw TransportError("HTTP oracle returned status " + std::to_string(res->status));
        }
        return wire::decode_reply(res->body, id);
    }

private:
    std::string base_url_;
    std::size_t max_in_flight_;
    std::chrono::milliseconds timeout_;
    std::atomic<std::uint64_t> next_id_{1};
};

} // namespace pica

#endif // PICA_REMOTE_ORACLE_HPP
