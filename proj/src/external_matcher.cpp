#include "regbench/external_matcher.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <sstream>

#include "regbench/image_io.hpp"
#include "regbench/rng.hpp"

namespace regbench {

ExternalMatcherSession::ExternalMatcherSession(std::string command, double timeout_seconds)
    : command_(std::move(command)), timeout_seconds_(timeout_seconds) {
    spawn();
}

ExternalMatcherSession::~ExternalMatcherSession() { shutdown(); }

void ExternalMatcherSession::spawn() {
    int to_child[2] = {-1, -1};
    int from_child[2] = {-1, -1};
    if (pipe(to_child) != 0 || pipe(from_child) != 0)
        throw ExternalMatcherFailure("pipe() failed: " + std::string(std::strerror(errno)));

    const pid_t pid = fork();
    if (pid < 0) throw ExternalMatcherFailure("fork() failed");
    if (pid == 0) {
        dup2(to_child[0], STDIN_FILENO);
        dup2(from_child[1], STDOUT_FILENO);
        close(to_child[0]);
        close(to_child[1]);
        close(from_child[0]);
        close(from_child[1]);
        execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    child_pid_ = pid;
    to_child_ = to_child[1];
    from_child_ = from_child[0];
}

void ExternalMatcherSession::shutdown() noexcept {
    if (to_child_ >= 0) {
        close(to_child_);
        to_child_ = -1;
    }
    if (from_child_ >= 0) {
        close(from_child_);
        from_child_ = -1;
    }
    if (child_pid_ > 0) {
        int status = 0;
        // Give the child a moment to exit on EOF, then force it.
        for (int i = 0; i < 50; ++i) {
            if (waitpid(child_pid_, &status, WNOHANG) != 0) {
                child_pid_ = -1;
                return;
            }
            usleep(10000);
        }
        kill(child_pid_, SIGKILL);
        waitpid(child_pid_, &status, 0);
        child_pid_ = -1;
    }
}

std::string ExternalMatcherSession::read_line() {
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration<double>(timeout_seconds_);
    for (;;) {
        const std::size_t newline = read_buffer_.find('\n');
        if (newline != std::string::npos) {
            std::string line = read_buffer_.substr(0, newline);
            read_buffer_.erase(0, newline + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return line;
        }

        const auto remaining = deadline - std::chrono::steady_clock::now();
        const auto remaining_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(remaining).count();
        if (remaining_ms <= 0) throw ExternalMatcherFailure("matcher response timed out");

        pollfd pfd{from_child_, POLLIN, 0};
        const int rc = poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining_ms, 1000)));
        if (rc < 0) throw ExternalMatcherFailure("poll() failed on matcher pipe");
        if (rc == 0) continue;

        char chunk[4096];
        const ssize_t n = read(from_child_, chunk, sizeof(chunk));
        if (n < 0) throw ExternalMatcherFailure("read() failed on matcher pipe");
        if (n == 0) throw ExternalMatcherFailure("matcher closed its output stream");
        read_buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

std::vector<Correspondence> ExternalMatcherSession::match(const std::string& src_png_path,
                                                          const std::string& dst_png_path) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (child_pid_ < 0) throw ExternalMatcherFailure("matcher subprocess is not running");

    const std::uint64_t id = next_id_++;
    std::string request =
        "MATCH " + std::to_string(id) + " " + src_png_path + " " + dst_png_path + "\n";
    std::size_t written = 0;
    while (written < request.size()) {
        const ssize_t n = write(to_child_, request.data() + written, request.size() - written);
        if (n <= 0) throw ExternalMatcherFailure("write() to matcher failed");
        written += static_cast<std::size_t>(n);
    }

    const std::string header = read_line();
    std::istringstream hs(header);
    std::string keyword;
    std::uint64_t echo_id = 0;
    hs >> keyword >> echo_id;
    if (keyword == "ERR") {
        std::string message;
        std::getline(hs, message);
        throw ExternalMatcherFailure("matcher error for request " + std::to_string(id) + ":" +
                                     message);
    }
    long long count = -1;
    hs >> count;
    if (keyword != "BEGIN" || echo_id != id || count < 0 || hs.fail())
        throw ExternalMatcherFailure("malformed matcher header: \"" + header + "\"");

    std::vector<Correspondence> out;
    out.reserve(static_cast<std::size_t>(count));
    for (long long i = 0; i < count; ++i) {
        const std::string line = read_line();
        std::istringstream ls(line);
        Correspondence c;
        ls >> c.src.x >> c.src.y >> c.dst.x >> c.dst.y >> c.confidence;
        if (ls.fail() || !c.src.finite() || !c.dst.finite())
            throw ExternalMatcherFailure("malformed correspondence line: \"" + line + "\"");
        out.push_back(c);
    }

    const std::string footer = read_line();
    if (footer != "END " + std::to_string(id))
        throw ExternalMatcherFailure("malformed matcher footer: \"" + footer + "\"");
    return out;
}

std::vector<Correspondence> match_tiles(const GrayImage& src_tile, const GrayImage& dst_tile,
                                        const MatcherSpec& spec) {
    if (spec.kind == MatcherSpec::Kind::builtin)
        return match_tiles_builtin(src_tile, dst_tile, spec);

    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() /
                         ("regbench_match_" + std::to_string(getpid()) + "_" +
                          std::to_string(hash64(reinterpret_cast<std::uintptr_t>(&spec))));
    fs::create_directories(dir);
    const std::string src_path = (dir / "r0_c0_src.png").string();
    const std::string dst_path = (dir / "r0_c0_dst.png").string();
    write_gray_png(src_path, src_tile);
    write_gray_png(dst_path, dst_tile);
    try {
        ExternalMatcherSession session(spec.external_command);
        auto result = session.match(src_path, dst_path);
        fs::remove_all(dir);
        return result;
    } catch (...) {
        std::error_code ec;
        fs::remove_all(dir, ec);
        throw;
    }
}

}  // namespace regbench
