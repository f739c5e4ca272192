#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include "regbench/image.hpp"
#include "regbench/matching.hpp"
#include "regbench/types.hpp"

namespace regbench {

// Persistent matcher subprocess speaking the line protocol over its standard
// streams:
//   request:  MATCH <id> <src_png_path> <dst_png_path>\n
//   response: BEGIN <id> <count>\n  then count lines "x0 y0 x1 y1 conf\n"
//             then END <id>\n
//   error:    ERR <id> <message>\n
// Requests are serialized; responses correlate to requests by sequence id.
// Any protocol violation, nonzero exit, or timeout raises
// ExternalMatcherFailure.
class ExternalMatcherSession {
public:
    explicit ExternalMatcherSession(std::string command, double timeout_seconds = 120.0);
    ~ExternalMatcherSession();

    ExternalMatcherSession(const ExternalMatcherSession&) = delete;
    ExternalMatcherSession& operator=(const ExternalMatcherSession&) = delete;

    std::vector<Correspondence> match(const std::string& src_png_path,
                                      const std::string& dst_png_path);

    const std::string& command() const { return command_; }

private:
    void spawn();
    void shutdown() noexcept;
    std::string read_line();

    std::string command_;
    double timeout_seconds_;
    std::mutex mutex_;
    std::uint64_t next_id_ = 1;
    int child_pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string read_buffer_;
};

// One-shot external match: writes the tiles as temporary PNGs, runs a
// throwaway session, and cleans up. Dispatches to the builtin matcher for
// builtin specs, so any MatcherSpec satisfies the same contract.
std::vector<Correspondence> match_tiles(const GrayImage& src_tile, const GrayImage& dst_tile,
                                        const MatcherSpec& spec);

}  // namespace regbench
