#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

namespace dsagent {

/// Ordered JSON-lines record of a run: exchanges, executions, permutations, retains.
///
/// Only run-invariant fields go in (no timestamps, durations or absolute paths), so a
/// replayed run writes a byte-identical file. Each record carries `"seq"` and, once a
/// loop step is active, `"step"`. Lines are flushed as written, so an aborted run
/// leaves a readable partial trace.
class TraceSink {
public:
    TraceSink() = default;
    explicit TraceSink(const std::filesystem::path& path);

    void write(std::string_view type, nlohmann::json fields);

    void set_step(int step) { step_ = step; }
    int step() const { return step_; }

    const std::vector<nlohmann::json>& records() const { return records_; }
    std::size_t count(std::string_view type) const;
    std::size_t count(std::string_view type, std::string_view role) const;

private:
    std::mutex mu_;
    std::ofstream out_;
    std::vector<nlohmann::json> records_;
    int step_ = 0;
};

}  // namespace dsagent
