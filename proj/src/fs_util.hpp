#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace dsagent::detail {

/// RAII flock(2) on a lock file, created on demand.
class FileLock {
public:
    enum class Mode { shared, exclusive };

    FileLock(const std::filesystem::path& path, Mode mode, bool wait = true);
    ~FileLock();
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

    /// False when `wait` was false and another holder had the lock.
    bool held() const { return fd_ >= 0; }

private:
    int fd_ = -1;
};

std::string read_file(const std::filesystem::path& path);

/// Writes `<path>.tmp`, fsyncs it, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Writes `<path>.tmp` and fsyncs it without renaming; returns the temp path.
std::filesystem::path write_temp(const std::filesystem::path& path, std::string_view contents);

void write_file(const std::filesystem::path& path, std::string_view contents);

std::string sha256_hex(std::string_view data);

}  // namespace dsagent::detail
