#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <unistd.h>

namespace rmgan::test {

// Fresh directory removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
        : path_(std::filesystem::temp_directory_path() / ("rmgan_" + tag + "_" + std::to_string(::getpid()))) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

// True when both trees hold the same relative paths with identical bytes.
inline bool same_tree(const std::filesystem::path& a, const std::filesystem::path& b) {
    std::size_t count = 0;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(a)) {
        const auto rel = std::filesystem::relative(entry.path(), a);
        if (entry.is_regular_file()) {
            ++count;
            if (!std::filesystem::is_regular_file(b / rel) || read_bytes(entry.path()) != read_bytes(b / rel)) {
                return false;
            }
        }
    }
    std::size_t other = 0;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(b)) {
        other += entry.is_regular_file();
    }
    return count == other;
}

}  // namespace rmgan::test
