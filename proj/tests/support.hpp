#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "tri/decoder.hpp"
#include "tri/rng.hpp"
#include "tri/triplane.hpp"

namespace tri::test_support {

/// Directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("tri_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline TriplaneGrid random_grid(int resolution, int channels, double box_scale, std::uint64_t seed, double sd = 0.5) {
    Rng rng(seed);
    TriplaneGrid g(resolution, channels, box_scale);
    for (float& v : g.values()) v = static_cast<float>(rng.normal(0.0, sd));
    return g;
}

/// Runs `program args...` through the shell with stdout and stderr sent to
/// files; returns the exit status, or -1 if the process did not exit normally.
inline int run_process(const std::string& program, const std::vector<std::string>& args,
                       const std::filesystem::path& stdout_path, const std::filesystem::path& stderr_path) {
    const auto quote = [](const std::string& s) {
        std::string q = "'";
        for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
        return q + "'";
    };
    std::string cmd = quote(program);
    for (const auto& a : args) cmd += " " + quote(a);
    cmd += " >" + quote(stdout_path.string()) + " 2>" + quote(stderr_path.string());
    const int status = std::system(cmd.c_str());
    if (status == -1 || !WIFEXITED(status)) return -1;
    return WEXITSTATUS(status);
}

} // namespace tri::test_support
