#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace tri {

/// Entry point of the `tri` executable. Returns 0 on success, 2 on a usage
/// error and 1 on a runtime failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct BenchConfig {
    int size = 128;
    int n_coarse = 48;
    int n_fine = 48;
    std::vector<int> threads{1};
    int repeats = 1;
    std::uint64_t seed = 0;
    int resolution = 64;
    int channels = 32;
};

struct BenchRow {
    int threads = 1;
    double seconds = 0;       // best of `repeats`
    double pixels_per_second = 0;
    double speedup = 1;       // relative to the first row
};

/// Renders a random triplane with the default decoder at size x size for
/// each thread count.
std::vector<BenchRow> run_bench(const BenchConfig& cfg);

} // namespace tri
