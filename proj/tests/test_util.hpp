#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "bedrec/raster.hpp"
#include "bedrec/rng.hpp"

namespace testutil {

/// Self-deleting scratch directory.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("bedrec_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string str(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline bedrec::RasterGrid random_grid(int h, int w, std::uint64_t seed, double lo = -1.0,
                                      double hi = 1.0) {
    bedrec::RasterGrid g(h, w);
    bedrec::Rng rng(seed);
    for (double& v : g.values) v = rng.uniform(lo, hi);
    return g;
}

}  // namespace testutil
