#pragma once

// Shared helpers for the unit tests: error-code capture, scratch directories,
// and small random input builders.

#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hwcl/embedding.hpp"
#include "hwcl/error.hpp"
#include "hwcl/matrix.hpp"

namespace support {

// Runs fn, which must throw hwcl::Error, and returns its code.
template <typename Fn>
hwcl::ErrorCode code_of(Fn&& fn) {
    try {
        fn();
    } catch (const hwcl::Error& e) {
        return e.code();
    }
    FAIL("expected an hwcl::Error");
    return hwcl::ErrorCode::IoError;
}

// Unique scratch directory, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::uint64_t counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("hwcl_test_" + std::to_string(++counter) + "_" +
                std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }

    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline hwcl::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                  double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    hwcl::Matrix m(rows, cols);
    for (double& v : m.data) v = scale * unit(rng);
    return m;
}

// Paired batch of random unit-Gaussian embeddings; positives on the diagonal.
inline hwcl::EmbeddingBatch random_batch(std::size_t n, std::size_t d, std::uint64_t seed) {
    return hwcl::make_in_batch(random_matrix(n, d, seed), random_matrix(n, d, seed + 1));
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
        if (d > worst) worst = d;
    }
    return worst;
}

} // namespace support
