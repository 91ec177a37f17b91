#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <random>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "nsmi/image.hpp"
#include "nsmi/rng.hpp"

namespace nsmi::testing {

inline Image random_image(Rng& rng, std::size_t h, std::size_t w, double scale = 1.0) {
    Image img(h, w);
    rng.fill_normal(img.data());
    for (double& v : img.data()) v *= scale;
    return img;
}

inline Image uniform_image(Rng& rng, std::size_t h, std::size_t w) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image img(h, w);
    for (double& v : img.data()) v = u(rng.engine());
    return img;
}

inline Sinogram random_sinogram(Rng& rng, std::size_t a, std::size_t d,
                                std::vector<double> angles = {}) {
    Sinogram s(a, d, std::move(angles));
    rng.fill_normal(s.data());
    return s;
}

inline int uniform_int(Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng.engine());
}

inline double uniform_real(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng.engine());
}

/// Random matrix of the given rank (full rank when rank >= min(rows, cols)).
inline Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols, int rank = -1) {
    auto gauss = [&](int r, int c) {
        Eigen::MatrixXd m(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
        return m;
    };
    if (rank < 0 || rank >= std::min(rows, cols)) return gauss(rows, cols);
    return gauss(rows, rank) * gauss(rank, cols);
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double rel_diff(std::span<const double> a, std::span<const double> b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("nsmi_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << bytes;
}

}  // namespace nsmi::testing
