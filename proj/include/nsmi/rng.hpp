#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace nsmi {

/// Seedable generator used for every stochastic draw in a sampling run.
/// Draw order is part of the reproducibility contract, so callers fill whole
/// arrays through `fill_normal` in a fixed sequence.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }

    void fill_normal(std::span<double> out) {
        for (double& v : out) v = normal_(engine_);
    }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace nsmi
