#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "nsmi/radon.hpp"
#include "nsmi/sampler.hpp"

namespace nsmi {

enum class ReconMethod { Fbp, Pinv, Ddmm };
enum class DenoiserKind { Gaussian, External };

ReconMethod recon_method_from_string(const std::string& s);
DenoiserKind denoiser_kind_from_string(const std::string& s);

/// Everything a CLI run needs. Defaults follow the reference experiment
/// setup: T = 2000, 100 DDIM steps, 23 projections.
struct ExperimentConfig {
    // sampler
    ReconMethod method = ReconMethod::Ddmm;
    NsmiMode mode = NsmiMode::Noiseless;
    Stepper stepper = Stepper::Ddim;
    int steps = 100;
    int T = 2000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    double eta = 0.0;
    double sigma_n = 0.0;
    std::uint64_t seed = 0;
    double tol = 1e-6;
    int max_iter = 2000;

    // geometry and simulation
    std::size_t size = 64;
    std::size_t angles = 23;
    std::size_t detectors = 0;
    double noise_std = 0.0;
    FbpFilter filter = FbpFilter::RamLak;

    // denoiser
    DenoiserKind denoiser = DenoiserKind::Gaussian;
    std::string endpoint;
    int timeout_ms = 30000;
    int prior_count = 64;
    std::uint64_t prior_seed = 1000;
    double prior_min_variance = 1e-4;

    // paths
    std::filesystem::path input;
    std::filesystem::path output;
    std::filesystem::path condition;

    /// Throws ConfigError on the first inconsistency.
    void validate() const;

    SamplerConfig sampler_config() const;
};

/// Applies the keys of `j` onto `cfg`; unknown keys and wrong types are ConfigErrors.
void apply_json(ExperimentConfig& cfg, const nlohmann::json& j);

ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const ExperimentConfig& cfg);

}  // namespace nsmi
