#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nsmi/denoiser.hpp"
#include "nsmi/image.hpp"
#include "nsmi/operators.hpp"
#include "nsmi/schedule.hpp"

namespace nsmi {

enum class NsmiMode { Noiseless, Noisy };
enum class Stepper { Ddpm, Ddim };

std::string to_string(NsmiMode m);
std::string to_string(Stepper s);
NsmiMode nsmi_mode_from_string(const std::string& s);
Stepper stepper_from_string(const std::string& s);

struct SamplerConfig {
    NsmiMode mode = NsmiMode::Noiseless;
    Stepper stepper = Stepper::Ddim;
    int ddim_steps = 100;
    double eta = 0.0;
    /// Image-domain std of A^+ n, used by the noisy block only.
    double sigma_n = 0.0;
    std::uint64_t seed = 0;
    SolverOptions solver{};
    bool record_trace = true;
    ValueRange output_range = ValueRange::Unit;

    /// Throws ConfigError for inconsistent settings.
    void validate(const NoiseSchedule& schedule) const;
};

struct TraceEntry {
    int t = 0;
    /// ||A x0hat|t - y||
    double residual = 0.0;
    /// residual / ||y|| (absolute residual when y = 0)
    double relative_residual = 0.0;
    double seconds = 0.0;
};

struct SampleTrace {
    std::vector<TraceEntry> entries;
};

struct SampleResult {
    /// Final iterate clamped to the output range.
    Image image;
    /// Final iterate before clamping.
    Image raw;
    SampleTrace trace;
};

/// Reverse diffusion with measurement-embedded refinement. Per executed
/// timestep: eps = denoiser(x_t, m, t); x0|t from eps; refine x0|t with the
/// selected block; step to the next iterate. Random draws happen in a fixed
/// order: x_T first, then the step noise of each timestep.
SampleResult reverse_sample(const NoiseSchedule& schedule, const MeasurementOperator& op,
                            const Sinogram& y, Denoiser& denoiser,
                            const ConditionImage* condition, const SamplerConfig& config);

/// y = A x + noise_std * g, g ~ N(0, I) drawn from `seed`.
Sinogram simulate_measurement(const MeasurementOperator& op, const Image& x, double noise_std,
                              std::uint64_t seed);

/// RMS of A^+ n for one draw n ~ N(0, noise_std^2 I): a calibration of the
/// image-domain sigma_n from sinogram-domain noise.
double estimate_image_noise_level(const MeasurementOperator& op, double noise_std,
                                  std::uint64_t seed, const SolverOptions& opts = {});

struct RepeatedCase {
    std::string label;
    std::shared_ptr<const MeasurementOperator> op;
    Sinogram y;
    Image truth;
    std::optional<ConditionImage> condition;
    SamplerConfig config;
    std::shared_ptr<Denoiser> denoiser;
};

struct MetricsRow {
    std::string label;
    std::vector<double> psnr;
    std::vector<double> ssim;
    double psnr_mean = 0.0;
    double psnr_std = 0.0;
    double ssim_mean = 0.0;
    double ssim_std = 0.0;
};

struct MetricsTable {
    std::vector<MetricsRow> rows;
    double data_range = 1.0;
    int ssim_window = 11;
    double ssim_sigma = 1.5;

    /// One line per row, "label  PSNR mean±std  SSIM mean±std".
    std::string format() const;
};

/// Mean and population standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& v);

/// Runs every case for seeds config.seed + i, i = 0..n_seeds-1, scoring the
/// clamped output against the case truth.
MetricsTable run_repeated(const NoiseSchedule& schedule, const std::vector<RepeatedCase>& cases,
                          int n_seeds);

}  // namespace nsmi
