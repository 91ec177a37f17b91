#include "nsmi/sampler.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "nsmi/errors.hpp"
#include "nsmi/metrics.hpp"
#include "nsmi/nsmi_block.hpp"
#include "nsmi/rng.hpp"

namespace nsmi {

std::string to_string(NsmiMode m) { return m == NsmiMode::Noiseless ? "noiseless" : "noisy"; }
std::string to_string(Stepper s) { return s == Stepper::Ddpm ? "ddpm" : "ddim"; }

NsmiMode nsmi_mode_from_string(const std::string& s) {
    if (s == "noiseless") return NsmiMode::Noiseless;
    if (s == "noisy") return NsmiMode::Noisy;
    throw ConfigError("unknown mode '" + s + "' (expected noiseless|noisy)");
}

Stepper stepper_from_string(const std::string& s) {
    if (s == "ddpm") return Stepper::Ddpm;
    if (s == "ddim") return Stepper::Ddim;
    throw ConfigError("unknown stepper '" + s + "' (expected ddpm|ddim)");
}

void SamplerConfig::validate(const NoiseSchedule& schedule) const {
    if (mode == NsmiMode::Noisy && !(sigma_n > 0.0)) {
        throw ConfigError("noisy mode requires sigma_n > 0");
    }
    if (mode == NsmiMode::Noisy && stepper == Stepper::Ddim) {
        throw ConfigError("noisy mode is only defined for the ddpm stepper");
    }
    if (stepper == Stepper::Ddim && (ddim_steps < 1 || ddim_steps > schedule.T())) {
        throw ConfigError("ddim_steps must lie in [1, T=" + std::to_string(schedule.T()) + "]");
    }
    if (eta < 0.0 || eta > 1.0) throw ConfigError("eta must lie in [0, 1]");
    if (sigma_n < 0.0) throw ConfigError("sigma_n must be >= 0");
    if (!(solver.tol > 0.0) || solver.max_iter < 1) {
        throw ConfigError("solver tol must be > 0 and max_iter >= 1");
    }
}

namespace {

// Re-raise sampler-loop failures with the timestep attached, keeping their class.
[[noreturn]] void rethrow_at_step(int t) {
    const std::string at = "at timestep " + std::to_string(t) + ": ";
    try {
        throw;
    } catch (const ConvergenceError& e) {
        throw ConvergenceError(at + e.what(), e.residual(), e.iterations());
    } catch (const TimeoutError& e) {
        throw TimeoutError(at + e.what());
    } catch (const ConnectionError& e) {
        throw ConnectionError(at + e.what());
    } catch (const ProtocolError& e) {
        throw ProtocolError(at + e.what());
    } catch (const RemoteError& e) {
        throw RemoteError(at + e.what());
    }
}

}  // namespace

SampleResult reverse_sample(const NoiseSchedule& schedule, const MeasurementOperator& op,
                            const Sinogram& y, Denoiser& denoiser,
                            const ConditionImage* condition, const SamplerConfig& config) {
    config.validate(schedule);
    op.check_output(y);
    const GridShape shape = op.input_shape();
    if (condition && (condition->image.height() != shape.rows ||
                      condition->image.width() != shape.cols)) {
        throw ShapeError("condition image does not match the sample dimensions");
    }

    Rng rng(config.seed);
    Image x(shape.rows, shape.cols, 0.0, config.output_range);
    rng.fill_normal(x.data());

    const double y_norm = norm2(y.data());
    std::optional<NoisyNsmiParams> noisy;
    if (config.mode == NsmiMode::Noisy) noisy = compute_gamma_phi(schedule, config.sigma_n);

    std::vector<int> timesteps;
    TimestepSubsequence sub;
    if (config.stepper == Stepper::Ddpm) {
        for (int t = schedule.T(); t >= 1; --t) timesteps.push_back(t);
    } else {
        sub = uniform_subsequence(schedule.T(), config.ddim_steps);
        for (auto it = sub.steps.rbegin(); it != sub.steps.rend(); ++it) timesteps.push_back(*it);
    }

    SampleResult result;
    Image noise(shape.rows, shape.cols, 0.0, config.output_range);
    for (std::size_t k = 0; k < timesteps.size(); ++k) {
        const int t = timesteps[k];
        const auto started = std::chrono::steady_clock::now();
        try {
            Image eps = denoiser.predict_eps(x, t, condition);
            if (!eps.same_shape(x)) throw ShapeError("denoiser output shape mismatch");
            eps.set_range(config.output_range);
            const Image x0t = predict_x0_from_eps(schedule, x, t, eps);
            const Image x0_hat = noisy ? refine_noisy(op, x0t, y, *noisy, t, config.solver)
                                       : refine_noiseless(op, x0t, y, config.solver);

            if (config.record_trace) {
                Sinogram r = op.apply(x0_hat);
                axpy(-1.0, y.data(), r.data());
                TraceEntry e;
                e.t = t;
                e.residual = norm2(r.data());
                e.relative_residual = y_norm > 0.0 ? e.residual / y_norm : e.residual;
                result.trace.entries.push_back(e);
            }

            if (noisy) {
                x = step_noisy(schedule, *noisy, x, x0_hat, t, rng);
            } else if (config.stepper == Stepper::Ddpm) {
                if (t > 1) rng.fill_normal(noise.data());
                x = ddpm_step(schedule, x, x0_hat, t, noise);
            } else {
                const std::size_t index = sub.size() - 1 - k;
                const double sig = config.eta * ddim_sigma(schedule, t, sub.previous(index));
                if (sig > 0.0) rng.fill_normal(noise.data());
                x = ddim_step(schedule, sub, x, x0_hat, eps, index, config.eta, noise);
            }
        } catch (const ConvergenceError&) {
            rethrow_at_step(t);
        } catch (const DenoiserError&) {
            rethrow_at_step(t);
        }
        if (config.record_trace) {
            result.trace.entries.back().seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        }
    }

    x.set_range(config.output_range);
    result.raw = x;
    result.image = x.clamped();
    return result;
}

Sinogram simulate_measurement(const MeasurementOperator& op, const Image& x, double noise_std,
                              std::uint64_t seed) {
    if (noise_std < 0.0) throw ParameterError("noise std must be >= 0");
    Sinogram y = op.apply(x);
    if (noise_std > 0.0) {
        Rng rng(seed);
        std::vector<double> g(y.size());
        rng.fill_normal(g);
        axpy(noise_std, g, y.data());
    }
    return y;
}

double estimate_image_noise_level(const MeasurementOperator& op, double noise_std,
                                  std::uint64_t seed, const SolverOptions& opts) {
    const GridShape out = op.output_shape();
    Sinogram n(out.rows, out.cols, op.angles());
    Rng rng(seed);
    rng.fill_normal(n.data());
    for (double& v : n.data()) v *= noise_std;
    const Image back = op.pinv_apply(n, opts);
    return norm2(back.data()) / std::sqrt(static_cast<double>(back.size()));
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

std::string MetricsTable::format() const {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "# data_range=%g ssim_window=%d ssim_sigma=%g\n", data_range,
                  ssim_window, ssim_sigma);
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-24s %6s %18s %18s\n", "case", "seeds", "PSNR (dB)", "SSIM");
    out += buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-24s %6zu %10.2f±%-6.2f %10.3f±%-6.3f\n",
                      r.label.c_str(), r.psnr.size(), r.psnr_mean, r.psnr_std, r.ssim_mean,
                      r.ssim_std);
        out += buf;
    }
    return out;
}

MetricsTable run_repeated(const NoiseSchedule& schedule, const std::vector<RepeatedCase>& cases,
                          int n_seeds) {
    if (n_seeds < 1) throw ParameterError("run_repeated: n_seeds must be >= 1");
    MetricsTable table;
    const SsimOptions ssim_opts{table.ssim_window, table.ssim_sigma, table.data_range};
    for (const auto& c : cases) {
        if (!c.op || !c.denoiser) throw ParameterError("run_repeated: case without operator/denoiser");
        MetricsRow row;
        row.label = c.label;
        for (int i = 0; i < n_seeds; ++i) {
            SamplerConfig cfg = c.config;
            cfg.seed = c.config.seed + static_cast<std::uint64_t>(i);
            const ConditionImage* cond = c.condition ? &*c.condition : nullptr;
            const SampleResult res = reverse_sample(schedule, *c.op, c.y, *c.denoiser, cond, cfg);
            row.psnr.push_back(psnr(res.image, c.truth, table.data_range));
            row.ssim.push_back(ssim(res.image, c.truth, ssim_opts));
        }
        std::tie(row.psnr_mean, row.psnr_std) = mean_std(row.psnr);
        std::tie(row.ssim_mean, row.ssim_std) = mean_std(row.ssim);
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace nsmi
