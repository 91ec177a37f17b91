#pragma once

#include <cstddef>
#include <vector>

#include "nsmi/image.hpp"

namespace nsmi {

/// Discrete diffusion schedule indexed by t = 1..T. Index 0 of every
/// sequence holds the t = 0 convention (alpha_bar = 1, beta = 0, sigma = 0)
/// so formulas can be written with the natural time index.
class NoiseSchedule {
public:
    NoiseSchedule(std::vector<double> betas);

    int T() const noexcept { return static_cast<int>(beta_.size()) - 1; }

    double beta(int t) const { return beta_.at(t); }
    double alpha(int t) const { return alpha_.at(t); }
    double alpha_bar(int t) const { return alpha_bar_.at(t); }
    /// sigma_t^2 = (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t) * beta_t
    double posterior_var(int t) const { return posterior_var_.at(t); }
    double sigma(int t) const { return sigma_.at(t); }

    /// Weight of x0 and of x_t in the posterior mean of x_{t-1}.
    double coef_x0(int t) const { return coef_x0_.at(t); }
    double coef_xt(int t) const { return coef_xt_.at(t); }

    void check_t(int t) const;

private:
    std::vector<double> beta_;
    std::vector<double> alpha_;
    std::vector<double> alpha_bar_;
    std::vector<double> posterior_var_;
    std::vector<double> sigma_;
    std::vector<double> coef_x0_;
    std::vector<double> coef_xt_;
};

NoiseSchedule build_linear_schedule(int T, double beta_start = 1e-4, double beta_end = 0.02);

/// Strictly increasing timesteps used by the accelerated sampler.
struct TimestepSubsequence {
    std::vector<int> steps;

    std::size_t size() const noexcept { return steps.size(); }
    /// Timestep preceding steps[index]; 0 for the first element.
    int previous(std::size_t index) const;
};

/// Uniform stride over {1..T} ending at T: steps_k = floor(k*T/K), k = 1..K.
TimestepSubsequence uniform_subsequence(int T, int K);

/// sqrt(abar_t) x0 + sqrt(1 - abar_t) eps
Image forward_diffuse(const NoiseSchedule& s, const Image& x0, int t, const Image& eps);

/// (x_t - sqrt(1 - abar_t) eps_hat) / sqrt(abar_t)
Image predict_x0_from_eps(const NoiseSchedule& s, const Image& x_t, int t, const Image& eps_hat);

/// Ancestral DDPM step from the posterior q(x_{t-1} | x_t, x0_hat).
/// `noise` is a standard-normal image supplied by the caller; it is ignored at t = 1.
Image ddpm_step(const NoiseSchedule& s, const Image& x_t, const Image& x0_hat, int t,
                const Image& noise);

/// Noise scale of a DDIM jump t -> t_prev at eta = 1.
double ddim_sigma(const NoiseSchedule& s, int t, int t_prev);

/// DDIM update from steps[step_index] to its predecessor in the subsequence.
Image ddim_step(const NoiseSchedule& s, const TimestepSubsequence& sub, const Image& x_t,
                const Image& x0_hat, const Image& eps_hat, std::size_t step_index, double eta,
                const Image& noise);

}  // namespace nsmi
