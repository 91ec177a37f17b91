#pragma once

#include <vector>

#include "nsmi/image.hpp"
#include "nsmi/operators.hpp"
#include "nsmi/rng.hpp"
#include "nsmi/schedule.hpp"

namespace nsmi {

/// Per-step split of the DDPM noise budget when the measurement carries
/// noise of image-domain std sigma_n. Indexed by t = 1..T (index 0 unused).
struct NoisyNsmiParams {
    double sigma_n = 0.0;
    std::vector<double> gamma;
    std::vector<double> phi;
    /// Std of the measurement-noise share of each step:
    /// gamma_t sqrt(abar_{t-1}) beta_t sigma_n / (1 - abar_t).
    std::vector<double> measure_std;
};

/// x0|t - A^+ (A x0|t - y)
Image refine_noiseless(const MeasurementOperator& op, const Image& x0t, const Sinogram& y,
                       const SolverOptions& opts = {});

/// gamma_t = 1 while sigma_t covers the propagated measurement noise, otherwise
/// the largest scale that keeps it within sigma_t; phi_t is the remaining variance.
NoisyNsmiParams compute_gamma_phi(const NoiseSchedule& schedule, double sigma_n);

/// x0|t - gamma_t A^+ (A x0|t - y). The stochastic share of the measurement
/// noise is drawn by step_noisy.
Image refine_noisy(const MeasurementOperator& op, const Image& x0t, const Sinogram& y,
                   const NoisyNsmiParams& params, int t, const SolverOptions& opts = {});

/// Same scaled correction with an explicit gamma.
Image refine_scaled(const MeasurementOperator& op, const Image& x0t, const Sinogram& y,
                    double gamma, const SolverOptions& opts = {});

/// Posterior-mean part of x_{t-1} plus eps_measure (std measure_std[t]) and
/// eps_extra (variance phi[t]). A component with zero variance draws nothing
/// from the generator; eps_measure is drawn before eps_extra.
Image step_noisy(const NoiseSchedule& schedule, const NoisyNsmiParams& params, const Image& x_t,
                 const Image& x0t_refined, int t, Rng& rng);

}  // namespace nsmi
