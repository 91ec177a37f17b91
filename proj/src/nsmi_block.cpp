#include "nsmi/nsmi_block.hpp"

#include <algorithm>
#include <cmath>

#include "nsmi/errors.hpp"

namespace nsmi {

Image refine_noiseless(const MeasurementOperator& op, const Image& x0t, const Sinogram& y,
                       const SolverOptions& opts) {
    return refine_scaled(op, x0t, y, 1.0, opts);
}

Image refine_scaled(const MeasurementOperator& op, const Image& x0t, const Sinogram& y,
                    double gamma, const SolverOptions& opts) {
    op.check_output(y);
    Sinogram residual = op.apply(x0t);
    axpy(-1.0, y.data(), residual.data());
    const Image correction = op.pinv_apply(residual, opts);
    Image out = x0t;
    axpy(-gamma, correction.data(), out.data());
    return out;
}

NoisyNsmiParams compute_gamma_phi(const NoiseSchedule& schedule, double sigma_n) {
    if (!(sigma_n >= 0.0)) throw ParameterError("sigma_n must be >= 0");
    const int T = schedule.T();
    NoisyNsmiParams p;
    p.sigma_n = sigma_n;
    p.gamma.assign(T + 1, 1.0);
    p.phi.assign(T + 1, 0.0);
    p.measure_std.assign(T + 1, 0.0);
    for (int t = 1; t <= T; ++t) {
        const double sigma_t = schedule.sigma(t);
        const double lambda = schedule.coef_x0(t) * sigma_n;
        double gamma = 1.0;
        double measure = lambda;
        double phi = 0.0;
        if (sigma_t >= lambda) {
            phi = schedule.posterior_var(t) - lambda * lambda;
        } else {
            gamma = sigma_t / lambda;
            // gamma * lambda reproduces sigma_t; phi is exactly zero here.
            measure = sigma_t;
        }
        p.gamma[t] = gamma;
        p.measure_std[t] = measure;
        p.phi[t] = std::max(phi, 0.0);
    }
    return p;
}

Image refine_noisy(const MeasurementOperator& op, const Image& x0t, const Sinogram& y,
                   const NoisyNsmiParams& params, int t, const SolverOptions& opts) {
    if (t < 1 || static_cast<std::size_t>(t) >= params.gamma.size()) {
        throw ParameterError("refine_noisy: timestep out of range");
    }
    return refine_scaled(op, x0t, y, params.gamma[t], opts);
}

Image step_noisy(const NoiseSchedule& schedule, const NoisyNsmiParams& params, const Image& x_t,
                 const Image& x0t_refined, int t, Rng& rng) {
    schedule.check_t(t);
    if (static_cast<std::size_t>(t) >= params.gamma.size()) {
        throw ParameterError("step_noisy: params shorter than schedule");
    }
    if (!x_t.same_shape(x0t_refined)) throw ShapeError("step_noisy: shape mismatch");
    const double c0 = schedule.coef_x0(t);
    const double ct = schedule.coef_xt(t);
    Image out(x_t.height(), x_t.width(), 0.0, x_t.range());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c0 * x0t_refined[i] + ct * x_t[i];
    if (t == 1) return out;

    std::vector<double> draw(out.size());
    if (params.measure_std[t] > 0.0) {
        rng.fill_normal(draw);
        axpy(params.measure_std[t], draw, out.data());
    }
    if (params.phi[t] > 0.0) {
        rng.fill_normal(draw);
        axpy(std::sqrt(params.phi[t]), draw, out.data());
    }
    return out;
}

}  // namespace nsmi
