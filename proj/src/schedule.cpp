#include "nsmi/schedule.hpp"

#include <cmath>
#include <string>

#include "nsmi/errors.hpp"

namespace nsmi {

namespace {

void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(what) + ": shape " + std::to_string(a.height()) + "x" +
                         std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                         std::to_string(b.width()));
    }
}

}  // namespace

NoiseSchedule::NoiseSchedule(std::vector<double> betas) {
    if (betas.size() < 2) throw ParameterError("schedule needs T >= 2");
    const std::size_t n = betas.size() + 1;
    beta_.assign(n, 0.0);
    alpha_.assign(n, 1.0);
    alpha_bar_.assign(n, 1.0);
    posterior_var_.assign(n, 0.0);
    sigma_.assign(n, 0.0);
    coef_x0_.assign(n, 0.0);
    coef_xt_.assign(n, 0.0);

    for (std::size_t t = 1; t < n; ++t) {
        const double b = betas[t - 1];
        if (!(b > 0.0 && b < 1.0)) {
            throw ParameterError("beta[" + std::to_string(t) + "] = " + std::to_string(b) +
                                 " outside (0, 1)");
        }
        beta_[t] = b;
        alpha_[t] = 1.0 - b;
        alpha_bar_[t] = alpha_bar_[t - 1] * alpha_[t];
        const double one_minus_ab = 1.0 - alpha_bar_[t];
        posterior_var_[t] = (1.0 - alpha_bar_[t - 1]) / one_minus_ab * b;
        sigma_[t] = std::sqrt(posterior_var_[t]);
        coef_x0_[t] = std::sqrt(alpha_bar_[t - 1]) * b / one_minus_ab;
        coef_xt_[t] = std::sqrt(alpha_[t]) * (1.0 - alpha_bar_[t - 1]) / one_minus_ab;
    }
}

void NoiseSchedule::check_t(int t) const {
    if (t < 1 || t > T()) {
        throw ParameterError("timestep " + std::to_string(t) + " outside [1, " +
                             std::to_string(T()) + "]");
    }
}

NoiseSchedule build_linear_schedule(int T, double beta_start, double beta_end) {
    if (T < 2) throw ParameterError("build_linear_schedule: T must be >= 2");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
        throw ParameterError("build_linear_schedule: need 0 < beta_start <= beta_end < 1");
    }
    std::vector<double> betas(T);
    for (int i = 0; i < T; ++i) {
        const double frac = static_cast<double>(i) / (T - 1);
        betas[i] = beta_start + (beta_end - beta_start) * frac;
    }
    betas.back() = beta_end;
    return NoiseSchedule(std::move(betas));
}

int TimestepSubsequence::previous(std::size_t index) const {
    if (index >= steps.size()) {
        throw ParameterError("step_index " + std::to_string(index) + " out of range (size " +
                             std::to_string(steps.size()) + ")");
    }
    return index == 0 ? 0 : steps[index - 1];
}

TimestepSubsequence uniform_subsequence(int T, int K) {
    if (K < 1 || K > T) {
        throw ParameterError("subsequence length " + std::to_string(K) + " must lie in [1, " +
                             std::to_string(T) + "]");
    }
    TimestepSubsequence sub;
    sub.steps.reserve(K);
    for (long k = 1; k <= K; ++k) sub.steps.push_back(static_cast<int>(k * T / K));
    return sub;
}

Image forward_diffuse(const NoiseSchedule& s, const Image& x0, int t, const Image& eps) {
    s.check_t(t);
    require_same_shape(x0, eps, "forward_diffuse");
    const double a = std::sqrt(s.alpha_bar(t));
    const double b = std::sqrt(1.0 - s.alpha_bar(t));
    Image out(x0.height(), x0.width(), 0.0, x0.range());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * eps[i];
    return out;
}

Image predict_x0_from_eps(const NoiseSchedule& s, const Image& x_t, int t, const Image& eps_hat) {
    s.check_t(t);
    require_same_shape(x_t, eps_hat, "predict_x0_from_eps");
    const double a = std::sqrt(s.alpha_bar(t));
    const double b = std::sqrt(1.0 - s.alpha_bar(t));
    Image out(x_t.height(), x_t.width(), 0.0, x_t.range());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x_t[i] - b * eps_hat[i]) / a;
    return out;
}

Image ddpm_step(const NoiseSchedule& s, const Image& x_t, const Image& x0_hat, int t,
                const Image& noise) {
    s.check_t(t);
    require_same_shape(x_t, x0_hat, "ddpm_step");
    const double c0 = s.coef_x0(t);
    const double ct = s.coef_xt(t);
    Image out(x_t.height(), x_t.width(), 0.0, x_t.range());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c0 * x0_hat[i] + ct * x_t[i];
    if (t > 1) {
        require_same_shape(x_t, noise, "ddpm_step noise");
        axpy(s.sigma(t), noise.data(), out.data());
    }
    return out;
}

double ddim_sigma(const NoiseSchedule& s, int t, int t_prev) {
    const double ab_t = s.alpha_bar(t);
    const double ab_prev = s.alpha_bar(t_prev);
    const double var = (1.0 - ab_prev) / (1.0 - ab_t) * (1.0 - ab_t / ab_prev);
    return std::sqrt(std::max(var, 0.0));
}

Image ddim_step(const NoiseSchedule& s, const TimestepSubsequence& sub, const Image& x_t,
                const Image& x0_hat, const Image& eps_hat, std::size_t step_index, double eta,
                const Image& noise) {
    const int t_prev = sub.previous(step_index);
    const int t = sub.steps[step_index];
    s.check_t(t);
    if (eta < 0.0 || eta > 1.0) throw ParameterError("eta must lie in [0, 1]");
    require_same_shape(x_t, x0_hat, "ddim_step");
    require_same_shape(x_t, eps_hat, "ddim_step eps");

    const double sig = eta * ddim_sigma(s, t, t_prev);
    const double ab_prev = s.alpha_bar(t_prev);
    const double c0 = std::sqrt(ab_prev);
    const double ce = std::sqrt(std::max(1.0 - ab_prev - sig * sig, 0.0));
    Image out(x_t.height(), x_t.width(), 0.0, x_t.range());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c0 * x0_hat[i] + ce * eps_hat[i];
    if (sig > 0.0) {
        require_same_shape(x_t, noise, "ddim_step noise");
        axpy(sig, noise.data(), out.data());
    }
    return out;
}

}  // namespace nsmi
