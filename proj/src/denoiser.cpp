#include "nsmi/denoiser.hpp"

#include <cmath>

#include "nsmi/errors.hpp"

namespace nsmi {

void GaussianPrior::validate() const {
    if (!mean.same_shape(variance)) throw ShapeError("gaussian prior: mean/variance shape mismatch");
    for (double v : variance.data()) {
        if (!(v > 0.0)) throw ParameterError("gaussian prior: variance must be strictly positive");
    }
}

GaussianPrior fit_gaussian_prior(const std::vector<Image>& samples, double min_variance) {
    if (samples.empty()) throw ParameterError("fit_gaussian_prior: no samples");
    if (!(min_variance > 0.0)) throw ParameterError("fit_gaussian_prior: min_variance must be > 0");
    const Image& first = samples.front();
    Image mean(first.height(), first.width(), 0.0, first.range());
    Image var(first.height(), first.width(), 0.0, first.range());
    for (const auto& s : samples) {
        if (!s.same_shape(first)) throw ShapeError("fit_gaussian_prior: samples differ in shape");
        axpy(1.0, s.data(), mean.data());
    }
    const double n = static_cast<double>(samples.size());
    for (double& v : mean.data()) v /= n;
    for (const auto& s : samples) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double d = s[i] - mean[i];
            var[i] += d * d;
        }
    }
    for (double& v : var.data()) v = std::max(v / n, min_variance);
    return {std::move(mean), std::move(var)};
}

Image gaussian_posterior_mean(const GaussianPrior& prior, const NoiseSchedule& schedule,
                              const Image& x_t, int t) {
    schedule.check_t(t);
    if (!x_t.same_shape(prior.mean)) throw ShapeError("gaussian denoiser: shape mismatch");
    const double ab = schedule.alpha_bar(t);
    const double sab = std::sqrt(ab);
    Image out(x_t.height(), x_t.width(), 0.0, x_t.range());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v0 = prior.variance[i];
        out[i] = (sab * v0 * x_t[i] + (1.0 - ab) * prior.mean[i]) / (ab * v0 + (1.0 - ab));
    }
    return out;
}

Image gaussian_predict_eps(const GaussianPrior& prior, const NoiseSchedule& schedule,
                           const Image& x_t, int t) {
    Image x0 = gaussian_posterior_mean(prior, schedule, x_t, t);
    const double sab = std::sqrt(schedule.alpha_bar(t));
    const double s1 = std::sqrt(1.0 - schedule.alpha_bar(t));
    for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = (x_t[i] - sab * x0[i]) / s1;
    return x0;
}

GaussianDenoiser::GaussianDenoiser(GaussianPrior prior,
                                   std::shared_ptr<const NoiseSchedule> schedule)
    : prior_(std::move(prior)), schedule_(std::move(schedule)) {
    prior_.validate();
    if (!schedule_) throw ParameterError("gaussian denoiser: null schedule");
}

Image GaussianDenoiser::predict_eps(const Image& x_t, int t, const ConditionImage*) {
    return gaussian_predict_eps(prior_, *schedule_, x_t, t);
}

}  // namespace nsmi
