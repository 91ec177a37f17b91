#pragma once

#include <memory>
#include <vector>

#include "nsmi/image.hpp"
#include "nsmi/schedule.hpp"

namespace nsmi {

/// Guidance image handed through to the denoiser untouched.
struct ConditionImage {
    Image image;
};

/// eps_theta(x_t, m, t).
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual Image predict_eps(const Image& x_t, int t, const ConditionImage* condition) = 0;
};

/// Independent per-pixel Gaussian prior N(mean, variance).
struct GaussianPrior {
    Image mean;
    Image variance;

    void validate() const;
};

/// Per-pixel mean and variance of `samples`, variance floored at `min_variance`.
GaussianPrior fit_gaussian_prior(const std::vector<Image>& samples, double min_variance = 1e-4);

/// MMSE estimate E[x0 | x_t] under the prior.
Image gaussian_posterior_mean(const GaussianPrior& prior, const NoiseSchedule& schedule,
                              const Image& x_t, int t);

/// Exact eps-prediction under the prior: (x_t - sqrt(abar_t) E[x0|x_t]) / sqrt(1 - abar_t).
Image gaussian_predict_eps(const GaussianPrior& prior, const NoiseSchedule& schedule,
                           const Image& x_t, int t);

class GaussianDenoiser final : public Denoiser {
public:
    GaussianDenoiser(GaussianPrior prior, std::shared_ptr<const NoiseSchedule> schedule);

    Image predict_eps(const Image& x_t, int t, const ConditionImage* condition) override;

    const GaussianPrior& prior() const noexcept { return prior_; }

private:
    GaussianPrior prior_;
    std::shared_ptr<const NoiseSchedule> schedule_;
};

/// Returns zeros; the degenerate denoiser used for plumbing tests.
class ZeroDenoiser final : public Denoiser {
public:
    Image predict_eps(const Image& x_t, int, const ConditionImage*) override {
        return Image(x_t.height(), x_t.width(), 0.0, x_t.range());
    }
};

}  // namespace nsmi
