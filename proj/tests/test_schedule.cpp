#include "doctest.h"

#include <cmath>

#include "nsmi/errors.hpp"
#include "nsmi/schedule.hpp"
#include "support.hpp"

using namespace nsmi;
using namespace nsmi::testing;

namespace {

Image scalar(double v) { return Image(1, 1, v); }

NoiseSchedule random_schedule(Rng& rng) {
    const int T = uniform_int(rng, 2, 300);
    const double b0 = uniform_real(rng, 1e-5, 0.05);
    const double b1 = uniform_real(rng, b0, 0.5);
    return build_linear_schedule(T, b0, b1);
}

}  // namespace

TEST_CASE("linear schedule on four steps") {
    const NoiseSchedule s = build_linear_schedule(4, 0.1, 0.4);
    const double betas[] = {0.1, 0.2, 0.3, 0.4};
    const double abar[] = {0.9, 0.72, 0.504, 0.3024};
    REQUIRE(s.T() == 4);
    for (int t = 1; t <= 4; ++t) {
        CHECK(s.beta(t) == doctest::Approx(betas[t - 1]).epsilon(1e-15));
        CHECK(s.alpha_bar(t) == doctest::Approx(abar[t - 1]).epsilon(1e-14));
        CHECK(s.alpha(t) == doctest::Approx(1.0 - betas[t - 1]).epsilon(1e-15));
    }
    CHECK(s.alpha_bar(0) == 1.0);
    CHECK(s.posterior_var(1) == 0.0);
    CHECK(s.sigma(1) == 0.0);
    // (1 - 0.9) / (1 - 0.72) * 0.2
    CHECK(s.posterior_var(2) == doctest::Approx(0.1 / 0.28 * 0.2).epsilon(1e-14));
}

TEST_CASE("degenerate and default schedules") {
    const NoiseSchedule flat = build_linear_schedule(2, 0.03, 0.03);
    CHECK(flat.beta(1) == 0.03);
    CHECK(flat.beta(2) == 0.03);

    const NoiseSchedule s = build_linear_schedule(2000, 1e-4, 0.02);
    double prod = 1.0;
    for (int t = 1; t <= 2000; ++t) prod *= 1.0 - (1e-4 + (0.02 - 1e-4) * (t - 1) / 1999.0);
    CHECK(s.alpha_bar(2000) == doctest::Approx(prod).epsilon(1e-10));
    CHECK(s.alpha_bar(2000) > 0.0);
    CHECK(s.alpha_bar(2000) < 1e-3);
}

TEST_CASE("schedule parameter validation") {
    CHECK_THROWS_AS(build_linear_schedule(1, 0.1, 0.2), ParameterError);
    CHECK_THROWS_AS(build_linear_schedule(10, 0.0, 0.2), ParameterError);
    CHECK_THROWS_AS(build_linear_schedule(10, 0.3, 0.2), ParameterError);
    CHECK_THROWS_AS(build_linear_schedule(10, 0.1, 1.0), ParameterError);
    CHECK_THROWS_AS(NoiseSchedule({0.1, 1.5}), ParameterError);
    const NoiseSchedule s = build_linear_schedule(4, 0.1, 0.4);
    CHECK_THROWS_AS(s.check_t(0), ParameterError);
    CHECK_THROWS_AS(s.check_t(5), ParameterError);
}

TEST_CASE("schedule invariants over random schedules") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const NoiseSchedule s = random_schedule(rng);
        double prod = 1.0;
        for (int t = 1; t <= s.T(); ++t) {
            prod *= s.alpha(t);
            REQUIRE(s.beta(t) > 0.0);
            REQUIRE(s.beta(t) < 1.0);
            REQUIRE(s.alpha_bar(t) < s.alpha_bar(t - 1));
            REQUIRE(std::abs(s.alpha_bar(t) - prod) <= 1e-12 * prod);
            REQUIRE(s.posterior_var(t) >= 0.0);
            // coefficient identity: the posterior mean maps (c, sqrt(abar_t) c) to sqrt(abar_{t-1}) c
            const double c = uniform_real(rng, -2.0, 2.0);
            const Image out = ddpm_step(s, scalar(std::sqrt(s.alpha_bar(t)) * c), scalar(c), t,
                                        scalar(0.0));
            REQUIRE(out[0] == doctest::Approx(std::sqrt(s.alpha_bar(t - 1)) * c).epsilon(1e-12));
        }
    }
}

TEST_CASE("forward diffusion and eps inversion") {
    const NoiseSchedule s = build_linear_schedule(4, 0.1, 0.4);
    Rng rng(3);
    const Image x0 = random_image(rng, 3, 5);
    const Image zero(3, 5, 0.0);
    const Image scaled = forward_diffuse(s, x0, 2, zero);
    for (std::size_t i = 0; i < x0.size(); ++i) CHECK(scaled[i] == doctest::Approx(std::sqrt(0.72) * x0[i]));

    const Image xt = random_image(rng, 3, 5);
    const Image eps = random_image(rng, 3, 5);
    const Image x0hat = predict_x0_from_eps(s, xt, 4, eps);
    for (std::size_t i = 0; i < xt.size(); ++i) {
        CHECK(x0hat[i] == doctest::Approx((xt[i] - eps[i] * std::sqrt(1.0 - 0.3024)) / std::sqrt(0.3024))
                              .epsilon(1e-13));
    }
    const Image plain = predict_x0_from_eps(s, xt, 1, zero);
    for (std::size_t i = 0; i < xt.size(); ++i) CHECK(plain[i] == doctest::Approx(xt[i] / std::sqrt(0.9)));

    CHECK_THROWS_AS(forward_diffuse(s, x0, 2, Image(2, 2)), ShapeError);
    CHECK_THROWS_AS(predict_x0_from_eps(s, x0, 5, eps), ParameterError);
}

TEST_CASE("eps round trip is exact at every timestep") {
    const NoiseSchedule s = build_linear_schedule(2000);
    Rng rng(5);
    const Image x0 = random_image(rng, 4, 4);
    const Image eps = random_image(rng, 4, 4);
    double worst = 0.0;
    for (int t = 1; t <= s.T(); ++t) {
        const Image back = predict_x0_from_eps(s, forward_diffuse(s, x0, t, eps), t, eps);
        worst = std::max(worst, max_abs_diff(back.data(), x0.data()));
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("ddpm step arithmetic") {
    const NoiseSchedule s = build_linear_schedule(4, 0.1, 0.4);
    const Image out = ddpm_step(s, scalar(1.0), scalar(0.0), 2, scalar(0.0));
    CHECK(out[0] == doctest::Approx(std::sqrt(0.8) * 0.1 / 0.28).epsilon(1e-14));
    CHECK(out[0] == doctest::Approx(0.319438).epsilon(1e-6));

    const Image noisy = ddpm_step(s, scalar(1.0), scalar(0.0), 2, scalar(1.5));
    CHECK(noisy[0] - out[0] == doctest::Approx(1.5 * s.sigma(2)).epsilon(1e-14));

    // t = 1 carries no noise whatever the caller passes
    const Image last = ddpm_step(s, scalar(0.7), scalar(0.4), 1, scalar(100.0));
    const Image last0 = ddpm_step(s, scalar(0.7), scalar(0.4), 1, scalar(0.0));
    CHECK(last[0] == last0[0]);
    CHECK(last[0] == doctest::Approx(0.4));
}

TEST_CASE("timestep subsequence") {
    const TimestepSubsequence sub = uniform_subsequence(2000, 100);
    REQUIRE(sub.size() == 100);
    CHECK(sub.steps.front() == 20);
    CHECK(sub.steps.back() == 2000);
    for (std::size_t k = 1; k < sub.size(); ++k) CHECK(sub.steps[k] > sub.steps[k - 1]);
    CHECK(sub.previous(0) == 0);
    CHECK(sub.previous(5) == sub.steps[4]);
    CHECK_THROWS_AS(sub.previous(100), ParameterError);

    const TimestepSubsequence odd = uniform_subsequence(7, 3);
    CHECK(odd.steps == std::vector<int>{2, 4, 7});
    CHECK(uniform_subsequence(5, 5).steps == std::vector<int>{1, 2, 3, 4, 5});
    CHECK_THROWS_AS(uniform_subsequence(5, 6), ParameterError);
    CHECK_THROWS_AS(uniform_subsequence(5, 0), ParameterError);
}

TEST_CASE("deterministic ddim lands on the noiseless trajectory") {
    const NoiseSchedule s = build_linear_schedule(1000);
    const TimestepSubsequence sub = uniform_subsequence(1000, 50);
    Rng rng(8);
    const Image x0 = random_image(rng, 3, 3);
    const Image eps = random_image(rng, 3, 3);
    const Image noise = random_image(rng, 3, 3);
    for (std::size_t k = 1; k < sub.size(); ++k) {
        const int t = sub.steps[k];
        const int tp = sub.previous(k);
        const Image xt = forward_diffuse(s, x0, t, eps);
        const Image next = ddim_step(s, sub, xt, x0, eps, k, 0.0, noise);
        const Image expect = forward_diffuse(s, x0, tp, eps);
        REQUIRE(max_abs_diff(next.data(), expect.data()) <= 1e-12);
    }
    // first element steps to t' = 0 which is x0 itself
    const Image final_step = ddim_step(s, sub, forward_diffuse(s, x0, sub.steps[0], eps), x0, eps, 0, 1.0, noise);
    CHECK(max_abs_diff(final_step.data(), x0.data()) <= 1e-12);
    CHECK_THROWS_AS(ddim_step(s, sub, x0, x0, eps, 50, 0.0, noise), ParameterError);
    CHECK_THROWS_AS(ddim_step(s, sub, x0, x0, eps, 3, 1.5, noise), ParameterError);
}

TEST_CASE("full-subsequence ddim at eta 1 reproduces the ddpm step") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const NoiseSchedule s = random_schedule(rng);
        const TimestepSubsequence sub = uniform_subsequence(s.T(), s.T());
        const int t = uniform_int(rng, 1, s.T());
        const std::size_t k = static_cast<std::size_t>(t - 1);
        REQUIRE(sub.steps[k] == t);
        CHECK(ddim_sigma(s, t, t - 1) == doctest::Approx(s.sigma(t)).epsilon(1e-10));

        // with a consistent eps estimate both updates share mean and noise scale
        const Image x0 = random_image(rng, 2, 2);
        const Image xt = random_image(rng, 2, 2);
        Image eps(2, 2);
        for (std::size_t i = 0; i < 4; ++i) {
            eps[i] = (xt[i] - std::sqrt(s.alpha_bar(t)) * x0[i]) / std::sqrt(1.0 - s.alpha_bar(t));
        }
        const Image noise = random_image(rng, 2, 2);
        const Image a = ddim_step(s, sub, xt, x0, eps, k, 1.0, noise);
        const Image b = ddpm_step(s, xt, x0, t, noise);
        CHECK(max_abs_diff(a.data(), b.data()) <= 1e-10);
    }
}
