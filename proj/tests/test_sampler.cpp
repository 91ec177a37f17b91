#include "doctest.h"

#include <cmath>
#include <memory>
#include <string>

#include "nsmi/denoiser.hpp"
#include "nsmi/errors.hpp"
#include "nsmi/phantom.hpp"
#include "nsmi/radon.hpp"
#include "nsmi/sampler.hpp"
#include "support.hpp"

using namespace nsmi;
using namespace nsmi::testing;

namespace {

struct ChainMoments {
    std::vector<double> mean;
    std::vector<double> var;
};

// Mean and variance of the DDPM chain when the measurement carries no
// information: every step is affine in x_t, so both moments follow a
// scalar recursion from x_T ~ N(0, 1).
ChainMoments prior_chain_moments(const NoiseSchedule& s, const GaussianPrior& prior) {
    ChainMoments out;
    for (std::size_t i = 0; i < prior.mean.size(); ++i) {
        const double mu = prior.mean[i], v = prior.variance[i];
        double m = 0.0, var = 1.0;
        for (int t = s.T(); t >= 1; --t) {
            const double ab = s.alpha_bar(t);
            const double den = ab * v + (1.0 - ab);
            const double a = std::sqrt(ab) * v / den;
            const double b = (1.0 - ab) * mu / den;
            const double c0 = std::sqrt(s.alpha_bar(t - 1)) * s.beta(t) / (1.0 - ab);
            const double ct = std::sqrt(s.alpha(t)) * (1.0 - s.alpha_bar(t - 1)) / (1.0 - ab);
            const double gain = c0 * a + ct;
            m = gain * m + c0 * b;
            var = gain * gain * var + (t > 1 ? s.posterior_var(t) : 0.0);
        }
        out.mean.push_back(m);
        out.var.push_back(var);
    }
    return out;
}

class ScriptedDenoiser final : public Denoiser {
public:
    int fail_at = -1;
    std::vector<int> seen;
    std::vector<double> condition_sums;

    Image predict_eps(const Image& x_t, int t, const ConditionImage* condition) override {
        seen.push_back(t);
        if (t == fail_at) throw RemoteError("model exploded");
        double s = 0.0;
        if (condition) for (double v : condition->image.data()) s += v;
        condition_sums.push_back(s);
        return Image(x_t.height(), x_t.width(), 0.0);
    }
};

std::shared_ptr<const NoiseSchedule> shared_schedule(int T) {
    const double k = 2000.0 / T;
    return std::make_shared<const NoiseSchedule>(build_linear_schedule(T, 1e-4 * k, std::min(0.02 * k, 0.5)));
}

}  // namespace

TEST_CASE("sampler config validation") {
    const NoiseSchedule s = build_linear_schedule(50);
    SamplerConfig c;
    c.ddim_steps = 50;
    CHECK_NOTHROW(c.validate(s));
    c.ddim_steps = 51;
    CHECK_THROWS_AS(c.validate(s), ConfigError);
    c.ddim_steps = 10;
    c.mode = NsmiMode::Noisy;
    CHECK_THROWS_AS(c.validate(s), ConfigError);  // sigma_n = 0
    c.sigma_n = 0.1;
    CHECK_THROWS_AS(c.validate(s), ConfigError);  // noisy with ddim
    c.stepper = Stepper::Ddpm;
    CHECK_NOTHROW(c.validate(s));
    c.eta = 2.0;
    CHECK_THROWS_AS(c.validate(s), ConfigError);
    CHECK(nsmi_mode_from_string("noisy") == NsmiMode::Noisy);
    CHECK(stepper_from_string(to_string(Stepper::Ddim)) == Stepper::Ddim);
    CHECK_THROWS_AS(stepper_from_string("euler"), ConfigError);
}

TEST_CASE("identity operator reproduces the measurement") {
    auto s = shared_schedule(100);
    const IdentityOperator op(4, 4);
    Rng rng(1);
    const Image truth = uniform_image(rng, 4, 4);
    const Sinogram y = op.apply(truth);
    GaussianDenoiser den({Image(4, 4, 0.5), Image(4, 4, 0.1)}, s);
    for (Stepper st : {Stepper::Ddpm, Stepper::Ddim}) {
        SamplerConfig c;
        c.stepper = st;
        c.ddim_steps = 20;
        const SampleResult r = reverse_sample(*s, op, y, den, nullptr, c);
        CHECK(max_abs_diff(r.raw.data(), y.data()) <= 1e-12);
        const std::size_t expected = st == Stepper::Ddpm ? 100 : 20;
        REQUIRE(r.trace.entries.size() == expected);
        CHECK(r.trace.entries.front().t == 100);
        CHECK(r.trace.entries.back().t == (st == Stepper::Ddpm ? 1 : 5));
        for (std::size_t k = 1; k < r.trace.entries.size(); ++k) {
            CHECK(r.trace.entries[k].t < r.trace.entries[k - 1].t);
            CHECK(r.trace.entries[k].relative_residual <= 1e-12);
        }
    }
}

TEST_CASE("uninformative measurement follows the prior reverse chain") {
    auto s = shared_schedule(60);
    const DenseOperator op(Eigen::MatrixXd::Zero(1, 3));
    const Sinogram y(1, 1, {0.0}, {});
    const GaussianPrior prior{Image(1, 3, std::vector<double>{0.2, 0.5, 0.9}),
                              Image(1, 3, std::vector<double>{0.01, 0.05, 0.2})};
    GaussianDenoiser den(prior, s);
    const ChainMoments oracle = prior_chain_moments(*s, prior);

    const int runs = 3000;
    std::vector<double> sum(3, 0.0), sum2(3, 0.0);
    SamplerConfig c;
    c.stepper = Stepper::Ddpm;
    c.record_trace = false;
    for (int r = 0; r < runs; ++r) {
        c.seed = static_cast<std::uint64_t>(r);
        const Image out = reverse_sample(*s, op, y, den, nullptr, c).raw;
        for (std::size_t i = 0; i < 3; ++i) {
            sum[i] += out[i];
            sum2[i] += out[i] * out[i];
        }
    }
    for (std::size_t i = 0; i < 3; ++i) {
        const double mean = sum[i] / runs;
        const double var = sum2[i] / runs - mean * mean;
        const double se = std::sqrt(oracle.var[i] / runs);
        CHECK(std::abs(mean - oracle.mean[i]) <= 4.0 * se);
        CHECK(var == doctest::Approx(oracle.var[i]).epsilon(0.1));
    }
}

TEST_CASE("ddim over the full sequence at eta 1 retraces ddpm") {
    auto s = shared_schedule(40);
    const DenseOperator op(Eigen::MatrixXd::Zero(1, 2));
    const Sinogram y(1, 1, {0.0}, {});
    GaussianDenoiser den({Image(1, 2, 0.3), Image(1, 2, 0.05)}, s);
    SamplerConfig ddpm;
    ddpm.stepper = Stepper::Ddpm;
    SamplerConfig ddim;
    ddim.stepper = Stepper::Ddim;
    ddim.ddim_steps = 40;
    ddim.eta = 1.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        ddpm.seed = ddim.seed = seed;
        const Image a = reverse_sample(*s, op, y, den, nullptr, ddpm).raw;
        const Image b = reverse_sample(*s, op, y, den, nullptr, ddim).raw;
        CHECK(max_abs_diff(a.data(), b.data()) <= 1e-9);
    }
}

TEST_CASE("tomographic sampling keeps the data consistent") {
    auto s = shared_schedule(200);
    const std::size_t n = 16;
    const RadonOperator op = RadonOperator::uniform(n, 6);
    const Image truth = shepp_logan(n);
    const Sinogram y = op.apply(truth);
    GaussianDenoiser den(fit_gaussian_prior(phantom_family(n, 16, 1000)), s);
    SamplerConfig c;
    c.ddim_steps = 25;
    c.solver = {1e-6, 2000};
    const SampleResult r = reverse_sample(*s, op, y, den, nullptr, c);
    Sinogram res = op.apply(r.raw);
    axpy(-1.0, y.data(), res.data());
    CHECK(norm2(res.data()) / norm2(y.data()) <= 1e-5);
    for (const auto& e : r.trace.entries) CHECK(e.relative_residual <= 1e-4);
    CHECK(r.image.consistent_with_range(0.0));

    const SampleResult again = reverse_sample(*s, op, y, den, nullptr, c);
    CHECK(again.raw.pixels() == r.raw.pixels());
    c.seed = 1;
    CHECK(reverse_sample(*s, op, y, den, nullptr, c).raw.pixels() != r.raw.pixels());
}

TEST_CASE("noisy mode runs the ddpm chain") {
    auto s = shared_schedule(50);
    const RadonOperator op = RadonOperator::uniform(12, 4);
    const Sinogram y = simulate_measurement(op, shepp_logan(12), 0.2, 3);
    GaussianDenoiser den(fit_gaussian_prior(phantom_family(12, 8, 1000)), s);
    SamplerConfig c;
    c.mode = NsmiMode::Noisy;
    c.stepper = Stepper::Ddpm;
    c.sigma_n = 0.1;
    c.solver = {1e-6, 3000};
    const SampleResult r = reverse_sample(*s, op, y, den, nullptr, c);
    CHECK(r.trace.entries.size() == 50);
    CHECK(reverse_sample(*s, op, y, den, nullptr, c).raw.pixels() == r.raw.pixels());
    for (double v : r.raw.data()) CHECK(std::isfinite(v));
}

TEST_CASE("sampler passes the condition through and reports the failing step") {
    auto s = shared_schedule(30);
    const IdentityOperator op(3, 3);
    const Sinogram y(3, 3);
    ScriptedDenoiser den;
    const ConditionImage cond{Image(3, 3, 2.0)};
    SamplerConfig c;
    c.ddim_steps = 10;
    reverse_sample(*s, op, y, den, &cond, c);
    CHECK(den.seen.size() == 10);
    for (double v : den.condition_sums) CHECK(v == 18.0);

    const ConditionImage wrong{Image(2, 3)};
    CHECK_THROWS_AS(reverse_sample(*s, op, y, den, &wrong, c), ShapeError);

    den.fail_at = 15;
    try {
        reverse_sample(*s, op, y, den, nullptr, c);
        FAIL("expected RemoteError");
    } catch (const RemoteError& e) {
        CHECK(std::string(e.what()).find("at timestep 15") != std::string::npos);
        CHECK(std::string(e.what()).find("model exploded") != std::string::npos);
    }

    const RadonOperator radon = RadonOperator::uniform(12, 6);
    GaussianDenoiser g({Image(12, 12, 0.3), Image(12, 12, 0.1)}, s);
    c.solver = {1e-12, 1};
    try {
        reverse_sample(*s, radon, radon.apply(shepp_logan(12)), g, nullptr, c);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(std::string(e.what()).find("at timestep 30") != std::string::npos);
        CHECK(e.iterations() == 1);
    }
}

TEST_CASE("measurement simulation") {
    const RadonOperator op = RadonOperator::uniform(16, 5);
    const Image x = shepp_logan(16);
    const Sinogram clean = simulate_measurement(op, x, 0.0, 1);
    CHECK(clean.values() == op.apply(x).values());
    CHECK(clean.angles() == op.angles());
    const Sinogram a = simulate_measurement(op, x, 0.5, 7);
    CHECK(a.values() == simulate_measurement(op, x, 0.5, 7).values());
    CHECK(a.values() != simulate_measurement(op, x, 0.5, 8).values());
    double s2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s2 += (a[i] - clean[i]) * (a[i] - clean[i]);
    CHECK(std::sqrt(s2 / a.size()) == doctest::Approx(0.5).epsilon(0.15));
    CHECK_THROWS_AS(simulate_measurement(op, x, -1.0, 1), ParameterError);

    const IdentityOperator id(100, 100);
    CHECK(estimate_image_noise_level(id, 0.3, 2) == doctest::Approx(0.3).epsilon(0.02));
    CHECK(estimate_image_noise_level(op, 0.3, 2, {1e-6, 2000}) ==
          estimate_image_noise_level(op, 0.3, 2, {1e-6, 2000}));
}

TEST_CASE("repeated runs and metric tables") {
    auto s = shared_schedule(40);
    const std::size_t n = 16;
    auto den = std::make_shared<GaussianDenoiser>(fit_gaussian_prior(phantom_family(n, 8, 1000)), s);
    const Image truth = shepp_logan(n);
    std::vector<RepeatedCase> cases;
    for (std::size_t np : {4u, 8u, 12u}) {
        auto op = std::make_shared<RadonOperator>(RadonOperator::uniform(n, np));
        RepeatedCase rc;
        rc.label = "N_p=" + std::to_string(np);
        rc.op = op;
        rc.y = op->apply(truth);
        rc.truth = truth;
        rc.config.ddim_steps = 10;
        rc.config.solver = {1e-6, 2000};
        rc.denoiser = den;
        cases.push_back(rc);
    }
    const MetricsTable t = run_repeated(*s, cases, 2);
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[1].label == "N_p=8");
    CHECK(t.rows[0].psnr.size() == 2);
    const std::string text = t.format();
    CHECK(text.find("±") != std::string::npos);
    CHECK(text.find("ssim_window=11") != std::string::npos);

    const std::vector<RepeatedCase> one = {cases[0]};
    CHECK(run_repeated(*s, one, 1).format() == run_repeated(*s, one, 1).format());
    CHECK_THROWS_AS(run_repeated(*s, one, 0), ParameterError);

    const auto [m, sd] = mean_std({1.0, 2.0, 3.0});
    CHECK(m == 2.0);
    CHECK(sd == doctest::Approx(std::sqrt(2.0 / 3.0)));
}
