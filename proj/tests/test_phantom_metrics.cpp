#include "doctest.h"

#include <cmath>

#include "nsmi/errors.hpp"
#include "nsmi/metrics.hpp"
#include "nsmi/phantom.hpp"
#include "support.hpp"

using namespace nsmi;
using namespace nsmi::testing;

namespace {

// Sliding-window SSIM computed directly from the 2-D Gaussian weights.
double naive_ssim(const Image& a, const Image& b, int win, double sigma, double range) {
    std::vector<double> g(win);
    double gs = 0.0;
    for (int i = 0; i < win; ++i) {
        const double d = i - (win - 1) / 2.0;
        g[i] = std::exp(-d * d / (2 * sigma * sigma));
        gs += g[i];
    }
    const double c1 = std::pow(0.01 * range, 2), c2 = std::pow(0.03 * range, 2);
    double total = 0.0;
    int count = 0;
    for (std::size_t r = 0; r + win <= a.height(); ++r)
        for (std::size_t c = 0; c + win <= a.width(); ++c) {
            double ma = 0, mb = 0;
            for (int i = 0; i < win; ++i)
                for (int j = 0; j < win; ++j) {
                    const double wgt = g[i] * g[j] / (gs * gs);
                    ma += wgt * a(r + i, c + j);
                    mb += wgt * b(r + i, c + j);
                }
            double va = 0, vb = 0, cov = 0;
            for (int i = 0; i < win; ++i)
                for (int j = 0; j < win; ++j) {
                    const double wgt = g[i] * g[j] / (gs * gs);
                    const double da = a(r + i, c + j) - ma, db = b(r + i, c + j) - mb;
                    va += wgt * da * da;
                    vb += wgt * db * db;
                    cov += wgt * da * db;
                }
            total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    return total / count;
}

Image add_noise(const Image& x, double sigma, std::uint64_t seed) {
    Rng rng(seed);
    Image out = x;
    for (double& v : out.data()) v += sigma * rng.normal();
    return out;
}

}  // namespace

TEST_CASE("psnr") {
    const Image a(8, 8, 0.5);
    CHECK(psnr(a, a) == kPsnrInfinity);
    const Image b(8, 8, 0.6);
    CHECK(mean_squared_error(a, b) == doctest::Approx(0.01));
    CHECK(psnr(a, b) == doctest::Approx(20.0));
    CHECK(psnr(a, b, 2.0) == doctest::Approx(20.0 + 20.0 * std::log10(2.0)));
    Rng rng(1);
    const Image x = uniform_image(rng, 16, 16), y = uniform_image(rng, 16, 16);
    CHECK(psnr(x, y) == psnr(y, x));
    CHECK_THROWS_AS(psnr(a, Image(4, 4)), ShapeError);
    CHECK_THROWS_AS(psnr(a, b, 0.0), ParameterError);
}

TEST_CASE("psnr falls as noise grows") {
    const Image x = shepp_logan(32);
    double last = kPsnrInfinity;
    for (double s : {0.01, 0.05, 0.1}) {
        const double p = psnr(add_noise(x, s, 3), x);
        CHECK(p < last);
        last = p;
    }
}

TEST_CASE("ssim agrees with a direct sliding-window computation") {
    Rng rng(2);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t h = static_cast<std::size_t>(uniform_int(rng, 11, 30));
        const std::size_t w = static_cast<std::size_t>(uniform_int(rng, 11, 30));
        const Image a = uniform_image(rng, h, w);
        Image b = add_noise(a, 0.1, 7 + trial);
        CHECK(ssim(a, b) == doctest::Approx(naive_ssim(a, b, 11, 1.5, 1.0)).epsilon(1e-8));
        const double s = ssim(a, uniform_image(rng, h, w));
        CHECK(s >= -1.0);
        CHECK(s <= 1.0);
        const SsimOptions small{5, 1.0, 2.0};
        CHECK(ssim(a, b, small) == doctest::Approx(naive_ssim(a, b, 5, 1.0, 2.0)).epsilon(1e-8));
    }
}

TEST_CASE("ssim edge cases") {
    const Image x = shepp_logan(32);
    CHECK(ssim(x, x) == 1.0);
    CHECK(ssim(x, add_noise(x, 0.05, 1)) > ssim(x, add_noise(x, 0.2, 1)));
    CHECK_THROWS_AS(ssim(Image(8, 8), Image(8, 8)), ShapeError);
    CHECK_THROWS_AS(gaussian_window(4, 1.0), ParameterError);
    const auto g = gaussian_window(11, 1.5);
    double sum = 0.0;
    for (double v : g) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g[5] > g[4]);
    CHECK(g[0] == doctest::Approx(g[10]));
}

TEST_CASE("shepp-logan phantom") {
    const Image x = shepp_logan(64);
    CHECK(x.consistent_with_range(0.0));
    CHECK(x(0, 0) == 0.0);
    CHECK(x(63, 63) == 0.0);
    CHECK(x(0, 63) == 0.0);
    CHECK(x(32, 32) > 0.0);
    CHECK(shepp_logan(64).pixels() == x.pixels());
    CHECK_THROWS_AS(shepp_logan(7), ParameterError);

    double m64 = 0.0, m128 = 0.0;
    for (double v : x.data()) m64 += v;
    for (double v : shepp_logan(128).data()) m128 += v;
    CHECK(m128 == doctest::Approx(4.0 * m64).epsilon(0.02));
}

TEST_CASE("random phantoms") {
    PhantomSpec a;
    a.size = 32;
    a.seed = 5;
    PhantomSpec b = a;
    b.seed = 6;
    const Image pa = random_phantom(a);
    CHECK(pa.pixels() == random_phantom(a).pixels());
    CHECK(pa.pixels() != random_phantom(b).pixels());
    CHECK(pa.consistent_with_range(0.0));
    PhantomSpec still = a;
    still.jitter = 0.0;
    CHECK(random_phantom(still).pixels() == shepp_logan(32).pixels());

    const auto family = phantom_family(16, 3, 40);
    REQUIRE(family.size() == 3);
    PhantomSpec third;
    third.size = 16;
    third.seed = 42;
    CHECK(family[2].pixels() == random_phantom(third).pixels());
}

TEST_CASE("condition images") {
    const Image x = shepp_logan(64);
    const Image c = make_condition_pair(x, 3);
    CHECK(c.pixels() == make_condition_pair(x, 3).pixels());
    CHECK(c.pixels() != make_condition_pair(x, 4).pixels());
    const double s = ssim(x, c);
    CHECK(s > 0.3);
    CHECK(s < 0.95);

    const Image z = make_condition_pair(Image(32, 32), 1);
    for (double v : z.data()) CHECK(v == 0.0);
}
