#include "nsmi/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nsmi/errors.hpp"

namespace nsmi {

std::vector<Ellipse> shepp_logan_ellipses() {
    return {
        {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
        {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
        {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
        {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
        {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
        {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
        {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
        {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
        {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
        {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
    };
}

Image render_ellipses(std::size_t n, const std::vector<Ellipse>& ellipses) {
    if (n < 8) throw ParameterError("phantom size must be >= 8");
    constexpr int kSub = 4;
    struct Prepared {
        Ellipse e;
        double c, s;
    };
    std::vector<Prepared> prep;
    prep.reserve(ellipses.size());
    for (const auto& e : ellipses) {
        const double phi = e.angle_deg * M_PI / 180.0;
        prep.push_back({e, std::cos(phi), std::sin(phi)});
    }

    Image img(n, n, 0.0, ValueRange::Unit);
    const double step = 2.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int si = 0; si < kSub; ++si) {
                const double y = 1.0 - step * (static_cast<double>(i) + (si + 0.5) / kSub);
                for (int sj = 0; sj < kSub; ++sj) {
                    const double x = -1.0 + step * (static_cast<double>(j) + (sj + 0.5) / kSub);
                    double v = 0.0;
                    for (const auto& p : prep) {
                        const double dx = x - p.e.center_x;
                        const double dy = y - p.e.center_y;
                        const double u = (dx * p.c + dy * p.s) / p.e.semi_x;
                        const double w = (-dx * p.s + dy * p.c) / p.e.semi_y;
                        if (u * u + w * w <= 1.0) v += p.e.intensity;
                    }
                    acc += std::clamp(v, 0.0, 1.0);
                }
            }
            img(i, j) = acc / (kSub * kSub);
        }
    }
    return img;
}

Image shepp_logan(std::size_t n) { return render_ellipses(n, shepp_logan_ellipses()); }

Image random_phantom(const PhantomSpec& spec) {
    std::mt19937_64 gen(spec.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<Ellipse> perturbed = spec.ellipses;
    for (auto& e : perturbed) {
        const double j = spec.jitter;
        e.center_x += 0.03 * j * unit(gen);
        e.center_y += 0.03 * j * unit(gen);
        e.semi_x *= 1.0 + 0.08 * j * unit(gen);
        e.semi_y *= 1.0 + 0.08 * j * unit(gen);
        e.angle_deg += 6.0 * j * unit(gen);
        e.intensity *= 1.0 + 0.15 * j * unit(gen);
    }
    return render_ellipses(spec.size, perturbed);
}

std::vector<Image> phantom_family(std::size_t size, int count, std::uint64_t first_seed) {
    std::vector<Image> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i) {
        PhantomSpec spec;
        spec.size = size;
        spec.seed = first_seed + static_cast<std::uint64_t>(i);
        out.push_back(random_phantom(spec));
    }
    return out;
}

Image make_condition_pair(const Image& x, std::uint64_t seed) {
    const std::size_t h = x.height();
    const std::size_t w = x.width();
    Image remapped = x;
    for (double& v : remapped.data()) v = 1.8 * v - 1.2 * v * v;

    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> freq(0.5, 1.5);
    const double amp = static_cast<double>(std::max(h, w)) / 64.0;
    const double fx = freq(gen), fy = freq(gen), px = phase(gen), py = phase(gen);

    Image out(h, w, 0.0, x.range());
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            const double ri = static_cast<double>(i) / static_cast<double>(h);
            const double rj = static_cast<double>(j) / static_cast<double>(w);
            const double src_r = static_cast<double>(i) + amp * std::sin(2.0 * M_PI * fy * rj + py);
            const double src_c = static_cast<double>(j) + amp * std::sin(2.0 * M_PI * fx * ri + px);
            const double r0 = std::floor(src_r);
            const double c0 = std::floor(src_c);
            const double wr = src_r - r0;
            const double wc = src_c - c0;
            double acc = 0.0;
            for (int dr = 0; dr <= 1; ++dr) {
                for (int dc = 0; dc <= 1; ++dc) {
                    const long rr = static_cast<long>(r0) + dr;
                    const long cc = static_cast<long>(c0) + dc;
                    if (rr < 0 || cc < 0 || rr >= static_cast<long>(h) || cc >= static_cast<long>(w))
                        continue;
                    const double wt = (dr ? wr : 1.0 - wr) * (dc ? wc : 1.0 - wc);
                    acc += wt * remapped(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
                }
            }
            out(i, j) = acc;
        }
    }
    return out;
}

}  // namespace nsmi
