#include "nsmi/metrics.hpp"

#include <cmath>
#include <string>

#include "nsmi/errors.hpp"

namespace nsmi {

namespace {

void require_same_shape(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw ShapeError("metric inputs differ in shape");
}

// Valid-mode separable correlation with a symmetric kernel.
std::vector<double> filter_valid(const std::vector<double>& img, std::size_t h, std::size_t w,
                                 const std::vector<double>& k) {
    const std::size_t n = k.size();
    const std::size_t oh = h - n + 1;
    const std::size_t ow = w - n + 1;
    std::vector<double> rows(h * ow, 0.0);
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
            double acc = 0.0;
            for (std::size_t q = 0; q < n; ++q) acc += k[q] * img[i * w + j + q];
            rows[i * ow + j] = acc;
        }
    }
    std::vector<double> out(oh * ow, 0.0);
    for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
            double acc = 0.0;
            for (std::size_t q = 0; q < n; ++q) acc += k[q] * rows[(i + q) * ow + j];
            out[i * ow + j] = acc;
        }
    }
    return out;
}

}  // namespace

double mean_squared_error(const Image& a, const Image& b) {
    require_same_shape(a, b);
    if (a.size() == 0) throw ShapeError("metric inputs are empty");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double psnr(const Image& a, const Image& b, double data_range) {
    if (!(data_range > 0.0)) throw ParameterError("psnr: data_range must be > 0");
    const double mse = mean_squared_error(a, b);
    if (mse == 0.0) return kPsnrInfinity;
    return 10.0 * std::log10(data_range * data_range / mse);
}

std::vector<double> gaussian_window(int size, double sigma) {
    if (size < 1 || size % 2 == 0) throw ParameterError("window size must be odd and positive");
    if (!(sigma > 0.0)) throw ParameterError("window sigma must be > 0");
    std::vector<double> k(static_cast<std::size_t>(size));
    const double c = (size - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        k[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

double ssim(const Image& a, const Image& b, const SsimOptions& opts) {
    require_same_shape(a, b);
    if (!(opts.data_range > 0.0)) throw ParameterError("ssim: data_range must be > 0");
    const std::size_t h = a.height();
    const std::size_t w = a.width();
    const auto win = static_cast<std::size_t>(opts.window);
    if (h < win || w < win) {
        throw ShapeError("ssim: image " + std::to_string(h) + "x" + std::to_string(w) +
                         " smaller than window " + std::to_string(win));
    }
    const auto k = gaussian_window(opts.window, opts.sigma);
    const double c1 = (0.01 * opts.data_range) * (0.01 * opts.data_range);
    const double c2 = (0.03 * opts.data_range) * (0.03 * opts.data_range);

    std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    const auto mu_a = filter_valid(a.pixels(), h, w, k);
    const auto mu_b = filter_valid(b.pixels(), h, w, k);
    const auto e_aa = filter_valid(aa, h, w, k);
    const auto e_bb = filter_valid(bb, h, w, k);
    const auto e_ab = filter_valid(ab, h, w, k);

    double total = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a[i];
        const double mb = mu_b[i];
        const double va = e_aa[i] - ma * ma;
        const double vb = e_bb[i] - mb * mb;
        const double cov = e_ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                 ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return total / static_cast<double>(mu_a.size());
}

}  // namespace nsmi
