#pragma once

#include <limits>
#include <vector>

#include "nsmi/image.hpp"

namespace nsmi {

/// Returned by psnr for identical images.
inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();

double mean_squared_error(const Image& a, const Image& b);

/// 10 log10(range^2 / MSE); +inf when MSE is zero.
double psnr(const Image& a, const Image& b, double data_range = 1.0);

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double data_range = 1.0;
};

/// Normalized 1-D Gaussian taps.
std::vector<double> gaussian_window(int size, double sigma);

/// Mean SSIM over every window position that lies fully inside the image,
/// C1 = (0.01 L)^2, C2 = (0.03 L)^2.
double ssim(const Image& a, const Image& b, const SsimOptions& opts = {});

}  // namespace nsmi
