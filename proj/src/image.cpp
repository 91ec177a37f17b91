#include "nsmi/image.hpp"

#include <algorithm>
#include <cmath>

#include "nsmi/errors.hpp"

namespace nsmi {

std::string to_string(ValueRange r) { return r == ValueRange::Unit ? "unit" : "signed"; }

ValueRange value_range_from_string(const std::string& s) {
    if (s == "unit") return ValueRange::Unit;
    if (s == "signed") return ValueRange::Signed;
    throw ParameterError("unknown value range '" + s + "' (expected unit|signed)");
}

Image::Image(std::size_t height, std::size_t width, double fill, ValueRange range)
    : height_(height), width_(width), pixels_(height * width, fill), range_(range) {}

Image::Image(std::size_t height, std::size_t width, std::vector<double> pixels, ValueRange range)
    : height_(height), width_(width), pixels_(std::move(pixels)), range_(range) {
    if (pixels_.size() != height_ * width_) {
        throw ShapeError("image pixel count " + std::to_string(pixels_.size()) +
                         " does not match " + std::to_string(height_) + "x" +
                         std::to_string(width_));
    }
}

bool Image::consistent_with_range(double tol) const {
    const double lo = range_min() - tol;
    const double hi = range_max() + tol;
    return std::all_of(pixels_.begin(), pixels_.end(),
                       [&](double v) { return v >= lo && v <= hi; });
}

Image Image::clamped() const {
    Image out = *this;
    const double lo = range_min();
    const double hi = range_max();
    for (double& v : out.pixels_) v = std::clamp(v, lo, hi);
    return out;
}

Sinogram::Sinogram(std::size_t n_angles, std::size_t n_detectors, std::vector<double> angles)
    : Sinogram(n_angles, n_detectors, std::vector<double>(n_angles * n_detectors, 0.0),
               std::move(angles)) {}

Sinogram::Sinogram(std::size_t n_angles, std::size_t n_detectors, std::vector<double> values,
                   std::vector<double> angles)
    : n_angles_(n_angles),
      n_detectors_(n_detectors),
      values_(std::move(values)),
      angles_(std::move(angles)) {
    if (values_.size() != n_angles_ * n_detectors_) {
        throw ShapeError("sinogram value count " + std::to_string(values_.size()) +
                         " does not match " + std::to_string(n_angles_) + "x" +
                         std::to_string(n_detectors_));
    }
    if (!angles_.empty()) {
        if (angles_.size() != n_angles_) throw ShapeError("sinogram angle count mismatch");
        for (std::size_t i = 0; i < angles_.size(); ++i) {
            if (angles_[i] < 0.0 || angles_[i] >= M_PI || (i > 0 && angles_[i] <= angles_[i - 1])) {
                throw ParameterError("sinogram angles must be strictly increasing in [0, pi)");
            }
        }
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

}  // namespace nsmi
