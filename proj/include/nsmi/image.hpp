#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace nsmi {

enum class ValueRange { Unit, Signed };

std::string to_string(ValueRange r);
ValueRange value_range_from_string(const std::string& s);

/// Row-major 2-D scalar field in the image domain.
class Image {
public:
    Image() = default;
    Image(std::size_t height, std::size_t width, double fill = 0.0,
          ValueRange range = ValueRange::Unit);
    Image(std::size_t height, std::size_t width, std::vector<double> pixels,
          ValueRange range = ValueRange::Unit);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t size() const noexcept { return pixels_.size(); }
    ValueRange range() const noexcept { return range_; }
    void set_range(ValueRange r) noexcept { range_ = r; }

    double& operator()(std::size_t row, std::size_t col) { return pixels_[row * width_ + col]; }
    double operator()(std::size_t row, std::size_t col) const { return pixels_[row * width_ + col]; }
    double& operator[](std::size_t i) { return pixels_[i]; }
    double operator[](std::size_t i) const { return pixels_[i]; }

    std::span<double> data() noexcept { return pixels_; }
    std::span<const double> data() const noexcept { return pixels_; }
    const std::vector<double>& pixels() const noexcept { return pixels_; }

    bool same_shape(const Image& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }

    /// Lower/upper bound implied by the range tag.
    double range_min() const noexcept { return range_ == ValueRange::Unit ? 0.0 : -1.0; }
    double range_max() const noexcept { return 1.0; }

    /// True when every pixel lies in the tagged range within `tol`.
    bool consistent_with_range(double tol = 1e-6) const;

    Image clamped() const;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<double> pixels_;
    ValueRange range_ = ValueRange::Unit;
};

/// Angle-major measurement array. `angles` is empty for measurements that do
/// not come from a tomographic geometry (dense operators).
class Sinogram {
public:
    Sinogram() = default;
    Sinogram(std::size_t n_angles, std::size_t n_detectors, std::vector<double> angles = {});
    Sinogram(std::size_t n_angles, std::size_t n_detectors, std::vector<double> values,
             std::vector<double> angles);

    std::size_t n_angles() const noexcept { return n_angles_; }
    std::size_t n_detectors() const noexcept { return n_detectors_; }
    std::size_t size() const noexcept { return values_.size(); }
    const std::vector<double>& angles() const noexcept { return angles_; }

    double& operator()(std::size_t a, std::size_t d) { return values_[a * n_detectors_ + d]; }
    double operator()(std::size_t a, std::size_t d) const { return values_[a * n_detectors_ + d]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    std::span<double> data() noexcept { return values_; }
    std::span<const double> data() const noexcept { return values_; }
    const std::vector<double>& values() const noexcept { return values_; }

    bool same_shape(const Sinogram& other) const noexcept {
        return n_angles_ == other.n_angles_ && n_detectors_ == other.n_detectors_;
    }

private:
    std::size_t n_angles_ = 0;
    std::size_t n_detectors_ = 0;
    std::vector<double> values_;
    std::vector<double> angles_;
};

// Flat-vector helpers shared by the solvers and the sampler.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

}  // namespace nsmi
