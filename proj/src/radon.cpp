#include "nsmi/radon.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "nsmi/errors.hpp"

namespace nsmi {

RadonOperator::RadonOperator(std::size_t image_size, std::vector<double> angles,
                             std::size_t n_detectors)
    : size_(image_size), angles_(std::move(angles)) {
    if (size_ == 0) throw ParameterError("radon: image size must be positive");
    if (angles_.empty()) throw ParameterError("radon: need at least one angle");
    for (std::size_t i = 0; i < angles_.size(); ++i) {
        if (angles_[i] < 0.0 || angles_[i] >= M_PI || (i > 0 && angles_[i] <= angles_[i - 1])) {
            throw ParameterError("radon: angles must be strictly increasing in [0, pi)");
        }
    }
    n_detectors_ = n_detectors == 0 ? size_ : n_detectors;

    const double center = (static_cast<double>(size_) - 1.0) / 2.0;
    const double det_center = (static_cast<double>(n_detectors_) - 1.0) / 2.0;
    // Samples along each ray span the image diagonal.
    const std::size_t n_samples = std::max(n_detectors_, diagonal_sample_count(size_));
    const double sample_center = (static_cast<double>(n_samples) - 1.0) / 2.0;
    const auto n = static_cast<long>(size_);

    row_ptr_.reserve(angles_.size() * n_detectors_ + 1);
    row_ptr_.push_back(0);
    std::vector<std::pair<std::uint32_t, double>> row;
    for (double theta : angles_) {
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        for (std::size_t d = 0; d < n_detectors_; ++d) {
            const double offset = static_cast<double>(d) - det_center;
            row.clear();
            for (std::size_t k = 0; k < n_samples; ++k) {
                const double u = static_cast<double>(k) - sample_center;
                // Image coordinates: x to the right, y up, origin at the grid center.
                const double px = offset * c - u * s;
                const double py = offset * s + u * c;
                const double fc = px + center;
                const double fr = center - py;
                const double c0 = std::floor(fc);
                const double r0 = std::floor(fr);
                const double wx = fc - c0;
                const double wy = fr - r0;
                const long j0 = static_cast<long>(c0);
                const long i0 = static_cast<long>(r0);
                const double w[4] = {(1.0 - wy) * (1.0 - wx), (1.0 - wy) * wx, wy * (1.0 - wx),
                                     wy * wx};
                const long ii[4] = {i0, i0, i0 + 1, i0 + 1};
                const long jj[4] = {j0, j0 + 1, j0, j0 + 1};
                for (int q = 0; q < 4; ++q) {
                    if (w[q] == 0.0 || ii[q] < 0 || ii[q] >= n || jj[q] < 0 || jj[q] >= n) continue;
                    row.emplace_back(static_cast<std::uint32_t>(ii[q] * n + jj[q]), w[q]);
                }
            }
            std::sort(row.begin(), row.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            for (std::size_t i = 0; i < row.size();) {
                const std::uint32_t col = row[i].first;
                double acc = 0.0;
                for (; i < row.size() && row[i].first == col; ++i) acc += row[i].second;
                cols_.push_back(col);
                weights_.push_back(acc);
            }
            row_ptr_.push_back(cols_.size());
        }
    }
}

RadonOperator RadonOperator::uniform(std::size_t image_size, std::size_t n_angles,
                                     std::size_t n_detectors) {
    return RadonOperator(image_size, uniform_angles(n_angles), n_detectors);
}

std::vector<double> RadonOperator::uniform_angles(std::size_t n_angles) {
    if (n_angles == 0) throw ParameterError("radon: need at least one angle");
    std::vector<double> a(n_angles);
    for (std::size_t k = 0; k < n_angles; ++k) {
        a[k] = M_PI * static_cast<double>(k) / static_cast<double>(n_angles);
    }
    return a;
}

std::size_t RadonOperator::diagonal_sample_count(std::size_t image_size) {
    auto m = static_cast<std::size_t>(std::ceil(std::sqrt(2.0) * static_cast<double>(image_size)));
    if ((m - image_size) % 2 != 0) ++m;
    return m;
}

void RadonOperator::apply(std::span<const double> x, std::span<double> y) const {
    const std::size_t rows = row_ptr_.size() - 1;
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += weights_[k] * x[cols_[k]];
        y[r] = acc;
    }
}

void RadonOperator::adjoint(std::span<const double> y, std::span<double> x) const {
    std::fill(x.begin(), x.end(), 0.0);
    const std::size_t rows = row_ptr_.size() - 1;
    for (std::size_t r = 0; r < rows; ++r) {
        const double v = y[r];
        if (v == 0.0) continue;
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) x[cols_[k]] += weights_[k] * v;
    }
}

FbpFilter fbp_filter_from_string(const std::string& s) {
    if (s == "ram-lak") return FbpFilter::RamLak;
    if (s == "none") return FbpFilter::None;
    throw ParameterError("unknown filter '" + s + "' (expected ram-lak|none)");
}

Image filtered_backprojection(const RadonOperator& op, const Sinogram& y, FbpFilter filter) {
    op.check_output(y);
    Sinogram q = y;
    if (filter == FbpFilter::RamLak) {
        const auto nd = static_cast<long>(y.n_detectors());
        // Spatial Ram-Lak kernel: h(0) = 1/4, h(odd m) = -1/(pi m)^2, h(even m) = 0.
        std::vector<double> h(2 * nd - 1, 0.0);
        for (long m = -(nd - 1); m <= nd - 1; ++m) {
            double v = 0.0;
            if (m == 0) {
                v = 0.25;
            } else if (m % 2 != 0) {
                v = -1.0 / (M_PI * M_PI * static_cast<double>(m * m));
            }
            h[m + nd - 1] = v;
        }
        for (std::size_t a = 0; a < y.n_angles(); ++a) {
            for (long d = 0; d < nd; ++d) {
                double acc = 0.0;
                for (long k = 0; k < nd; ++k) acc += h[d - k + nd - 1] * y(a, k);
                q(a, d) = acc;
            }
        }
    }
    Image out = op.adjoint(q);
    const double scale = M_PI / static_cast<double>(y.n_angles());
    for (double& v : out.data()) v *= scale;
    return out;
}

Image fbp_reconstruct(const RadonOperator& op, const Sinogram& y, FbpFilter filter) {
    Image out = filtered_backprojection(op, y, filter);
    out.set_range(ValueRange::Unit);
    return out.clamped();
}

}  // namespace nsmi
