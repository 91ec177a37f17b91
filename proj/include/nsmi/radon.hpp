#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "nsmi/operators.hpp"

namespace nsmi {

/// Parallel-beam projector on an n x n grid.
///
/// Each detector bin d at angle theta defines a ray at signed offset
/// s_d = d - (n_det - 1) / 2 from the rotation center. The ray is sampled at
/// unit spacing along its direction and every sample bilinearly interpolates
/// the image (zero outside), so a projection value is a unit-step Riemann sum
/// of the line integral. The resulting weights are stored once as a sparse
/// matrix; apply and adjoint both walk that matrix in a fixed order, so the
/// adjoint is the exact transpose and results are bit-reproducible.
class RadonOperator final : public MeasurementOperator {
public:
    /// n_detectors = 0 selects n bins at unit spacing. Rays are always sampled
    /// across the full image diagonal.
    RadonOperator(std::size_t image_size, std::vector<double> angles, std::size_t n_detectors = 0);

    /// N_p angles uniformly distributed over [0, pi).
    static RadonOperator uniform(std::size_t image_size, std::size_t n_angles,
                                 std::size_t n_detectors = 0);
    static std::vector<double> uniform_angles(std::size_t n_angles);
    /// Smallest count >= n * sqrt(2) with the parity of n, so that samples at
    /// theta = 0 land on pixel centers.
    static std::size_t diagonal_sample_count(std::size_t image_size);

    GridShape input_shape() const override { return {size_, size_}; }
    GridShape output_shape() const override { return {angles_.size(), n_detectors_}; }
    void apply(std::span<const double> x, std::span<double> y) const override;
    void adjoint(std::span<const double> y, std::span<double> x) const override;
    std::vector<double> angles() const override { return angles_; }

    std::size_t image_size() const noexcept { return size_; }
    std::size_t n_detectors() const noexcept { return n_detectors_; }
    std::size_t nonzeros() const noexcept { return cols_.size(); }

    using MeasurementOperator::adjoint;
    using MeasurementOperator::apply;

private:
    std::size_t size_;
    std::vector<double> angles_;
    std::size_t n_detectors_;
    // CSR storage, one row per (angle, detector).
    std::vector<std::size_t> row_ptr_;
    std::vector<std::uint32_t> cols_;
    std::vector<double> weights_;
};

enum class FbpFilter { RamLak, None };

FbpFilter fbp_filter_from_string(const std::string& s);

/// Filtered backprojection without the final clamp:
/// (pi / N_p) * A^T (h * y), where h is the discrete band-limited ramp
/// (Ram-Lak) kernel at unit detector spacing, or the identity for None.
Image filtered_backprojection(const RadonOperator& op, const Sinogram& y, FbpFilter filter);

/// filtered_backprojection clamped to [0, 1].
Image fbp_reconstruct(const RadonOperator& op, const Sinogram& y,
                      FbpFilter filter = FbpFilter::RamLak);

}  // namespace nsmi
