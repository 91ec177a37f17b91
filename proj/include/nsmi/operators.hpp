#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nsmi/image.hpp"

namespace nsmi {

struct GridShape {
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t count() const noexcept { return rows * cols; }
    bool operator==(const GridShape&) const = default;
};

/// Stopping rule for iterative pseudo-inverse application.
struct SolverOptions {
    double tol = 1e-6;
    int max_iter = 500;
};

/// Linear map A from images (input_shape) to measurements (output_shape).
class MeasurementOperator {
public:
    virtual ~MeasurementOperator() = default;

    virtual GridShape input_shape() const = 0;
    virtual GridShape output_shape() const = 0;

    virtual void apply(std::span<const double> x, std::span<double> y) const = 0;
    virtual void adjoint(std::span<const double> y, std::span<double> x) const = 0;

    /// Minimum-norm least-squares solution of A x = y. The default runs CGLS
    /// from a zero start; operators with a factorization override it.
    virtual std::vector<double> pinv(std::span<const double> y, const SolverOptions& opts) const;

    /// Angles attached to produced sinograms (empty for non-tomographic operators).
    virtual std::vector<double> angles() const { return {}; }

    Sinogram apply(const Image& x) const;
    Image adjoint(const Sinogram& y) const;
    Image pinv_apply(const Sinogram& y, const SolverOptions& opts = {}) const;

    void check_input(const Image& x) const;
    void check_output(const Sinogram& y) const;
    Image make_image(std::vector<double> pixels) const;
};

class IdentityOperator final : public MeasurementOperator {
public:
    IdentityOperator(std::size_t height, std::size_t width) : shape_{height, width} {}

    GridShape input_shape() const override { return shape_; }
    GridShape output_shape() const override { return shape_; }
    void apply(std::span<const double> x, std::span<double> y) const override;
    void adjoint(std::span<const double> y, std::span<double> x) const override;
    std::vector<double> pinv(std::span<const double> y, const SolverOptions& opts) const override;
    using MeasurementOperator::adjoint;
    using MeasurementOperator::apply;

private:
    GridShape shape_;
};

/// Explicit matrix with a cached truncated-SVD pseudo-inverse.
class DenseOperator final : public MeasurementOperator {
public:
    /// Singular values below this fraction of the largest are treated as zero.
    static constexpr double kRelativeCutoff = 1e-10;

    explicit DenseOperator(Eigen::MatrixXd matrix);
    DenseOperator(Eigen::MatrixXd matrix, GridShape input, GridShape output,
                  std::vector<double> angles = {});

    GridShape input_shape() const override { return input_; }
    GridShape output_shape() const override { return output_; }
    void apply(std::span<const double> x, std::span<double> y) const override;
    void adjoint(std::span<const double> y, std::span<double> x) const override;
    std::vector<double> pinv(std::span<const double> y, const SolverOptions& opts) const override;
    std::vector<double> angles() const override { return angles_; }

    const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
    const Eigen::MatrixXd& pseudo_inverse() const noexcept { return pinv_; }
    Eigen::Index rank() const noexcept { return rank_; }
    using MeasurementOperator::adjoint;
    using MeasurementOperator::apply;

private:
    Eigen::MatrixXd matrix_;
    Eigen::MatrixXd pinv_;
    Eigen::Index rank_ = 0;
    GridShape input_;
    GridShape output_;
    std::vector<double> angles_;
};

/// Explicit matrix of any operator, column j = A e_j.
DenseOperator materialize(const MeasurementOperator& op);

/// A^+ A x
Image range_project(const MeasurementOperator& op, const Image& x, const SolverOptions& opts = {});
/// (I - A^+ A) x
Image null_project(const MeasurementOperator& op, const Image& x, const SolverOptions& opts = {});

}  // namespace nsmi
