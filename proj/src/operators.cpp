#include "nsmi/operators.hpp"

#include <algorithm>
#include <string>

#include "nsmi/errors.hpp"
#include "nsmi/least_squares.hpp"

namespace nsmi {

namespace {

std::string shape_str(GridShape s) { return std::to_string(s.rows) + "x" + std::to_string(s.cols); }

}  // namespace

std::vector<double> MeasurementOperator::pinv(std::span<const double> y,
                                              const SolverOptions& opts) const {
    const auto fwd = [this](std::span<const double> in, std::span<double> out) { apply(in, out); };
    const auto bwd = [this](std::span<const double> in, std::span<double> out) { adjoint(in, out); };
    auto res = cgls(fwd, bwd, input_shape().count(), y, opts.tol, opts.max_iter);
    if (!res.converged) {
        throw ConvergenceError("pseudo-inverse did not reach tol " + std::to_string(opts.tol) +
                                   " within " + std::to_string(opts.max_iter) +
                                   " iterations (relative residual " +
                                   std::to_string(res.relative_residual) + ", normal residual " +
                                   std::to_string(res.relative_normal_residual) + ")",
                               std::min(res.relative_residual, res.relative_normal_residual),
                               res.iterations);
    }
    return std::move(res.x);
}

void MeasurementOperator::check_input(const Image& x) const {
    const GridShape in = input_shape();
    if (x.height() != in.rows || x.width() != in.cols) {
        throw ShapeError("operator expects image " + shape_str(in) + ", got " +
                         shape_str({x.height(), x.width()}));
    }
}

void MeasurementOperator::check_output(const Sinogram& y) const {
    const GridShape out = output_shape();
    if (y.n_angles() != out.rows || y.n_detectors() != out.cols) {
        throw ShapeError("operator expects measurement " + shape_str(out) + ", got " +
                         shape_str({y.n_angles(), y.n_detectors()}));
    }
}

Image MeasurementOperator::make_image(std::vector<double> pixels) const {
    const GridShape in = input_shape();
    return Image(in.rows, in.cols, std::move(pixels));
}

Sinogram MeasurementOperator::apply(const Image& x) const {
    check_input(x);
    const GridShape out = output_shape();
    Sinogram y(out.rows, out.cols, angles());
    apply(x.data(), y.data());
    return y;
}

Image MeasurementOperator::adjoint(const Sinogram& y) const {
    check_output(y);
    Image x = make_image(std::vector<double>(input_shape().count(), 0.0));
    adjoint(y.data(), x.data());
    return x;
}

Image MeasurementOperator::pinv_apply(const Sinogram& y, const SolverOptions& opts) const {
    check_output(y);
    if (!(opts.tol > 0.0)) throw ParameterError("pinv_apply: tol must be > 0");
    return make_image(pinv(y.data(), opts));
}

void IdentityOperator::apply(std::span<const double> x, std::span<double> y) const {
    std::copy(x.begin(), x.end(), y.begin());
}

void IdentityOperator::adjoint(std::span<const double> y, std::span<double> x) const {
    std::copy(y.begin(), y.end(), x.begin());
}

std::vector<double> IdentityOperator::pinv(std::span<const double> y, const SolverOptions&) const {
    return {y.begin(), y.end()};
}

DenseOperator::DenseOperator(Eigen::MatrixXd matrix)
    : DenseOperator(matrix, GridShape{1, static_cast<std::size_t>(matrix.cols())},
                    GridShape{1, static_cast<std::size_t>(matrix.rows())}) {}

DenseOperator::DenseOperator(Eigen::MatrixXd matrix, GridShape input, GridShape output,
                             std::vector<double> angles)
    : matrix_(std::move(matrix)), input_(input), output_(output), angles_(std::move(angles)) {
    if (static_cast<std::size_t>(matrix_.cols()) != input_.count() ||
        static_cast<std::size_t>(matrix_.rows()) != output_.count()) {
        throw ShapeError("dense operator matrix " + std::to_string(matrix_.rows()) + "x" +
                         std::to_string(matrix_.cols()) + " does not match shapes " +
                         shape_str(output_) + " <- " + shape_str(input_));
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(matrix_, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = sv.size() > 0 ? kRelativeCutoff * sv(0) : 0.0;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
    rank_ = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff && sv(i) > 0.0) {
            inv(i) = 1.0 / sv(i);
            ++rank_;
        }
    }
    pinv_ = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

void DenseOperator::apply(std::span<const double> x, std::span<double> y) const {
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    Eigen::Map<Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    yv.noalias() = matrix_ * xv;
}

void DenseOperator::adjoint(std::span<const double> y, std::span<double> x) const {
    Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    Eigen::Map<Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    xv.noalias() = matrix_.transpose() * yv;
}

std::vector<double> DenseOperator::pinv(std::span<const double> y, const SolverOptions&) const {
    Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    Eigen::VectorXd x = pinv_ * yv;
    return {x.data(), x.data() + x.size()};
}

DenseOperator materialize(const MeasurementOperator& op) {
    const GridShape in = op.input_shape();
    const GridShape out = op.output_shape();
    const auto n = static_cast<Eigen::Index>(in.count());
    const auto m = static_cast<Eigen::Index>(out.count());
    Eigen::MatrixXd mat(m, n);
    std::vector<double> e(in.count(), 0.0);
    std::vector<double> col(out.count());
    for (Eigen::Index j = 0; j < n; ++j) {
        e[j] = 1.0;
        op.apply(e, col);
        e[j] = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) mat(i, j) = col[i];
    }
    return DenseOperator(std::move(mat), in, out, op.angles());
}

Image range_project(const MeasurementOperator& op, const Image& x, const SolverOptions& opts) {
    return op.pinv_apply(op.apply(x), opts);
}

Image null_project(const MeasurementOperator& op, const Image& x, const SolverOptions& opts) {
    Image r = range_project(op, x, opts);
    Image out = x;
    axpy(-1.0, r.data(), out.data());
    return out;
}

}  // namespace nsmi
