#pragma once

#include <functional>
#include <span>
#include <vector>

namespace nsmi {

struct LeastSquaresResult {
    std::vector<double> x;
    int iterations = 0;
    /// ||b - A x|| / ||b||
    double relative_residual = 0.0;
    /// ||A^T (b - A x)|| / ||A^T b||
    double relative_normal_residual = 0.0;
    bool converged = false;
};

using LinearMap = std::function<void(std::span<const double>, std::span<double>)>;

/// Conjugate gradients on the normal equations (CGLS), started from x = 0 so
/// the iterates stay in range(A^T) and converge to the minimum-norm solution.
/// Stops once either the data residual or the normal-equation residual has
/// dropped by `tol` relative to its starting value.
LeastSquaresResult cgls(const LinearMap& apply, const LinearMap& adjoint, std::size_t n_cols,
                        std::span<const double> b, double tol, int max_iter);

}  // namespace nsmi
