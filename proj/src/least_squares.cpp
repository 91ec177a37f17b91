#include "nsmi/least_squares.hpp"

#include <cmath>

#include "nsmi/errors.hpp"
#include "nsmi/image.hpp"

namespace nsmi {

LeastSquaresResult cgls(const LinearMap& apply, const LinearMap& adjoint, std::size_t n_cols,
                        std::span<const double> b, double tol, int max_iter) {
    if (!(tol > 0.0)) throw ParameterError("cgls: tol must be > 0");
    if (max_iter < 0) throw ParameterError("cgls: max_iter must be >= 0");

    LeastSquaresResult res;
    res.x.assign(n_cols, 0.0);

    const double b_norm = norm2(b);
    if (b_norm == 0.0) {
        res.converged = true;
        return res;
    }

    std::vector<double> r(b.begin(), b.end());
    std::vector<double> s(n_cols);
    adjoint(r, s);
    std::vector<double> p = s;
    std::vector<double> q(b.size());

    const double s0_norm = norm2(s);
    if (s0_norm == 0.0) {
        // b is orthogonal to range(A): x = 0 is the minimum-norm solution.
        res.relative_residual = 1.0;
        res.converged = true;
        return res;
    }
    double gamma = s0_norm * s0_norm;

    res.relative_residual = 1.0;
    res.relative_normal_residual = 1.0;
    for (int k = 0; k < max_iter; ++k) {
        apply(p, q);
        const double qq = dot(q, q);
        if (qq == 0.0) break;
        const double alpha = gamma / qq;
        axpy(alpha, p, res.x);
        axpy(-alpha, q, r);
        adjoint(r, s);
        const double gamma_new = dot(s, s);
        res.iterations = k + 1;
        res.relative_residual = norm2(r) / b_norm;
        res.relative_normal_residual = std::sqrt(gamma_new) / s0_norm;
        if (res.relative_residual <= tol || res.relative_normal_residual <= tol) {
            res.converged = true;
            return res;
        }
        const double beta = gamma_new / gamma;
        gamma = gamma_new;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = s[i] + beta * p[i];
    }
    return res;
}

}  // namespace nsmi
