#pragma once

#include <functional>
#include <vector>

namespace elastoray {

// Conjugate gradients on the (possibly Tikhonov-augmented) normal equations,
// run in factored CGLS form for numerical stability. Minimizes
// |A x - b|^2 + lambda |x|^2 over the Krylov spaces, so the reported
// augmented residual is non-increasing.
struct CglsResult {
    std::vector<double> x;
    std::vector<double> residuals;  // augmented residual after each iteration
    int iterations = 0;
    bool converged = false;
    double final_relative_residual = 0.0;
};

using LinOp = std::function<void(const std::vector<double>&, std::vector<double>&)>;

// nx: unknowns, ny: data rows. apply_a: x -> y, apply_at: y -> x (exact
// transpose of apply_a). Stops at relative augmented residual <= tol or
// max_iter. All arithmetic is sequential in fixed order.
CglsResult cgls_solve(size_t nx, size_t ny, const LinOp& apply_a, const LinOp& apply_at,
                      const std::vector<double>& b, double lambda, double tol, int max_iter);

}  // namespace elastoray
