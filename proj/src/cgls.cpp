#include "elastoray/cgls.hpp"

#include <cmath>

namespace elastoray {

namespace {
double dot_v(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}
}  // namespace

CglsResult cgls_solve(size_t nx, size_t ny, const LinOp& apply_a, const LinOp& apply_at,
                      const std::vector<double>& b, double lambda, double tol, int max_iter) {
    CglsResult res;
    res.x.assign(nx, 0.0);

    std::vector<double> r = b;       // data residual b - A x
    std::vector<double> s(nx, 0.0);  // normal-equation residual A^T r - lambda x
    std::vector<double> q(ny, 0.0);
    apply_at(r, s);

    double b2 = dot_v(b, b);
    double r0 = std::sqrt(b2);
    double gamma = dot_v(s, s);
    double g0 = std::sqrt(gamma);
    if (r0 == 0.0 || g0 == 0.0) {
        // zero data or data orthogonal to the range: x = 0 is the minimizer
        res.converged = true;
        res.residuals.push_back(r0);
        return res;
    }

    std::vector<double> p = s;
    double prev_aug = r0;
    double gamma_min = gamma;
    std::vector<double> x_best = res.x;
    double aug_best = r0;
    int it_best = 0;

    for (int it = 0; it < max_iter; ++it) {
        apply_a(p, q);
        double delta = dot_v(q, q) + lambda * dot_v(p, p);
        if (delta <= 0.0) break;
        double alpha = gamma / delta;
        for (size_t i = 0; i < nx; ++i) res.x[i] += alpha * p[i];
        for (size_t i = 0; i < ny; ++i) r[i] -= alpha * q[i];

        double aug = std::sqrt(dot_v(r, r) + lambda * dot_v(res.x, res.x));
        if (aug > prev_aug * (1.0 + 1e-7)) break;  // stagnation past the optimum
        prev_aug = aug;
        res.residuals.push_back(aug);
        res.iterations = it + 1;

        apply_at(r, s);
        if (lambda > 0.0)
            for (size_t i = 0; i < nx; ++i) s[i] -= lambda * res.x[i];
        double gamma_next = dot_v(s, s);

        if (gamma_next < gamma_min) {
            gamma_min = gamma_next;
            x_best = res.x;
            aug_best = aug;
            it_best = res.iterations;
        }
        // stop on the normal-equation (gradient) residual, which also handles
        // inconsistent least-squares data
        if (std::sqrt(gamma_next) <= tol * g0) {
            res.converged = true;
            break;
        }
        // once the gradient grows far past its running minimum the iteration
        // is drifting in round-off; keep the best iterate seen
        if (gamma_next > 1e6 * gamma_min) break;

        double beta = gamma_next / gamma;
        for (size_t i = 0; i < nx; ++i) p[i] = s[i] + beta * p[i];
        gamma = gamma_next;
    }
    res.x = std::move(x_best);
    res.iterations = it_best;
    res.residuals.resize(static_cast<size_t>(it_best));
    res.final_relative_residual = aug_best / r0;
    if (std::sqrt(gamma_min) <= tol * g0) res.converged = true;
    return res;
}

}  // namespace elastoray
