#pragma once

#include "elastoray/xray.hpp"

namespace elastoray {

// Matrix-free fourth-order elliptic operator
//   L u = gamma Lap^2 u - Lap(grad beta_plus . grad u)
// with gamma = (c_p^2 - c_s^2)(c_p^2 - 4 c_s^2) / (c_p^4 - 5 c_p^2 c_s^2 + 8 c_s^4).
// Unknowns live on the mask; u is extended by zero outside it, which clamps
// both the value and the normal derivative across the masked ring.
class T4Operator {
  public:
    T4Operator(const MediumModel& model, const ScalarField& beta_plus, const Grid3& grid,
               std::vector<uint8_t> mask);

    size_t unknowns() const { return nfree_; }
    const std::vector<uint8_t>& mask() const { return mask_; }
    const Grid3& grid() const { return grid_; }
    double gamma_at(size_t node) const { return gamma_[node]; }

    // y = L x over mask-indexed vectors.
    void apply(const std::vector<double>& x, std::vector<double>& y) const;
    // Exact transpose of apply.
    void apply_adjoint(const std::vector<double>& y, std::vector<double>& x) const;

    std::vector<double> restrict_field(const ScalarField& f) const;  // mask order
    ScalarField embed(const std::vector<double>& u) const;           // zero outside mask

  private:
    Grid3 grid_;
    std::vector<uint8_t> mask_;
    std::vector<long> free_id_;
    std::vector<size_t> free_nodes_;
    size_t nfree_ = 0;
    std::vector<double> gamma_;       // per node
    std::vector<double> grad_bp_[3];  // per node, clamp-extended to the faces
};

struct BetaSolve {
    ScalarField u;
    std::vector<double> residuals;
    int iterations = 0;
    bool converged = false;
    double final_relative_residual = 0.0;
};

// Least-squares solve of L u = rhs over the operator mask (CGLS on the normal
// equations). Non-convergence is reported in the result, not thrown.
BetaSolve solve_beta_minus(const T4Operator& op, const ScalarField& rhs, double tol = 1e-8,
                           int max_iter = 20000);

struct Certificate {
    ScalarField beta_minus;       // estimate of (log rho1 - log rho2)/2
    double l2_norm = 0.0;
    double linf_norm = 0.0;
    double pde_residual = 0.0;    // final relative residual of the solve
    double degenerate_fraction = 0.0;
    bool verdict = false;         // true when the recovered field is zero to threshold
    double zero_threshold = 1e-6;
    double quadratic_remainder = 0.0;  // size of the dropped nonlinear source term
    InversionDiagnostics inversion;
    int projection_iterations = 0;
    int solve_iterations = 0;
};

struct CertifyOptions {
    InversionOptions inversion;
    double zero_threshold = 1e-6;
    double eps_degenerate = 0.0;  // 0: default from admissibility_report
    double solve_tol = 1e-8;
    int solve_max_iter = 20000;
};

// Full pipeline: invert the transform samples, strip the potential part,
// contract the Saint-Venant image of the result into a fourth-order source,
// and solve for the density log-ratio with the operator linearized at
// beta_plus = 2 log rho2. Zero data certifies beta_minus = 0.
Certificate certify_uniqueness(const MediumModel& model, const LensRegion& region,
                               const ScalarField& rho2, const RayFan& fan,
                               const std::vector<TransformSample>& samples, const Grid3& grid,
                               const CertifyOptions& opts = {});

}  // namespace elastoray
