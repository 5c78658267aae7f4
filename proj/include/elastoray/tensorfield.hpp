#pragma once

#include <utility>

#include "elastoray/medium.hpp"
#include "elastoray/stencil.hpp"

namespace elastoray {

// Symmetric 4-tensor storage: both index pairs use the Sym3 pair order
// (11, 22, 33, 12, 13, 23) and the pair swap is factored out, leaving the 21
// entries of the upper triangle of a 6x6 symmetric matrix.
inline int sym4_pair_index(int a, int b) {
    if (a > b) std::swap(a, b);
    return a * 6 - a * (a - 1) / 2 + (b - a);
}
inline int sym4_index(int i1, int i2, int j1, int j2) {
    return sym4_pair_index(Sym3::index(i1, i2), Sym3::index(j1, j2));
}

// Coefficient fields entering the model-difference tensor.
struct BCoefficients {
    ScalarField kappa;
    ScalarField omega;
    ScalarField alpha;
    OneFormField v;       // the vector coefficient V
    ScalarField beta1;    // 1/2 log rho_1
    ScalarField beta2;
};

// Pointwise difference tensor for two media sharing wave speeds:
//   B = kappa [grad b1 (x) grad b1 - grad b2 (x) grad b2]
//       - [alpha - grad(b1-b2).V] I
//       + grad(b1-b2) (*) (V + 2 grad c_p)
//       + 2 (c_p^2 - c_s^2) Hess(b1-b2),        b_j = 1/2 log rho_j,
// with kappa = 4 c_s^2 (c_p^2 - 2 c_s^2) / (c_p (c_p^2 - c_s^2)),
// V = 2 grad c_p - 8 c_s^2 / (c_p (c_p^2 - c_s^2)) grad c_s^2,
// alpha = (c_p^2 - 4 c_s^2)/(2 c_p) Lap log(rho1/rho2)
//         - omega/4 (|grad log rho1|^2 - |grad log rho2|^2),
// omega = (c_p^4 - 5 c_p^2 c_s^2 + 8 c_s^4) / (c_p (c_p^2 - c_s^2)).
// All derivatives are symbolic, so B carries no discretization error.
// Throws if the two models' speeds differ anywhere on the grid (tol 1e-10).
std::pair<SymTensor2Field, BCoefficients> build_difference_tensor(const MediumModel& model1,
                                                                  const MediumModel& model2,
                                                                  const Grid3& grid);

// Symmetrized covariant derivative of a 1-form under g = c_p^-2 dx^2:
//   (d_g v)_ij = (d_i v_j + d_j v_i)/2 - Gamma^k_ij v_k,
//   Gamma^k_ij = d^k_i d_j psi + d^k_j d_i psi - d_ij d_k psi,  psi = -log c_p.
// Spatial derivatives of v use 4th-order stencils with a one-node masked ring
// (offset stencils next to the faces); psi gradients are symbolic.
SymTensor2Field sym_derivative_g(const MediumModel& model, const OneFormField& v);

// Euclidean variant (no Christoffel terms).
SymTensor2Field sym_derivative_e(const OneFormField& v);

// Saint-Venant operator: symmetric 2-tensor -> symmetric 4-tensor,
//   (WB)_{i1 i2 j1 j2} = s(i1 i2) s(j1 j2) [ d2 B_{i1 i2}/dx_{j1} dx_{j2}
//       - 2 d2 B_{i1 j1}/dx_{i2} dx_{j2} + d2 B_{j1 j2}/dx_{i1} dx_{i2} ],
// with 4th-order second differences; two-node boundary ring masked.
// Its kernel (locally) is the Euclidean potential fields d_e v.
SymTensor4Field saint_venant(const SymTensor2Field& b);

// Sum of W[e_i, e_i, e_j, e_j] over i, j.
ScalarField sym4_contract_iijj(const SymTensor4Field& w);

// Two-term fourth-order functional of a density pair at fixed speeds:
//   -2 (c_p^2 - 4 c_s^2)/c_p Lap^2 (log rho1 - log rho2)
//   + omega Lap[ grad(log rho1 + log rho2) . grad(log rho1 - log rho2) ],
// assembled from composed 4th-order stencils (four-node margin consumed).
ScalarField t4_functional(const BCoefficients& coeffs, const MediumModel& model,
                          const ScalarField& rho1, const ScalarField& rho2, const Grid3& grid);

// Laplace-Beltrami operator of g = c_p^-2 dx^2 on a closed-form scalar:
// c_p^2 Lap f - c_p grad c_p . grad f (divergence form expanded).
double conformal_laplacian(const MediumModel& model, const ScalarFieldExpr& f, const Vec3& x);

}  // namespace elastoray
