#include "elastoray/tensorfield.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace elastoray {

std::pair<SymTensor2Field, BCoefficients> build_difference_tensor(const MediumModel& model1,
                                                                  const MediumModel& model2,
                                                                  const Grid3& grid) {
    grid.validate();
    SymTensor2Field b(grid, 6, true);
    BCoefficients co;
    co.kappa = ScalarField(grid, 1, true);
    co.omega = ScalarField(grid, 1, true);
    co.alpha = ScalarField(grid, 1, true);
    co.v = OneFormField(grid, 3, true);
    co.beta1 = ScalarField(grid, 1, true);
    co.beta2 = ScalarField(grid, 1, true);

    for (int k = 0; k < grid.dims[2]; ++k)
        for (int j = 0; j < grid.dims[1]; ++j)
            for (int i = 0; i < grid.dims[0]; ++i) {
                size_t n = grid.lin(i, j, k);
                Vec3 x = grid.position(i, j, k);
                MediumPoint p1 = model1.eval(x);
                MediumPoint p2 = model2.eval(x);
                double scale = std::max(1.0, p1.cp);
                if (std::fabs(p1.cp - p2.cp) > 1e-10 * scale ||
                    std::fabs(p1.cs - p2.cs) > 1e-10 * scale) {
                    std::ostringstream msg;
                    msg << "build_difference_tensor: wave speeds of '" << model1.name() << "' and '"
                        << model2.name() << "' differ at node (" << i << "," << j << "," << k << ")";
                    throw std::invalid_argument(msg.str());
                }
                double cp = p1.cp, cs = p1.cs;
                double cp2 = cp * cp, cs2 = cs * cs;
                double dsq = cp2 - cs2;  // positive: lambda + mu > 0 holds where speeds exist

                double kappa = 4.0 * cs2 * (cp2 - 2.0 * cs2) / (cp * dsq);
                double quart = cp2 * cp2 - 5.0 * cp2 * cs2 + 8.0 * cs2 * cs2;
                double omega = quart / (cp * dsq);

                Vec3 grad_b1 = 0.5 * p1.grad_log_rho;
                Vec3 grad_b2 = 0.5 * p2.grad_log_rho;
                Vec3 grad_bd = grad_b1 - grad_b2;

                Sym3 hess_w = model1.log_rho_hessian(x) - model2.log_rho_hessian(x);
                double lap_w = hess_w.trace();  // Lap log(rho1/rho2)

                Vec3 vcoef = 2.0 * p1.grad_cp - (8.0 * cs2 / (cp * dsq)) * p1.grad_cs2;

                double alpha = (cp2 - 4.0 * cs2) / (2.0 * cp) * lap_w -
                               0.25 * omega * (dot(p1.grad_log_rho, p1.grad_log_rho) -
                                               dot(p2.grad_log_rho, p2.grad_log_rho));

                Sym3 tensor = kappa * (outer_sym(grad_b1) - outer_sym(grad_b2));
                tensor += (-(alpha - dot(grad_bd, vcoef))) * sym3_identity();
                tensor += sym_product(grad_bd, vcoef + 2.0 * p1.grad_cp);
                tensor += dsq * hess_w;  // 2 (cp^2-cs^2) Hess(b1-b2), b_j = log(rho_j)/2

                sym2_set(b, n, tensor);
                co.kappa.at(n, 0) = kappa;
                co.omega.at(n, 0) = omega;
                co.alpha.at(n, 0) = alpha;
                for (int a = 0; a < 3; ++a) co.v.at(n, a) = vcoef[a];
                co.beta1.at(n, 0) = 0.5 * std::log(p1.rho);
                co.beta2.at(n, 0) = 0.5 * std::log(p2.rho);
            }
    return {std::move(b), std::move(co)};
}

namespace {

SymTensor2Field sym_derivative_impl(const MediumModel* model, const OneFormField& v) {
    const Grid3& grid = v.grid;
    for (int a = 0; a < 3; ++a)
        if (grid.dims[a] < 5)
            throw std::invalid_argument("sym_derivative: grid needs at least 5 nodes per axis");
    if (v.ncomp != 3) throw std::invalid_argument("sym_derivative: input must have 3 components");

    // dv[i][axis] = d v_i / d x_axis with a one-node masked ring.
    GridField dv[3][3];
    for (int i = 0; i < 3; ++i)
        for (int a = 0; a < 3; ++a) dv[i][a] = d1_ring1(v, i, a);

    SymTensor2Field out(grid, 6, true);
    size_t nn = grid.node_count();
    for (size_t n = 0; n < nn; ++n) {
        bool ok = v.valid(n);
        for (int i = 0; i < 3 && ok; ++i)
            for (int a = 0; a < 3; ++a) ok = ok && dv[i][a].mask[n] != 0;
        if (!ok) {
            out.mask[n] = 0;
            continue;
        }
        Sym3 t;
        for (int i = 0; i < 3; ++i)
            for (int jx = i; jx < 3; ++jx)
                t.c[Sym3::index(i, jx)] = 0.5 * (dv[i][jx].at(n, 0) + dv[jx][i].at(n, 0));
        if (model) {
            int i, j, k;
            grid.unlin(n, i, j, k);
            MediumPoint mp = model->eval(grid.position(i, j, k));
            Vec3 dpsi = -mp.grad_log_cp;  // psi = -log c_p
            Vec3 vv{v.at(n, 0), v.at(n, 1), v.at(n, 2)};
            double vdp = dot(vv, dpsi);
            for (int a = 0; a < 3; ++a)
                for (int bx = a; bx < 3; ++bx) {
                    double gamma = vv[a] * dpsi[bx] + vv[bx] * dpsi[a] - (a == bx ? vdp : 0.0);
                    t.c[Sym3::index(a, bx)] -= gamma;
                }
        }
        sym2_set(out, n, t);
    }
    return out;
}

}  // namespace

SymTensor2Field sym_derivative_g(const MediumModel& model, const OneFormField& v) {
    return sym_derivative_impl(&model, v);
}

SymTensor2Field sym_derivative_e(const OneFormField& v) { return sym_derivative_impl(nullptr, v); }

SymTensor4Field saint_venant(const SymTensor2Field& b) {
    const Grid3& grid = b.grid;
    for (int a = 0; a < 3; ++a)
        if (grid.dims[a] < 5)
            throw std::invalid_argument("saint_venant: grid needs at least 5 nodes per axis");
    if (b.ncomp != 6) throw std::invalid_argument("saint_venant: input must have 6 components");

    // hess[comp][pair(c,d)] = d^2 B_comp / dx_c dx_d
    std::vector<GridField> hess(36);
    for (int comp = 0; comp < 6; ++comp)
        for (int c = 0; c < 3; ++c)
            for (int d = c; d < 3; ++d)
                hess[static_cast<size_t>(comp) * 6 + Sym3::index(c, d)] = d2_mixed4(b, comp, c, d);

    auto dd = [&](size_t n, int comp, int c, int d) {
        return hess[static_cast<size_t>(comp) * 6 + Sym3::index(c, d)].at(n, 0);
    };

    static const int kPairs[6][2] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}};

    SymTensor4Field out(grid, 21, true);
    size_t nn = grid.node_count();
    for (size_t n = 0; n < nn; ++n) {
        bool ok = true;
        for (auto& hf : hess)
            if (!hf.mask[n]) { ok = false; break; }
        if (!ok) {
            out.mask[n] = 0;
            continue;
        }
        for (int a = 0; a < 6; ++a) {
            int i1 = kPairs[a][0], i2 = kPairs[a][1];
            for (int bq = a; bq < 6; ++bq) {
                int j1 = kPairs[bq][0], j2 = kPairs[bq][1];
                double term1 = dd(n, a, j1, j2);
                double term3 = dd(n, bq, i1, i2);
                double term2 = dd(n, Sym3::index(i1, j1), i2, j2) +
                               dd(n, Sym3::index(i2, j1), i1, j2) +
                               dd(n, Sym3::index(i1, j2), i2, j1) +
                               dd(n, Sym3::index(i2, j2), i1, j1);
                out.at(n, sym4_pair_index(a, bq)) = term1 + term3 - 0.5 * term2;
            }
        }
    }
    return out;
}

ScalarField sym4_contract_iijj(const SymTensor4Field& w) {
    if (w.ncomp != 21) throw std::invalid_argument("sym4_contract_iijj: input must have 21 components");
    ScalarField out(w.grid, 1, true);
    size_t nn = w.grid.node_count();
    for (size_t n = 0; n < nn; ++n) {
        if (!w.valid(n)) {
            out.mask[n] = 0;
            continue;
        }
        double acc = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) acc += w.at(n, sym4_pair_index(i, j));
        out.at(n, 0) = acc;
    }
    return out;
}

ScalarField t4_functional(const BCoefficients& coeffs, const MediumModel& model,
                          const ScalarField& rho1, const ScalarField& rho2, const Grid3& grid) {
    for (int a = 0; a < 3; ++a)
        if (grid.dims[a] < 9)
            throw std::invalid_argument("t4_functional: insufficient margin (need 9 nodes per axis)");
    if (!same_layout(rho1.grid, grid) || !same_layout(rho2.grid, grid))
        throw std::invalid_argument("t4_functional: density fields must live on the given grid");
    if (coeffs.omega.values.empty() || !same_layout(coeffs.omega.grid, grid))
        throw std::invalid_argument("t4_functional: coefficient fields must live on the given grid");

    size_t nn = grid.node_count();
    ScalarField logsum(grid, 1), logdiff(grid, 1);
    for (size_t n = 0; n < nn; ++n) {
        double r1 = rho1.at(n, 0), r2 = rho2.at(n, 0);
        if (!(r1 > 0.0) || !(r2 > 0.0))
            throw std::invalid_argument("t4_functional: non-positive density on grid");
        logsum.at(n, 0) = std::log(r1) + std::log(r2);
        logdiff.at(n, 0) = std::log(r1) - std::log(r2);
    }

    GridField lap_w = laplacian4(logdiff);
    GridField bilap_w = laplacian4(lap_w);

    GridField grad_u, grad_w;
    gradient4(logsum, grad_u);
    gradient4(logdiff, grad_w);
    ScalarField dotp(grid, 1, true);
    for (size_t n = 0; n < nn; ++n) {
        if (!grad_u.valid(n) || !grad_w.valid(n)) {
            dotp.mask[n] = 0;
            continue;
        }
        dotp.at(n, 0) = grad_u.at(n, 0) * grad_w.at(n, 0) + grad_u.at(n, 1) * grad_w.at(n, 1) +
                        grad_u.at(n, 2) * grad_w.at(n, 2);
    }
    GridField lap_dot = laplacian4(dotp);

    ScalarField out(grid, 1, true);
    size_t valid = 0;
    for (int k = 0; k < grid.dims[2]; ++k)
        for (int j = 0; j < grid.dims[1]; ++j)
            for (int i = 0; i < grid.dims[0]; ++i) {
                size_t n = grid.lin(i, j, k);
                if (!bilap_w.valid(n) || !lap_dot.valid(n)) {
                    out.mask[n] = 0;
                    continue;
                }
                MediumPoint mp = model.eval(grid.position(i, j, k));
                double cp = mp.cp, cs = mp.cs;
                double c1 = -2.0 * (cp * cp - 4.0 * cs * cs) / cp;
                out.at(n, 0) = c1 * bilap_w.at(n, 0) + coeffs.omega.at(n, 0) * lap_dot.at(n, 0);
                ++valid;
            }
    if (valid == 0) throw std::invalid_argument("t4_functional: insufficient margin (empty interior)");
    return out;
}

double conformal_laplacian(const MediumModel& model, const ScalarFieldExpr& f, const Vec3& x) {
    MediumPoint mp = model.eval(x);
    double lap = f.laplacian(x);
    Vec3 grad = f.grad(x);
    return mp.cp * mp.cp * lap - mp.cp * dot(mp.grad_cp, grad);
}

}  // namespace elastoray
