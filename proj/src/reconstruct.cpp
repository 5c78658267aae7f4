#include "elastoray/reconstruct.hpp"

#include <cmath>
#include <stdexcept>

#include "elastoray/stencil.hpp"
#include "elastoray/tensorfield.hpp"

namespace elastoray {

namespace {

// Full-grid axis stencils with zero extension beyond the faces. The second
// derivative is symmetric and the first derivative antisymmetric as full-grid
// operators, which keeps the operator transpose a composition of the same
// passes.
void d2_full(const Grid3& g, const std::vector<double>& in, int axis, std::vector<double>& out) {
    static const double kC[5] = {-1.0, 16.0, -30.0, 16.0, -1.0};
    long strides[3] = {1, g.dims[0], static_cast<long>(g.dims[0]) * g.dims[1]};
    long stride = strides[axis];
    double inv = 1.0 / (12.0 * g.spacing * g.spacing);
    size_t nn = g.node_count();
    out.assign(nn, 0.0);
    for (size_t n = 0; n < nn; ++n) {
        int i, j, k;
        g.unlin(n, i, j, k);
        int q = axis == 0 ? i : (axis == 1 ? j : k);
        int dim = g.dims[axis];
        double acc = 0.0;
        for (int t = -2; t <= 2; ++t) {
            int qq = q + t;
            if (qq < 0 || qq >= dim) continue;
            acc += kC[t + 2] * in[static_cast<size_t>(static_cast<long long>(n) + t * stride)];
        }
        out[n] = acc * inv;
    }
}

void d1_full(const Grid3& g, const std::vector<double>& in, int axis, std::vector<double>& out) {
    static const double kC[5] = {1.0, -8.0, 0.0, 8.0, -1.0};
    long strides[3] = {1, g.dims[0], static_cast<long>(g.dims[0]) * g.dims[1]};
    long stride = strides[axis];
    double inv = 1.0 / (12.0 * g.spacing);
    size_t nn = g.node_count();
    out.assign(nn, 0.0);
    for (size_t n = 0; n < nn; ++n) {
        int i, j, k;
        g.unlin(n, i, j, k);
        int q = axis == 0 ? i : (axis == 1 ? j : k);
        int dim = g.dims[axis];
        double acc = 0.0;
        for (int t = -2; t <= 2; ++t) {
            if (t == 0) continue;
            int qq = q + t;
            if (qq < 0 || qq >= dim) continue;
            acc += kC[t + 2] * in[static_cast<size_t>(static_cast<long long>(n) + t * stride)];
        }
        out[n] = acc * inv;
    }
}

void laplacian_full(const Grid3& g, const std::vector<double>& in, std::vector<double>& out,
                    std::vector<double>& scratch) {
    d2_full(g, in, 0, out);
    for (int axis = 1; axis < 3; ++axis) {
        d2_full(g, in, axis, scratch);
        for (size_t n = 0; n < out.size(); ++n) out[n] += scratch[n];
    }
}

}  // namespace

T4Operator::T4Operator(const MediumModel& model, const ScalarField& beta_plus, const Grid3& grid,
                       std::vector<uint8_t> mask)
    : grid_(grid), mask_(std::move(mask)) {
    grid_.validate();
    size_t nn = grid_.node_count();
    if (mask_.size() != nn) throw std::invalid_argument("T4Operator: mask size mismatch");
    if (!same_layout(beta_plus.grid, grid_))
        throw std::invalid_argument("T4Operator: beta_plus must live on the given grid");

    free_id_.assign(nn, -1);
    for (size_t n = 0; n < nn; ++n)
        if (mask_[n]) {
            free_id_[n] = static_cast<long>(nfree_++);
            free_nodes_.push_back(n);
        }
    if (nfree_ == 0) throw std::invalid_argument("T4Operator: empty mask");

    gamma_.assign(nn, 0.0);
    for (size_t n = 0; n < nn; ++n) {
        if (!mask_[n]) continue;
        int i, j, k;
        grid_.unlin(n, i, j, k);
        MediumPoint mp = model.eval(grid_.position(i, j, k));
        double cp2 = mp.cp * mp.cp, cs2 = mp.cs * mp.cs;
        double quart = cp2 * cp2 - 5.0 * cp2 * cs2 + 8.0 * cs2 * cs2;
        gamma_[n] = (cp2 - cs2) * (cp2 - 4.0 * cs2) / quart;
    }

    // Transport coefficient grad beta_plus everywhere; the outermost layer,
    // where no 4th-order stencil fits, copies the nearest interior value.
    for (int a = 0; a < 3; ++a) {
        GridField d = d1_ring1(beta_plus, 0, a);
        grad_bp_[a].assign(nn, 0.0);
        for (size_t n = 0; n < nn; ++n) {
            size_t src = n;
            if (!d.mask[n]) {
                int i, j, k;
                grid_.unlin(n, i, j, k);
                int ii = std::min(std::max(i, 1), grid_.dims[0] - 2);
                int jj = std::min(std::max(j, 1), grid_.dims[1] - 2);
                int kk = std::min(std::max(k, 1), grid_.dims[2] - 2);
                src = grid_.lin(ii, jj, kk);
                if (!d.mask[src]) continue;  // degenerate tiny grids: leave 0
            }
            grad_bp_[a][n] = d.at(src, 0);
        }
    }
}

std::vector<double> T4Operator::restrict_field(const ScalarField& f) const {
    std::vector<double> out(nfree_, 0.0);
    for (size_t q = 0; q < nfree_; ++q) out[q] = f.at(free_nodes_[q], 0);
    return out;
}

ScalarField T4Operator::embed(const std::vector<double>& u) const {
    ScalarField f(grid_, 1, true);
    f.mask = mask_;
    for (size_t q = 0; q < nfree_; ++q) f.at(free_nodes_[q], 0) = u[q];
    return f;
}

void T4Operator::apply(const std::vector<double>& x, std::vector<double>& y) const {
    size_t nn = grid_.node_count();
    std::vector<double> full(nn, 0.0), lap(nn), bilap(nn), scratch(nn), g(nn, 0.0), lg(nn);
    for (size_t q = 0; q < nfree_; ++q) full[free_nodes_[q]] = x[q];

    laplacian_full(grid_, full, lap, scratch);
    laplacian_full(grid_, lap, bilap, scratch);

    for (int a = 0; a < 3; ++a) {
        d1_full(grid_, full, a, scratch);
        for (size_t n = 0; n < nn; ++n) g[n] += grad_bp_[a][n] * scratch[n];
    }
    laplacian_full(grid_, g, lg, scratch);

    y.assign(nfree_, 0.0);
    for (size_t q = 0; q < nfree_; ++q) {
        size_t n = free_nodes_[q];
        y[q] = gamma_[n] * bilap[n] - lg[n];
    }
}

void T4Operator::apply_adjoint(const std::vector<double>& y, std::vector<double>& x) const {
    size_t nn = grid_.node_count();
    std::vector<double> full(nn, 0.0), lap(nn), bilap(nn), scratch(nn), acc(nn, 0.0), da(nn);
    for (size_t q = 0; q < nfree_; ++q) full[free_nodes_[q]] = y[q];

    // (diag(gamma) Lap Lap)^T = Lap Lap diag(gamma)
    std::vector<double> gk(nn, 0.0);
    for (size_t q = 0; q < nfree_; ++q) {
        size_t n = free_nodes_[q];
        gk[n] = gamma_[n] * y[q];
    }
    laplacian_full(grid_, gk, lap, scratch);
    laplacian_full(grid_, lap, bilap, scratch);

    // (Lap sum_a diag(g_a) D_a)^T = -sum_a D_a diag(g_a) Lap, and the leading
    // minus sign of the transport term flips it back to +.
    laplacian_full(grid_, full, lap, scratch);
    for (int a = 0; a < 3; ++a) {
        for (size_t n = 0; n < nn; ++n) scratch[n] = grad_bp_[a][n] * lap[n];
        d1_full(grid_, scratch, a, da);
        for (size_t n = 0; n < nn; ++n) acc[n] += da[n];
    }

    x.assign(nfree_, 0.0);
    for (size_t q = 0; q < nfree_; ++q) {
        size_t n = free_nodes_[q];
        x[q] = bilap[n] + acc[n];
    }
}

BetaSolve solve_beta_minus(const T4Operator& op, const ScalarField& rhs, double tol, int max_iter) {
    std::vector<double> b = op.restrict_field(rhs);
    auto apply_a = [&](const std::vector<double>& x, std::vector<double>& y) { op.apply(x, y); };
    auto apply_at = [&](const std::vector<double>& y, std::vector<double>& x) {
        op.apply_adjoint(y, x);
    };
    CglsResult cg = cgls_solve(op.unknowns(), op.unknowns(), apply_a, apply_at, b, 0.0, tol,
                               max_iter);
    BetaSolve out;
    out.u = op.embed(cg.x);
    out.residuals = std::move(cg.residuals);
    out.iterations = cg.iterations;
    out.converged = cg.converged;
    out.final_relative_residual = cg.final_relative_residual;
    return out;
}

Certificate certify_uniqueness(const MediumModel& model, const LensRegion& region,
                               const ScalarField& rho2, const RayFan& fan,
                               const std::vector<TransformSample>& samples, const Grid3& grid,
                               const CertifyOptions& opts) {
    auto staged = [](const char* stage, const std::exception& e) {
        return std::runtime_error(std::string("certify[") + stage + "]: " + e.what());
    };

    size_t nn = grid.node_count();
    if (!same_layout(rho2.grid, grid))
        throw std::invalid_argument("certify_uniqueness: rho2 must live on the given grid");
    for (size_t n = 0; n < nn; ++n)
        if (!(rho2.at(n, 0) > 0.0))
            throw std::invalid_argument("certify_uniqueness: rho2 must be positive");

    Certificate cert;
    cert.zero_threshold = opts.zero_threshold;

    // Stage 1: linearized inversion of the transform data.
    SymTensor2Field estimate;
    try {
        auto [est, diag] = invert_transform(fan, samples, grid, opts.inversion);
        estimate = std::move(est);
        cert.inversion = std::move(diag);
    } catch (const std::exception& e) {
        throw staged("invert", e);
    }

    // Stage 2: gauge removal.
    SymTensor2Field gauged;
    try {
        ProjectionResult proj = solenoidal_project(model, estimate, grid, &region);
        gauged = std::move(proj.solenoidal);
        cert.projection_iterations = proj.iterations;
    } catch (const std::exception& e) {
        throw staged("project", e);
    }

    // Stage 3: fourth-order source from the Saint-Venant contraction, scaled
    // so the recovered field estimates (log rho1 - log rho2)/2.
    ScalarField rhs(grid, 1, true);
    try {
        SymTensor4Field w4 = saint_venant(gauged);
        ScalarField contr = sym4_contract_iijj(w4);
        for (size_t n = 0; n < nn; ++n) {
            if (!contr.valid(n)) {
                rhs.mask[n] = 0;
                continue;
            }
            int i, j, k;
            grid.unlin(n, i, j, k);
            MediumPoint mp = model.eval(grid.position(i, j, k));
            double cp2 = mp.cp * mp.cp, cs2 = mp.cs * mp.cs;
            double quart = cp2 * cp2 - 5.0 * cp2 * cs2 + 8.0 * cs2 * cs2;
            double zeta = -mp.cp * (cp2 - cs2) / (2.0 * quart);
            rhs.at(n, 0) = 0.5 * zeta * contr.at(n, 0);
        }
    } catch (const std::exception& e) {
        throw staged("source", e);
    }

    // Stage 4: operator mask and solve.
    BetaSolve solve;
    try {
        AdmissibilityReport rep = admissibility_report(model, region, grid, opts.eps_degenerate);
        cert.degenerate_fraction = rep.degenerate_fraction;

        std::vector<uint8_t> mask(nn, 0);
        size_t count = 0;
        for (int k = 0; k < grid.dims[2]; ++k)
            for (int j = 0; j < grid.dims[1]; ++j)
                for (int i = 0; i < grid.dims[0]; ++i) {
                    size_t n = grid.lin(i, j, k);
                    if (grid.edge_distance(i, j, k) < 2) continue;
                    if (!rhs.valid(n)) continue;
                    if (!rep.evaluable[n] || rep.degenerate[n]) continue;
                    if (region.classify(grid.position(i, j, k)) != Membership::Interior) continue;
                    mask[n] = 1;
                    ++count;
                }
        if (count == 0) throw std::runtime_error("empty solve mask");

        ScalarField beta_plus(grid, 1);
        for (size_t n = 0; n < nn; ++n) beta_plus.at(n, 0) = 2.0 * std::log(rho2.at(n, 0));

        T4Operator op(model, beta_plus, grid, std::move(mask));
        solve = solve_beta_minus(op, rhs, opts.solve_tol, opts.solve_max_iter);
    } catch (const std::exception& e) {
        throw staged("solve", e);
    }

    cert.beta_minus = std::move(solve.u);
    cert.l2_norm = l2_norm(cert.beta_minus);
    cert.linf_norm = linf_norm(cert.beta_minus);
    cert.pde_residual = solve.final_relative_residual;
    cert.solve_iterations = solve.iterations;
    cert.verdict = cert.l2_norm <= cert.zero_threshold;

    // Diagnostic: size of the quadratic source dropped by linearizing
    // beta_plus at 2 log rho2. Lap(grad b . grad b) over the solve mask.
    {
        GridField gb;
        gradient4(cert.beta_minus, gb);
        ScalarField g2(grid, 1, true);
        for (size_t n = 0; n < nn; ++n) {
            if (!gb.valid(n)) {
                g2.mask[n] = 0;
                continue;
            }
            g2.at(n, 0) = gb.at(n, 0) * gb.at(n, 0) + gb.at(n, 1) * gb.at(n, 1) +
                          gb.at(n, 2) * gb.at(n, 2);
        }
        GridField lap_g2 = laplacian4(g2);
        for (size_t n = 0; n < nn; ++n)
            if (!cert.beta_minus.valid(n)) lap_g2.mask[n] = 0;
        cert.quadratic_remainder = l2_norm(lap_g2);
    }
    return cert;
}

}  // namespace elastoray
