#include "elastoray/xray.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "elastoray/parallel.hpp"
#include "elastoray/stencil.hpp"
#include "elastoray/tensorfield.hpp"

namespace elastoray {

namespace {

constexpr double kGolden = 2.399963229728653;  // golden angle

// Newton projection onto the level set theta = 0.
bool project_to_s(const LensRegion& region, Vec3& x, double tol) {
    for (int it = 0; it < 60; ++it) {
        double th = region.theta(x);
        if (std::fabs(th) <= tol) return true;
        Vec3 g = region.grad_theta(x);
        double g2 = dot(g, g);
        if (g2 < 1e-20) return false;
        x -= g * (th / g2);
    }
    return std::fabs(region.theta(x)) <= tol;
}

// Walks along S from the center in the tangent direction u until the path
// reaches the cap rim (or a step cap), returning the visited surface points.
// Works for curved S where a tangent-plane radius would be meaningless.
std::vector<Vec3> walk_on_s(const LensRegion& region, const Vec3& center, const Vec3& u,
                            double tol) {
    std::vector<Vec3> path{center};
    double step = 0.05 * region.cap_level();
    Vec3 p = center;
    Vec3 dir = u;
    for (int it = 0; it < 400; ++it) {
        Vec3 nrm = region.grad_theta(p);
        double n2 = dot(nrm, nrm);
        if (n2 < 1e-20) break;
        // re-orthogonalize the walking direction against the surface normal
        Vec3 t = dir - nrm * (dot(dir, nrm) / n2);
        double tn = norm(t);
        if (tn < 1e-12) break;
        t = t / tn;
        Vec3 q = p + t * step;
        if (!project_to_s(region, q, tol)) break;
        if (region.classify(q) != Membership::BoundaryS) break;
        if (region.xtilde(q) + region.cap_level() < 0.02 * region.cap_level()) break;
        path.push_back(q);
        dir = q - p;
        p = q;
    }
    return path;
}

}  // namespace

RayFan generate_fan(const MediumModel& model, const LensRegion& region, const FanSpec& spec) {
    if (spec.seeds < 1 || spec.dirs < 1)
        throw std::invalid_argument("generate_fan: seeds and dirs must be positive");

    double proj_tol = std::max(1e-13, 0.3 * region.s_tolerance());

    Vec3 center = spec.center_hint;
    if (!project_to_s(region, center, proj_tol) ||
        region.classify(center) != Membership::BoundaryS)
        throw std::runtime_error("generate_fan: could not locate a point on S from the center hint");

    double az_jitter = 0.0;
    if (spec.jitter_seed != 0) {
        std::mt19937_64 rng(spec.jitter_seed);
        az_jitter = std::uniform_real_distribution<double>(0.0, 2.0 * M_PI)(rng);
    }

    Vec3 n_c = normalized(region.grad_theta(center));  // theta > 0 inside, so this points inward
    Vec3 t1 = any_orthogonal(n_c);
    Vec3 t2 = cross(n_c, t1);

    RayFan fan;
    fan.spec = spec;

    struct Candidate {
        Vec3 seed, dir;
    };
    std::vector<Candidate> cands;
    cands.reserve(static_cast<size_t>(spec.seeds) * static_cast<size_t>(spec.dirs));

    for (int q = 0; q < spec.seeds; ++q) {
        double az = q * kGolden + az_jitter;
        Vec3 u = t1 * std::cos(az) + t2 * std::sin(az);
        std::vector<Vec3> path = walk_on_s(region, center, u, proj_tol);
        double frac = spec.seeds == 1 ? 0.0 : std::sqrt((q + 0.5) / spec.seeds) * spec.seed_margin;
        Vec3 seed = path[std::min(path.size() - 1,
                                  static_cast<size_t>(frac * static_cast<double>(path.size() - 1) +
                                                      0.5))];
        if (!project_to_s(region, seed, proj_tol) ||
            region.classify(seed) != Membership::BoundaryS) {
            fan.counts.seed_rejected += static_cast<size_t>(spec.dirs);
            continue;
        }
        Vec3 nrm = normalized(region.grad_theta(seed));
        Vec3 s1 = any_orthogonal(nrm);
        Vec3 s2 = cross(nrm, s1);
        double cos_max = std::cos(spec.cone_half_angle);
        for (int d = 0; d < spec.dirs; ++d) {
            double cpsi = 1.0 - (1.0 - cos_max) * ((d + 0.5) / spec.dirs);
            double spsi = std::sqrt(std::max(0.0, 1.0 - cpsi * cpsi));
            double phi = d * kGolden + az_jitter;
            Vec3 dir = nrm * cpsi + (s1 * std::cos(phi) + s2 * std::sin(phi)) * spsi;
            cands.push_back({seed, dir});
        }
    }

    std::vector<Bicharacteristic> traced(cands.size());
    RayOptions opts;
    opts.max_length = spec.max_length;
    parallel_for(cands.size(), [&](size_t i) {
        traced[i] = integrate_bicharacteristic(model, region, cands[i].seed, cands[i].dir,
                                               BranchSign::Plus, WaveMode::P, spec.h_ray, opts);
    });

    for (size_t i = 0; i < traced.size(); ++i) {
        Bicharacteristic& ray = traced[i];
        if (ray.exit == RayExit::InnerCap) {
            ++fan.counts.cap_exit;
            fan.discarded.push_back({cands[i].seed, cands[i].dir});
            fan.discard_reason.push_back(FanDiscard::CapExit);
        } else if (ray.exit == RayExit::Trapped) {
            ++fan.counts.trapped;
            fan.discarded.push_back({cands[i].seed, cands[i].dir});
            fan.discard_reason.push_back(FanDiscard::Trapped);
        } else if (ray.length() < spec.min_length) {
            ++fan.counts.too_short;
            fan.discarded.push_back({cands[i].seed, cands[i].dir});
            fan.discard_reason.push_back(FanDiscard::TooShort);
        } else {
            fan.launches.push_back({cands[i].seed, cands[i].dir});
            fan.rays.push_back(std::move(ray));
            ++fan.counts.kept;
        }
    }
    if (fan.rays.empty())
        throw std::runtime_error("generate_fan: every candidate was discarded; "
                                 "the direction cone does not reach S");
    return fan;
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

TransformSample forward_transform_fn(const std::function<Sym3(const Vec3&)>& b_eval,
                                     const Bicharacteristic& ray) {
    TransformSample out;
    const auto& sm = ray.samples;
    if (sm.size() < 2) throw std::invalid_argument("forward_transform: ray has fewer than 2 samples");
    double prev = quad_form(b_eval(sm[0].x), ray.direction(0));
    double acc = 0.0;
    for (size_t k = 1; k < sm.size(); ++k) {
        double cur = quad_form(b_eval(sm[k].x), ray.direction(k));
        acc += 0.5 * (sm[k].s - sm[k - 1].s) * (prev + cur);
        prev = cur;
    }
    out.value = acc;
    out.length = sm.back().s;
    return out;
}

TransformSample forward_transform(const SymTensor2Field& b, const Bicharacteristic& ray) {
    if (b.ncomp != 6) throw std::invalid_argument("forward_transform: field must have 6 components");
    return forward_transform_fn(
        [&](const Vec3& x) {
            double vals[6];
            if (!trilinear_sample(b, x, vals))
                throw std::runtime_error("forward_transform: ray leaves the valid mask of B");
            Sym3 s;
            for (int k = 0; k < 6; ++k) s.c[k] = vals[k];
            return s;
        },
        ray);
}

TransformSample transform_g_form_fn(const std::function<Sym3(const Vec3&)>& b_eval,
                                    const MediumModel& model, const Bicharacteristic& ray) {
    TransformSample out;
    const auto& sm = ray.samples;
    if (sm.size() < 2) throw std::invalid_argument("transform_g_form: ray has fewer than 2 samples");
    // f = c^-1 B and dγ/dt = c N gives f(dγ/dt, dγ/dt) = c N.(B N).
    auto integrand = [&](size_t k) {
        MediumPoint mp = model.eval(sm[k].x);
        double c = ray.mode == WaveMode::P ? mp.cp : mp.cs;
        return c * quad_form(b_eval(sm[k].x), ray.direction(k));
    };
    double prev = integrand(0);
    double acc = 0.0;
    for (size_t k = 1; k < sm.size(); ++k) {
        double cur = integrand(k);
        acc += 0.5 * (sm[k].t - sm[k - 1].t) * (prev + cur);
        prev = cur;
    }
    out.value = acc;
    out.length = sm.back().s;
    return out;
}

TransformSample transform_g_form(const SymTensor2Field& b, const MediumModel& model,
                                 const Bicharacteristic& ray) {
    if (b.ncomp != 6) throw std::invalid_argument("transform_g_form: field must have 6 components");
    return transform_g_form_fn(
        [&](const Vec3& x) {
            double vals[6];
            if (!trilinear_sample(b, x, vals))
                throw std::runtime_error("transform_g_form: ray leaves the valid mask of B");
            Sym3 s;
            for (int k = 0; k < 6; ++k) s.c[k] = vals[k];
            return s;
        },
        model, ray);
}

// ---------------------------------------------------------------------------
// Inversion
// ---------------------------------------------------------------------------

namespace {

void quad_coeffs(const Vec3& n, double* m) {
    m[0] = n.x * n.x;
    m[1] = n.y * n.y;
    m[2] = n.z * n.z;
    m[3] = 2.0 * n.x * n.y;
    m[4] = 2.0 * n.x * n.z;
    m[5] = 2.0 * n.y * n.z;
}

constexpr size_t kRayBlock = 64;

}  // namespace

RayTransformOp::RayTransformOp(const RayFan& fan, const Grid3& grid)
    : fan_(&fan), grid_(grid), nx_(grid.node_count() * 6) {
    grid_.validate();
    if (fan.rays.empty()) throw std::invalid_argument("RayTransformOp: empty fan");
    block_buf_.resize((fan.rays.size() + kRayBlock - 1) / kRayBlock);

    // Cache per-sample interpolation stencils, direction coefficients, and
    // trapezoid weights once; the CG loop then reduces to gathers/scatters.
    ray_begin_.resize(fan.rays.size() + 1, 0);
    size_t total = 0;
    for (const Bicharacteristic& ray : fan.rays) total += ray.samples.size();
    cache_.reserve(total);
    for (size_t r = 0; r < fan.rays.size(); ++r) {
        const auto& sm = fan.rays[r].samples;
        ray_begin_[r] = cache_.size();
        for (size_t k = 0; k < sm.size(); ++k) {
            SampleCache sc;
            double w = 0.0;
            if (k > 0) w += 0.5 * (sm[k].s - sm[k - 1].s);
            if (k + 1 < sm.size()) w += 0.5 * (sm[k + 1].s - sm[k].s);
            sc.weight = w;
            quad_coeffs(fan.rays[r].direction(k), sc.m);
            double u[3] = {(sm[k].x.x - grid_.origin.x) / grid_.spacing,
                           (sm[k].x.y - grid_.origin.y) / grid_.spacing,
                           (sm[k].x.z - grid_.origin.z) / grid_.spacing};
            int idx[3];
            double frac[3];
            for (int a = 0; a < 3; ++a) {
                if (u[a] < 0.0 || u[a] > grid_.dims[a] - 1 + 1e-12)
                    throw std::runtime_error("RayTransformOp: ray sample outside the grid hull");
                idx[a] = std::min(static_cast<int>(u[a]), grid_.dims[a] - 2);
                if (idx[a] < 0) idx[a] = 0;
                frac[a] = u[a] - idx[a];
            }
            const double wx[2] = {1.0 - frac[0], frac[0]};
            const double wy[2] = {1.0 - frac[1], frac[1]};
            const double wz[2] = {1.0 - frac[2], frac[2]};
            int q = 0;
            for (int dz = 0; dz < 2; ++dz)
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx, ++q) {
                        sc.node[q] = static_cast<uint32_t>(
                            grid_.lin(idx[0] + dx, idx[1] + dy, idx[2] + dz));
                        sc.tw[q] = wx[dx] * wy[dy] * wz[dz];
                    }
            cache_.push_back(sc);
        }
    }
    ray_begin_[fan.rays.size()] = cache_.size();
}

void RayTransformOp::forward(const std::vector<double>& x, std::vector<double>& y) const {
    parallel_blocks(
        fan_->rays.size(), kRayBlock,
        [&](size_t lo, size_t hi, size_t) {
            for (size_t r = lo; r < hi; ++r) {
                double acc = 0.0;
                for (size_t q = ray_begin_[r]; q < ray_begin_[r + 1]; ++q) {
                    const SampleCache& sc = cache_[q];
                    double cur = 0.0;
                    for (int corner = 0; corner < 8; ++corner) {
                        const double* node_vals = &x[static_cast<size_t>(sc.node[corner]) * 6];
                        double dotm = 0.0;
                        for (int c = 0; c < 6; ++c) dotm += sc.m[c] * node_vals[c];
                        cur += sc.tw[corner] * dotm;
                    }
                    acc += sc.weight * cur;
                }
                y[r] = acc;
            }
        },
        nullptr);
}

void RayTransformOp::adjoint(const std::vector<double>& y, std::vector<double>& x) const {
    // Per-block buffers merged in block order keep the accumulation grouping
    // fixed for every worker count.
    parallel_blocks(
        fan_->rays.size(), kRayBlock,
        [&](size_t lo, size_t hi, size_t blk) {
            GridField& buf = block_buf_[blk];
            buf = GridField(grid_, 6);
            for (size_t r = lo; r < hi; ++r) {
                if (y[r] == 0.0) continue;
                for (size_t q = ray_begin_[r]; q < ray_begin_[r + 1]; ++q) {
                    const SampleCache& sc = cache_[q];
                    double wy = sc.weight * y[r];
                    for (int corner = 0; corner < 8; ++corner) {
                        double* node_vals =
                            &buf.values[static_cast<size_t>(sc.node[corner]) * 6];
                        double ww = wy * sc.tw[corner];
                        for (int c = 0; c < 6; ++c) node_vals[c] += ww * sc.m[c];
                    }
                }
            }
        },
        [&](size_t blk) {
            const GridField& buf = block_buf_[blk];
            if (blk == 0) {
                x = buf.values;
            } else {
                for (size_t i = 0; i < nx_; ++i) x[i] += buf.values[i];
            }
        });
}

double RayTransformOp::mean_normal_diagonal() const {
    double diag_sum = 0.0;
    for (const SampleCache& sc : cache_) {
        double m2 = 0.0;
        for (int c = 0; c < 6; ++c) m2 += sc.m[c] * sc.m[c];
        double tw2 = 0.0;
        for (int corner = 0; corner < 8; ++corner) tw2 += sc.tw[corner] * sc.tw[corner];
        diag_sum += sc.weight * sc.weight * m2 * tw2;
    }
    return diag_sum / static_cast<double>(nx_);
}

std::pair<SymTensor2Field, InversionDiagnostics> invert_transform(
    const RayFan& fan, const std::vector<TransformSample>& samples, const Grid3& grid,
    const InversionOptions& opts) {
    const size_t nrays = fan.rays.size();
    if (nrays == 0) throw std::invalid_argument("invert_transform: empty fan");
    if (samples.size() != nrays)
        throw std::invalid_argument("invert_transform: sample count does not match fan rays");

    RayTransformOp op(fan, grid);
    const size_t nx = op.unknowns();

    std::vector<double> b(nrays);
    for (size_t r = 0; r < nrays; ++r) b[r] = samples[r].value;

    double lambda = opts.reg;
    if (lambda < 0.0) {
        lambda = 1e-4 * op.mean_normal_diagonal();
        if (!(lambda > 0.0)) lambda = 1e-12;
    }

    auto apply_a = [&](const std::vector<double>& x, std::vector<double>& y) { op.forward(x, y); };
    auto apply_at = [&](const std::vector<double>& y, std::vector<double>& x) { op.adjoint(y, x); };
    CglsResult cg = cgls_solve(nx, nrays, apply_a, apply_at, b, lambda, opts.tol, opts.max_iter);

    SymTensor2Field est(grid, 6);
    est.values = std::move(cg.x);
    InversionDiagnostics diag_out;
    diag_out.residuals = std::move(cg.residuals);
    diag_out.iterations = cg.iterations;
    diag_out.converged = cg.converged;
    diag_out.lambda = lambda;
    diag_out.final_relative_residual = cg.final_relative_residual;
    return {std::move(est), std::move(diag_out)};
}

// ---------------------------------------------------------------------------
// Solenoidal / potential splitting
// ---------------------------------------------------------------------------

ProjectionResult solenoidal_project(const MediumModel& model, const SymTensor2Field& f,
                                    const Grid3& grid, const LensRegion* region, double tol,
                                    int max_iter) {
    if (f.ncomp != 6) throw std::invalid_argument("solenoidal_project: field must have 6 components");
    if (!same_layout(f.grid, grid))
        throw std::invalid_argument("solenoidal_project: field must live on the given grid");
    for (int a = 0; a < 3; ++a)
        if (grid.dims[a] < 5)
            throw std::invalid_argument("solenoidal_project: grid needs at least 5 nodes per axis");

    const size_t nn = grid.node_count();
    const long strides[3] = {1, grid.dims[0], static_cast<long>(grid.dims[0]) * grid.dims[1]};

    // Free 1-form nodes: strict interior of the region (when given) and off
    // the outermost grid layer; v = 0 elsewhere.
    std::vector<long> free_id(nn, -1);
    size_t nfree = 0;
    for (int k = 0; k < grid.dims[2]; ++k)
        for (int j = 0; j < grid.dims[1]; ++j)
            for (int i = 0; i < grid.dims[0]; ++i) {
                size_t n = grid.lin(i, j, k);
                if (grid.edge_distance(i, j, k) < 1) continue;
                if (region && region->classify(grid.position(i, j, k)) != Membership::Interior)
                    continue;
                free_id[n] = static_cast<long>(nfree++);
            }
    if (nfree == 0) throw std::runtime_error("solenoidal_project: no free interior nodes");

    // Derivatives use one-sided 3-point stencils (2nd order). Centered
    // first-difference families of any order decouple odd and even nodes and
    // leave the symmetric-gradient system singular; the biased stencils keep
    // it injective, and using one operator for both the residual rows and the
    // final subtraction makes the projection idempotent.
    auto taps1d = [&](size_t n, int axis, std::array<std::pair<long, double>, 3>& taps) {
        int i, j, k;
        grid.unlin(n, i, j, k);
        int q = axis == 0 ? i : (axis == 1 ? j : k);
        double inv = 1.0 / (2.0 * grid.spacing);
        if (q + 2 < grid.dims[axis]) {
            taps = {{{0, -3.0 * inv}, {strides[axis], 4.0 * inv}, {2 * strides[axis], -1.0 * inv}}};
            return true;
        }
        if (q - 2 >= 0) {
            taps = {{{0, 3.0 * inv}, {-strides[axis], -4.0 * inv}, {-2 * strides[axis], 1.0 * inv}}};
            return true;
        }
        return false;
    };

    struct Triplet {
        size_t row;
        size_t col;
        double val;
    };
    std::vector<Triplet> trips;
    std::vector<double> rhs;
    size_t nrows = 0;
    std::vector<uint8_t> row_node(nn, 0);

    std::array<std::pair<long, double>, 3> taps[3];
    for (int k = 0; k < grid.dims[2]; ++k)
        for (int j = 0; j < grid.dims[1]; ++j)
            for (int i = 0; i < grid.dims[0]; ++i) {
                size_t n = grid.lin(i, j, k);
                if (!f.valid(n)) continue;
                bool have_taps = true;
                for (int a = 0; a < 3; ++a) have_taps = have_taps && taps1d(n, a, taps[a]);
                if (!have_taps) continue;
                row_node[n] = 1;

                MediumPoint mp = model.eval(grid.position(i, j, k));
                Vec3 dpsi = -mp.grad_log_cp;

                for (int ci = 0; ci < 3; ++ci)
                    for (int cj = ci; cj < 3; ++cj) {
                        double wrow = std::sqrt(mp.cp * (ci == cj ? 1.0 : 2.0));
                        size_t row = nrows++;
                        // 1/2 (D_ci v_cj + D_cj v_ci)
                        for (const auto& [delta, coef] : taps[ci]) {
                            size_t node = static_cast<size_t>(static_cast<long long>(n) + delta);
                            if (free_id[node] < 0) continue;
                            trips.push_back({row, static_cast<size_t>(free_id[node]) * 3 +
                                                      static_cast<size_t>(cj),
                                             0.5 * coef * wrow});
                        }
                        for (const auto& [delta, coef] : taps[cj]) {
                            size_t node = static_cast<size_t>(static_cast<long long>(n) + delta);
                            if (free_id[node] < 0) continue;
                            trips.push_back({row, static_cast<size_t>(free_id[node]) * 3 +
                                                      static_cast<size_t>(ci),
                                             0.5 * coef * wrow});
                        }
                        // -Gamma^k_ij v_k, pointwise at n
                        if (free_id[n] >= 0) {
                            double gcoef[3] = {0.0, 0.0, 0.0};
                            gcoef[ci] -= dpsi[cj];
                            gcoef[cj] -= dpsi[ci];
                            if (ci == cj)
                                for (int a = 0; a < 3; ++a) gcoef[a] += dpsi[a];
                            for (int a = 0; a < 3; ++a)
                                if (gcoef[a] != 0.0)
                                    trips.push_back({row, static_cast<size_t>(free_id[n]) * 3 +
                                                              static_cast<size_t>(a),
                                                     gcoef[a] * wrow});
                        }
                        rhs.push_back(f.at(n, Sym3::index(ci, cj)) * wrow);
                    }
            }
    if (nrows == 0) throw std::runtime_error("solenoidal_project: no usable residual rows");

    const size_t nx = nfree * 3;
    auto apply_a = [&](const std::vector<double>& x, std::vector<double>& y) {
        std::fill(y.begin(), y.end(), 0.0);
        for (const Triplet& t : trips) y[t.row] += t.val * x[t.col];
    };
    auto apply_at = [&](const std::vector<double>& y, std::vector<double>& x) {
        std::fill(x.begin(), x.end(), 0.0);
        for (const Triplet& t : trips) x[t.col] += t.val * y[t.row];
    };

    double diag_mean = 0.0;
    for (const Triplet& t : trips) diag_mean += t.val * t.val;
    diag_mean /= static_cast<double>(nx);
    double lambda = 1e-11 * diag_mean;

    CglsResult cg = cgls_solve(nx, nrows, apply_a, apply_at, rhs, lambda, tol, max_iter);

    ProjectionResult out;
    out.iterations = cg.iterations;
    out.converged = cg.converged;
    out.potential = OneFormField(grid, 3);
    for (size_t n = 0; n < nn; ++n)
        if (free_id[n] >= 0)
            for (int a = 0; a < 3; ++a)
                out.potential.at(n, a) = cg.x[static_cast<size_t>(free_id[n]) * 3 +
                                              static_cast<size_t>(a)];

    // Subtract d_g v with the same discrete operator the rows used.
    out.solenoidal = SymTensor2Field(grid, 6, true);
    for (size_t n = 0; n < nn; ++n) {
        if (!f.valid(n) || !row_node[n]) {
            out.solenoidal.mask[n] = 0;
            continue;
        }
        int i, j, k;
        grid.unlin(n, i, j, k);
        bool ok = true;
        for (int a = 0; a < 3; ++a) ok = ok && taps1d(n, a, taps[a]);
        if (!ok) {
            out.solenoidal.mask[n] = 0;
            continue;
        }
        MediumPoint mp = model.eval(grid.position(i, j, k));
        Vec3 dpsi = -mp.grad_log_cp;
        Vec3 vv{out.potential.at(n, 0), out.potential.at(n, 1), out.potential.at(n, 2)};
        double vdp = dot(vv, dpsi);
        for (int ci = 0; ci < 3; ++ci)
            for (int cj = ci; cj < 3; ++cj) {
                double dgv = 0.0;
                for (const auto& [delta, coef] : taps[ci])
                    dgv += 0.5 * coef *
                           out.potential.at(static_cast<size_t>(static_cast<long long>(n) + delta),
                                            cj);
                for (const auto& [delta, coef] : taps[cj])
                    dgv += 0.5 * coef *
                           out.potential.at(static_cast<size_t>(static_cast<long long>(n) + delta),
                                            ci);
                dgv -= vv[ci] * dpsi[cj] + vv[cj] * dpsi[ci] - (ci == cj ? vdp : 0.0);
                int comp = Sym3::index(ci, cj);
                out.solenoidal.at(n, comp) = f.at(n, comp) - dgv;
            }
    }
    return out;
}

}  // namespace elastoray
