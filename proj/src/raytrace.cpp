#include "elastoray/raytrace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace elastoray {

namespace {

struct RayState {
    double t;
    Vec3 x;
    Vec3 xi;
};

struct RayDeriv {
    double dt;
    Vec3 dx;
    Vec3 dxi;
};

RayDeriv ray_rhs(const MediumModel& model, WaveMode mode, double sgn, const RayState& st) {
    MediumPoint mp = model.eval(st.x);
    double c = mode == WaveMode::P ? mp.cp : mp.cs;
    Vec3 glc = mode == WaveMode::P ? mp.grad_log_cp : mp.grad_log_cs;
    double xin = norm(st.xi);
    if (!(xin > 0.0)) throw std::runtime_error("ray integration: xi collapsed to zero");
    RayDeriv d;
    d.dt = 1.0 / c;
    d.dx = st.xi * (sgn / xin);
    d.dxi = glc * (-sgn * xin);
    return d;
}

RayState rk4_step(const MediumModel& model, WaveMode mode, double sgn, const RayState& st,
                  double h) {
    auto advance = [&](const RayState& base, const RayDeriv& d, double a) {
        return RayState{base.t + a * d.dt, base.x + d.dx * a, base.xi + d.dxi * a};
    };
    RayDeriv k1 = ray_rhs(model, mode, sgn, st);
    RayDeriv k2 = ray_rhs(model, mode, sgn, advance(st, k1, 0.5 * h));
    RayDeriv k3 = ray_rhs(model, mode, sgn, advance(st, k2, 0.5 * h));
    RayDeriv k4 = ray_rhs(model, mode, sgn, advance(st, k3, h));
    RayState out;
    out.t = st.t + h / 6.0 * (k1.dt + 2.0 * k2.dt + 2.0 * k3.dt + k4.dt);
    out.x = st.x + (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx) * (h / 6.0);
    out.xi = st.xi + (k1.dxi + 2.0 * k2.dxi + 2.0 * k3.dxi + k4.dxi) * (h / 6.0);
    return out;
}

double speed_at(const MediumModel& model, WaveMode mode, const Vec3& x) {
    MediumPoint mp = model.eval(x);
    return mode == WaveMode::P ? mp.cp : mp.cs;
}

}  // namespace

double Bicharacteristic::hamiltonian_drift(const MediumModel& model) const {
    double worst = 0.0;
    double sgn = static_cast<double>(static_cast<int8_t>(sign));
    for (const RaySample& smp : samples) {
        double c = speed_at(model, mode, smp.x);
        double h = smp.tau - sgn * c * norm(smp.xi);
        worst = std::max(worst, std::fabs(h));
    }
    double tau0 = samples.empty() ? 1.0 : std::fabs(samples.front().tau);
    return tau0 > 0.0 ? worst / tau0 : worst;
}

Bicharacteristic integrate_bicharacteristic(const MediumModel& model, const LensRegion& region,
                                            const Vec3& x0, const Vec3& xi0, BranchSign sign,
                                            WaveMode mode, double h_ray, const RayOptions& opts) {
    if (!(norm(xi0) > 0.0)) throw std::invalid_argument("integrate_bicharacteristic: xi0 must be nonzero");
    if (!(h_ray > 0.0)) throw std::invalid_argument("integrate_bicharacteristic: h_ray must be positive");
    Membership m0 = region.classify(x0);
    if (m0 == Membership::Exterior || m0 == Membership::BoundaryCap)
        throw std::invalid_argument("integrate_bicharacteristic: x0 must lie inside the region or on S");

    double sgn = static_cast<double>(static_cast<int8_t>(sign));
    Bicharacteristic ray;
    ray.mode = mode;
    ray.sign = sign;
    ray.h_ray = h_ray;

    RayState st{0.0, x0, xi0};
    double tau = sgn * speed_at(model, mode, x0) * norm(xi0);
    ray.samples.push_back({0.0, st.t, st.x, tau, st.xi});

    double s = 0.0;
    while (s < opts.max_length) {
        RayState next = rk4_step(model, mode, sgn, st, h_ray);
        if (region.classify(next.x) == Membership::Exterior) {
            // Bisect the step fraction to land on the crossed boundary piece.
            double lo = 0.0, hi = 1.0;
            RayState bs = next;
            for (int it = 0; it < 200; ++it) {
                double mid = 0.5 * (lo + hi);
                bs = rk4_step(model, mode, sgn, st, mid * h_ray);
                double th = region.theta(bs.x);
                double slack = region.xtilde(bs.x) + region.cap_level();
                double viol = std::min(th, slack);
                if (std::fabs(viol) <= opts.boundary_tol) { lo = hi = mid; break; }
                if (viol < 0.0) hi = mid; else lo = mid;
                if (hi - lo < 1e-15) break;
            }
            double frac = 0.5 * (lo + hi);
            bs = rk4_step(model, mode, sgn, st, frac * h_ray);
            double th = region.theta(bs.x);
            double slack = region.xtilde(bs.x) + region.cap_level();
            ray.samples.push_back({s + frac * h_ray, bs.t, bs.x, tau, bs.xi});
            ray.exit = th <= slack ? RayExit::SurfaceS : RayExit::InnerCap;
            return ray;
        }
        s += h_ray;
        st = next;
        ray.samples.push_back({s, st.t, st.x, tau, st.xi});
    }
    ray.exit = RayExit::Trapped;
    return ray;
}

double geodesic_residual(const MediumModel& model, const Bicharacteristic& ray) {
    if (ray.samples.size() < 5)
        throw std::invalid_argument("geodesic_residual: need at least 5 samples");
    // Interior samples only; the terminal sample may sit at a partial step.
    size_t last = ray.samples.size() - 1;
    double h = ray.h_ray;
    double worst = 0.0;
    for (size_t k = 1; k + 1 < last; ++k) {
        const Vec3& xm = ray.samples[k - 1].x;
        const Vec3& x0 = ray.samples[k].x;
        const Vec3& xp = ray.samples[k + 1].x;
        Vec3 d1 = (xp - xm) / (2.0 * h);
        Vec3 d2 = (xp - 2.0 * x0 + xm) / (h * h);
        MediumPoint mp = model.eval(x0);
        double c = ray.mode == WaveMode::P ? mp.cp : mp.cs;
        Vec3 gc = ray.mode == WaveMode::P ? mp.grad_cp : mp.grad_cs2 / (2.0 * mp.cs);
        Vec3 res = d2 * (c * c) - d1 * (c * dot(gc, d1)) + gc * c;
        worst = std::max(worst, norm(res));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Amplitude transport
// ---------------------------------------------------------------------------

namespace {

// Integrates a neighbor ray with the same fixed steps as the central ray.
// Stops early if the neighbor leaves the region; returns positions and unit
// directions at matched arclengths.
struct NeighborTrace {
    std::vector<Vec3> x;
    std::vector<Vec3> n;
};

NeighborTrace trace_neighbor(const MediumModel& model, const LensRegion& region, const Vec3& x0,
                             const Vec3& xi0, BranchSign sign, WaveMode mode, double h,
                             size_t max_samples) {
    NeighborTrace tr;
    double sgn = static_cast<double>(static_cast<int8_t>(sign));
    RayState st{0.0, x0, xi0};
    tr.x.push_back(st.x);
    tr.n.push_back(normalized(st.xi) * sgn);
    while (tr.x.size() < max_samples) {
        RayState next = rk4_step(model, mode, sgn, st, h);
        if (region.classify(next.x) == Membership::Exterior) break;
        st = next;
        tr.x.push_back(st.x);
        tr.n.push_back(normalized(st.xi) * sgn);
    }
    return tr;
}

// Cumulative trapezoid of f over uniformly spaced samples starting at `from`.
std::vector<double> cumtrap(const std::vector<double>& f, size_t from, size_t count, double h) {
    std::vector<double> out(count, 0.0);
    for (size_t k = 1; k < count; ++k)
        out[k] = out[k - 1] + 0.5 * h * (f[from + k - 1] + f[from + k]);
    return out;
}

}  // namespace

AmplitudeTrace amplitude_transport(const MediumModel& model, const LensRegion& region,
                                   const Bicharacteristic& ray, FanKind kind, double fan_offset,
                                   double b0_init) {
    if (ray.samples.size() < 3)
        throw std::invalid_argument("amplitude_transport: ray too short");
    if (!(fan_offset > 0.0))
        throw std::invalid_argument("amplitude_transport: fan_offset must be positive");

    const size_t n = ray.samples.size();
    const Vec3 x0 = ray.samples.front().x;
    const Vec3 xi0 = ray.samples.front().xi;
    const Vec3 n0 = ray.direction(0);
    const Vec3 e1 = any_orthogonal(n0);
    const Vec3 e2 = cross(n0, e1);

    NeighborTrace nb[4];
    if (kind == FanKind::Parallel) {
        const Vec3 offs[4] = {e1 * fan_offset, e1 * (-fan_offset), e2 * fan_offset,
                              e2 * (-fan_offset)};
        for (int q = 0; q < 4; ++q)
            nb[q] = trace_neighbor(model, region, x0 + offs[q], xi0, ray.sign, ray.mode,
                                   ray.h_ray, n);
    } else {
        double xin = norm(xi0);
        double ca = std::cos(fan_offset), sa = std::sin(fan_offset);
        double sgn = static_cast<double>(static_cast<int8_t>(ray.sign));
        // Tilt the launch direction within the (N, e_j) planes; xi = sgn * |xi| * dir.
        const Vec3 dirs[4] = {n0 * ca + e1 * sa, n0 * ca - e1 * sa, n0 * ca + e2 * sa,
                              n0 * ca - e2 * sa};
        for (int q = 0; q < 4; ++q)
            nb[q] = trace_neighbor(model, region, x0, dirs[q] * (sgn * xin), ray.sign, ray.mode,
                                   ray.h_ray, n);
    }

    AmplitudeTrace tr;
    tr.common_length = n;
    for (int q = 0; q < 4; ++q) tr.common_length = std::min(tr.common_length, nb[q].x.size());
    tr.truncated = tr.common_length < n;

    tr.div_n.assign(tr.common_length, 0.0);
    std::vector<uint8_t> resolved(tr.common_length, 0);

    // Transport the transverse frame along the central ray and difference the
    // neighbor direction field across it.
    Vec3 f1 = e1;
    for (size_t k = 0; k < tr.common_length; ++k) {
        Vec3 nc = ray.direction(k);
        f1 = f1 - nc * dot(f1, nc);
        double f1n = norm(f1);
        if (f1n < 1e-12) f1 = any_orthogonal(nc); else f1 = f1 / f1n;
        Vec3 f2 = cross(nc, f1);

        Vec3 dn1 = nb[0].n[k] - nb[1].n[k];
        Vec3 dx1 = nb[0].x[k] - nb[1].x[k];
        Vec3 dn2 = nb[2].n[k] - nb[3].n[k];
        Vec3 dx2 = nb[2].x[k] - nb[3].x[k];
        double den1 = dot(f1, dx1), den2 = dot(f2, dx2);
        if (std::fabs(den1) < 1e-14 || std::fabs(den2) < 1e-14) continue;
        tr.div_n[k] = dot(f1, dn1) / den1 + dot(f2, dn2) / den2;
        resolved[k] = 1;
    }

    tr.first_valid = tr.common_length;
    for (size_t k = 0; k < tr.common_length; ++k)
        if (resolved[k]) { tr.first_valid = k; break; }
    if (tr.first_valid >= tr.common_length)
        throw std::runtime_error("amplitude_transport: fan separation never resolved");
    for (size_t k = tr.first_valid; k < tr.common_length; ++k)
        if (!resolved[k])
            throw std::runtime_error("amplitude_transport: fan separation collapsed mid-ray");

    size_t m = tr.common_length - tr.first_valid;
    std::vector<double> intdiv = cumtrap(tr.div_n, tr.first_valid, m, ray.h_ray);

    tr.b0.assign(tr.common_length, 0.0);
    MediumPoint mp0 = model.eval(ray.samples[tr.first_valid].x);
    double rc0 = mp0.rho * (ray.mode == WaveMode::P ? mp0.cp : mp0.cs);
    for (size_t k = 0; k < m; ++k) {
        MediumPoint mp = model.eval(ray.samples[tr.first_valid + k].x);
        double rc = mp.rho * (ray.mode == WaveMode::P ? mp.cp : mp.cs);
        tr.b0[tr.first_valid + k] = b0_init * std::sqrt(rc0 / rc) * std::exp(-0.5 * intdiv[k]);
    }
    return tr;
}

std::vector<double> amplitude_next_order(const MediumModel& model, const Bicharacteristic& ray,
                                         const AmplitudeTrace& trace,
                                         const std::vector<double>& g_samples, double a_init) {
    if (g_samples.size() != ray.samples.size())
        throw std::invalid_argument("amplitude_next_order: source length does not match ray samples");
    if (trace.div_n.size() < 2)
        throw std::invalid_argument("amplitude_next_order: amplitude trace missing div N");

    size_t fv = trace.first_valid;
    size_t count = trace.common_length - fv;
    std::vector<double> intdiv = cumtrap(trace.div_n, fv, count, ray.h_ray);

    // Integrating factor g = sqrt(rho c) exp(+1/2 int div N); (g a)' = g G.
    std::vector<double> g(count, 0.0);
    for (size_t k = 0; k < count; ++k) {
        MediumPoint mp = model.eval(ray.samples[fv + k].x);
        double rc = mp.rho * (ray.mode == WaveMode::P ? mp.cp : mp.cs);
        g[k] = std::sqrt(rc) * std::exp(0.5 * intdiv[k]);
    }

    std::vector<double> out(ray.samples.size(), 0.0);
    double acc = g[0] * a_init;
    out[fv] = a_init;
    for (size_t k = 1; k < count; ++k) {
        acc += 0.5 * ray.h_ray * (g[k - 1] * g_samples[fv + k - 1] + g[k] * g_samples[fv + k]);
        out[fv + k] = acc / g[k];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fast marching eikonal
// ---------------------------------------------------------------------------

namespace {

// Binary min-heap over node indices keyed by tentative time, with stored
// positions so narrow-band values can be decreased in place. Ties break on
// the node index to keep the acceptance order deterministic.
class NodeHeap {
  public:
    NodeHeap(const std::vector<double>& key, size_t n) : key_(key), pos_(n, -1) {}

    bool empty() const { return heap_.empty(); }
    bool contains(size_t n) const { return pos_[n] >= 0; }

    void push_or_update(size_t n) {
        if (pos_[n] < 0) {
            pos_[n] = static_cast<long>(heap_.size());
            heap_.push_back(n);
        }
        sift_up(static_cast<size_t>(pos_[n]));
    }

    size_t pop() {
        size_t top = heap_.front();
        pos_[top] = -1;
        size_t last = heap_.back();
        heap_.pop_back();
        if (!heap_.empty()) {
            heap_[0] = last;
            pos_[last] = 0;
            sift_down(0);
        }
        return top;
    }

  private:
    bool less(size_t a, size_t b) const {
        return key_[a] < key_[b] || (key_[a] == key_[b] && a < b);
    }
    void swap_nodes(size_t i, size_t j) {
        std::swap(heap_[i], heap_[j]);
        pos_[heap_[i]] = static_cast<long>(i);
        pos_[heap_[j]] = static_cast<long>(j);
    }
    void sift_up(size_t i) {
        while (i > 0) {
            size_t p = (i - 1) / 2;
            if (!less(heap_[i], heap_[p])) break;
            swap_nodes(i, p);
            i = p;
        }
    }
    void sift_down(size_t i) {
        for (;;) {
            size_t l = 2 * i + 1, r = l + 1, best = i;
            if (l < heap_.size() && less(heap_[l], heap_[best])) best = l;
            if (r < heap_.size() && less(heap_[r], heap_[best])) best = r;
            if (best == i) return;
            swap_nodes(i, best);
            i = best;
        }
    }

    const std::vector<double>& key_;
    std::vector<long> pos_;
    std::vector<size_t> heap_;
};

// Upwind update from accepted axis neighbors. Each axis contributes a term
// c (T - b)^2 with c = 1, b = T1 for the one-sided first-order difference and
// c = 9/4, b = (4 T1 - T2)/3 when two consecutive accepted upwind neighbors
// allow the second-order one-sided difference. Axes are folded in ascending
// order of b under the causality condition T >= b.
struct UpwindTerm {
    double b;
    double c;
};

double upwind_solve(UpwindTerm* terms, int nterms, double f) {
    std::sort(terms, terms + nterms, [](const UpwindTerm& u, const UpwindTerm& v) {
        return u.b < v.b;
    });
    double best = std::numeric_limits<double>::infinity();
    double A = 0.0, B = 0.0, C = -f * f;
    for (int m = 0; m < nterms; ++m) {
        A += terms[m].c;
        B += terms[m].c * terms[m].b;
        C += terms[m].c * terms[m].b * terms[m].b;
        double disc = B * B - A * C;
        if (disc < 0.0) break;
        double t = (B + std::sqrt(disc)) / A;
        if (t < terms[m].b) break;  // causality violated; keep the smaller set
        if (m + 1 == nterms || t <= terms[m + 1].b) best = std::min(best, t);
    }
    if (!std::isfinite(best) && nterms > 0) best = terms[0].b + f;  // conservative fallback
    return best;
}

}  // namespace

GridField TravelTimeField::as_field() const {
    GridField f(grid, 1, true);
    for (size_t n = 0; n < grid.node_count(); ++n) {
        f.at(n, 0) = t[n];
        f.mask[n] = status[n] == NodeStatus::Accepted ? 1 : 0;
    }
    return f;
}

TravelTimeField eikonal_grid(const MediumModel& model, const LensRegion& region,
                             const SourceSpec& source, const Grid3& grid, WaveMode mode) {
    grid.validate();
    const double inf = std::numeric_limits<double>::infinity();
    const size_t nn = grid.node_count();

    TravelTimeField out;
    out.grid = grid;
    out.t.assign(nn, inf);
    out.status.assign(nn, NodeStatus::Far);

    std::vector<double> slow(nn, 0.0);
    for (int k = 0; k < grid.dims[2]; ++k)
        for (int j = 0; j < grid.dims[1]; ++j)
            for (int i = 0; i < grid.dims[0]; ++i) {
                size_t n = grid.lin(i, j, k);
                Vec3 x = grid.position(i, j, k);
                if (region.classify(x) == Membership::Exterior) {
                    out.status[n] = NodeStatus::Outside;
                    continue;
                }
                slow[n] = 1.0 / speed_at(model, mode, x);
            }

    NodeHeap heap(out.t, nn);
    double h = grid.spacing;

    auto seed_node = [&](size_t n, double time) {
        if (out.status[n] == NodeStatus::Outside) return;
        if (time < out.t[n]) out.t[n] = time;
        out.status[n] = NodeStatus::Accepted;
    };

    if (std::holds_alternative<PointSource>(source)) {
        const Vec3 src = std::get<PointSource>(source).x;
        if (!grid.contains_point(src))
            throw std::invalid_argument("eikonal_grid: source outside grid bounds");
        double s_src = 1.0 / speed_at(model, mode, src);
        // Source ball radius scaling like sqrt(h) keeps the point-source
        // singularity from degrading the first-order marching error; times in
        // the ball come from Simpson slowness integrals along the straight
        // segment (exact for constant speed, O(r^3) otherwise).
        Vec3 extent = grid.max_corner() - grid.origin;
        double dom = std::max(extent.x, std::max(extent.y, extent.z));
        double r0 = std::max(2.0 * h, std::sqrt(0.25 * h * dom));
        for (int k = 0; k < grid.dims[2]; ++k)
            for (int j = 0; j < grid.dims[1]; ++j)
                for (int i = 0; i < grid.dims[0]; ++i) {
                    size_t n = grid.lin(i, j, k);
                    Vec3 x = grid.position(i, j, k);
                    double r = norm(x - src);
                    if (r <= r0) {
                        double s_mid = 1.0 / speed_at(model, mode, (x + src) * 0.5);
                        seed_node(n, r * (s_src + 4.0 * s_mid + slow[n]) / 6.0);
                    }
                }
    } else {
        const PlaneSource& ps = std::get<PlaneSource>(source);
        Vec3 nrm = normalized(ps.normal);
        for (int k = 0; k < grid.dims[2]; ++k)
            for (int j = 0; j < grid.dims[1]; ++j)
                for (int i = 0; i < grid.dims[0]; ++i) {
                    size_t n = grid.lin(i, j, k);
                    double d = std::fabs(dot(grid.position(i, j, k) - ps.point, nrm));
                    if (d <= 2.0 * h) seed_node(n, d * slow[n]);
                }
    }

    // Build the initial narrow band around accepted nodes.
    const long strides[3] = {1, grid.dims[0], static_cast<long>(grid.dims[0]) * grid.dims[1]};
    auto update_neighbor = [&](size_t n) {
        if (out.status[n] != NodeStatus::Far && !heap.contains(n)) return;
        int i, j, k;
        grid.unlin(n, i, j, k);
        int idx[3] = {i, j, k};
        UpwindTerm terms[3];
        int nterms = 0;
        for (int a = 0; a < 3; ++a) {
            double t1 = inf;
            int dir = 0;
            if (idx[a] > 0) {
                size_t m = n - static_cast<size_t>(strides[a]);
                if (out.status[m] == NodeStatus::Accepted && out.t[m] < t1) {
                    t1 = out.t[m];
                    dir = -1;
                }
            }
            if (idx[a] < grid.dims[a] - 1) {
                size_t m = n + static_cast<size_t>(strides[a]);
                if (out.status[m] == NodeStatus::Accepted && out.t[m] < t1) {
                    t1 = out.t[m];
                    dir = +1;
                }
            }
            if (dir == 0) continue;
            int q2 = idx[a] + 2 * dir;
            bool second = false;
            if (q2 >= 0 && q2 < grid.dims[a]) {
                size_t m2 = static_cast<size_t>(static_cast<long long>(n) + 2L * dir * strides[a]);
                if (out.status[m2] == NodeStatus::Accepted && out.t[m2] <= t1) {
                    terms[nterms++] = {(4.0 * t1 - out.t[m2]) / 3.0, 2.25};
                    second = true;
                }
            }
            if (!second) terms[nterms++] = {t1, 1.0};
        }
        if (nterms == 0) return;
        double cand = upwind_solve(terms, nterms, h * slow[n]);
        if (cand < out.t[n]) {
            out.t[n] = cand;
            heap.push_or_update(n);
        }
    };

    auto touch_neighbors = [&](size_t n) {
        int i, j, k;
        grid.unlin(n, i, j, k);
        int idx[3] = {i, j, k};
        for (int a = 0; a < 3; ++a) {
            if (idx[a] > 0) {
                size_t m = n - static_cast<size_t>(strides[a]);
                if (out.status[m] == NodeStatus::Far || heap.contains(m)) update_neighbor(m);
            }
            if (idx[a] < grid.dims[a] - 1) {
                size_t m = n + static_cast<size_t>(strides[a]);
                if (out.status[m] == NodeStatus::Far || heap.contains(m)) update_neighbor(m);
            }
        }
    };

    for (size_t n = 0; n < nn; ++n)
        if (out.status[n] == NodeStatus::Accepted) touch_neighbors(n);

    while (!heap.empty()) {
        size_t n = heap.pop();
        out.status[n] = NodeStatus::Accepted;
        touch_neighbors(n);
    }

    for (size_t n = 0; n < nn; ++n)
        if (out.status[n] != NodeStatus::Accepted) out.t[n] = inf;
    return out;
}

}  // namespace elastoray
