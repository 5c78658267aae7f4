#include "elastoray/stencil.hpp"

#include <array>

namespace elastoray {

namespace {

// 4th-order first derivative, centered and face-biased variants.
constexpr std::array<int, 5> kCenterOff = {-2, -1, 0, 1, 2};
constexpr std::array<double, 5> kD1Center = {1.0, -8.0, 0.0, 8.0, -1.0};     // /(12h)
constexpr std::array<int, 5> kLeftOff = {-1, 0, 1, 2, 3};
constexpr std::array<double, 5> kD1Left = {-3.0, -10.0, 18.0, -6.0, 1.0};    // /(12h)
constexpr std::array<double, 5> kD2Center = {-1.0, 16.0, -30.0, 16.0, -1.0}; // /(12h^2)

struct AxisCtx {
    long stride;
    int dim;
};

AxisCtx axis_ctx(const Grid3& g, int axis) {
    long strides[3] = {1, g.dims[0], static_cast<long>(g.dims[0]) * g.dims[1]};
    return {strides[axis], g.dims[axis]};
}

size_t shifted(size_t n, long delta) {
    return static_cast<size_t>(static_cast<long long>(n) + delta);
}

int axis_index(const Grid3& g, size_t n, int axis) {
    int i, j, k;
    g.unlin(n, i, j, k);
    return axis == 0 ? i : (axis == 1 ? j : k);
}

}  // namespace

GridField d1_central4(const GridField& f, int comp, int axis) {
    GridField out(f.grid, 1, true);
    AxisCtx ax = axis_ctx(f.grid, axis);
    double inv = 1.0 / (12.0 * f.grid.spacing);
    size_t nn = f.grid.node_count();
    for (size_t n = 0; n < nn; ++n) {
        int q = axis_index(f.grid, n, axis);
        if (q < 2 || q > ax.dim - 3) { out.mask[n] = 0; continue; }
        double acc = 0.0;
        bool ok = true;
        for (int t = 0; t < 5; ++t) {
            size_t m = shifted(n, kCenterOff[t] * ax.stride);
            if (!f.valid(m)) { ok = false; break; }
            acc += kD1Center[t] * f.at(m, comp);
        }
        if (!ok) { out.mask[n] = 0; continue; }
        out.at(n, 0) = acc * inv;
    }
    return out;
}

bool d1_ring1_taps(const Grid3& grid, size_t node, int axis,
                   std::array<std::pair<long, double>, 5>& taps) {
    AxisCtx ax = axis_ctx(grid, axis);
    int q = axis_index(grid, node, axis);
    double inv = 1.0 / (12.0 * grid.spacing);
    if (q >= 2 && q <= ax.dim - 3) {
        for (int t = 0; t < 5; ++t)
            taps[t] = {kCenterOff[t] * ax.stride, kD1Center[t] * inv};
        return true;
    }
    if (ax.dim < 5) return false;
    if (q == 1) {
        for (int t = 0; t < 5; ++t) taps[t] = {kLeftOff[t] * ax.stride, kD1Left[t] * inv};
        return true;
    }
    if (q == ax.dim - 2) {
        for (int t = 0; t < 5; ++t) taps[t] = {-kLeftOff[t] * ax.stride, -kD1Left[t] * inv};
        return true;
    }
    return false;
}

GridField d1_ring1(const GridField& f, int comp, int axis) {
    GridField out(f.grid, 1, true);
    size_t nn = f.grid.node_count();
    std::array<std::pair<long, double>, 5> taps;
    for (size_t n = 0; n < nn; ++n) {
        if (!d1_ring1_taps(f.grid, n, axis, taps)) {
            out.mask[n] = 0;
            continue;
        }
        double acc = 0.0;
        bool ok = true;
        for (const auto& [delta, coef] : taps) {
            size_t m = shifted(n, delta);
            if (!f.valid(m)) { ok = false; break; }
            acc += coef * f.at(m, comp);
        }
        if (!ok) { out.mask[n] = 0; continue; }
        out.at(n, 0) = acc;
    }
    return out;
}

GridField d2_central4(const GridField& f, int comp, int axis) {
    GridField out(f.grid, 1, true);
    AxisCtx ax = axis_ctx(f.grid, axis);
    double inv = 1.0 / (12.0 * f.grid.spacing * f.grid.spacing);
    size_t nn = f.grid.node_count();
    for (size_t n = 0; n < nn; ++n) {
        int q = axis_index(f.grid, n, axis);
        if (q < 2 || q > ax.dim - 3) { out.mask[n] = 0; continue; }
        double acc = 0.0;
        bool ok = true;
        for (int t = 0; t < 5; ++t) {
            size_t m = shifted(n, kCenterOff[t] * ax.stride);
            if (!f.valid(m)) { ok = false; break; }
            acc += kD2Center[t] * f.at(m, comp);
        }
        if (!ok) { out.mask[n] = 0; continue; }
        out.at(n, 0) = acc * inv;
    }
    return out;
}

GridField d2_mixed4(const GridField& f, int comp, int a, int b) {
    if (a == b) return d2_central4(f, comp, a);
    GridField out(f.grid, 1, true);
    AxisCtx axa = axis_ctx(f.grid, a);
    AxisCtx axb = axis_ctx(f.grid, b);
    double inv = 1.0 / (144.0 * f.grid.spacing * f.grid.spacing);
    size_t nn = f.grid.node_count();
    for (size_t n = 0; n < nn; ++n) {
        int qa = axis_index(f.grid, n, a);
        int qb = axis_index(f.grid, n, b);
        if (qa < 2 || qa > axa.dim - 3 || qb < 2 || qb > axb.dim - 3) {
            out.mask[n] = 0;
            continue;
        }
        double acc = 0.0;
        bool ok = true;
        for (int u = 0; u < 5 && ok; ++u) {
            if (kD1Center[u] == 0.0) continue;
            for (int v = 0; v < 5; ++v) {
                if (kD1Center[v] == 0.0) continue;
                size_t m = shifted(n, kCenterOff[u] * axa.stride + kCenterOff[v] * axb.stride);
                if (!f.valid(m)) { ok = false; break; }
                acc += kD1Center[u] * kD1Center[v] * f.at(m, comp);
            }
        }
        if (!ok) { out.mask[n] = 0; continue; }
        out.at(n, 0) = acc * inv;
    }
    return out;
}

GridField laplacian4(const GridField& f, int comp) {
    GridField out = d2_central4(f, comp, 0);
    for (int axis = 1; axis < 3; ++axis) {
        GridField d = d2_central4(f, comp, axis);
        size_t nn = f.grid.node_count();
        for (size_t n = 0; n < nn; ++n) {
            if (!out.mask[n] || !d.mask[n]) {
                out.mask[n] = 0;
                out.at(n, 0) = 0.0;
                continue;
            }
            out.at(n, 0) += d.at(n, 0);
        }
    }
    return out;
}

void gradient4(const GridField& f, GridField& out3) {
    out3 = GridField(f.grid, 3, true);
    for (int axis = 0; axis < 3; ++axis) {
        GridField d = d1_central4(f, 0, axis);
        size_t nn = f.grid.node_count();
        for (size_t n = 0; n < nn; ++n) {
            out3.at(n, axis) = d.at(n, 0);
            if (!d.mask[n]) out3.mask[n] = 0;
        }
    }
}

}  // namespace elastoray
