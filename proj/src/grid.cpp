#include "elastoray/grid.hpp"

#include <cmath>

namespace elastoray {

namespace {

struct Cell {
    int i, j, k;
    double fx, fy, fz;  // fractional position within the cell
};

bool locate(const Grid3& g, const Vec3& p, Cell& c) {
    double ux = (p.x - g.origin.x) / g.spacing;
    double uy = (p.y - g.origin.y) / g.spacing;
    double uz = (p.z - g.origin.z) / g.spacing;
    if (g.dims[0] < 2 || g.dims[1] < 2 || g.dims[2] < 2) return false;
    // Clamp points that sit exactly on the upper hull face into the last cell.
    auto clamp_axis = [](double u, int n, int& idx, double& frac) {
        if (u < 0.0 || u > static_cast<double>(n - 1) + 1e-12) return false;
        idx = static_cast<int>(std::floor(u));
        if (idx > n - 2) idx = n - 2;
        if (idx < 0) idx = 0;
        frac = u - idx;
        return true;
    };
    return clamp_axis(ux, g.dims[0], c.i, c.fx) && clamp_axis(uy, g.dims[1], c.j, c.fy) &&
           clamp_axis(uz, g.dims[2], c.k, c.fz);
}

}  // namespace

bool trilinear_sample(const GridField& f, const Vec3& p, double* out) {
    Cell c;
    if (!locate(f.grid, p, c)) return false;
    const double wx[2] = {1.0 - c.fx, c.fx};
    const double wy[2] = {1.0 - c.fy, c.fy};
    const double wz[2] = {1.0 - c.fz, c.fz};
    for (int m = 0; m < f.ncomp; ++m) out[m] = 0.0;
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                size_t n = f.grid.lin(c.i + dx, c.j + dy, c.k + dz);
                if (!f.valid(n)) return false;
                double w = wx[dx] * wy[dy] * wz[dz];
                for (int m = 0; m < f.ncomp; ++m) out[m] += w * f.at(n, m);
            }
    return true;
}

bool trilinear_scatter(GridField& f, const Vec3& p, const double* coeff, double w) {
    Cell c;
    if (!locate(f.grid, p, c)) return false;
    const double wx[2] = {1.0 - c.fx, c.fx};
    const double wy[2] = {1.0 - c.fy, c.fy};
    const double wz[2] = {1.0 - c.fz, c.fz};
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                size_t n = f.grid.lin(c.i + dx, c.j + dy, c.k + dz);
                double ww = w * wx[dx] * wy[dy] * wz[dz];
                for (int m = 0; m < f.ncomp; ++m) f.at(n, m) += ww * coeff[m];
            }
    return true;
}

double l2_norm(const GridField& f) {
    double s = 0.0;
    size_t nn = f.grid.node_count();
    for (size_t n = 0; n < nn; ++n) {
        if (!f.valid(n)) continue;
        for (int m = 0; m < f.ncomp; ++m) {
            double v = f.at(n, m);
            s += v * v;
        }
    }
    double h = f.grid.spacing;
    return std::sqrt(s * h * h * h);
}

double linf_norm(const GridField& f) {
    double s = 0.0;
    size_t nn = f.grid.node_count();
    for (size_t n = 0; n < nn; ++n) {
        if (!f.valid(n)) continue;
        for (int m = 0; m < f.ncomp; ++m) s = std::max(s, std::fabs(f.at(n, m)));
    }
    return s;
}

double l2_distance(const GridField& a, const GridField& b) {
    double s = 0.0;
    size_t nn = a.grid.node_count();
    for (size_t n = 0; n < nn; ++n) {
        if (!a.valid(n) || !b.valid(n)) continue;
        for (int m = 0; m < a.ncomp; ++m) {
            double v = a.at(n, m) - b.at(n, m);
            s += v * v;
        }
    }
    double h = a.grid.spacing;
    return std::sqrt(s * h * h * h);
}

}  // namespace elastoray
