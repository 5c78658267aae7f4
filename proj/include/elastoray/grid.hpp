#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "elastoray/geometry.hpp"

namespace elastoray {

// Regular node-centered grid with isotropic spacing. Linear node order is
// x fastest, then y, then z.
struct Grid3 {
    Vec3 origin{};
    double spacing = 1.0;
    std::array<int, 3> dims{1, 1, 1};

    size_t node_count() const {
        return static_cast<size_t>(dims[0]) * static_cast<size_t>(dims[1]) *
               static_cast<size_t>(dims[2]);
    }

    size_t lin(int i, int j, int k) const {
        return static_cast<size_t>(i) +
               static_cast<size_t>(dims[0]) * (static_cast<size_t>(j) +
                                               static_cast<size_t>(dims[1]) * static_cast<size_t>(k));
    }

    void unlin(size_t n, int& i, int& j, int& k) const {
        i = static_cast<int>(n % static_cast<size_t>(dims[0]));
        size_t r = n / static_cast<size_t>(dims[0]);
        j = static_cast<int>(r % static_cast<size_t>(dims[1]));
        k = static_cast<int>(r / static_cast<size_t>(dims[1]));
    }

    Vec3 position(int i, int j, int k) const {
        return {origin.x + spacing * i, origin.y + spacing * j, origin.z + spacing * k};
    }

    bool in_bounds(int i, int j, int k) const {
        return i >= 0 && i < dims[0] && j >= 0 && j < dims[1] && k >= 0 && k < dims[2];
    }

    Vec3 max_corner() const {
        return {origin.x + spacing * (dims[0] - 1), origin.y + spacing * (dims[1] - 1),
                origin.z + spacing * (dims[2] - 1)};
    }

    bool contains_point(const Vec3& p) const {
        Vec3 hi = max_corner();
        return p.x >= origin.x && p.x <= hi.x && p.y >= origin.y && p.y <= hi.y &&
               p.z >= origin.z && p.z <= hi.z;
    }

    // Chebyshev distance (in nodes) to the nearest grid face.
    int edge_distance(int i, int j, int k) const {
        int d = i;
        d = std::min(d, dims[0] - 1 - i);
        d = std::min(d, j);
        d = std::min(d, dims[1] - 1 - j);
        d = std::min(d, k);
        d = std::min(d, dims[2] - 1 - k);
        return d;
    }

    void validate() const {
        if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1)
            throw std::runtime_error("grid dims must be positive");
        if (!(spacing > 0.0)) throw std::runtime_error("grid spacing must be positive");
    }
};

inline bool same_layout(const Grid3& a, const Grid3& b) {
    return a.dims == b.dims && a.spacing == b.spacing && a.origin.x == b.origin.x &&
           a.origin.y == b.origin.y && a.origin.z == b.origin.z;
}

// Multi-component nodal field. Values are stored node-major with components
// fastest within a node; the optional mask marks valid nodes (empty = all valid).
struct GridField {
    Grid3 grid;
    int ncomp = 1;
    std::vector<double> values;
    std::vector<uint8_t> mask;  // empty means fully valid

    GridField() = default;
    GridField(const Grid3& g, int nc, bool with_mask = false)
        : grid(g), ncomp(nc), values(g.node_count() * static_cast<size_t>(nc), 0.0) {
        if (with_mask) mask.assign(g.node_count(), 1);
    }

    double& at(size_t node, int c) { return values[node * static_cast<size_t>(ncomp) + c]; }
    double at(size_t node, int c) const { return values[node * static_cast<size_t>(ncomp) + c]; }

    bool valid(size_t node) const { return mask.empty() || mask[node] != 0; }
    void ensure_mask() {
        if (mask.empty()) mask.assign(grid.node_count(), 1);
    }

    size_t valid_count() const {
        if (mask.empty()) return grid.node_count();
        size_t n = 0;
        for (uint8_t m : mask) n += (m != 0);
        return n;
    }
};

// Component order for symmetric 2-tensors: 11, 22, 33, 12, 13, 23 (matches Sym3).
using ScalarField = GridField;     // ncomp = 1
using OneFormField = GridField;    // ncomp = 3
using SymTensor2Field = GridField; // ncomp = 6
using SymTensor4Field = GridField; // ncomp = 21, see sym4 helpers in tensorfield

inline Sym3 sym2_at(const GridField& f, size_t node) {
    Sym3 s;
    for (int k = 0; k < 6; ++k) s.c[k] = f.at(node, k);
    return s;
}

inline void sym2_set(GridField& f, size_t node, const Sym3& s) {
    for (int k = 0; k < 6; ++k) f.at(node, k) = s.c[k];
}

// Trilinear interpolation of all components at a point. Returns false if the
// point is outside the grid hull or any corner of the containing cell is masked.
bool trilinear_sample(const GridField& f, const Vec3& p, double* out);

// Scatter the transpose of trilinear interpolation: adds w * coeff[c] into the
// 8 cell corners around p. Returns false when p is outside the hull.
bool trilinear_scatter(GridField& f, const Vec3& p, const double* coeff, double w);

// Masked norms over valid nodes.
double l2_norm(const GridField& f);             // sqrt(h^3 * sum |f|^2)
double linf_norm(const GridField& f);
double l2_distance(const GridField& a, const GridField& b);

}  // namespace elastoray
