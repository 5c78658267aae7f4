#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace elastoray {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double a) const { return {x * a, y * a, z * a}; }
    Vec3 operator/(double a) const { return {x / a, y / a, z / a}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double a) { x *= a; y *= a; z *= a; return *this; }
};

inline Vec3 operator*(double a, const Vec3& v) { return v * a; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline Vec3 normalized(const Vec3& v) {
    double n = norm(v);
    return {v.x / n, v.y / n, v.z / n};
}

// Any unit vector orthogonal to the (nonzero) input.
inline Vec3 any_orthogonal(const Vec3& v) {
    Vec3 ref = std::fabs(v.x) <= std::fabs(v.y) && std::fabs(v.x) <= std::fabs(v.z)
                   ? Vec3{1, 0, 0}
                   : (std::fabs(v.y) <= std::fabs(v.z) ? Vec3{0, 1, 0} : Vec3{0, 0, 1});
    return normalized(cross(v, ref));
}

// Symmetric 3x3 tensor, components stored as (11, 22, 33, 12, 13, 23).
struct Sym3 {
    std::array<double, 6> c{};

    static constexpr int index(int i, int j) {
        // (0,0)->0 (1,1)->1 (2,2)->2 (0,1)->3 (0,2)->4 (1,2)->5
        if (i == j) return i;
        int a = i < j ? i : j, b = i < j ? j : i;
        return a == 0 ? (b == 1 ? 3 : 4) : 5;
    }

    double operator()(int i, int j) const { return c[index(i, j)]; }
    double& comp(int k) { return c[k]; }
    double comp(int k) const { return c[k]; }

    Sym3 operator+(const Sym3& o) const {
        Sym3 r;
        for (int k = 0; k < 6; ++k) r.c[k] = c[k] + o.c[k];
        return r;
    }
    Sym3 operator-(const Sym3& o) const {
        Sym3 r;
        for (int k = 0; k < 6; ++k) r.c[k] = c[k] - o.c[k];
        return r;
    }
    Sym3 operator*(double a) const {
        Sym3 r;
        for (int k = 0; k < 6; ++k) r.c[k] = c[k] * a;
        return r;
    }
    Sym3& operator+=(const Sym3& o) {
        for (int k = 0; k < 6; ++k) c[k] += o.c[k];
        return *this;
    }

    double trace() const { return c[0] + c[1] + c[2]; }
};

inline Sym3 operator*(double a, const Sym3& s) { return s * a; }

inline Sym3 sym3_identity() {
    Sym3 s;
    s.c = {1, 1, 1, 0, 0, 0};
    return s;
}

inline Sym3 outer_sym(const Vec3& u) {  // u (x) u
    Sym3 s;
    s.c = {u.x * u.x, u.y * u.y, u.z * u.z, u.x * u.y, u.x * u.z, u.y * u.z};
    return s;
}

// Symmetric tensor product u (*) v = (u(x)v + v(x)u)/2.
inline Sym3 sym_product(const Vec3& u, const Vec3& v) {
    Sym3 s;
    s.c = {u.x * v.x, u.y * v.y, u.z * v.z,
           0.5 * (u.x * v.y + u.y * v.x),
           0.5 * (u.x * v.z + u.z * v.x),
           0.5 * (u.y * v.z + u.z * v.y)};
    return s;
}

// Quadratic form n . (S n).
inline double quad_form(const Sym3& s, const Vec3& n) {
    return s.c[0] * n.x * n.x + s.c[1] * n.y * n.y + s.c[2] * n.z * n.z +
           2.0 * (s.c[3] * n.x * n.y + s.c[4] * n.x * n.z + s.c[5] * n.y * n.z);
}

inline double frobenius2(const Sym3& s) {
    return s.c[0] * s.c[0] + s.c[1] * s.c[1] + s.c[2] * s.c[2] +
           2.0 * (s.c[3] * s.c[3] + s.c[4] * s.c[4] + s.c[5] * s.c[5]);
}

}  // namespace elastoray
