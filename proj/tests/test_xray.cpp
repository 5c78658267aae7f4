#include <doctest.h>

#include <cmath>
#include <random>

#include "elastoray/tensorfield.hpp"
#include "elastoray/xray.hpp"

using namespace elastoray;

namespace {

// Ball of radius 0.6 about the origin, capped at z <= 0.45; S is the sphere.
LensRegion ball_region() {
    return LensRegion("0.36 - x^2 - y^2 - z^2", "-z - 0.6", 1.05, 1e-9);
}

MediumModel const_model() { return MediumModel("c", "1", "1", "1"); }

FanSpec small_fan_spec(int seeds, int dirs, double h_ray = 2e-3) {
    FanSpec spec;
    spec.seeds = seeds;
    spec.dirs = dirs;
    spec.h_ray = h_ray;
    spec.center_hint = {0.0, 0.0, -0.5};
    return spec;
}

Grid3 box(int n, double half = 1.2) {
    return Grid3{{-half, -half, -half}, 2.0 * half / (n - 1), {n, n, n}};
}

// Straight-line exit prediction for the capped-ball region: first positive
// root against the sphere vs the plane z = 0.45.
bool straight_chord_exits_through_s(const Vec3& p, const Vec3& d, double min_length) {
    double b = dot(p, d), c = dot(p, p) - 0.36;
    double disc = b * b - c;
    if (disc <= 0.0) return false;
    double s_sphere = -b + std::sqrt(disc);
    double s_cap = d.z > 1e-14 ? (0.45 - p.z) / d.z : 1e30;
    return s_sphere < s_cap && s_sphere >= min_length;
}

}  // namespace

TEST_CASE("fan keeps chords that re-exit through S and reports discards") {
    MediumModel m = const_model();
    LensRegion region = ball_region();
    RayFan fan = generate_fan(m, region, small_fan_spec(8, 16));

    CHECK(fan.counts.kept > 0);
    CHECK(fan.counts.kept + fan.counts.cap_exit + fan.counts.trapped + fan.counts.too_short +
              fan.counts.seed_rejected ==
          8u * 16u);

    for (size_t r = 0; r < fan.rays.size(); ++r) {
        const Bicharacteristic& ray = fan.rays[r];
        CHECK(ray.exit == RayExit::SurfaceS);
        CHECK(region.classify(ray.samples.front().x) == Membership::BoundaryS);
        CHECK(region.classify(ray.samples.back().x) == Membership::BoundaryS);
        for (size_t k = 1; k + 1 < ray.samples.size(); k += 50)
            CHECK(region.classify(ray.samples[k].x) != Membership::Exterior);
    }
}

TEST_CASE("fan classification matches the straight-line chord predicate") {
    MediumModel m = const_model();
    RayFan fan = generate_fan(m, ball_region(), small_fan_spec(8, 16));
    for (const FanLaunch& l : fan.launches)
        CHECK(straight_chord_exits_through_s(l.seed, l.dir, fan.spec.min_length));
    for (size_t i = 0; i < fan.discarded.size(); ++i) {
        const FanLaunch& l = fan.discarded[i];
        if (fan.discard_reason[i] == FanDiscard::CapExit)
            CHECK_FALSE(straight_chord_exits_through_s(l.seed, l.dir, fan.spec.min_length));
    }
    // brute-force kept count equals the predicate count over all candidates
    size_t predicted = 0;
    for (const FanLaunch& l : fan.launches)
        predicted += straight_chord_exits_through_s(l.seed, l.dir, fan.spec.min_length);
    for (const FanLaunch& l : fan.discarded)
        predicted += straight_chord_exits_through_s(l.seed, l.dir, fan.spec.min_length);
    CHECK(predicted == fan.counts.kept);
}

TEST_CASE("a cone that only reaches the cap leaves the fan empty") {
    MediumModel m = const_model();
    FanSpec spec = small_fan_spec(1, 4);
    spec.cone_half_angle = 0.05;  // straight up from the bottom pole
    CHECK_THROWS_AS(generate_fan(m, ball_region(), spec), std::runtime_error);
}

TEST_CASE("transform of the identity tensor is the ray length") {
    MediumModel m = const_model();
    RayFan fan = generate_fan(m, ball_region(), small_fan_spec(4, 8));
    Grid3 g = box(9);
    SymTensor2Field ident(g, 6);
    for (size_t n = 0; n < g.node_count(); ++n)
        for (int c = 0; c < 3; ++c) ident.at(n, c) = 1.0;
    for (const Bicharacteristic& ray : fan.rays) {
        TransformSample s = forward_transform(ident, ray);
        CHECK(s.value == doctest::Approx(s.length).epsilon(1e-12));
        CHECK(std::fabs(s.value) <= 1.0 * s.length + 1e-12);  // |value| <= max|B| * length
    }
}

TEST_CASE("transform is linear in the field") {
    MediumModel m = const_model();
    RayFan fan = generate_fan(m, ball_region(), small_fan_spec(3, 6));
    Grid3 g = box(9);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    SymTensor2Field b1(g, 6), b2(g, 6), combo(g, 6);
    const double a = 0.6, c = -2.3;
    for (size_t n = 0; n < g.node_count(); ++n)
        for (int q = 0; q < 6; ++q) {
            b1.at(n, q) = dist(rng);
            b2.at(n, q) = dist(rng);
            combo.at(n, q) = a * b1.at(n, q) + c * b2.at(n, q);
        }
    for (const Bicharacteristic& ray : fan.rays) {
        double lhs = forward_transform(combo, ray).value;
        double rhs = a * forward_transform(b1, ray).value + c * forward_transform(b2, ray).value;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("potential fields integrate to zero along S-to-S rays") {
    // constant speeds: d_g v = d_e v; v = theta * (linear form) vanishes on S
    MediumModel m = const_model();
    RayFan fan = generate_fan(m, ball_region(), small_fan_spec(6, 12, 5e-4));
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> dist(-0.5, 0.5);
    for (int trial = 0; trial < 5; ++trial) {
        double a[3][4];
        for (auto& row : a)
            for (double& c : row) c = dist(rng);
        auto dev = [&](const Vec3& p) {
            // d_e of theta*q with grad theta = -2p
            Sym3 s;
            double q[3], gq[3][3];
            for (int i = 0; i < 3; ++i) {
                q[i] = a[i][0] + a[i][1] * p.x + a[i][2] * p.y + a[i][3] * p.z;
                gq[i][0] = a[i][1];
                gq[i][1] = a[i][2];
                gq[i][2] = a[i][3];
            }
            double theta = 0.36 - dot(p, p);
            double gtheta[3] = {-2 * p.x, -2 * p.y, -2 * p.z};
            for (int i = 0; i < 3; ++i)
                for (int j = i; j < 3; ++j) {
                    double dij = gtheta[j] * q[i] + theta * gq[i][j];
                    double dji = gtheta[i] * q[j] + theta * gq[j][i];
                    s.c[Sym3::index(i, j)] = 0.5 * (dij + dji);
                }
            return s;
        };
        for (const Bicharacteristic& ray : fan.rays) {
            TransformSample s = forward_transform_fn(dev, ray);
            CHECK(std::fabs(s.value) <= 1e-6 * s.length);
        }
    }
}

TEST_CASE("the g-form transform matches the arclength transform") {
    Grid3 g = box(11);
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    SymTensor2Field b(g, 6);
    for (size_t n = 0; n < g.node_count(); ++n)
        for (int q = 0; q < 6; ++q) b.at(n, q) = dist(rng);

    // constant speeds: the parameterizations coincide up to round-off
    MediumModel cm = const_model();
    RayFan cfan = generate_fan(cm, ball_region(), small_fan_spec(4, 8, 2e-3));
    for (const Bicharacteristic& ray : cfan.rays) {
        TransformSample s1 = forward_transform(b, ray);
        TransformSample s2 = transform_g_form(b, cm, ray);
        CHECK(std::fabs(s1.value - s2.value) <= 1e-12 * std::max(1.0, s1.length));
    }

    // varying speeds: the two quadratures differ at O(h_ray^2) only (the
    // trilinear integrand is piecewise smooth, hence the looser bound)
    MediumModel grad("grad", "exp(0.4*z)/3", "exp(0.4*z)/3", "1");
    RayFan fan = generate_fan(grad, ball_region(), small_fan_spec(4, 8, 5e-4));
    for (const Bicharacteristic& ray : fan.rays) {
        TransformSample s1 = forward_transform(b, ray);
        TransformSample s2 = transform_g_form(b, grad, ray);
        CHECK(std::fabs(s1.value - s2.value) <= 1e-7 * s1.length);
    }
}

TEST_CASE("forward transform errors when the ray leaves the valid mask") {
    MediumModel m = const_model();
    RayFan fan = generate_fan(m, ball_region(), small_fan_spec(2, 4));
    Grid3 g = box(9);
    SymTensor2Field b(g, 6, true);
    for (auto& v : b.mask) v = 0;
    CHECK_THROWS_AS(forward_transform(b, fan.rays.front()), std::runtime_error);
}

TEST_CASE("forward and adjoint are exact transposes") {
    MediumModel m = const_model();
    RayFan fan = generate_fan(m, ball_region(), small_fan_spec(4, 8));
    Grid3 g = box(9);
    RayTransformOp op(fan, g);
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> x(op.unknowns()), w(op.rays()), ax(op.rays()), atw(op.unknowns());
    for (double& v : x) v = dist(rng);
    for (double& v : w) v = dist(rng);
    op.forward(x, ax);
    op.adjoint(w, atw);
    double lhs = 0.0, rhs = 0.0;
    for (size_t r = 0; r < w.size(); ++r) lhs += ax[r] * w[r];
    for (size_t i = 0; i < x.size(); ++i) rhs += x[i] * atw[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("zero samples invert to the zero field") {
    MediumModel m = const_model();
    RayFan fan = generate_fan(m, ball_region(), small_fan_spec(4, 8));
    Grid3 g = box(9);
    std::vector<TransformSample> zeros(fan.rays.size());
    for (size_t r = 0; r < zeros.size(); ++r) zeros[r] = {r, 0.0, fan.rays[r].length()};
    auto [est, diag] = invert_transform(fan, zeros, g);
    CHECK(diag.converged);
    for (double v : est.values) CHECK(v == 0.0);
}

TEST_CASE("inversion residuals never increase") {
    MediumModel m = const_model();
    RayFan fan = generate_fan(m, ball_region(), small_fan_spec(6, 12));
    Grid3 g = box(9);
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<TransformSample> samples(fan.rays.size());
    for (size_t r = 0; r < samples.size(); ++r) samples[r] = {r, dist(rng), fan.rays[r].length()};
    InversionOptions opts;
    opts.max_iter = 60;
    auto [est, diag] = invert_transform(fan, samples, g, opts);
    REQUIRE(diag.residuals.size() > 5);
    for (size_t i = 1; i < diag.residuals.size(); ++i)
        CHECK(diag.residuals[i] <= diag.residuals[i - 1] * (1.0 + 1e-12));
}

TEST_CASE("solenoidal projection recovers a manufactured potential") {
    MediumModel m = const_model();
    double errs[2];
    int sizes[2] = {11, 21};
    for (int t = 0; t < 2; ++t) {
        Grid3 g = box(sizes[t], 1.0);
        // v0 vanishes with its gradient at the box faces
        auto bump = [](double u) { return (1 - u * u) * (1 - u * u); };
        auto v0 = [&](const Vec3& p, int c) {
            double base = bump(p.x) * bump(p.y) * bump(p.z);
            return base * (c == 0 ? 1.0 : (c == 1 ? 0.5 * p.x : -0.3 * p.y));
        };
        OneFormField vf(g, 3);
        for (int k = 0; k < g.dims[2]; ++k)
            for (int j = 0; j < g.dims[1]; ++j)
                for (int i = 0; i < g.dims[0]; ++i) {
                    size_t n = g.lin(i, j, k);
                    Vec3 p = g.position(i, j, k);
                    for (int c = 0; c < 3; ++c) vf.at(n, c) = v0(p, c);
                }
        SymTensor2Field f = sym_derivative_g(m, vf);  // discrete d_g v0
        ProjectionResult proj = solenoidal_project(m, f, g);
        double num = 0.0, den = 0.0;
        for (size_t n = 0; n < g.node_count(); ++n)
            for (int c = 0; c < 3; ++c) {
                double d = proj.potential.at(n, c) - vf.at(n, c);
                num += d * d;
                den += vf.at(n, c) * vf.at(n, c);
            }
        errs[t] = std::sqrt(num / den);
    }
    CHECK(errs[0] < 0.2);
    CHECK(errs[0] / errs[1] > 2.5);  // about second order in h
}

TEST_CASE("projection of a solenoidal field returns a negligible potential") {
    MediumModel m = const_model();
    Grid3 g = box(11, 1.0);
    std::mt19937_64 rng(47);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    SymTensor2Field f(g, 6);
    for (size_t n = 0; n < g.node_count(); ++n)
        for (int c = 0; c < 6; ++c) f.at(n, c) = dist(rng);
    ProjectionResult first = solenoidal_project(m, f, g, nullptr, 1e-9, 8000);
    ProjectionResult second = solenoidal_project(m, first.solenoidal, g, nullptr, 1e-9, 8000);
    double vnorm = l2_norm(second.potential);
    double fnorm = l2_norm(first.solenoidal);
    CHECK(vnorm <= 1e-8 * std::max(1.0, fnorm));
    // idempotence: re-projecting changes the solenoidal part negligibly
    double diff = l2_distance(second.solenoidal, first.solenoidal);
    CHECK(diff <= 1e-8 * std::max(1.0, fnorm));
}
