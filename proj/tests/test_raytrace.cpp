#include <doctest.h>

#include <cmath>

#include "elastoray/raytrace.hpp"

using namespace elastoray;

namespace {

// All-inside region (rays stop at max_length only).
LensRegion open_region() { return LensRegion("1", "0", 1.0, 1e-9); }

// Half space z > -0.95 with a far cap, for the circular-ray oracle.
LensRegion slab_region() { return LensRegion("z + 0.95", "-z", 10.0, 1e-9); }

// Ball of radius 0.6 about the origin, capped at z <= 0.45.
LensRegion ball_region() {
    return LensRegion("0.36 - x^2 - y^2 - z^2", "-z - 0.6", 1.05, 1e-9);
}

MediumModel const_cp2() { return MediumModel("c2", "2", "1", "1"); }  // cp = 2, cs = 1

// cp = 1 + z (lambda = mu = (1+z)^2 / 3, rho = 1)
MediumModel linear_gradient() {
    return MediumModel("lingrad", "(1+z)^2/3", "(1+z)^2/3", "1");
}

// constant speeds sqrt(3), 1 with density exp(z)
MediumModel stratified() { return MediumModel("strat", "exp(z)", "exp(z)", "exp(z)"); }

Bicharacteristic trace_len(const MediumModel& m, const LensRegion& r, const Vec3& x0,
                           const Vec3& xi0, double h, double len) {
    RayOptions opts;
    opts.max_length = len;
    return integrate_bicharacteristic(m, r, x0, xi0, BranchSign::Plus, WaveMode::P, h, opts);
}

}  // namespace

TEST_CASE("constant medium gives a straight bicharacteristic") {
    MediumModel m = const_cp2();
    Bicharacteristic ray = trace_len(m, open_region(), {0, 0, 0.1}, {1, 0, 0}, 1e-3, 1.0);
    REQUIRE(ray.samples.size() > 500);
    for (size_t k = 0; k < ray.samples.size(); k += 100) {
        const RaySample& s = ray.samples[k];
        CHECK(std::fabs(s.x.x - s.s) < 1e-12);
        CHECK(std::fabs(s.x.y) < 1e-14);
        CHECK(std::fabs(s.x.z - 0.1) < 1e-14);
        CHECK(std::fabs(s.t - s.s / 2.0) < 1e-12);
        CHECK(std::fabs(s.xi.x - 1.0) < 1e-14);
        CHECK(std::fabs(s.tau - 2.0) < 1e-14);
    }
}

TEST_CASE("linear velocity gradient bends the ray onto a circle") {
    MediumModel m = linear_gradient();
    Bicharacteristic ray = trace_len(m, slab_region(), {0, 0, 0}, {1, 0, 0}, 1e-3, 5.0);
    REQUIRE(ray.exit == RayExit::SurfaceS);
    double worst = 0.0;
    for (const RaySample& s : ray.samples) {
        double r = std::sqrt(s.x.x * s.x.x + (s.x.z + 1.0) * (s.x.z + 1.0));
        worst = std::max(worst, std::fabs(r - 1.0));
    }
    CHECK(worst < 1e-6);
    // closed-form endpoint where the circle meets z = -0.95
    const RaySample& end = ray.samples.back();
    CHECK(std::fabs(end.x.z + 0.95) < 1e-9);
    CHECK(std::fabs(end.x.x - std::sqrt(1.0 - 0.05 * 0.05)) < 1e-6);
}

TEST_CASE("Hamiltonian is conserved along rays") {
    MediumModel m("wavy", "1 + 0.2*sin(x)*cos(z)", "0.8 + 0.1*tanh(y)", "exp(0.1*z)");
    Bicharacteristic ray = trace_len(m, open_region(), {0.1, -0.2, 0.0}, {0.7, 0.3, 0.5}, 1e-3, 2.0);
    CHECK(ray.hamiltonian_drift(m) < 1e-8);
    Bicharacteristic sray = integrate_bicharacteristic(m, open_region(), {0.1, -0.2, 0.0},
                                                       {0.7, 0.3, 0.5}, BranchSign::Minus,
                                                       WaveMode::S, 1e-3);
    CHECK(sray.hamiltonian_drift(m) < 1e-8);
}

TEST_CASE("reversed integration returns to the launch point") {
    MediumModel m("wavy", "1 + 0.2*sin(x)*cos(z)", "0.8 + 0.1*tanh(y)", "exp(0.1*z)");
    Vec3 x0{0.1, -0.2, 0.0}, xi0{0.7, 0.3, 0.5};
    Bicharacteristic fwd = trace_len(m, open_region(), x0, xi0, 1e-3, 1.0);
    const RaySample& end = fwd.samples.back();
    Bicharacteristic back = trace_len(m, open_region(), end.x, -end.xi, 1e-3, end.s);
    CHECK(norm(back.samples.back().x - x0) < 1e-6);
}

TEST_CASE("log |xi| slope equals the transport rate") {
    MediumModel m = linear_gradient();
    Bicharacteristic ray = trace_len(m, slab_region(), {0, 0, 0}, {1, 0, 0}, 1e-3, 1.0);
    double h = ray.h_ray;
    for (size_t k = 200; k + 200 < ray.samples.size(); k += 150) {
        double slope = (std::log(norm(ray.samples[k + 1].xi)) -
                        std::log(norm(ray.samples[k - 1].xi))) /
                       (2 * h);
        MediumPoint mp = m.eval(ray.samples[k].x);
        double expected = -dot(ray.direction(k), mp.grad_log_cp);  // plus branch
        CHECK(slope == doctest::Approx(expected).epsilon(1e-6));
    }
}

TEST_CASE("geodesic residual vanishes for straight rays and converges at 2nd order") {
    MediumModel c2 = const_cp2();
    Bicharacteristic straight = trace_len(c2, open_region(), {0, 0, 0}, {1, 0, 0}, 1e-3, 1.0);
    CHECK(geodesic_residual(c2, straight) < 1e-9);

    MediumModel m = linear_gradient();
    Bicharacteristic coarse = trace_len(m, slab_region(), {0, 0, 0}, {1, 0, 0}, 1e-3, 1.0);
    CHECK(geodesic_residual(m, coarse) < 1e-4);
    Bicharacteristic fine = trace_len(m, slab_region(), {0, 0, 0}, {1, 0, 0}, 5e-4, 1.0);
    double ratio = geodesic_residual(m, coarse) / geodesic_residual(m, fine);
    CHECK(ratio > 3.0);  // second order: halving the step quarters the defect
    CHECK(ratio < 5.0);

    Bicharacteristic tiny = trace_len(m, slab_region(), {0, 0, 0}, {1, 0, 0}, 1e-3, 0.003);
    CHECK_THROWS_AS(geodesic_residual(m, tiny), std::invalid_argument);
}

TEST_CASE("preconditions") {
    MediumModel m = const_cp2();
    CHECK_THROWS_AS(trace_len(m, ball_region(), {0, 0, 2.0}, {1, 0, 0}, 1e-3, 1.0),
                    std::invalid_argument);  // exterior launch
    CHECK_THROWS_AS(trace_len(m, open_region(), {0, 0, 0}, {0, 0, 0}, 1e-3, 1.0),
                    std::invalid_argument);  // zero covector
    Bicharacteristic trapped = trace_len(m, open_region(), {0, 0, 0}, {1, 0, 0}, 1e-2, 0.5);
    CHECK(trapped.exit == RayExit::Trapped);  // reported, not fatal
}

TEST_CASE("boundary exits land on the crossed surface piece") {
    MediumModel m = const_cp2();
    LensRegion ball = ball_region();
    Bicharacteristic via_s = trace_len(m, ball, {0, 0, -0.3}, {1, 0, 0}, 1e-3, 5.0);
    CHECK(via_s.exit == RayExit::SurfaceS);
    const Vec3 end = via_s.samples.back().x;
    CHECK(std::fabs(dot(end, end) - 0.36) < 1e-9);  // |theta| <= 1e-10 at the sphere

    Bicharacteristic via_cap = trace_len(m, ball, {0, 0, -0.3}, {0, 0, 1}, 1e-3, 5.0);
    CHECK(via_cap.exit == RayExit::InnerCap);
    CHECK(std::fabs(via_cap.samples.back().x.z - 0.45) < 1e-9);
}

TEST_CASE("parallel fan in a constant medium carries flat amplitude") {
    MediumModel m = const_cp2();
    Bicharacteristic ray = trace_len(m, open_region(), {0, 0, 0}, {1, 0, 0}, 1e-3, 1.0);
    AmplitudeTrace tr = amplitude_transport(m, open_region(), ray, FanKind::Parallel, 1e-3, 1.0);
    CHECK(tr.first_valid == 0);
    CHECK_FALSE(tr.truncated);
    for (size_t k = 0; k < tr.common_length; k += 100) {
        CHECK(std::fabs(tr.div_n[k]) < 1e-10);
        CHECK(std::fabs(tr.b0[k] - 1.0) < 1e-10);
    }
}

TEST_CASE("point-source fan reproduces 1/s spreading") {
    MediumModel m = const_cp2();
    Bicharacteristic ray = trace_len(m, open_region(), {0, 0, 0}, {0.3, -0.2, 0.9}, 1e-3, 1.0);
    AmplitudeTrace tr = amplitude_transport(m, open_region(), ray, FanKind::PointSource, 1e-3, 1.0);
    CHECK(tr.first_valid == 1);
    // div N = 2/s for spherical spreading
    size_t mid = 500;
    CHECK(tr.div_n[mid] == doctest::Approx(2.0 / ray.samples[mid].s).epsilon(1e-6));
    // ratios against a reference sample away from the source follow s_ref/s
    size_t ref = 500;
    for (size_t k = 600; k < tr.common_length; k += 100) {
        double expected = ray.samples[ref].s / ray.samples[k].s;
        CHECK(std::fabs(tr.b0[k] / tr.b0[ref] - expected) < 1e-4);
    }
}

TEST_CASE("amplitude follows sqrt(rho c ratio) through a stratified density") {
    MediumModel m = stratified();
    Bicharacteristic ray = trace_len(m, open_region(), {0, 0, 0}, {0, 0, 1}, 1e-3, 1.0);
    AmplitudeTrace tr = amplitude_transport(m, open_region(), ray, FanKind::Parallel, 1e-3, 2.0);
    for (size_t k = 0; k < tr.common_length; k += 100) {
        double s = ray.samples[k].s;
        CHECK(std::fabs(tr.b0[k] - 2.0 * std::exp(-0.5 * s)) < 1e-6);
    }
}

TEST_CASE("amplitude positivity") {
    MediumModel m("wavy", "1 + 0.2*sin(x)*cos(z)", "0.8 + 0.1*tanh(y)", "exp(0.1*z)");
    Bicharacteristic ray = trace_len(m, open_region(), {0, 0, 0}, {1, 0.2, 0.1}, 1e-3, 1.0);
    AmplitudeTrace tr = amplitude_transport(m, open_region(), ray, FanKind::Parallel, 1e-3, 0.7);
    for (size_t k = tr.first_valid; k < tr.common_length; ++k) CHECK(tr.b0[k] > 0.0);
}

TEST_CASE("neighbor exit truncates the trace and flags it") {
    MediumModel m = const_cp2();
    LensRegion ball = ball_region();
    Bicharacteristic ray = trace_len(m, ball, {0, 0, -0.3}, {1, 0, 0}, 1e-3, 5.0);
    AmplitudeTrace tr = amplitude_transport(m, ball, ray, FanKind::Parallel, 0.05, 1.0);
    CHECK(tr.truncated);
    CHECK(tr.common_length < ray.samples.size());
}

TEST_CASE("next-order transport with zero and constant sources") {
    MediumModel c2 = const_cp2();
    Bicharacteristic ray = trace_len(c2, open_region(), {0, 0, 0}, {1, 0, 0}, 1e-3, 1.0);
    AmplitudeTrace tr = amplitude_transport(c2, open_region(), ray, FanKind::Parallel, 1e-3, 1.0);

    std::vector<double> zero(ray.samples.size(), 0.0);
    std::vector<double> a0 = amplitude_next_order(c2, ray, tr, zero, 0.7);
    for (size_t k = 0; k < tr.common_length; k += 100)
        CHECK(std::fabs(a0[k] - 0.7) < 1e-12);

    std::vector<double> one(ray.samples.size(), 1.0);
    std::vector<double> a1 = amplitude_next_order(c2, ray, tr, one, 0.25);
    for (size_t k = 0; k < tr.common_length; k += 100)
        CHECK(std::fabs(a1[k] - (0.25 + ray.samples[k].s)) < 1e-12);

    std::vector<double> bad(3, 0.0);
    CHECK_THROWS_AS(amplitude_next_order(c2, ray, tr, bad, 1.0), std::invalid_argument);
}

TEST_CASE("next-order transport reproduces the integrating-factor decay") {
    MediumModel m = stratified();
    Bicharacteristic ray = trace_len(m, open_region(), {0, 0, 0}, {0, 0, 1}, 1e-3, 1.0);
    AmplitudeTrace tr = amplitude_transport(m, open_region(), ray, FanKind::Parallel, 1e-3, 1.0);
    std::vector<double> zero(ray.samples.size(), 0.0);
    std::vector<double> a = amplitude_next_order(m, ray, tr, zero, 1.0);
    for (size_t k = 0; k < tr.common_length; k += 100) {
        double s = ray.samples[k].s;
        CHECK(std::fabs(a[k] - std::exp(-0.5 * s)) < 1e-8);  // g(0)/g(s) with zero source
    }
}
