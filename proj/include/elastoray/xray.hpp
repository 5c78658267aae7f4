#pragma once

#include <functional>

#include "elastoray/cgls.hpp"
#include "elastoray/raytrace.hpp"

namespace elastoray {

struct FanSpec {
    int seeds = 32;
    int dirs = 64;
    double h_ray = 2e-3;
    double cone_half_angle = 1.0;   // radians around the inward normal
    double seed_margin = 0.85;      // fraction of the S-patch radius used for seeding
    double max_length = 50.0;
    double min_length = 0.05;       // grazing chords below this are discarded
    unsigned jitter_seed = 0;       // 0 = no jitter; otherwise seeds the azimuth jitter
    Vec3 center_hint{};             // starting point for locating S
};

struct FanCounts {
    size_t kept = 0;
    size_t cap_exit = 0;
    size_t trapped = 0;
    size_t too_short = 0;
    size_t seed_rejected = 0;
};

struct FanLaunch {
    Vec3 seed;
    Vec3 dir;
};

enum class FanDiscard : uint8_t { CapExit, Trapped, TooShort };

// Family of rays with both endpoints on S, traced inside the region.
struct RayFan {
    FanSpec spec;
    std::vector<FanLaunch> launches;        // one per kept ray
    std::vector<Bicharacteristic> rays;     // kept rays, in launch order
    FanCounts counts;
    std::vector<FanLaunch> discarded;       // rejected candidates, with reasons
    std::vector<FanDiscard> discard_reason;
};

// Seeds a polar mesh on S around the projected center point, samples an
// inward direction cone per seed, traces every candidate, and keeps rays that
// re-exit through S. Throws when every candidate is discarded.
RayFan generate_fan(const MediumModel& model, const LensRegion& region, const FanSpec& spec);

struct TransformSample {
    size_t ray_id = 0;
    double value = 0.0;
    double length = 0.0;
};

// Line integral of N.(B N) in Euclidean arclength along the ray: trilinear
// interpolation of B at the samples, composite trapezoid in s.
TransformSample forward_transform(const SymTensor2Field& b, const Bicharacteristic& ray);

// Same quadrature with a closed-form integrand evaluator instead of a grid.
TransformSample forward_transform_fn(const std::function<Sym3(const Vec3&)>& b_eval,
                                     const Bicharacteristic& ray);

// The g-form of the transform: integral of f(dγ/dt, dγ/dt) dt over travel
// time with f = c^-1 B; equals forward_transform up to quadrature error.
TransformSample transform_g_form(const SymTensor2Field& b, const MediumModel& model,
                                 const Bicharacteristic& ray);
TransformSample transform_g_form_fn(const std::function<Sym3(const Vec3&)>& b_eval,
                                    const MediumModel& model, const Bicharacteristic& ray);

// Discrete ray-transform operator over a fan: 6-component nodal unknowns to
// one scalar per ray (trapezoid weights, trilinear interpolation). forward
// and adjoint are exact transposes of each other; the adjoint accumulates
// per-ray in fixed block order so results do not depend on the worker count.
class RayTransformOp {
  public:
    RayTransformOp(const RayFan& fan, const Grid3& grid);

    size_t unknowns() const { return nx_; }
    size_t rays() const { return fan_->rays.size(); }

    void forward(const std::vector<double>& x, std::vector<double>& y) const;
    void adjoint(const std::vector<double>& y, std::vector<double>& x) const;

    // Mean diagonal entry of the normal operator (regularization scale).
    double mean_normal_diagonal() const;

  private:
    struct SampleCache {
        uint32_t node[8];  // cell corners
        double tw[8];      // trilinear weights
        double m[6];       // direction quadratic-form coefficients
        double weight;     // trapezoid weight in s
    };

    const RayFan* fan_;
    Grid3 grid_;
    size_t nx_;
    std::vector<SampleCache> cache_;
    std::vector<size_t> ray_begin_;
    mutable std::vector<GridField> block_buf_;
};

struct InversionDiagnostics {
    std::vector<double> residuals;  // non-increasing augmented residuals
    int iterations = 0;
    bool converged = false;
    double lambda = 0.0;
    double final_relative_residual = 0.0;
};

struct InversionOptions {
    double reg = -1.0;   // < 0: 1e-4 * mean diagonal of the normal operator
    double tol = 1e-8;
    int max_iter = 500;
};

// Regularized least-squares inversion of the ray transform: minimizes
// sum_rays (forward(f, ray) - sample)^2 + reg |f|^2 over 6-component nodal
// fields by CGLS with matrix-free forward/adjoint applications. The adjoint
// accumulates per-ray in fixed block order, so results are independent of the
// worker count.
std::pair<SymTensor2Field, InversionDiagnostics> invert_transform(
    const RayFan& fan, const std::vector<TransformSample>& samples, const Grid3& grid,
    const InversionOptions& opts = {});

struct ProjectionResult {
    SymTensor2Field solenoidal;
    OneFormField potential;  // the 1-form v with f = solenoidal + d_g v
    int iterations = 0;
    bool converged = false;
};

// Splits f into a g-solenoidal part and d_g v by solving the weighted normal
// equations of min |d_g v - f|_g with v = 0 on constrained nodes (outside the
// region interior when a region is given, plus the outermost grid layer).
ProjectionResult solenoidal_project(const MediumModel& model, const SymTensor2Field& f,
                                    const Grid3& grid, const LensRegion* region = nullptr,
                                    double tol = 1e-8, int max_iter = 4000);

}  // namespace elastoray
