#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "elastoray/medium.hpp"

namespace elastoray {

enum class BranchSign : int8_t { Plus = 1, Minus = -1 };

enum class RayExit : uint8_t { SurfaceS, InnerCap, Trapped };

struct RaySample {
    double s = 0.0;   // Euclidean arclength
    double t = 0.0;   // travel time
    Vec3 x{};
    double tau = 0.0; // constant along the curve
    Vec3 xi{};
};

// Discretized null-bicharacteristic. The spatial tangent dx/ds equals
// sign * xi/|xi| and has unit Euclidean norm; tau = sign * c |xi| is conserved.
struct Bicharacteristic {
    WaveMode mode = WaveMode::P;
    BranchSign sign = BranchSign::Plus;
    double h_ray = 1e-3;
    std::vector<RaySample> samples;
    RayExit exit = RayExit::Trapped;

    size_t size() const { return samples.size(); }
    Vec3 direction(size_t k) const {
        return normalized(samples[k].xi) * static_cast<double>(static_cast<int8_t>(sign));
    }
    double length() const { return samples.empty() ? 0.0 : samples.back().s; }

    // Max |tau - sign * c |xi|| over samples, relative to |tau|.
    double hamiltonian_drift(const MediumModel& model) const;
};

struct RayOptions {
    double max_length = 50.0;
    double boundary_tol = 1e-10;  // on the region defining-function values
};

// Fixed-step RK4 integration of dt/ds = 1/c, dx/ds = sign xi/|xi|,
// dxi/ds = -sign |xi| grad log c until the path leaves the region (terminal
// point put on the crossed boundary by bisection) or max_length is reached
// (exit = Trapped, not an error).
Bicharacteristic integrate_bicharacteristic(const MediumModel& model, const LensRegion& region,
                                            const Vec3& x0, const Vec3& xi0, BranchSign sign,
                                            WaveMode mode, double h_ray,
                                            const RayOptions& opts = {});

// Max norm of the geodesic-equation defect of the spatial path under the
// conformal metric c^-2 dx^2, from centered second differences of the samples.
double geodesic_residual(const MediumModel& model, const Bicharacteristic& ray);

enum class FanKind : uint8_t {
    Parallel,     // neighbors offset in position, common initial direction
    PointSource,  // neighbors from the same point, directions tilted by the offset angle
};

struct AmplitudeTrace {
    std::vector<double> div_n;     // divergence of the unit direction field
    std::vector<double> b0;
    size_t first_valid = 0;        // leading samples with unresolved fan separation are excluded
    size_t common_length = 0;      // samples shared by all five rays
    bool truncated = false;        // a neighbor ray exited before the central ray
};

// Estimates div N by central differences across a 4-ray fan (offsets
// +/-fan_offset along two transported transverse directions) and evaluates
// the leading amplitude b0(s) = b0_init sqrt(rho c(s0)/rho c(s))
// exp(-1/2 int div N) with cumulative trapezoids; s0 is the first resolved
// sample (sample 0 for parallel fans, sample 1 for point fans).
AmplitudeTrace amplitude_transport(const MediumModel& model, const LensRegion& region,
                                   const Bicharacteristic& ray, FanKind kind, double fan_offset,
                                   double b0_init);

// Next-order transport: solves a' + 1/2 [d/ds log(rho c) + div N] a = G with
// the integrating factor g = sqrt(rho c) exp(1/2 int div N) and trapezoidal
// quadrature. G is caller-supplied per sample; requires trace.div_n from
// amplitude_transport. Entries before trace.first_valid are zero.
std::vector<double> amplitude_next_order(const MediumModel& model, const Bicharacteristic& ray,
                                         const AmplitudeTrace& trace,
                                         const std::vector<double>& g_samples, double a_init);

// ---------------------------------------------------------------------------
// Grid eikonal solver (first-order fast marching), |grad T| = 1/c.
// ---------------------------------------------------------------------------

enum class NodeStatus : uint8_t { Far, Accepted, Outside };

struct TravelTimeField {
    Grid3 grid;
    std::vector<double> t;
    std::vector<NodeStatus> status;

    GridField as_field() const;  // 1-component field, mask = accepted
};

struct PointSource {
    Vec3 x;
};
struct PlaneSource {
    Vec3 point;
    Vec3 normal;
};
using SourceSpec = std::variant<PointSource, PlaneSource>;

// First-arrival travel time on the grid. Nodes outside the region are marked
// Outside and never updated. Throws if a point source lies outside the grid.
TravelTimeField eikonal_grid(const MediumModel& model, const LensRegion& region,
                             const SourceSpec& source, const Grid3& grid,
                             WaveMode mode = WaveMode::P);

}  // namespace elastoray
