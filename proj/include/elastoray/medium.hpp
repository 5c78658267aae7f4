#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "elastoray/expr.hpp"
#include "elastoray/geometry.hpp"
#include "elastoray/grid.hpp"

namespace elastoray {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when a medium fails its positivity requirements at an evaluated point.
struct AdmissibilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Pointwise medium sample. Speeds follow c_p^2 = (lambda + 2 mu) / rho and
// c_s^2 = mu / rho; gradients are exact (symbolic differentiation upstream).
struct MediumPoint {
    double lambda = 0.0, mu = 0.0, rho = 0.0;
    double cp = 0.0, cs = 0.0;
    Vec3 grad_log_cp{}, grad_log_cs{}, grad_log_rho{};
    Vec3 grad_cp{}, grad_cs2{};
};

enum class WaveMode : uint8_t { P, S };

// Isotropic elastic medium defined by closed-form Lame parameters and density.
class MediumModel {
  public:
    MediumModel() = default;
    MediumModel(std::string name, const std::string& lambda_expr, const std::string& mu_expr,
                const std::string& rho_expr);

    const std::string& name() const { return name_; }

    // Evaluates parameters, speeds, and gradients. Throws AdmissibilityError when
    // rho <= 0, mu <= 0, or lambda + 2 mu <= 0 (speeds undefined).
    MediumPoint eval(const Vec3& x) const;

    double speed(const Vec3& x, WaveMode mode) const;
    Vec3 grad_log_speed(const Vec3& x, WaveMode mode) const;

    // Hessian of log(rho), exact from the expression tree.
    Sym3 log_rho_hessian(const Vec3& x) const;

    const ScalarFieldExpr& lambda_field() const { return lambda_; }
    const ScalarFieldExpr& mu_field() const { return mu_; }
    const ScalarFieldExpr& rho_field() const { return rho_; }

  private:
    std::string name_;
    ScalarFieldExpr lambda_, mu_, rho_;
};

enum class Membership : uint8_t { Exterior, Interior, BoundaryS, BoundaryCap };

const char* membership_name(Membership m);

// Lens-shaped region {xtilde >= -cap_level, theta >= 0}. The accessible
// boundary piece S is {theta = 0}; the inner cap is {xtilde = -cap_level}.
class LensRegion {
  public:
    LensRegion() = default;
    LensRegion(const std::string& theta_expr, const std::string& xtilde_expr, double cap_level,
               double s_tolerance);

    // Exclusive classification; boundary tests use s_tolerance on the defining
    // function values, with S taking precedence over the cap.
    Membership classify(const Vec3& x) const;

    bool inside(const Vec3& x) const { return classify(x) != Membership::Exterior; }

    double theta(const Vec3& x) const { return theta_.value(x); }
    double xtilde(const Vec3& x) const { return xtilde_.value(x); }
    Vec3 grad_theta(const Vec3& x) const { return theta_.grad(x); }
    double cap_level() const { return cap_; }
    double s_tolerance() const { return tol_; }

  private:
    ScalarFieldExpr theta_, xtilde_;
    double cap_ = 1.0;
    double tol_ = 1e-9;
};

// Per-node admissibility flags over a grid.
struct AdmissibilityReport {
    Grid3 grid;
    double eps_degenerate = 0.0;     // threshold on |c_p - 2 c_s|
    size_t nodes_total = 0;
    size_t nodes_in_region = 0;      // interior or on S
    size_t fail_rho = 0, fail_mu = 0, fail_lame_sum = 0, fail_convexity = 0;
    std::vector<uint8_t> degenerate; // per node: |c_p - 2 c_s| < eps (evaluable nodes only)
    std::vector<uint8_t> evaluable;  // medium evaluated without domain error
    bool pass = false;               // all evaluable in-region nodes satisfy every condition
    double degenerate_fraction = 0.0;
};

// Checks rho > 0, mu > 0, lambda + mu > 0, 3 lambda + 2 mu > 0 per node and
// builds the degenerate-set mask |c_p - 2 c_s| < eps. When eps_override <= 0
// the threshold defaults to 1e-3 * max c_s over the evaluable grid nodes.
AdmissibilityReport admissibility_report(const MediumModel& model, const LensRegion& region,
                                         const Grid3& grid, double eps_override = 0.0);

// Parsed configuration document.
struct ModelConfig {
    MediumModel model;
    LensRegion region;
    Grid3 grid;
};

// Parses the UTF-8 JSON config (model.{name,lambda,mu,rho},
// region.{theta,xtilde,cap_level,s_tolerance}, grid.{origin,spacing,dims}).
ModelConfig parse_model_config(const std::string& text);
ModelConfig load_model_config(const std::string& path);

}  // namespace elastoray
