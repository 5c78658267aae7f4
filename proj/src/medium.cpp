#include "elastoray/medium.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace elastoray {

MediumModel::MediumModel(std::string name, const std::string& lambda_expr,
                         const std::string& mu_expr, const std::string& rho_expr)
    : name_(std::move(name)) {
    auto parse_field = [](const char* key, const std::string& text) {
        try {
            return ScalarFieldExpr::parse(text);
        } catch (const ExprParseError& e) {
            std::ostringstream msg;
            msg << "model." << key << ": " << e.what() << " (line " << e.line << ", column "
                << e.column << ")";
            throw ConfigError(msg.str());
        }
    };
    lambda_ = parse_field("lambda", lambda_expr);
    mu_ = parse_field("mu", mu_expr);
    rho_ = parse_field("rho", rho_expr);
}

MediumPoint MediumModel::eval(const Vec3& x) const {
    MediumPoint p;
    p.lambda = lambda_.value(x);
    p.mu = mu_.value(x);
    p.rho = rho_.value(x);
    if (!(p.rho > 0.0)) throw AdmissibilityError("medium '" + name_ + "': rho <= 0 at evaluated point");
    if (!(p.mu > 0.0)) throw AdmissibilityError("medium '" + name_ + "': mu <= 0 at evaluated point");
    double m = p.lambda + 2.0 * p.mu;
    if (!(m > 0.0))
        throw AdmissibilityError("medium '" + name_ + "': lambda + 2 mu <= 0 at evaluated point");

    double cp2 = m / p.rho;
    double cs2 = p.mu / p.rho;
    p.cp = std::sqrt(cp2);
    p.cs = std::sqrt(cs2);

    Vec3 grad_lambda = lambda_.grad(x);
    Vec3 grad_mu = mu_.grad(x);
    Vec3 grad_rho = rho_.grad(x);
    p.grad_log_rho = grad_rho / p.rho;

    // grad cp^2 = (grad lambda + 2 grad mu)/rho - cp^2 grad rho / rho
    Vec3 grad_cp2 = (grad_lambda + 2.0 * grad_mu) / p.rho - cp2 * p.grad_log_rho;
    p.grad_cs2 = grad_mu / p.rho - cs2 * p.grad_log_rho;
    p.grad_log_cp = grad_cp2 / (2.0 * cp2);
    p.grad_log_cs = p.grad_cs2 / (2.0 * cs2);
    p.grad_cp = grad_cp2 / (2.0 * p.cp);
    return p;
}

double MediumModel::speed(const Vec3& x, WaveMode mode) const {
    MediumPoint p = eval(x);
    return mode == WaveMode::P ? p.cp : p.cs;
}

Vec3 MediumModel::grad_log_speed(const Vec3& x, WaveMode mode) const {
    MediumPoint p = eval(x);
    return mode == WaveMode::P ? p.grad_log_cp : p.grad_log_cs;
}

Sym3 MediumModel::log_rho_hessian(const Vec3& x) const {
    double r = rho_.value(x);
    if (!(r > 0.0)) throw AdmissibilityError("medium '" + name_ + "': rho <= 0 at evaluated point");
    Vec3 g = rho_.grad(x);
    Sym3 h = rho_.hessian(x);
    // Hess log r = Hess r / r - (grad r (x) grad r)/r^2
    Sym3 out;
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j)
            out.c[Sym3::index(i, j)] = h(i, j) / r - g[i] * g[j] / (r * r);
    return out;
}

const char* membership_name(Membership m) {
    switch (m) {
        case Membership::Exterior: return "exterior";
        case Membership::Interior: return "interior";
        case Membership::BoundaryS: return "boundary-S";
        case Membership::BoundaryCap: return "boundary-cap";
    }
    return "?";
}

LensRegion::LensRegion(const std::string& theta_expr, const std::string& xtilde_expr,
                       double cap_level, double s_tolerance)
    : cap_(cap_level), tol_(s_tolerance) {
    if (!(cap_ > 0.0)) throw ConfigError("region.cap_level must be positive");
    if (!(tol_ >= 0.0)) throw ConfigError("region.s_tolerance must be non-negative");
    try {
        theta_ = ScalarFieldExpr::parse(theta_expr);
        xtilde_ = ScalarFieldExpr::parse(xtilde_expr);
    } catch (const ExprParseError& e) {
        std::ostringstream msg;
        msg << "region expression: " << e.what() << " (line " << e.line << ", column " << e.column
            << ")";
        throw ConfigError(msg.str());
    }
}

Membership LensRegion::classify(const Vec3& x) const {
    double th = theta_.value(x);
    double cap_slack = xtilde_.value(x) + cap_;  // >= 0 inside
    if (th < -tol_ || cap_slack < -tol_) return Membership::Exterior;
    if (std::fabs(th) <= tol_) return Membership::BoundaryS;
    if (std::fabs(cap_slack) <= tol_) return Membership::BoundaryCap;
    return Membership::Interior;
}

AdmissibilityReport admissibility_report(const MediumModel& model, const LensRegion& region,
                                         const Grid3& grid, double eps_override) {
    AdmissibilityReport rep;
    rep.grid = grid;
    rep.nodes_total = grid.node_count();
    rep.degenerate.assign(rep.nodes_total, 0);
    rep.evaluable.assign(rep.nodes_total, 0);

    std::vector<double> cp(rep.nodes_total, 0.0), cs(rep.nodes_total, 0.0);
    double max_cs = 0.0;
    bool all_ok = true;
    for (int k = 0; k < grid.dims[2]; ++k)
        for (int j = 0; j < grid.dims[1]; ++j)
            for (int i = 0; i < grid.dims[0]; ++i) {
                size_t n = grid.lin(i, j, k);
                Vec3 x = grid.position(i, j, k);
                Membership m = region.classify(x);
                bool in_region = m == Membership::Interior || m == Membership::BoundaryS;
                if (in_region) ++rep.nodes_in_region;

                double lam, mu, rho;
                try {
                    lam = model.lambda_field().value(x);
                    mu = model.mu_field().value(x);
                    rho = model.rho_field().value(x);
                } catch (const ExprDomainError&) {
                    if (in_region) { ++rep.fail_rho; all_ok = false; }
                    continue;
                }
                bool rho_ok = rho > 0.0;
                bool mu_ok = mu > 0.0;
                bool sum_ok = lam + mu > 0.0;
                bool convex_ok = 3.0 * lam + 2.0 * mu > 0.0;
                if (in_region) {
                    if (!rho_ok) ++rep.fail_rho;
                    if (!mu_ok) ++rep.fail_mu;
                    if (!sum_ok) ++rep.fail_lame_sum;
                    if (!convex_ok) ++rep.fail_convexity;
                    all_ok = all_ok && rho_ok && mu_ok && sum_ok && convex_ok;
                }
                if (rho_ok && mu_ok && lam + 2.0 * mu > 0.0) {
                    rep.evaluable[n] = 1;
                    cp[n] = std::sqrt((lam + 2.0 * mu) / rho);
                    cs[n] = std::sqrt(mu / rho);
                    max_cs = std::max(max_cs, cs[n]);
                }
            }

    rep.eps_degenerate = eps_override > 0.0 ? eps_override : 1e-3 * max_cs;
    size_t deg_count = 0;
    for (size_t n = 0; n < rep.nodes_total; ++n) {
        if (!rep.evaluable[n]) continue;
        if (std::fabs(cp[n] - 2.0 * cs[n]) < rep.eps_degenerate) {
            rep.degenerate[n] = 1;
            ++deg_count;
        }
    }
    rep.degenerate_fraction =
        rep.nodes_total ? static_cast<double>(deg_count) / static_cast<double>(rep.nodes_total) : 0.0;
    rep.pass = all_ok;
    return rep;
}

namespace {

using nlohmann::json;

const json& require(const json& obj, const char* scope, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        std::ostringstream msg;
        msg << "missing required key " << scope << "." << key;
        throw ConfigError(msg.str());
    }
    return *it;
}

std::string require_string(const json& obj, const char* scope, const char* key) {
    const json& v = require(obj, scope, key);
    if (!v.is_string()) throw ConfigError(std::string(scope) + "." + key + " must be a string");
    return v.get<std::string>();
}

double require_number(const json& obj, const char* scope, const char* key) {
    const json& v = require(obj, scope, key);
    if (!v.is_number()) throw ConfigError(std::string(scope) + "." + key + " must be a number");
    return v.get<double>();
}

}  // namespace

ModelConfig parse_model_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");

    const json& model = require(doc, "", "model");
    const json& region = require(doc, "", "region");
    const json& grid = require(doc, "", "grid");

    ModelConfig cfg;
    cfg.model = MediumModel(require_string(model, "model", "name"),
                            require_string(model, "model", "lambda"),
                            require_string(model, "model", "mu"),
                            require_string(model, "model", "rho"));

    cfg.region = LensRegion(require_string(region, "region", "theta"),
                            require_string(region, "region", "xtilde"),
                            require_number(region, "region", "cap_level"),
                            require_number(region, "region", "s_tolerance"));

    const json& origin = require(grid, "grid", "origin");
    if (!origin.is_array() || origin.size() != 3)
        throw ConfigError("grid.origin must be an array of 3 numbers");
    cfg.grid.origin = {origin[0].get<double>(), origin[1].get<double>(), origin[2].get<double>()};
    cfg.grid.spacing = require_number(grid, "grid", "spacing");
    const json& dims = require(grid, "grid", "dims");
    if (!dims.is_array() || dims.size() != 3)
        throw ConfigError("grid.dims must be an array of 3 positive integers");
    for (int a = 0; a < 3; ++a) {
        if (!dims[a].is_number_integer() || dims[a].get<int64_t>() < 1)
            throw ConfigError("grid.dims must be an array of 3 positive integers");
        cfg.grid.dims[a] = static_cast<int>(dims[a].get<int64_t>());
    }
    cfg.grid.validate();
    return cfg;
}

ModelConfig load_model_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model_config(buf.str());
}

}  // namespace elastoray
