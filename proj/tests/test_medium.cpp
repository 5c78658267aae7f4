#include <doctest.h>

#include <cmath>
#include <random>

#include "elastoray/medium.hpp"

using namespace elastoray;

namespace {

const char* kConfig = R"json({
  "model": {"name": "demo", "lambda": "1", "mu": "1", "rho": "1"},
  "region": {"theta": "z", "xtilde": "-z - 0.5*(x^2+y^2)", "cap_level": 0.3, "s_tolerance": 1e-9},
  "grid": {"origin": [-1, -1, -0.25], "spacing": 0.125, "dims": [17, 17, 9]}
})json";

}  // namespace

TEST_CASE("speeds from constant Lame parameters") {
    MediumModel m("m", "1", "1", "1");
    MediumPoint p = m.eval({0.2, 0.3, -0.1});
    CHECK(p.cp == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
    CHECK(p.cs == doctest::Approx(1.0).epsilon(1e-12));

    MediumModel deg("deg", "2", "1", "1");
    MediumPoint q = deg.eval({0, 0, 0});
    CHECK(q.cp == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(q.cs == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(q.cp - 2.0 * q.cs) < 1e-12);  // on the degenerate set
}

TEST_CASE("log-density gradient of exp(2z)") {
    MediumModel m("m", "1", "1", "exp(2*z)");
    MediumPoint p = m.eval({0.4, -0.2, 0.7});
    CHECK(p.grad_log_rho.x == doctest::Approx(0.0));
    CHECK(p.grad_log_rho.y == doctest::Approx(0.0));
    CHECK(p.grad_log_rho.z == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("cp^2 - cs^2 = (lambda + mu)/rho on random points") {
    MediumModel m("m", "1 + 0.3*sin(x)", "0.8 + 0.2*cos(y*z)", "exp(0.2*z)");
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        Vec3 x{dist(rng), dist(rng), dist(rng)};
        MediumPoint p = m.eval(x);
        double lhs = p.cp * p.cp - p.cs * p.cs;
        double rhs = (p.lambda + p.mu) / p.rho;
        CHECK(std::fabs(lhs - rhs) <= 1e-12 * std::fabs(rhs));
    }
}

TEST_CASE("strong convexity is equivalent to 3 cp^2 > 4 cs^2") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lam(-1.0, 2.0), mu(0.1, 2.0), rho(0.2, 3.0);
    for (int t = 0; t < 500; ++t) {
        double l = lam(rng), u = mu(rng), r = rho(rng);
        if (!(l + 2 * u > 0)) continue;
        double cp2 = (l + 2 * u) / r, cs2 = u / r;
        CHECK((3 * l + 2 * u > 0) == (3 * cp2 > 4 * cs2));
    }
}

TEST_CASE("cp^4 - 5 cp^2 cs^2 + 8 cs^4 stays positive whenever cp > cs > 0") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> dist(0.01, 10.0);
    for (int t = 0; t < 1000; ++t) {
        double cs = dist(rng);
        double cp = cs * (1.0 + dist(rng) * 0.3);
        double v = std::pow(cp, 4) - 5 * cp * cp * cs * cs + 8 * std::pow(cs, 4);
        CHECK(v > 0.0);
    }
}

TEST_CASE("medium gradients match finite differences") {
    MediumModel m("m", "1 + 0.3*sin(x)", "0.8 + 0.2*cos(y)*cos(z)", "exp(0.2*z + 0.1*x)");
    Vec3 x{0.3, -0.5, 0.2};
    MediumPoint p = m.eval(x);
    const double h = 1e-6;
    for (int a = 0; a < 3; ++a) {
        Vec3 xp = x, xm = x;
        xp[a] += h;
        xm[a] -= h;
        MediumPoint pp = m.eval(xp), pm = m.eval(xm);
        CHECK(p.grad_log_cp[a] ==
              doctest::Approx((std::log(pp.cp) - std::log(pm.cp)) / (2 * h)).epsilon(1e-6));
        CHECK(p.grad_log_cs[a] ==
              doctest::Approx((std::log(pp.cs) - std::log(pm.cs)) / (2 * h)).epsilon(1e-6));
        CHECK(p.grad_cp[a] == doctest::Approx((pp.cp - pm.cp) / (2 * h)).epsilon(1e-6));
        CHECK(p.grad_cs2[a] ==
              doctest::Approx((pp.cs * pp.cs - pm.cs * pm.cs) / (2 * h)).epsilon(1e-6));
        CHECK(p.grad_log_rho[a] ==
              doctest::Approx((std::log(pp.rho) - std::log(pm.rho)) / (2 * h)).epsilon(1e-6));
    }
    Sym3 hess = m.log_rho_hessian(x);
    CHECK(hess(0, 0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
    CHECK(hess(2, 2) == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
}

TEST_CASE("medium admissibility faults throw") {
    MediumModel bad_rho("m", "1", "1", "z");  // rho <= 0 at z <= 0
    CHECK_THROWS_AS(bad_rho.eval({0, 0, -1}), AdmissibilityError);
    MediumModel bad_mu("m", "1", "-1", "1");
    CHECK_THROWS_AS(bad_mu.eval({0, 0, 0}), AdmissibilityError);
}

TEST_CASE("region membership of the canonical lens") {
    LensRegion region("z", "-z - 0.5*(x^2+y^2)", 0.3, 1e-9);
    CHECK(region.classify({0, 0, 0}) == Membership::BoundaryS);
    CHECK(region.classify({0, 0, 0.1}) == Membership::Interior);
    CHECK(region.classify({0, 0, 0.5}) == Membership::Exterior);
    CHECK(region.classify({0, 0, -0.1}) == Membership::Exterior);
    // On the cap: z + 0.5 r^2 = 0.3 with z > 0
    CHECK(region.classify({0.4, 0.4, 0.3 - 0.5 * 0.32}) == Membership::BoundaryCap);
}

TEST_CASE("membership is stable under tolerance shrinking") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-0.8, 0.8);
    LensRegion coarse("z", "-z - 0.5*(x^2+y^2)", 0.3, 1e-3);
    LensRegion fine("z", "-z - 0.5*(x^2+y^2)", 0.3, 1e-7);
    for (int t = 0; t < 500; ++t) {
        Vec3 x{dist(rng), dist(rng), dist(rng)};
        if (coarse.classify(x) == Membership::Interior)
            CHECK(fine.classify(x) == Membership::Interior);
        if (coarse.classify(x) == Membership::Exterior)
            CHECK(fine.classify(x) == Membership::Exterior);
    }
}

TEST_CASE("admissibility report on constant media") {
    ModelConfig cfg = parse_model_config(kConfig);
    AdmissibilityReport rep = admissibility_report(cfg.model, cfg.region, cfg.grid);
    CHECK(rep.pass);
    CHECK(rep.degenerate_fraction == 0.0);  // cp/cs = sqrt(3) != 2

    MediumModel deg("deg", "2", "1", "1");
    AdmissibilityReport rep2 = admissibility_report(deg, cfg.region, cfg.grid);
    CHECK(rep2.pass);
    CHECK(rep2.degenerate_fraction == 1.0);  // cp = 2 cs identically

    MediumModel weak("weak", "-0.9", "1", "1");  // lambda+mu > 0 but 3 lambda + 2 mu < 0
    AdmissibilityReport rep3 = admissibility_report(weak, cfg.region, cfg.grid);
    CHECK_FALSE(rep3.pass);
    CHECK(rep3.fail_lame_sum == 0);
    CHECK(rep3.fail_convexity == rep3.nodes_in_region);
}

TEST_CASE("config parsing errors") {
    CHECK_THROWS_AS(parse_model_config("not json"), ConfigError);
    CHECK_THROWS_AS(parse_model_config(R"({"model": {}, "region": {}, "grid": {}})"), ConfigError);

    std::string missing_mu = kConfig;
    missing_mu.replace(missing_mu.find("\"mu\": \"1\","), 10, "");
    CHECK_THROWS_WITH_AS(parse_model_config(missing_mu),
                         doctest::Contains("missing required key model.mu"), ConfigError);

    std::string bad_cap = kConfig;
    bad_cap.replace(bad_cap.find("\"cap_level\": 0.3"), 16, "\"cap_level\": -1");
    CHECK_THROWS_AS(parse_model_config(bad_cap), ConfigError);

    std::string bad_expr = kConfig;
    bad_expr.replace(bad_expr.find("\"lambda\": \"1\""), 13, "\"lambda\": \"1 + qq\"");
    CHECK_THROWS_WITH_AS(parse_model_config(bad_expr), doctest::Contains("column"), ConfigError);

    std::string bad_dims = kConfig;
    bad_dims.replace(bad_dims.find("[17, 17, 9]"), 11, "[17, 0, 9]");
    CHECK_THROWS_AS(parse_model_config(bad_dims), ConfigError);
}

TEST_CASE("config round trip evaluates") {
    ModelConfig cfg = parse_model_config(kConfig);
    CHECK(cfg.model.name() == "demo");
    CHECK(cfg.grid.dims[0] == 17);
    CHECK(cfg.grid.node_count() == 17u * 17u * 9u);
    CHECK(cfg.model.eval({0, 0, 0.1}).cp == doctest::Approx(std::sqrt(3.0)));
}
