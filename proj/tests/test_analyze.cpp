#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "choquard/analyze.hpp"
#include "oracle.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

using namespace choquard;

namespace {

const GroundState& ground(int n, double p)
{
    static std::map<std::pair<int, double>, GroundState> cache;
    auto key = std::make_pair(n, p);
    auto it = cache.find(key);
    if (it == cache.end()) {
        it = cache.emplace(key, solve_ground_state(SystemParams{n, p})).first;
    }
    return it->second;
}

Trajectory shoot(double u0, int n = 3, double p = 2.0) { return classify(u0, SystemParams{n, p}).trajectory; }

// Piecewise-constant synthetic trajectory on [a, b].
Trajectory constant_trajectory(double a, double b, double u, double v)
{
    Trajectory t;
    t.params = SystemParams{3, 2.0};
    t.u0 = u > 0.0 ? u : 1.0;
    t.start = OdeState{a, u, 0.0, v, 0.0};
    for (double r = a; r < b - 1e-12; r += 0.1) {
        StepRecord s;
        s.r_from = r;
        s.r_to = std::min(r + 0.1, b);
        s.state_from = OdeState{s.r_from, u, 0.0, v, 0.0};
        s.state_to = OdeState{s.r_to, u, 0.0, v, 0.0};
        s.dense[0] = {u, 0, 0, 0, 0};
        s.dense[2] = {v, 0, 0, 0, 0};
        t.steps.push_back(s);
    }
    return t;
}

} // namespace

TEST_CASE("wronskian for two N-side heights")
{
    auto const rep = wronskian_check(shoot(0.20), shoot(0.22));
    CHECK(rep.passed);
    CHECK(rep.worst_violation >= -rep.tolerance);
    // Argument order does not matter.
    CHECK(wronskian_check(shoot(0.22), shoot(0.20)).passed);
}

TEST_CASE("wronskian for identical heights")
{
    auto const t = shoot(0.2);
    auto const rep = wronskian_check(t, t);
    CHECK(rep.passed);
    CHECK(rep.worst_violation == 0.0);
    CHECK(rep.details.find("skipped") != std::string::npos);
}

TEST_CASE("wronskian range errors")
{
    CHECK_THROWS_AS(wronskian_check(shoot(0.2, 3), shoot(0.2, 4)), std::invalid_argument);
    auto const t = shoot(0.2);
    CHECK_THROWS_AS(wronskian_check(t, Trajectory{}), std::invalid_argument);
}

TEST_CASE("wronskian detects a reversed pair")
{
    // Swap the heights so the lower one carries the larger profile: ordering must fail.
    auto lo = shoot(0.20);
    auto hi = shoot(0.22);
    std::swap(lo.u0, hi.u0);
    CHECK_FALSE(wronskian_check(lo, hi).passed);
}

TEST_CASE("V is ordered with the initial height")
{
    auto const a = shoot(0.20);
    auto const b = shoot(0.22);
    double const r_end = std::min(a.r_end(), b.r_end());
    for (auto const& s : a.sample(0.01, r_end, 400)) {
        auto const t = b.at(s.r);
        CHECK(t.v > s.v);
        CHECK(t.vp > s.vp);
    }
}

TEST_CASE("weighted wronskian stays bounded for a near-critical pair")
{
    double const u = ground(3, 2.0).u0_star;
    auto const a = shoot(u - 2e-6);
    auto const b = shoot(u - 1e-6);
    double const r_end = std::min(a.r_end(), b.r_end());
    double early = 0.0;
    double late = 0.0;
    for (auto const& s1 : a.sample(a.r_begin(), 0.9 * r_end, 2000)) {
        auto const s2 = b.at(s1.r);
        double const w = std::abs((s2.up * s1.u - s1.up * s2.u) * s1.r * s1.r);
        double& slot = s1.r < 0.45 * r_end ? early : late;
        slot = std::max(slot, w);
    }
    CHECK(std::isfinite(late));
    CHECK(late <= 10.0 * early);
}

TEST_CASE("phi check")
{
    CHECK(phi_check(shoot(0.2)).passed);
    CHECK(phi_check(shoot(0.1, 2, 1.0)).passed);
    CHECK_THROWS_AS(phi_check(shoot(0.3)), std::domain_error);
}

TEST_CASE("phi2 check")
{
    CHECK(phi2_check(shoot(50.0)).passed);
    CHECK(phi2_check(shoot(50.0, 3, 1.0)).passed);
    CHECK_THROWS_AS(phi2_check(shoot(0.5, 3, 1.0)), std::domain_error);
}

TEST_CASE("V sandwich and large-height barrier")
{
    CHECK(v_sandwich_check(shoot(0.2)).passed);
    CHECK(v_sandwich_check(shoot(50.0)).passed);
    CHECK(barrier_check(shoot(50.0)).passed);

    // A profile whose V ignores u entirely breaks the upper bound.
    auto const fake = constant_trajectory(0.5, 2.0, 0.5, 10.0);
    CHECK_FALSE(v_sandwich_check(fake).passed);
}

TEST_CASE("z dynamics")
{
    auto const& g = ground(3, 2.0);
    auto const rep = z_dynamics_check(g.trajectory, g.v_inf);
    CHECK(rep.passed);

    auto const early = shoot(0.2).truncated(1.0);
    CHECK(z_dynamics_check(early).passed);

    auto const flat = constant_trajectory(0.5, 3.0, 0.5, 0.3);
    CHECK_FALSE(z_dynamics_check(flat).passed);
}

TEST_CASE("Newton potential: indicator of the unit ball at r = 2")
{
    RadialDensity const ind{[](double s) { return s <= 1.0 ? 1.0 : 0.0; }, 1.0};
    auto const w = newton_potential(ind, SystemParams{3, 2.0}, {2.0});
    CHECK(w[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-10));
    double const direct = oracle::direct_3d(ind.f, 2.0, 1.0, 3.0, 300);
    CHECK(std::abs(w[0] - direct) / direct < 1e-5);
}

TEST_CASE("Newton potential: Gaussian in three dimensions")
{
    RadialDensity const g{[](double s) { return std::exp(-s * s); }};
    std::vector<double> rs{0.0, 0.3, 1.0, 2.5};
    auto const w = newton_potential(g, SystemParams{3, 2.0}, rs);
    for (std::size_t i = 0; i < rs.size(); ++i) {
        double const r = rs[i];
        double const exact = r > 0.0 ? std::sqrt(M_PI) / 4.0 * std::erf(r) / r : 0.5;
        CHECK(w[i] == doctest::Approx(exact).epsilon(1e-9));
        double const direct = oracle::direct_3d(g.f, r, INFINITY, 8.0, 200);
        CHECK(std::abs(w[i] - direct) / std::abs(direct) < 1e-5);
    }
}

TEST_CASE("Newton potential: Gaussian in two dimensions")
{
    RadialDensity const g{[](double s) { return std::exp(-s * s); }};
    std::vector<double> rs{0.0, 0.5, 1.5};
    auto const w = newton_potential(g, SystemParams{2, 1.0}, rs);
    for (std::size_t i = 0; i < rs.size(); ++i) {
        double const direct = oracle::direct_2d(g.f, rs[i], 8.0, 200);
        CHECK(std::abs(w[i] - direct) < 1e-5 * std::max(1.0, std::abs(direct)));
    }
}

TEST_CASE("Newton potential edge cases")
{
    RadialDensity const zero{[](double) { return 0.0; }, 5.0};
    for (double x : newton_potential(zero, SystemParams{3, 2.0}, {0.0, 1.0, 7.0})) {
        CHECK(x == 0.0);
    }
    RadialDensity const flat{[](double) { return 1.0; }};
    CHECK_THROWS_AS(newton_potential(flat, SystemParams{3, 2.0}, {1.0}), std::domain_error);
    CHECK_THROWS_AS(newton_potential(zero, SystemParams{3, 2.0}, {-1.0}), std::domain_error);
    CHECK(newton_potential(zero, SystemParams{3, 2.0}, {}).empty());
}

TEST_CASE("Newton potential of the ground-state density inverts the Laplacian")
{
    auto const& g = ground(3, 2.0);
    auto const& t = g.trajectory;
    RadialDensity const f{[&](double s) {
                              double const u = s < t.r_begin() ? t.u0 : t.at(s).u;
                              return u * u;
                          },
                          t.r_end()};
    double const h = 1e-3;
    for (double r : {0.5, 1.0, 2.0, 4.0}) {
        auto const w = newton_potential(f, g.params, {r - h, r, r + h});
        double const lap = (w[2] - 2.0 * w[1] + w[0]) / (h * h) + 2.0 / r * (w[2] - w[0]) / (2.0 * h);
        CHECK(std::abs(-lap - f.f(r)) < 1e-4);
    }
}

TEST_CASE("potential consistency")
{
    CHECK(potential_consistency(ground(3, 2.0)).passed);
    CHECK(potential_consistency(ground(2, 2.0)).passed);

    GroundState zero;
    zero.params = SystemParams{3, 2.0};
    zero.trajectory = constant_trajectory(1e-6, 5.0, 0.0, 0.0);
    auto const rep = potential_consistency(zero);
    CHECK(rep.passed);
    CHECK(rep.details.find("sup |V - V(0) + W - W(0)| = 0") != std::string::npos);
}

TEST_CASE("physical scaling identities")
{
    auto const& g = ground(3, 2.0);
    double const vinf = g.v_inf->value;
    auto const s = physical_scaling(g, 1.0, 1.0);
    CHECK(s.sigma == doctest::Approx(1.0 / std::sqrt(vinf - 1.0)).epsilon(1e-14));
    CHECK(std::abs(s.sigma * s.sigma - (-s.lambda - s.gamma * s.v_lambda_0)) < 1e-12);
    CHECK(s.b_scale == doctest::Approx(s.gamma / (s.sigma * s.sigma)));
    CHECK(s.a_scale == doctest::Approx(std::pow(s.b_scale / (s.sigma * s.sigma), 0.5)));

    auto const four = physical_scaling(g, 4.0, 1.0);
    CHECK(four.sigma == doctest::Approx(2.0 * s.sigma).epsilon(1e-15));

    auto const p3 = physical_scaling(g, 1.7, 3.0);
    CHECK(std::abs(p3.sigma * p3.sigma - (-p3.lambda - p3.gamma * p3.v_lambda_0)) < 1e-12);
}

TEST_CASE("physical scaling preconditions")
{
    GroundState g = ground(3, 2.0);
    g.v_inf->value = 1.0 + 1e-15;
    CHECK_THROWS_AS(physical_scaling(g, 1.0, 1.0), std::domain_error);
    g.v_inf.reset();
    CHECK_THROWS_AS(physical_scaling(g, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(physical_scaling(ground(3, 2.0), -1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(physical_scaling(ground(3, 2.0), 1.0, 0.0), std::invalid_argument);
    try {
        physical_scaling(ground(2, 1.0), 1.0, 1.0);
        FAIL("expected failure");
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()).find("N=2 transform unsupported") != std::string::npos);
    }
}

TEST_CASE("physical profile")
{
    auto const& g = ground(3, 2.0);
    auto const ph = to_physical(g, 1.0, 1.0);
    REQUIRE(ph.r.size() > 1000);
    CHECK(ph.r.front() == 0.0);
    CHECK(ph.u.front() == doctest::Approx(g.trajectory.u0 / ph.scaling.a_scale));
    CHECK(ph.v.front() == doctest::Approx(ph.scaling.v_lambda_0));
    // V_lambda approaches 0 at the far end.
    CHECK(std::abs(ph.v.back()) < 0.2 * std::abs(ph.v.front()));
}

TEST_CASE("PDE residual of the reconstructed solution")
{
    auto const& g = ground(3, 2.0);
    auto const ph = to_physical(g, 1.0, 1.0);
    auto const res = pde_residual(ph.r, ph.u, 1.0, 1.0, g.params);
    CHECK(res.relative <= 1e-6);
    CHECK(res.window_points >= 200);

    auto bumped = ph.u;
    for (auto& x : bumped) {
        x *= 1.01;
    }
    CHECK(pde_residual(ph.r, bumped, 1.0, 1.0, g.params).relative > 1e-3);

    std::vector<double> zeros(ph.u.size(), 0.0);
    CHECK(pde_residual(ph.r, zeros, 1.0, 1.0, g.params).relative == 0.0);
}

TEST_CASE("PDE residual stays small when |u|^p has a slow tail")
{
    for (auto const [n, p] : {std::pair{3, 1.0}, std::pair{4, 1.0}, std::pair{3, 1.5}}) {
        auto const& g = ground(n, p);
        for (auto const [lambda, gamma] : {std::pair{1.0, 1.0}, std::pair{2.0, 0.5}}) {
            auto const ph = to_physical(g, lambda, gamma, 500.0);
            CAPTURE(n);
            CAPTURE(p);
            CAPTURE(lambda);
            CHECK(pde_residual(ph.r, ph.u, lambda, gamma, g.params).relative <= 1e-7);
        }
    }
}

TEST_CASE("PDE residual preconditions")
{
    std::vector<double> r(100), u(100, 0.0);
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] = 0.01 * static_cast<double>(i);
    }
    CHECK_THROWS_AS(pde_residual(r, u, 1.0, 1.0, SystemParams{3, 2.0}), std::domain_error);

    std::vector<double> r2(1000), u2(1000, 0.0);
    for (std::size_t i = 0; i < r2.size(); ++i) {
        r2[i] = 0.01 * static_cast<double>(i);
    }
    CHECK_THROWS_AS(pde_residual(r2, u2, 1.0, 1.0, SystemParams{2, 2.0}), std::domain_error);
    r2[500] += 0.003;
    CHECK_THROWS_AS(pde_residual(r2, u2, 1.0, 1.0, SystemParams{3, 2.0}), std::invalid_argument);
    u2.pop_back();
    CHECK_THROWS_AS(pde_residual(r2, u2, 1.0, 1.0, SystemParams{3, 2.0}), std::invalid_argument);
}

TEST_CASE("physical solutions rescale to the same canonical profile")
{
    auto const& g = ground(3, 2.0);
    auto const base = to_canonical(to_physical(g, 1.0, 1.0));
    for (auto [lambda, gamma] : {std::pair{4.0, 1.0}, std::pair{1.0, 3.0}}) {
        auto const other = to_canonical(to_physical(g, lambda, gamma));
        REQUIRE(other.rho.size() == base.rho.size());
        for (std::size_t i = 0; i < base.rho.size(); ++i) {
            CHECK(std::abs(other.rho[i] - base.rho[i]) <= 1e-10 * std::max(1.0, base.rho[i]));
            CHECK(std::abs(other.u[i] - base.u[i]) <= 1e-10 * std::max(1.0, std::abs(base.u[i])));
            CHECK(std::abs(other.v[i] - base.v[i]) <= 1e-10 * std::max(1.0, std::abs(base.v[i])));
        }
    }
}
