#include "suite.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>
#include <sstream>

namespace choquard::cli {

namespace {

std::string num(double x)
{
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

CheckReport report(std::string name, double worst, double tolerance, double location, std::string details)
{
    CheckReport r;
    r.name = std::move(name);
    r.worst_violation = worst;
    r.tolerance = tolerance;
    r.location = location;
    r.passed = worst >= -tolerance;
    r.details = std::move(details);
    return r;
}

CheckReport skipped(std::string name, std::string why)
{
    CheckReport r;
    r.name = std::move(name);
    r.passed = true;
    r.skipped = true;
    r.details = std::move(why);
    return r;
}

CheckReport failed(std::string name, const std::exception& e)
{
    CheckReport r;
    r.name = std::move(name);
    r.passed = false;
    r.worst_violation = -INFINITY;
    r.details = e.what();
    return r;
}

// Runs `fn`, turning exceptions into a failed report under `name`.
template <typename F>
CheckReport guarded(const std::string& name, F&& fn)
{
    try {
        return fn();
    } catch (const std::exception& e) {
        return failed(name, e);
    }
}

// Keeps the report with the smallest margin to its tolerance.
CheckReport worst_of(std::string name, const std::vector<CheckReport>& parts, std::string summary)
{
    if (parts.empty()) {
        return skipped(std::move(name), "nothing to check");
    }
    auto const it = std::min_element(parts.begin(), parts.end(), [](const CheckReport& a, const CheckReport& b) {
        if (a.passed != b.passed) {
            return !a.passed;
        }
        return a.worst_violation + a.tolerance < b.worst_violation + b.tolerance;
    });
    CheckReport r = *it;
    r.name = std::move(name);
    r.passed = std::all_of(parts.begin(), parts.end(), [](const CheckReport& c) { return c.passed; });
    r.details = summary + "; worst case: " + it->details;
    return r;
}

} // namespace

SuiteResult run_suite(const RunConfig& cfg)
{
    SystemParams const prm = cfg.params;
    StepControls const ctl = cfg.controls;
    RMaxPolicy const pol = cfg.policy;
    CheckTolerances const tol;

    auto side_checks = std::async(std::launch::async, [&] {
        std::vector<CheckReport> out;
        std::vector<Classification> small;
        for (double u0 : {0.05, 0.1, 0.15, 0.2, 0.24}) {
            small.push_back(classify(u0, prm, ctl, pol));
        }
        std::string verdicts;
        bool all_n = true;
        for (auto const& c : small) {
            verdicts += (verdicts.empty() ? "" : " ") + num(c.u0) + ":" + to_string(c.tag);
            all_n = all_n && c.tag == Verdict::in_n;
        }
        out.push_back(report("small_heights_in_N", all_n ? 0.0 : -1.0, 0.0, 0.0, verdicts));

        auto const big = classify(50.0, prm, ctl, pol);
        bool const cert = big.tag == Verdict::in_p && certify_p_side(big, ctl);
        out.push_back(report("large_height_in_P", cert ? 0.0 : -1.0, 0.0, big.r_event,
                             "u0=50: " + to_string(big.tag) + " at r=" + num(big.r_event) +
                                 ", V(r_event)=" + num(big.event_state.v) + ", certificate " +
                                 (cert ? "holds" : "fails")));

        std::vector<CheckReport> sandwich;
        for (auto const& c : small) {
            sandwich.push_back(v_sandwich_check(c.trajectory, tol));
        }
        sandwich.push_back(v_sandwich_check(big.trajectory, tol));
        out.push_back(worst_of("v_sandwich", sandwich, std::to_string(sandwich.size()) + " trajectories"));

        out.push_back(guarded("phi_monotone", [&] { return phi_check(small[3].trajectory, tol); }));
        out.push_back(guarded("phi2_monotone", [&] { return phi2_check(big.trajectory, tol); }));
        out.push_back(guarded("large_u0_barrier", [&] { return barrier_check(big.trajectory, tol); }));

        std::vector<double> grid;
        for (int i = 0; i < 40; ++i) {
            grid.push_back(0.1 * std::pow(200.0, i / 39.0));
        }
        auto const swept = sweep(grid, prm, ctl, pol);
        double first_p = INFINITY;
        double last_n = 0.0;
        std::size_t undetermined = 0;
        for (auto const& c : swept) {
            if (c.tag == Verdict::in_p) {
                first_p = std::min(first_p, c.u0);
            } else if (c.tag == Verdict::in_n) {
                last_n = std::max(last_n, c.u0);
            } else {
                ++undetermined;
            }
        }
        bool const one_sided = last_n < first_p && undetermined == 0;
        out.push_back(report("one_sided_sweep", one_sided ? 0.0 : -1.0, 0.0, first_p,
                             "40 log-spaced heights in [0.1, 20]: last N " + num(last_n) + ", first P " +
                                 num(first_p) + ", undetermined " + std::to_string(undetermined)));
        return out;
    });

    GroundState const g = solve_ground_state(prm, ctl, cfg.bisection());
    std::vector<CheckReport> ground_checks;

    {
        auto const lo = classify(g.bracket.lo, prm, ctl, pol);
        auto const hi = classify(g.bracket.hi, prm, ctl, pol);
        bool const ok = lo.tag == Verdict::in_n && hi.tag == Verdict::in_p && g.bracket_width <= cfg.tol;
        ground_checks.push_back(report("bisection_certificate", ok ? 0.0 : -1.0, 0.0, g.u0_star,
                                       "lo " + num(g.bracket.lo) + ":" + to_string(lo.tag) + ", hi " +
                                           num(g.bracket.hi) + ":" + to_string(hi.tag) + ", width " +
                                           num(g.bracket_width)));
    }
    {
        auto const& t = g.trajectory;
        double worst = INFINITY;
        double at = t.r_begin();
        for (auto const& s : t.sample(t.r_begin(), t.r_end(), tol.samples)) {
            double const margin = std::min(s.u, -s.up);
            if (margin < worst) {
                worst = margin;
                at = s.r;
            }
        }
        ground_checks.push_back(report("ground_state_positive", worst > 0.0 ? 0.0 : -1.0, 0.0, at,
                                       "min(u, -u') = " + num(worst) + " on [" + num(t.r_begin()) + ", " +
                                           num(t.r_end()) + "]"));
    }
    if (!g.v_inf) {
        ground_checks.push_back(report("v_inf_limit", -1.0, 0.0, 0.0, "no tail estimate: " + g.tail_note));
    } else if (!g.v_inf->finite) {
        ground_checks.push_back(report("v_inf_limit", 0.0, 0.0, g.v_inf->radius,
                                       "v_inf = +inf (N=2), log coefficient " + num(g.v_inf->mass)));
    } else {
        double const margin = g.v_inf->value - 1.0;
        ground_checks.push_back(report("v_inf_limit", margin > 0.0 ? 0.0 : -1.0, 0.0, g.v_inf->radius,
                                       "v_inf = " + num(g.v_inf->value)));
    }
    if (g.v_inf && g.v_inf->finite && g.decay) {
        double const target = g.v_inf->value - 1.0;
        double const rel = std::abs(g.decay->k * g.decay->k - target) / target;
        ground_checks.push_back(report("decay_rate", tol.z_limit_rel - rel, 0.0, g.decay->r_to,
                                       "k = " + num(g.decay->k) + ", k^2 = " + num(g.decay->k * g.decay->k) +
                                           " vs v_inf - 1 = " + num(target) + " (rel " + num(rel) + ")"));
    } else if (g.v_inf && !g.v_inf->finite) {
        ground_checks.push_back(skipped("decay_rate", "v_inf is infinite for N=2; no finite rate to compare"));
    } else {
        ground_checks.push_back(report("decay_rate", -1.0, 0.0, 0.0, "no tail fit: " + g.tail_note));
    }
    ground_checks.push_back(guarded("z_dynamics", [&] { return z_dynamics_check(g.trajectory, g.v_inf, tol); }));
    ground_checks.push_back(guarded("potential_consistency", [&] { return potential_consistency(g, tol); }));

    {
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> pick(0.05, g.bracket.lo);
        std::vector<std::pair<double, double>> pairs;
        for (std::size_t i = 0; i < cfg.pairs; ++i) {
            double a = pick(rng);
            double b = pick(rng);
            pairs.emplace_back(std::min(a, b), std::max(a, b));
        }
        std::vector<std::future<CheckReport>> jobs;
        for (auto const& [a, b] : pairs) {
            jobs.push_back(std::async(std::launch::async, [&, a = a, b = b] {
                return guarded("wronskian", [&] {
                    return wronskian_check(classify(a, prm, ctl, pol).trajectory, classify(b, prm, ctl, pol).trajectory,
                                           tol);
                });
            }));
        }
        std::vector<CheckReport> parts;
        for (auto& j : jobs) {
            parts.push_back(j.get());
        }
        ground_checks.push_back(worst_of("wronskian_pairs", parts,
                                         std::to_string(parts.size()) + " seeded pairs below u0_star (seed " +
                                             std::to_string(cfg.seed) + ")"));
    }

    if (prm.dim >= 3) {
        ground_checks.push_back(guarded("pde_residual", [&] {
            auto const ph = to_physical(g, 1.0, 1.0);
            auto const res = pde_residual(ph.r, ph.u, 1.0, 1.0, prm);
            return report("pde_residual", tol.pde_rel - res.relative, 0.0, res.location,
                          "relative residual " + num(res.relative) + " at (lambda, gamma) = (1, 1) over " +
                              std::to_string(res.window_points) + " points");
        }));
        ground_checks.push_back(guarded("canonical_round_trip", [&] {
            auto const base = to_canonical(to_physical(g, 1.0, 1.0));
            double worst = 0.0;
            double at = 0.0;
            for (auto [lambda, gamma] : {std::pair{4.0, 1.0}, std::pair{1.0, 3.0}}) {
                auto const other = to_canonical(to_physical(g, lambda, gamma));
                if (other.u.size() != base.u.size()) {
                    return report("canonical_round_trip", -1.0, 0.0, 0.0, "grid sizes differ");
                }
                for (std::size_t i = 0; i < base.u.size(); ++i) {
                    double const d = std::max({std::abs(other.rho[i] - base.rho[i]) / std::max(1.0, base.rho[i]),
                                               std::abs(other.u[i] - base.u[i]) / std::max(1.0, std::abs(base.u[i])),
                                               std::abs(other.v[i] - base.v[i]) / std::max(1.0, std::abs(base.v[i]))});
                    if (d > worst) {
                        worst = d;
                        at = base.rho[i];
                    }
                }
            }
            return report("canonical_round_trip", 1e-10 - worst, 0.0, at,
                          "max relative deviation " + num(worst) + " for (1,1) vs (4,1), (1,3)");
        }));
    } else {
        ground_checks.push_back(skipped("pde_residual", "N=2 transform unsupported"));
        ground_checks.push_back(skipped("canonical_round_trip", "N=2 transform unsupported"));
    }

    SuiteResult out;
    out.checks = side_checks.get();
    out.checks.insert(out.checks.end(), ground_checks.begin(), ground_checks.end());
    out.all_passed = std::all_of(out.checks.begin(), out.checks.end(), [](const CheckReport& c) { return c.passed; });
    out.ground = g;
    return out;
}

} // namespace choquard::cli
