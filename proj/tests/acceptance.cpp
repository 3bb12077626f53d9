// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "choquard/analyze.hpp"
#include "oracle.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

using namespace choquard;

namespace {

struct Outcome
{
    bool passed = false;
    std::string measured;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c);
    return buf;
}

int failures = 0;

void criterion(int id, const char* what, double time_limit, const std::function<Outcome()>& body)
{
    auto const t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out.passed = false;
        out.measured = std::string("exception: ") + e.what();
    }
    double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool const in_time = secs < time_limit;
    bool const ok = out.passed && in_time;
    failures += ok ? 0 : 1;
    std::printf("%s %2d %s: %s [%.2f s%s]\n", ok ? "PASS" : "FAIL", id, what, out.measured.c_str(), secs,
                in_time ? "" : ", over time limit");
    std::fflush(stdout);
}

const std::vector<SystemParams>& nine_pairs()
{
    static const std::vector<SystemParams> pairs = [] {
        std::vector<SystemParams> out;
        for (int n : {2, 3, 4}) {
            for (double p : {1.0, 1.5, 2.0}) {
                out.push_back(SystemParams{n, p});
            }
        }
        return out;
    }();
    return pairs;
}

const std::vector<double> small_heights{0.05, 0.1, 0.15, 0.2, 0.24};

// Trajectories from criteria 1 and 2, kept for the sandwich check.
std::vector<Trajectory> decreasing_runs;

const GroundState& ground_32()
{
    static const GroundState g = solve_ground_state(SystemParams{3, 2.0});
    return g;
}

} // namespace

int main()
{
    CheckTolerances const tol;
    SystemParams const p32{3, 2.0};

    criterion(1, "small heights classify as N for N in {2,3,4}, p in {1,1.5,2}", 10.0, [] {
        int in_n = 0;
        int total = 0;
        std::string first_bad;
        for (auto const& prm : nine_pairs()) {
            for (double u0 : small_heights) {
                auto c = classify(u0, prm);
                ++total;
                if (c.tag == Verdict::in_n) {
                    ++in_n;
                } else if (first_bad.empty()) {
                    first_bad = " first miss " + to_string(prm) + fmt(" u0=%g", u0);
                }
                decreasing_runs.push_back(std::move(c.trajectory));
            }
        }
        return Outcome{in_n == total, std::to_string(in_n) + "/" + std::to_string(total) + " in N" + first_bad};
    });

    criterion(2, "u0 = 50 classifies as P with V >= 1 certificate for all nine (N, p)", 10.0, [] {
        int certified = 0;
        double min_v = INFINITY;
        for (auto const& prm : nine_pairs()) {
            auto c = classify(50.0, prm);
            if (c.tag == Verdict::in_p && certify_p_side(c)) {
                ++certified;
            }
            min_v = std::min(min_v, c.event_state.v);
            decreasing_runs.push_back(std::move(c.trajectory));
        }
        return Outcome{certified == 9, std::to_string(certified) + "/9 certified, min V(r_event) = " + fmt("%.6g", min_v)};
    });

    criterion(3, "u0* independent of the starting bracket at N=3, p=2", 60.0, [&] {
        auto const a = solve_ground_state(p32, {}, {}, BracketOptions{0.2, 1.0});
        auto const b = solve_ground_state(p32, {}, {}, BracketOptions{0.24, 8.0});
        double const diff = std::abs(a.u0_star - b.u0_star);
        return Outcome{diff <= 1e-8, fmt("u0* = %.12f vs %.12f, |diff| = %.3g (limit 1e-8)", a.u0_star, b.u0_star, diff)};
    });

    criterion(4, "u0* agrees with fixed-step RK4 bisection (h = 1e-4) at N=3, p=2", 600.0, [&] {
        double const adaptive = ground_32().u0_star;
        double const reference = oracle::rk4_bisect(0.2, 2.0, 3, 2.0, 1e-4, 1e-10);
        double const diff = std::abs(adaptive - reference);
        return Outcome{diff <= 1e-6,
                       fmt("adaptive %.12f, RK4 %.12f, |diff| = %.3g (limit 1e-6)", adaptive, reference, diff)};
    });

    criterion(5, "v_inf > 1 and decay_k^2 = v_inf - 1 within 2% at N=3, p=2", 60.0, [&] {
        auto const& g = ground_32();
        if (!g.v_inf || !g.decay) {
            return Outcome{false, "tail estimate missing: " + g.tail_note};
        }
        double const v = g.v_inf->value;
        double const k = g.decay->k;
        double const rel = std::abs(k * k - (v - 1.0)) / (v - 1.0);
        return Outcome{g.v_inf->finite && v > 1.0 && rel < 0.02,
                       fmt("v_inf = %.10f, k = %.8f, |k^2 - (v_inf-1)|/(v_inf-1) = %.3g", v, k, rel)};
    });

    criterion(6, "wronskian check passes for 20 seeded pairs below u0* at N=3, p=2", 60.0, [&] {
        double const star = ground_32().u0_star;
        std::mt19937_64 rng(20240611);
        std::uniform_real_distribution<double> pick(0.01, star);
        int passed = 0;
        double worst = INFINITY;
        for (int i = 0; i < 20; ++i) {
            double a = pick(rng);
            double b = pick(rng);
            if (a > b) {
                std::swap(a, b);
            }
            auto const r = wronskian_check(classify(a, p32).trajectory, classify(b, p32).trajectory, tol);
            passed += r.passed ? 1 : 0;
            worst = std::min(worst, r.worst_violation);
        }
        return Outcome{passed == 20, std::to_string(passed) + "/20 pairs, worst signed margin " + fmt("%.3g", worst)};
    });

    criterion(7, "V sandwich holds on every decreasing range from criteria 1-2 (slack 1e-12)", 30.0, [&] {
        int passed = 0;
        double worst = INFINITY;
        for (auto const& t : decreasing_runs) {
            auto const r = v_sandwich_check(t, tol);
            passed += r.passed ? 1 : 0;
            worst = std::min(worst, r.worst_violation);
        }
        int const total = static_cast<int>(decreasing_runs.size());
        return Outcome{total == 54 && passed == total,
                       std::to_string(passed) + "/" + std::to_string(total) + " trajectories, worst slack " +
                           fmt("%.3g", worst)};
    });

    criterion(8, "parabolic barrier below u for u0 = 50 at N=3, p=2 (slack 1e-9)", 10.0, [&] {
        auto const r = barrier_check(classify(50.0, p32).trajectory, tol);
        return Outcome{r.passed && tol.barrier_slack <= 1e-9,
                       fmt("worst slack %.3g at r = %.4g", r.worst_violation, r.location)};
    });

    criterion(9, "physical solution (lambda=1, gamma=1) satisfies the PDE to 1e-6 relative", 120.0, [&] {
        auto const ph = to_physical(ground_32(), 1.0, 1.0);
        auto const res = pde_residual(ph.r, ph.u, 1.0, 1.0, p32);
        return Outcome{res.relative < 1e-6,
                       fmt("relative residual %.3g at r = %.4g over %g points", res.relative, res.location,
                           static_cast<double>(res.window_points))};
    });

    criterion(10, "(1,1), (4,1), (1,3) physical profiles rescale to one canonical profile (1e-10)", 60.0, [&] {
        auto const& g = ground_32();
        std::vector<CanonicalSamples> back;
        for (auto [lambda, gamma] : {std::pair{1.0, 1.0}, std::pair{4.0, 1.0}, std::pair{1.0, 3.0}}) {
            back.push_back(to_canonical(to_physical(g, lambda, gamma)));
        }
        double worst = 0.0;
        for (std::size_t a = 0; a < back.size(); ++a) {
            for (std::size_t b = a + 1; b < back.size(); ++b) {
                if (back[a].u.size() != back[b].u.size()) {
                    return Outcome{false, "grid sizes differ"};
                }
                for (std::size_t i = 0; i < back[a].u.size(); ++i) {
                    worst = std::max({worst, std::abs(back[a].rho[i] - back[b].rho[i]) / std::max(1.0, back[a].rho[i]),
                                      std::abs(back[a].u[i] - back[b].u[i]) / std::max(1.0, std::abs(back[a].u[i])),
                                      std::abs(back[a].v[i] - back[b].v[i]) / std::max(1.0, std::abs(back[a].v[i]))});
                }
            }
        }
        return Outcome{worst <= 1e-10, fmt("max relative deviation %.3g over %g samples", worst,
                                           static_cast<double>(back[0].u.size()))};
    });

    criterion(11, "u0*(p) at N=3 for p = 1..2 step 0.25 is finite with adjacent changes < 25%", 120.0, [] {
        std::vector<double> stars;
        std::string listing;
        for (double p : {1.0, 1.25, 1.5, 1.75, 2.0}) {
            stars.push_back(solve_ground_state(SystemParams{3, p}).u0_star);
            listing += fmt("%.6f ", stars.back());
        }
        double worst = 0.0;
        bool finite = true;
        for (std::size_t i = 0; i < stars.size(); ++i) {
            finite = finite && std::isfinite(stars[i]) && stars[i] > 0.0;
            if (i > 0) {
                worst = std::max(worst, std::abs(stars[i] - stars[i - 1]) / std::max(stars[i], stars[i - 1]));
            }
        }
        return Outcome{finite && worst < 0.25, "u0* = " + listing + fmt("max adjacent change %.3g", worst)};
    });

    std::printf("%s: %d of 11 criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
    return failures == 0 ? 0 : 1;
}
