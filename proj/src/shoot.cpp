#include "choquard/shoot.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>
#include <thread>

namespace choquard {

namespace {

std::string fmt(double x)
{
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

// Largest radius on the lo-side positive range where the hi-side trajectory stays within
// `rel_gap` of it. The ordering u_lo < u* < u_hi makes this a two-sided envelope of the ground state.
double envelope_radius(const Trajectory& lo, const Trajectory& hi, double rel_gap)
{
    double const r_hi = std::min(lo.r_end(), hi.r_end());
    double const r_lo = lo.r_begin();
    if (!(r_hi > r_lo)) {
        return r_lo;
    }
    std::size_t const count = std::max<std::size_t>(2, static_cast<std::size_t>((r_hi - r_lo) / 0.01) + 1);
    double const dr = (r_hi - r_lo) / static_cast<double>(count - 1);
    double last_ok = r_lo;
    for (std::size_t i = 0; i < count; ++i) {
        double const r = (i + 1 == count) ? r_hi : r_lo + dr * static_cast<double>(i);
        double const a = lo.at(r).u;
        double const b = hi.at(r).u;
        if (!(a > 0.0) || std::abs(b - a) > rel_gap * a) {
            break;
        }
        last_ok = r;
    }
    return last_ok;
}

} // namespace

Bracket find_bracket(const SystemParams& params,
                     const StepControls& controls,
                     const BracketOptions& options,
                     const RMaxPolicy& policy)
{
    params.validate();
    auto const lo = classify(options.lo, params, controls, policy);
    if (lo.tag != Verdict::in_n) {
        throw SolverError("find_bracket", "lower end u0=" + fmt(options.lo) + " classified " + to_string(lo.tag) +
                                              " instead of N " + lo.note);
    }
    for (double hi = std::max(options.hi_start, options.lo); hi <= options.hi_cap; hi *= 2.0) {
        if (hi <= options.lo) {
            continue;
        }
        auto const c = classify(hi, params, controls, policy);
        if (c.tag == Verdict::in_p) {
            return Bracket{options.lo, hi};
        }
    }
    throw SolverError("find_bracket", "no P verdict up to u0=" + fmt(options.hi_cap) + " for " + to_string(params));
}

GroundState bisect(const Bracket& bracket,
                   const SystemParams& params,
                   const StepControls& controls,
                   const BisectionOptions& options)
{
    params.validate();
    if (!(bracket.lo > 0.0) || !(bracket.hi > bracket.lo)) {
        throw std::invalid_argument("bisect: need 0 < lo < hi");
    }
    if (!(options.tol > 0.0)) {
        throw std::invalid_argument("bisect: tolerance must be positive");
    }

    double lo = bracket.lo;
    double hi = bracket.hi;
    std::size_t iterations = 0;
    while (hi - lo > options.tol) {
        if (iterations >= options.max_iterations) {
            throw SolverError("bisect", "iteration cap reached with width " + fmt(hi - lo));
        }
        double const mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        auto const c = classify(mid, params, controls, options.policy);
        switch (c.tag) {
            case Verdict::in_n:
                lo = mid;
                break;
            case Verdict::in_p:
                hi = mid;
                break;
            case Verdict::undetermined:
                throw SolverError("bisect", "undetermined verdict at u0=" + fmt(mid) + " (" + c.note + ")");
        }
        ++iterations;
    }

    GroundState g;
    g.params = params;
    g.bracket = Bracket{lo, hi};
    g.bracket_width = hi - lo;
    g.u0_star = 0.5 * (lo + hi);
    g.iterations = iterations;

    auto c_lo = classify(lo, params, controls, options.policy);
    auto c_hi = classify(hi, params, controls, options.policy);
    if (c_lo.tag != Verdict::in_n || c_hi.tag != Verdict::in_p) {
        throw SolverError("bisect", "final bracket endpoints lost their verdicts (lo " + to_string(c_lo.tag) +
                                        ", hi " + to_string(c_hi.tag) + ")");
    }
    if (options.refine_tail) {
        // Narrow a private copy of the bracket to double resolution; only the tail uses it.
        for (std::size_t i = 0; i < options.max_iterations; ++i) {
            double const mid = 0.5 * (c_lo.u0 + c_hi.u0);
            if (mid <= c_lo.u0 || mid >= c_hi.u0) {
                break;
            }
            auto c = classify(mid, params, controls, options.policy);
            if (c.tag == Verdict::in_n) {
                c_lo = std::move(c);
            } else if (c.tag == Verdict::in_p) {
                c_hi = std::move(c);
            } else {
                break;
            }
        }
    }
    g.r_event_lo = c_lo.r_event;
    g.r_envelope = envelope_radius(c_lo.trajectory, c_hi.trajectory, options.envelope_tol);
    g.trajectory = c_lo.trajectory.truncated(std::min(0.99 * c_lo.r_event, g.r_envelope));

    try {
        g.v_inf = estimate_vinf(g.trajectory, params);
        g.decay = decay_rate(g.trajectory, controls.atol);
    } catch (const std::domain_error& e) {
        g.tail_note = e.what();
    }
    return g;
}

GroundState solve_ground_state(const SystemParams& params,
                               const StepControls& controls,
                               const BisectionOptions& options,
                               const BracketOptions& bracket_options)
{
    return bisect(find_bracket(params, controls, bracket_options, options.policy), params, controls, options);
}

VInfEstimate estimate_vinf(const Trajectory& traj, const SystemParams& params)
{
    if (traj.empty()) {
        throw std::domain_error("estimate_vinf: empty trajectory");
    }
    OdeState const end = traj.final_state();
    double const u0 = traj.u0 > 0.0 ? traj.u0 : traj.start.u;
    if (!(std::abs(end.u) < tail_decay_threshold * u0)) {
        throw std::domain_error("estimate_vinf: tail not decayed (u(R)=" + fmt(end.u) + ", need < " +
                                fmt(tail_decay_threshold * u0) + ")");
    }
    double const R = end.r;
    int const n = params.dim;
    VInfEstimate est;
    est.radius = R;
    est.mass = end.vp * std::pow(R, n - 1);
    if (n == 2) {
        est.finite = false;
        est.value = std::numeric_limits<double>::infinity();
        return est;
    }
    double const nm2 = static_cast<double>(n - 2);
    double const z = end.u > 0.0 ? -end.up / end.u : 0.0;
    if (z > 0.0) {
        double const pz = params.p * z;
        est.tail_correction = std::pow(end.u, params.p) * (R / pz + 1.0 / (pz * pz)) / nm2;
    }
    est.value = end.v + est.mass * std::pow(R, 2 - n) / nm2 + est.tail_correction;
    return est;
}

DecayFit decay_rate(const Trajectory& traj, double atol)
{
    if (traj.empty()) {
        throw std::domain_error("decay_rate: empty trajectory");
    }
    double const u0 = traj.u0 > 0.0 ? traj.u0 : traj.start.u;
    auto const nodes = traj.nodes();

    double r_from = std::numeric_limits<double>::quiet_NaN();
    double r_to = std::numeric_limits<double>::quiet_NaN();
    for (auto const& s : nodes) {
        if (std::isnan(r_from) && s.u < 1e-2 * u0) {
            r_from = s.r;
        }
        if (s.u > 10.0 * atol) {
            r_to = s.r;
        } else {
            break;
        }
    }
    if (std::isnan(r_from) || std::isnan(r_to) || !(r_to > r_from)) {
        throw std::domain_error("decay_rate: no tail window (u never drops below 1e-2 u0 on the explored range)");
    }
    double const u_from = traj.at(r_from).u;
    double const u_to = traj.at(r_to).u;
    if (!(u_from >= 10.0 * u_to)) {
        throw std::domain_error("decay_rate: tail shorter than one decade (u " + fmt(u_from) + " -> " + fmt(u_to) +
                                ")");
    }

    constexpr std::size_t samples = 400;
    Eigen::MatrixXd design(samples, 5);
    Eigen::VectorXd target(samples);
    auto const pts = traj.sample(r_from, r_to, samples);
    for (std::size_t i = 0; i < samples; ++i) {
        double const r = pts[i].r;
        auto const row = static_cast<Eigen::Index>(i);
        design(row, 0) = r;
        design(row, 1) = 1.0;
        design(row, 2) = std::log(r);
        design(row, 3) = 1.0 / r;
        design(row, 4) = 1.0 / (r * r);
        target(row) = -std::log(pts[i].u);
    }
    Eigen::VectorXd const coeff = design.colPivHouseholderQr().solve(target);

    DecayFit fit;
    fit.k = coeff(0);
    fit.log_coeff = coeff(2);
    fit.z_end = -pts.back().up / pts.back().u;
    fit.r_from = r_from;
    fit.r_to = r_to;
    fit.samples = samples;
    return fit;
}

std::vector<Classification> sweep(const std::vector<double>& u0_values,
                                  const SystemParams& params,
                                  const StepControls& controls,
                                  const RMaxPolicy& policy)
{
    std::vector<Classification> out(u0_values.size());
    if (u0_values.empty()) {
        return out;
    }
    auto run_one = [&](std::size_t i) {
        try {
            out[i] = classify(u0_values[i], params, controls, policy);
        } catch (const std::exception& e) {
            out[i] = Classification{};
            out[i].u0 = u0_values[i];
            out[i].tag = Verdict::undetermined;
            out[i].note = e.what();
        }
    };
    std::size_t const workers =
        std::min<std::size_t>(u0_values.size(), std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::future<void>> jobs;
    jobs.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        jobs.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < u0_values.size(); i += workers) {
                run_one(i);
            }
        }));
    }
    for (auto& j : jobs) {
        j.get();
    }
    return out;
}

} // namespace choquard
