#include "choquard/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace choquard {

namespace {

using Vec4 = std::array<double, 4>;

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Continuous extension (Hairer, Norsett, Wanner).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

Vec4 to_vec(const OdeState& s) { return {s.u, s.up, s.v, s.vp}; }

OdeState to_state(double r, const Vec4& y) { return OdeState{r, y[0], y[1], y[2], y[3]}; }

Vec4 eval(double r, const Vec4& y, const SystemParams& params)
{
    Derivative const d = rhs(to_state(r, y), params);
    return {d.du, d.dup, d.dv, d.dvp};
}

template <typename... Terms>
Vec4 combine(const Vec4& y, double h, Terms... terms)
{
    Vec4 out = y;
    for (std::size_t i = 0; i < 4; ++i) {
        double acc = 0.0;
        ((acc += terms.first * (*terms.second)[i]), ...);
        out[i] += h * acc;
    }
    return out;
}

using Term = std::pair<double, const Vec4*>;

bool all_finite(const Vec4& y)
{
    return std::all_of(y.begin(), y.end(), [](double x) { return std::isfinite(x); });
}

double g_at(const EventSpec& ev, const StepRecord& step, double r) { return ev.fn(dense_eval(step, r)); }

bool crosses(Crossing dir, double g_from, double g_to)
{
    bool const falling = g_from > 0.0 && g_to <= 0.0;
    bool const rising = g_from < 0.0 && g_to >= 0.0;
    switch (dir) {
        case Crossing::falling:
            return falling;
        case Crossing::rising:
            return rising;
        case Crossing::either:
            return falling || rising;
    }
    return false;
}

} // namespace

void StepControls::validate() const
{
    if (!(rtol > 0.0) || !(atol > 0.0)) {
        throw std::invalid_argument("step controls: tolerances must be positive");
    }
    if (!(h_init > 0.0) || !(h_init <= h_max)) {
        throw std::invalid_argument("step controls: need 0 < h_init <= h_max");
    }
    if (max_steps < 1) {
        throw std::invalid_argument("step controls: max_steps must be >= 1");
    }
}

StepControls StepControls::scaled(double factor) const
{
    StepControls c = *this;
    c.rtol *= factor;
    c.atol *= factor;
    return c;
}

StepRecord dopri_step(const OdeState& from, double h, const SystemParams& params, double* error_norm,
                      const StepControls* controls)
{
    double const r = from.r;
    Vec4 const y0 = to_vec(from);
    Vec4 const k1 = eval(r, y0, params);
    Vec4 const k2 = eval(r + c2 * h, combine(y0, h, Term{a21, &k1}), params);
    Vec4 const k3 = eval(r + c3 * h, combine(y0, h, Term{a31, &k1}, Term{a32, &k2}), params);
    Vec4 const k4 = eval(r + c4 * h, combine(y0, h, Term{a41, &k1}, Term{a42, &k2}, Term{a43, &k3}), params);
    Vec4 const k5 = eval(r + c5 * h,
                         combine(y0, h, Term{a51, &k1}, Term{a52, &k2}, Term{a53, &k3}, Term{a54, &k4}), params);
    Vec4 const k6 = eval(
        r + h, combine(y0, h, Term{a61, &k1}, Term{a62, &k2}, Term{a63, &k3}, Term{a64, &k4}, Term{a65, &k5}),
        params);
    Vec4 const y1 =
        combine(y0, h, Term{a71, &k1}, Term{a73, &k3}, Term{a74, &k4}, Term{a75, &k5}, Term{a76, &k6});
    double const r1 = r + h;

    StepRecord step;
    step.r_from = r;
    step.r_to = r1;
    step.state_from = from;
    step.state_to = to_state(r1, y1);

    if (!all_finite(y1)) {
        if (error_norm != nullptr) {
            *error_norm = std::numeric_limits<double>::infinity();
        }
        return step;
    }

    Vec4 const k7 = eval(r1, y1, params);
    for (std::size_t i = 0; i < 4; ++i) {
        double const dy = y1[i] - y0[i];
        double const bspl = h * k1[i] - dy;
        auto& row = step.dense[i];
        row[0] = y0[i];
        row[1] = dy;
        row[2] = bspl;
        row[3] = dy - h * k7[i] - bspl;
        row[4] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
    }

    if (error_norm != nullptr) {
        double const rtol = controls ? controls->rtol : 0.0;
        double const atol = controls ? controls->atol : 1.0;
        double worst = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            double const err =
                h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            double const scale = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
            worst = std::max(worst, std::abs(err) / scale);
        }
        *error_norm = std::isfinite(worst) ? worst : std::numeric_limits<double>::infinity();
    }
    return step;
}

OdeState dense_eval(const StepRecord& step, double r)
{
    if (!(r >= step.r_from && r <= step.r_to)) {
        std::ostringstream os;
        os.precision(17);
        os << "dense_eval: r=" << r << " outside step [" << step.r_from << ", " << step.r_to << "]";
        throw std::domain_error(os.str());
    }
    if (r == step.r_from) {
        return step.state_from;
    }
    if (r == step.r_to) {
        return step.state_to;
    }
    double const theta = (r - step.r_from) / (step.r_to - step.r_from);
    double const theta1 = 1.0 - theta;
    Vec4 y{};
    for (std::size_t i = 0; i < 4; ++i) {
        auto const& c = step.dense[i];
        y[i] = c[0] + theta * (c[1] + theta1 * (c[2] + theta * (c[3] + theta1 * c[4])));
    }
    return to_state(r, y);
}

std::optional<double> locate_event(const StepRecord& step, const EventSpec& event)
{
    double lo = step.r_from;
    double hi = step.r_to;
    double g_lo = event.fn(step.state_from);
    double g_hi = event.fn(step.state_to);
    if (!crosses(event.direction, g_lo, g_hi)) {
        return std::nullopt;
    }
    if (g_hi == 0.0) {
        return hi;
    }
    for (int iter = 0; iter < 200; ++iter) {
        double const mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        double const g_mid = g_at(event, step, mid);
        if (std::abs(g_mid) <= event.tolerance) {
            return mid;
        }
        if ((g_mid > 0.0) == (g_lo > 0.0)) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
            g_hi = g_mid;
        }
    }
    return std::abs(g_lo) < std::abs(g_hi) ? lo : hi;
}

std::string to_string(StopReason reason)
{
    switch (reason) {
        case StopReason::event:
            return "event";
        case StopReason::r_max:
            return "r_max";
        case StopReason::step_budget:
            return "step_budget";
        case StopReason::nonfinite:
            return "nonfinite";
    }
    return "unknown";
}

OdeState Trajectory::at(double r) const
{
    if (steps.empty()) {
        if (r == start.r) {
            return start;
        }
        throw std::domain_error("trajectory: evaluation on an empty trajectory");
    }
    // Absorb round-off at the ends of the explored range.
    double const slack = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(r));
    if (r < r_begin() && r >= r_begin() - slack) {
        r = r_begin();
    } else if (r > r_end() && r <= r_end() + slack) {
        r = r_end();
    }
    if (r < r_begin() || r > r_end()) {
        std::ostringstream os;
        os.precision(17);
        os << "trajectory: r=" << r << " outside explored range [" << r_begin() << ", " << r_end() << "]";
        throw std::domain_error(os.str());
    }
    auto it = std::lower_bound(steps.begin(), steps.end(), r,
                               [](const StepRecord& s, double x) { return s.r_to < x; });
    if (it == steps.end()) {
        it = std::prev(steps.end());
    }
    return dense_eval(*it, r);
}

std::vector<OdeState> Trajectory::sample(double r_lo, double r_hi, std::size_t count) const
{
    r_lo = std::max(r_lo, r_begin());
    r_hi = std::min(r_hi, r_end());
    std::vector<OdeState> out;
    if (count == 0 || r_hi < r_lo) {
        return out;
    }
    out.reserve(count);
    if (count == 1) {
        out.push_back(at(r_lo));
        return out;
    }
    double const dr = (r_hi - r_lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) {
        double const r = (i + 1 == count) ? r_hi : r_lo + dr * static_cast<double>(i);
        out.push_back(at(r));
    }
    return out;
}

std::vector<OdeState> Trajectory::nodes() const
{
    std::vector<OdeState> out;
    out.reserve(steps.size() + 1);
    out.push_back(start);
    for (auto const& s : steps) {
        out.push_back(s.state_to);
    }
    return out;
}

Trajectory Trajectory::truncated(double r_cut) const
{
    Trajectory out = *this;
    if (r_cut >= r_end()) {
        return out;
    }
    out.steps.clear();
    out.event.reset();
    out.stop = StopReason::r_max;
    if (r_cut <= r_begin()) {
        return out;
    }
    for (auto const& s : steps) {
        if (s.r_to <= r_cut) {
            out.steps.push_back(s);
            continue;
        }
        if (s.r_from < r_cut) {
            out.steps.push_back(dopri_step(s.state_from, r_cut - s.r_from, params));
        }
        break;
    }
    return out;
}

Trajectory integrate(const OdeState& start,
                     const SystemParams& params,
                     const StepControls& controls,
                     const std::vector<EventSpec>& events,
                     double r_max)
{
    params.validate();
    controls.validate();
    if (!(start.r > 0.0)) {
        throw std::domain_error("integrate: start radius must be positive");
    }
    if (r_max < start.r) {
        throw std::domain_error("integrate: r_max precedes the start radius");
    }

    Trajectory traj;
    traj.params = params;
    traj.u0 = start.u;
    traj.start = start;
    traj.stop = StopReason::r_max;

    OdeState state = start;
    double h = std::min(controls.h_init, controls.h_max);
    constexpr double safety = 0.9;
    constexpr double min_factor = 0.2;
    constexpr double max_factor = 10.0;

    while (state.r < r_max) {
        if (traj.steps.size() >= controls.max_steps) {
            traj.stop = StopReason::step_budget;
            traj.note = "step budget exhausted at r=" + std::to_string(state.r);
            return traj;
        }
        double const h_floor = 1e-14 * std::max(1.0, state.r);
        bool last = false;
        if (state.r + h >= r_max) {
            h = r_max - state.r;
            last = true;
        }

        double err = 0.0;
        StepRecord step = dopri_step(state, h, params, &err, &controls);
        if (!std::isfinite(err) || !step.state_to.finite()) {
            h *= 0.5;
            if (h < h_floor) {
                traj.stop = StopReason::nonfinite;
                traj.note = "nonfinite state near r=" + std::to_string(state.r);
                return traj;
            }
            continue;
        }
        if (err > 1.0) {
            double const shrink = std::max(min_factor, safety * std::pow(err, -0.2));
            h *= shrink;
            if (h < h_floor) {
                traj.stop = StopReason::nonfinite;
                traj.note = "step size underflow near r=" + std::to_string(state.r);
                return traj;
            }
            continue;
        }
        if (last) {
            step.r_to = r_max;
            step.state_to.r = r_max;
        }

        // Earliest located event wins; ties within tolerance go to the lower index.
        std::optional<EventHit> hit;
        for (std::size_t i = 0; i < events.size(); ++i) {
            auto const r_ev = locate_event(step, events[i]);
            if (!r_ev) {
                continue;
            }
            OdeState const s_ev = dense_eval(step, *r_ev);
            if (events[i].guard && !events[i].guard(s_ev)) {
                continue;
            }
            double const tie = events[i].tolerance * std::max(1.0, *r_ev);
            if (!hit || *r_ev < hit->r - tie) {
                hit = EventHit{i, events[i].name, *r_ev, s_ev};
            }
        }

        if (hit) {
            if (hit->r > step.r_from) {
                traj.steps.push_back(dopri_step(step.state_from, hit->r - step.r_from, params));
            }
            traj.stop = StopReason::event;
            traj.event = hit;
            return traj;
        }

        traj.steps.push_back(step);
        state = step.state_to;
        if (last) {
            break;
        }
        double const grow = err == 0.0 ? max_factor : std::min(max_factor, safety * std::pow(err, -0.2));
        h = std::min(controls.h_max, h * std::max(min_factor, grow));
    }
    return traj;
}

} // namespace choquard
