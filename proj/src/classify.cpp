#include "choquard/classify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace choquard {

std::string to_string(Verdict v)
{
    switch (v) {
        case Verdict::in_n:
            return "N";
        case Verdict::in_p:
            return "P";
        case Verdict::undetermined:
            return "undetermined";
    }
    return "unknown";
}

void RMaxPolicy::validate() const
{
    if (!(r_initial > 0.0) || !(r_cap >= r_initial)) {
        throw std::invalid_argument("r_max policy: need 0 < r_initial <= r_cap");
    }
}

std::vector<EventSpec> classification_events(double tolerance)
{
    EventSpec zero_of_u{"u_zero", [](const OdeState& s) { return s.u; }, Crossing::falling, {}, tolerance};
    EventSpec min_of_u{"up_zero", [](const OdeState& s) { return s.up; }, Crossing::rising,
                       [](const OdeState& s) { return s.u > 0.0; }, tolerance};
    return {zero_of_u, min_of_u};
}

Classification classify(double u0, const SystemParams& params, const StepControls& controls,
                        const RMaxPolicy& policy)
{
    if (!(u0 > 0.0) || !std::isfinite(u0)) {
        throw std::domain_error("classify: u0 must be positive and finite");
    }
    params.validate();
    controls.validate();
    policy.validate();

    auto const events = classification_events();
    OdeState const start = series_start(u0, params);

    Classification out;
    out.u0 = u0;
    for (double r_max = policy.r_initial;; r_max = std::min(2.0 * r_max, policy.r_cap)) {
        Trajectory traj = integrate(start, params, controls, events, r_max);
        traj.u0 = u0;
        out.r_explored = traj.r_end();

        if (traj.stop == StopReason::event) {
            out.r_event = traj.event->r;
            out.event_state = traj.event->state;
            out.tag = traj.event->index == event_zero_of_u ? Verdict::in_n : Verdict::in_p;
            out.trajectory = std::move(traj);
            return out;
        }
        if (traj.stop != StopReason::r_max) {
            out.tag = Verdict::undetermined;
            out.note = "integration failure (" + to_string(traj.stop) + "): " + traj.note;
            out.trajectory = std::move(traj);
            return out;
        }
        if (r_max >= policy.r_cap) {
            std::ostringstream os;
            os << "no event up to r=" << r_max;
            out.tag = Verdict::undetermined;
            out.note = os.str();
            out.trajectory = std::move(traj);
            return out;
        }
    }
}

bool certify_p_side(const Classification& c, const StepControls& controls)
{
    if (c.tag != Verdict::in_p) {
        return false;
    }
    OdeState const& m = c.event_state;
    double const tol = default_event_tolerance;
    if (!(m.u > 0.0) || !(m.v >= 1.0 - tol) || !(m.r > 0.0)) {
        return false;
    }
    // Past the minimum V > 1 forces u'' > 0; continue a short distance and confirm the turn.
    double const reach = std::max(0.05, 0.05 * m.r);
    Trajectory const after = integrate(m, c.trajectory.params, controls, {}, m.r + reach);
    if (after.stop != StopReason::r_max || after.empty()) {
        return false;
    }
    double prev_u = m.u;
    bool first = true;
    for (auto const& s : after.sample(m.r, after.r_end(), 64)) {
        if (first) {
            first = false;
            continue;
        }
        if (!(s.up > 0.0) || !(s.u > prev_u) || !(s.v >= 1.0 - tol)) {
            return false;
        }
        prev_u = s.u;
    }
    return true;
}

} // namespace choquard
