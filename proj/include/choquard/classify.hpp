#pragma once

#include "choquard/integrate.hpp"
#include "choquard/model.hpp"

#include <string>

namespace choquard {

/// Outcome of shooting from a single initial height.
///   in_n: u reaches zero while still decreasing.
///   in_p: u' reaches zero (a local minimum) while u > 0.
///   undetermined: neither happened within the explored radius.
enum class Verdict { in_n, in_p, undetermined };

std::string to_string(Verdict v);

/// Explored radius starts at `r_initial` and doubles on an undetermined verdict up to `r_cap`.
struct RMaxPolicy
{
    double r_initial = 20.0;
    double r_cap = 320.0;

    void validate() const;
};

struct Classification
{
    Verdict tag = Verdict::undetermined;
    double u0 = 0.0;
    double r_event = 0.0;
    double r_explored = 0.0;
    /// State at the event (meaningful for in_n / in_p).
    OdeState event_state;
    Trajectory trajectory;
    std::string note;
};

constexpr std::size_t event_zero_of_u = 0;
constexpr std::size_t event_minimum_of_u = 1;

/// The two classification events, in priority order (zero of u first).
std::vector<EventSpec> classification_events(double tolerance = default_event_tolerance);

Classification classify(double u0,
                        const SystemParams& params,
                        const StepControls& controls = {},
                        const RMaxPolicy& policy = {});

/// Certificate for an in_p verdict: V >= 1 at the minimum, u > 0 there, and a short continuation
/// past the minimum shows u' > 0 with u increasing.
bool certify_p_side(const Classification& c, const StepControls& controls = {});

} // namespace choquard
