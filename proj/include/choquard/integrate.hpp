#pragma once

#include "choquard/model.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace choquard {

struct StepControls
{
    double rtol = 1e-10;
    double atol = 1e-12;
    double h_init = 1e-4;
    double h_max = 0.1;
    std::size_t max_steps = 1'000'000;

    void validate() const;
    /// Both tolerances scaled by `factor` (used for convergence studies).
    StepControls scaled(double factor) const;
};

/// One accepted Dormand-Prince step with its continuous extension.
struct StepRecord
{
    double r_from = 0.0;
    double r_to = 0.0;
    OdeState state_from;
    OdeState state_to;
    /// Hairer's dopri5 dense-output coefficients, one row per component (u, u', V, V').
    std::array<std::array<double, 5>, 4> dense{};
};

/// Interpolated state inside an accepted step. Throws std::domain_error outside [r_from, r_to].
OdeState dense_eval(const StepRecord& step, double r);

enum class Crossing { falling, rising, either };

/// Scalar event function g(state); fires where g changes sign across a step in the given direction.
/// `guard`, when set, must hold at the located root or the crossing is ignored.
struct EventSpec
{
    std::string name;
    std::function<double(const OdeState&)> fn;
    Crossing direction = Crossing::either;
    std::function<bool(const OdeState&)> guard;
    double tolerance = 1e-12;
};

constexpr double default_event_tolerance = 1e-12;

/// Root of the event on the step's interpolant, or nullopt if no crossing in the requested direction.
std::optional<double> locate_event(const StepRecord& step, const EventSpec& event);

enum class StopReason { event, r_max, step_budget, nonfinite };

std::string to_string(StopReason reason);

struct EventHit
{
    std::size_t index = 0;
    std::string name;
    double r = 0.0;
    OdeState state;
};

class Trajectory
{
public:
    SystemParams params;
    double u0 = 0.0;
    OdeState start;
    std::vector<StepRecord> steps;
    StopReason stop = StopReason::r_max;
    std::optional<EventHit> event;
    std::string note;

    bool empty() const { return steps.empty(); }
    double r_begin() const { return start.r; }
    double r_end() const { return steps.empty() ? start.r : steps.back().r_to; }
    OdeState final_state() const { return steps.empty() ? start : steps.back().state_to; }

    /// Dense evaluation anywhere in [r_begin, r_end].
    OdeState at(double r) const;

    /// `count` states on a uniform radial grid over [r_lo, r_hi] (clamped to the explored range).
    std::vector<OdeState> sample(double r_lo, double r_hi, std::size_t count) const;

    /// Step endpoint states, in order, starting with `start`.
    std::vector<OdeState> nodes() const;

    /// Copy restricted to [r_begin, r_cut]; the last step is re-split so the copy ends exactly at r_cut.
    Trajectory truncated(double r_cut) const;
};

/// Adaptive Dormand-Prince 5(4) integration of the canonical system from `start` to `r_max`,
/// stopping at the earliest event. Budget exhaustion and nonfinite states are reported via `stop`.
Trajectory integrate(const OdeState& start,
                     const SystemParams& params,
                     const StepControls& controls,
                     const std::vector<EventSpec>& events,
                     double r_max);

/// Single Dormand-Prince step of size h from `from` (no error control). Exposed for truncation
/// and testing.
StepRecord dopri_step(const OdeState& from, double h, const SystemParams& params, double* error_norm = nullptr,
                      const StepControls* controls = nullptr);

} // namespace choquard
