#pragma once

#include "choquard/classify.hpp"
#include "choquard/integrate.hpp"
#include "choquard/model.hpp"

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace choquard {

/// Raised when a solver stage cannot produce its result; `stage` names the failing step.
class SolverError : public std::runtime_error
{
public:
    SolverError(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what)
        , stage_(std::move(stage))
    {
    }

    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

struct Bracket
{
    double lo = 0.0; ///< verdict in_n
    double hi = 0.0; ///< verdict in_p

    double width() const { return hi - lo; }
};

struct BracketOptions
{
    double lo = 0.2;
    double hi_start = 1.0;
    double hi_cap = 1e6;
};

/// Limit of V along a decayed tail. For N >= 3, V(R) + M R^{2-N}/(N-2) + tail_correction with
/// M = V'(R) R^{N-1}; for N = 2 the limit is infinite and `mass` is the log-law coefficient R V'(R).
struct VInfEstimate
{
    double value = 0.0;
    bool finite = true;
    double mass = 0.0;
    double radius = 0.0;
    /// int_R^inf |u|^p s ds / (N-2) with u continued as u(R) exp(-z (s-R)), z = -u'/u at R.
    double tail_correction = 0.0;
};

/// Least-squares decay fit of -ln u = k r + c0 + c1 ln r + c2/r + c3/r^2 over the tail window.
struct DecayFit
{
    double k = 0.0;
    double log_coeff = 0.0;
    /// Pointwise -u'/u at the last sample of the window.
    double z_end = 0.0;
    double r_from = 0.0;
    double r_to = 0.0;
    std::size_t samples = 0;
};

struct BisectionOptions
{
    double tol = 1e-10;
    std::size_t max_iterations = 200;
    RMaxPolicy policy{};
    /// Relative lo/hi gap beyond which the lo-side trajectory no longer tracks the ground state.
    double envelope_tol = 1e-4;
    /// Keep bisecting past `tol` (down to adjacent doubles) for the tail trajectory only.
    bool refine_tail = true;
};

struct GroundState
{
    SystemParams params;
    double u0_star = 0.0;
    Bracket bracket;
    double bracket_width = 0.0;
    std::size_t iterations = 0;
    /// Event radius of the lo-side (in_n) trajectory the tail is taken from.
    double r_event_lo = 0.0;
    /// Largest radius where (u_hi - u_lo)/u_lo stays within envelope_tol.
    double r_envelope = 0.0;
    /// Lo-side trajectory truncated at min(0.99 r_event_lo, r_envelope).
    Trajectory trajectory;
    /// Tail quantities; absent when the bracket is too wide for the tail to decay (see tail_note).
    std::optional<VInfEstimate> v_inf;
    std::optional<DecayFit> decay;
    std::string tail_note;
};

/// lo verified in_n, hi found by doubling from `hi_start` until in_p.
Bracket find_bracket(const SystemParams& params,
                     const StepControls& controls = {},
                     const BracketOptions& options = {},
                     const RMaxPolicy& policy = {});

GroundState bisect(const Bracket& bracket,
                   const SystemParams& params,
                   const StepControls& controls = {},
                   const BisectionOptions& options = {});

/// find_bracket followed by bisect.
GroundState solve_ground_state(const SystemParams& params,
                               const StepControls& controls = {},
                               const BisectionOptions& options = {},
                               const BracketOptions& bracket_options = {});

constexpr double tail_decay_threshold = 1e-4;

VInfEstimate estimate_vinf(const Trajectory& traj, const SystemParams& params);

/// Tail window: from the first radius where u < 1e-2 u0 to the last where u > 10 atol.
/// Throws std::domain_error when the window spans less than one decade of u or has too few samples.
DecayFit decay_rate(const Trajectory& traj, double atol = 1e-12);

/// Classifications in input order. Items that throw become undetermined with the message in `note`.
std::vector<Classification> sweep(const std::vector<double>& u0_values,
                                  const SystemParams& params,
                                  const StepControls& controls = {},
                                  const RMaxPolicy& policy = {});

} // namespace choquard
