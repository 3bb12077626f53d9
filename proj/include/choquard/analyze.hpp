#pragma once

#include "choquard/integrate.hpp"
#include "choquard/model.hpp"
#include "choquard/shoot.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace choquard {

/// Result of one numerical check. `worst_violation` is signed: the check passes iff it is
/// >= -(tolerance). Skipped checks carry passed = true and skipped = true.
struct CheckReport
{
    std::string name;
    bool passed = false;
    bool skipped = false;
    double worst_violation = 0.0;
    double tolerance = 0.0;
    double location = 0.0;
    std::string details;
};

/// Per-check tolerances in one place so a suite can tighten them together.
struct CheckTolerances
{
    double wronskian_monotone_rel = 1e-9;
    double phi_monotone = 1e-9;
    double z_residual = 1e-4;
    double z_limit_rel = 0.02;
    double potential_rel = 1e-6;
    double pde_rel = 1e-6;
    double sandwich_slack = 1e-12;
    double barrier_slack = 1e-9;
    std::size_t samples = 4000;
};

CheckReport wronskian_check(const Trajectory& first, const Trajectory& second, const CheckTolerances& tol = {});

/// phi = 2u + V - 1/2 nonincreasing and V <= 2 u0 on the positive range. Requires u0 < 1/4.
CheckReport phi_check(const Trajectory& traj, const CheckTolerances& tol = {});

/// phi2 = u + l0 V - l0 (l0 = u0^{(2-p)/2}) nondecreasing and u > u0 - l0 V while u decreases.
/// Throws std::domain_error when phi2(0) <= 0 or phi2''(0) <= 0.
CheckReport phi2_check(const Trajectory& traj, const CheckTolerances& tol = {});

/// u^p r^2/(2N) <= V <= u0^p r^2/(2N) while u' < 0 and u > 0.
CheckReport v_sandwich_check(const Trajectory& traj, const CheckTolerances& tol = {});

/// u(r) > u0 (1 - r^2/r0^2), r0 = sqrt(2N / u0^{p/2}), on (0, min(r0, R0)) with R0 the end of the
/// decreasing range.
CheckReport barrier_check(const Trajectory& traj, const CheckTolerances& tol = {});

/// Residual of z' = z^2 - (N-1) z / r + 1 - V for z = -u'/u (z' by centered differences). With a finite
/// `v_inf`, also checks the extrapolated tail limit z_inf^2 against v_inf - 1.
CheckReport z_dynamics_check(const Trajectory& traj,
                             const std::optional<VInfEstimate>& v_inf = std::nullopt,
                             const CheckTolerances& tol = {});

/// Radial density f; identically zero beyond `support` (infinite support is truncated where
/// f s^{N-1} falls below 1e-16 of its peak).
struct RadialDensity
{
    std::function<double(double)> f;
    double support = std::numeric_limits<double>::infinity();
};

/// (Phi_N * f)(r) via Newton's theorem:
///   N >= 3: [r^{2-N} int_0^r f s^{N-1} ds + int_r^inf f s ds] / (N - 2)
///   N = 2:  -int_0^inf ln(max(r, s)) f(s) s ds
/// Throws std::domain_error when the tail does not decay.
std::vector<double> newton_potential(const RadialDensity& density,
                                     const SystemParams& params,
                                     const std::vector<double>& r_eval);

/// V(r) - V(0) = -(W(r) - W(0)) with W = Phi_N * |u|^p along the ground-state trajectory.
CheckReport potential_consistency(const GroundState& ground, const CheckTolerances& tol = {});

struct PhysicalScaling
{
    double lambda = 0.0;
    double gamma = 0.0;
    double sigma = 0.0;
    double a_scale = 0.0;
    double b_scale = 0.0;
    double v_lambda_0 = 0.0;
};

/// Physical profile on a uniform radial grid: u_lambda(r) = u(sigma r)/A,
/// V_lambda(r) = V(sigma r)/B + V_lambda(0).
struct PhysicalSolution
{
    SystemParams params;
    PhysicalScaling scaling;
    std::vector<double> r;
    std::vector<double> u;
    std::vector<double> v;
};

constexpr double default_grid_density = 1000.0;

/// Physical scaling for (lambda, gamma). sigma^2 = lambda / (v_inf - 1) makes V_lambda vanish at
/// infinity. N >= 3 only.
PhysicalScaling physical_scaling(const GroundState& ground, double lambda, double gamma);

/// Rebuilds the canonical profile with steps no longer than the grid spacing and maps it to
/// physical variables. Grid density is in points per unit canonical radius. The scaling uses v_inf
/// re-estimated on the rebuilt profile, so it can differ from physical_scaling() in the last digits.
PhysicalSolution to_physical(const GroundState& ground,
                             double lambda,
                             double gamma,
                             double grid_density = default_grid_density);

/// Canonical (rho, u, V) recovered from a physical solution through the inverse scaling.
struct CanonicalSamples
{
    std::vector<double> rho;
    std::vector<double> u;
    std::vector<double> v;
};

CanonicalSamples to_canonical(const PhysicalSolution& physical);

struct PdeResidual
{
    double relative = 0.0;
    double absolute = 0.0;
    double location = 0.0;
    std::size_t window_points = 0;
};

/// Relative sup-norm of -Lap u + lambda u - gamma (Phi_N * |u|^p) u on the grid, excluding the
/// outermost 10%. Lap u uses 4th-order centered differences; the convolution integrates a cubic
/// interpolant of the samples, continued exponentially past the last sample. Requires a uniform grid starting at r = 0.
PdeResidual pde_residual(const std::vector<double>& r,
                         const std::vector<double>& u,
                         double lambda,
                         double gamma,
                         const SystemParams& params);

} // namespace choquard
