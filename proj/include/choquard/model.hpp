#pragma once

#include <string>

namespace choquard {

/// Dimension and nonlinearity exponent of the canonical radial system
///
///   u'' + (N-1)/r u' = (V - 1) u
///   V'' + (N-1)/r V' = |u|^p
///
/// with u(0) = u0, u'(0) = V(0) = V'(0) = 0.
struct SystemParams
{
    int dim = 3;
    double p = 2.0;

    /// Throws std::invalid_argument unless dim >= 2 and 1 <= p <= 2.
    void validate() const;

    double radial_coeff() const { return static_cast<double>(dim - 1); }
};

/// Point on a trajectory: radius and (u, u', V, V').
struct OdeState
{
    double r = 0.0;
    double u = 0.0;
    double up = 0.0;
    double v = 0.0;
    double vp = 0.0;

    bool finite() const;
};

/// Right-hand side of the first-order form, componentwise d/dr of (u, u', V, V').
struct Derivative
{
    double du = 0.0;
    double dup = 0.0;
    double dv = 0.0;
    double dvp = 0.0;
};

/// |u|^p, defined for transiently negative u so the flow stays well posed
/// past the zero crossing that terminates classification.
double source_term(double u, double p);

/// Vector field of the canonical system. Throws std::domain_error for r <= 0,
/// where the (N-1)/r terms are singular; start integration with series_start.
Derivative rhs(const OdeState& state, const SystemParams& params);

constexpr double default_r_start = 1e-6;

/// Second-order Taylor state at r_start using u''(0) = -u0/N and V''(0) = u0^p/N.
/// Throws std::domain_error for u0 <= 0 or r_start <= 0.
OdeState series_start(double u0, const SystemParams& params, double r_start = default_r_start);

std::string to_string(const SystemParams& params);

} // namespace choquard
