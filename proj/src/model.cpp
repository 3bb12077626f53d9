#include "choquard/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace choquard {

void SystemParams::validate() const
{
    if (dim < 2) {
        throw std::invalid_argument("dimension must be >= 2, got " + std::to_string(dim));
    }
    if (!(p >= 1.0 && p <= 2.0)) {
        std::ostringstream os;
        os << "exponent p must lie in [1, 2], got " << p;
        throw std::invalid_argument(os.str());
    }
}

bool OdeState::finite() const
{
    return std::isfinite(r) && std::isfinite(u) && std::isfinite(up) && std::isfinite(v) &&
           std::isfinite(vp);
}

double source_term(double u, double p)
{
    double const a = std::abs(u);
    if (p == 2.0) {
        return a * a;
    }
    if (p == 1.0) {
        return a;
    }
    return std::pow(a, p);
}

Derivative rhs(const OdeState& s, const SystemParams& params)
{
    if (!(s.r > 0.0)) {
        throw std::domain_error("rhs: radius must be positive (use series_start near r = 0)");
    }
    double const damping = params.radial_coeff() / s.r;
    return Derivative{
        s.up,
        (s.v - 1.0) * s.u - damping * s.up,
        s.vp,
        source_term(s.u, params.p) - damping * s.vp,
    };
}

OdeState series_start(double u0, const SystemParams& params, double r_start)
{
    if (!(u0 > 0.0)) {
        throw std::domain_error("series_start: u0 must be positive");
    }
    if (!(r_start > 0.0)) {
        throw std::domain_error("series_start: r_start must be positive");
    }
    double const n = static_cast<double>(params.dim);
    double const upp0 = -u0 / n;
    double const vpp0 = source_term(u0, params.p) / n;
    return OdeState{
        r_start,
        u0 + 0.5 * upp0 * r_start * r_start,
        upp0 * r_start,
        0.5 * vpp0 * r_start * r_start,
        vpp0 * r_start,
    };
}

std::string to_string(const SystemParams& params)
{
    std::ostringstream os;
    os << "N=" << params.dim << ", p=" << params.p;
    return os.str();
}

} // namespace choquard
