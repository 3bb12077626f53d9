#include "choquard/analyze.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace choquard {

namespace {

std::string fmt(double x)
{
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

// Uniform grid over [a, b] merged with the trajectory's step endpoints inside it.
std::vector<double> check_grid(const Trajectory& traj, double a, double b, std::size_t n)
{
    std::vector<double> rs;
    if (!(b > a)) {
        rs.push_back(a);
        return rs;
    }
    rs.reserve(n + traj.steps.size() + 1);
    for (std::size_t i = 0; i < n; ++i) {
        rs.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    for (auto const& s : traj.nodes()) {
        if (s.r > a && s.r < b) {
            rs.push_back(s.r);
        }
    }
    rs.back() = std::max(rs.back(), b);
    std::sort(rs.begin(), rs.end());
    rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
    return rs;
}

// First radius (on a fine scan) where `stop` holds, or r_end if never.
template <typename Pred>
double range_end(const Trajectory& traj, Pred stop)
{
    for (auto const& s : traj.nodes()) {
        if (stop(s)) {
            // refine inside the preceding step on the interpolant
            double lo = traj.r_begin();
            double hi = s.r;
            for (auto const& st : traj.steps) {
                if (st.r_to >= s.r) {
                    lo = st.r_from;
                    break;
                }
            }
            for (int i = 0; i < 80 && hi - lo > 1e-14 * std::max(1.0, hi); ++i) {
                double const mid = 0.5 * (lo + hi);
                if (stop(traj.at(mid))) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return lo;
        }
    }
    return traj.r_end();
}

double initial_height(const Trajectory& traj) { return traj.u0 > 0.0 ? traj.u0 : traj.start.u; }

CheckReport make_report(std::string name, double worst, double tolerance, double location, std::string details)
{
    CheckReport rep;
    rep.name = std::move(name);
    rep.worst_violation = worst;
    rep.tolerance = tolerance;
    rep.location = location;
    rep.passed = worst >= -tolerance;
    rep.details = std::move(details);
    return rep;
}

template <typename F>
double gk_integrate(F&& f, double a, double b)
{
    if (!(b > a)) {
        return 0.0;
    }
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 12, 1e-9);
}

// Cubic Lagrange interpolant on a uniform grid starting at 0, extended evenly to negative radii.
class UniformInterpolant
{
public:
    UniformInterpolant(const std::vector<double>& r, const std::vector<double>& y)
        : y_(y)
        , h_(r.size() > 1 ? r[1] - r[0] : 1.0)
        , r_max_(r.empty() ? 0.0 : r.back())
    {
    }

    double operator()(double s) const
    {
        if (y_.empty() || s > r_max_) {
            return 0.0;
        }
        auto const n = static_cast<long>(y_.size());
        long i = std::clamp(static_cast<long>(std::floor(s / h_)), 0L, n - 2);
        long first = std::clamp(i - 1, -2L, n - 4);
        double const t = s / h_;
        double out = 0.0;
        for (long j = first; j < first + 4; ++j) {
            double w = 1.0;
            for (long m = first; m < first + 4; ++m) {
                if (m != j) {
                    w *= (t - static_cast<double>(m)) / static_cast<double>(j - m);
                }
            }
            out += w * y_[static_cast<std::size_t>(std::abs(j))];
        }
        return out;
    }

private:
    const std::vector<double>& y_;
    double h_;
    double r_max_;
};

} // namespace

CheckReport wronskian_check(const Trajectory& first, const Trajectory& second, const CheckTolerances& tol)
{
    if (first.params.dim != second.params.dim || first.params.p != second.params.p) {
        throw std::invalid_argument("wronskian_check: trajectories use different parameters");
    }
    const Trajectory& low = initial_height(first) <= initial_height(second) ? first : second;
    const Trajectory& high = &low == &first ? second : first;
    double const a = std::max(low.r_begin(), high.r_begin());
    double b = std::min(low.r_end(), high.r_end());
    if (!(b > a)) {
        throw std::invalid_argument("wronskian_check: trajectories have no common range");
    }
    int const n = low.params.dim;

    if (initial_height(low) == initial_height(high)) {
        return make_report("wronskian", 0.0, tol.wronskian_monotone_rel, a,
                           "identical initial heights: omega vanishes identically, ordering skipped");
    }

    b = std::min(b, range_end(low, [](const OdeState& s) { return !(s.u > 0.0); }));
    auto const rs = check_grid(low, a, b, tol.samples);

    std::vector<double> weighted;
    weighted.reserve(rs.size());
    double min_gap = std::numeric_limits<double>::infinity();
    double gap_at = a;
    for (double r : rs) {
        auto const s1 = low.at(r);
        auto const s2 = high.at(r);
        weighted.push_back((s2.up * s1.u - s1.up * s2.u) * std::pow(r, n - 1));
        if (s2.u - s1.u < min_gap) {
            min_gap = s2.u - s1.u;
            gap_at = r;
        }
    }
    double scale = 0.0;
    for (double w : weighted) {
        scale = std::max(scale, std::abs(w));
    }
    double worst = 0.0;
    double worst_at = a;
    for (std::size_t i = 1; i < weighted.size(); ++i) {
        double const inc = scale > 0.0 ? (weighted[i] - weighted[i - 1]) / scale : 0.0;
        if (inc < worst) {
            worst = inc;
            worst_at = rs[i];
        }
    }
    auto rep = make_report("wronskian", worst, tol.wronskian_monotone_rel, worst_at,
                           "omega r^{N-1} max " + fmt(scale) + " on [" + fmt(a) + ", " + fmt(b) +
                               "]; min(u2 - u1) = " + fmt(min_gap) + " at r=" + fmt(gap_at));
    if (!(min_gap > 0.0)) {
        rep.passed = false;
        rep.location = gap_at;
        rep.details += " (ordering violated)";
    }
    return rep;
}

CheckReport phi_check(const Trajectory& traj, const CheckTolerances& tol)
{
    double const u0 = initial_height(traj);
    if (!(u0 < 0.25)) {
        throw std::domain_error("phi_check: requires u0 < 1/4, got " + fmt(u0));
    }
    double const b = range_end(traj, [](const OdeState& s) { return !(s.u > 0.0); });
    auto const rs = check_grid(traj, traj.r_begin(), b, tol.samples);

    double worst = std::numeric_limits<double>::infinity();
    double worst_at = traj.r_begin();
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (double r : rs) {
        auto const s = traj.at(r);
        double const phi = 2.0 * s.u + s.v - 0.5;
        double slack = 2.0 * u0 - s.v;
        if (!std::isnan(prev)) {
            slack = std::min(slack, prev - phi);
        }
        if (slack < worst) {
            worst = slack;
            worst_at = r;
        }
        prev = phi;
    }
    return make_report("phi_monotone", worst, tol.phi_monotone, worst_at,
                       "phi = 2u + V - 1/2 nonincreasing and V <= 2 u0 on [" + fmt(traj.r_begin()) + ", " + fmt(b) +
                           "]");
}

CheckReport phi2_check(const Trajectory& traj, const CheckTolerances& tol)
{
    double const u0 = initial_height(traj);
    double const p = traj.params.p;
    double const n = static_cast<double>(traj.params.dim);
    double const l0 = std::pow(u0, (2.0 - p) / 2.0);
    if (!(u0 - l0 > 0.0)) {
        throw std::domain_error("phi2_check: phi2(0) = u0 - lambda0 = " + fmt(u0 - l0) + " is not positive");
    }
    if (!((-u0 + l0 * std::pow(u0, p)) / n > 0.0)) {
        throw std::domain_error("phi2_check: phi2''(0) = (-u0 + lambda0 u0^p)/N is not positive");
    }
    double const b = range_end(traj, [](const OdeState& s) { return !(s.u > 0.0) || !(s.up < 0.0); });
    auto const rs = check_grid(traj, traj.r_begin(), b, tol.samples);

    double worst = std::numeric_limits<double>::infinity();
    double worst_at = traj.r_begin();
    double prev = std::numeric_limits<double>::quiet_NaN();
    bool strict_ok = true;
    for (double r : rs) {
        auto const s = traj.at(r);
        double const phi2 = s.u + l0 * s.v - l0;
        double const scale = std::max(1.0, std::abs(phi2));
        if (!std::isnan(prev)) {
            double const inc = (phi2 - prev) / scale;
            if (inc < worst) {
                worst = inc;
                worst_at = r;
            }
        }
        if (r > traj.r_begin() && !(s.u > u0 - l0 * s.v)) {
            strict_ok = false;
            worst_at = r;
        }
        prev = phi2;
    }
    if (!std::isfinite(worst)) {
        worst = 0.0;
    }
    auto rep = make_report("phi2_monotone", worst, tol.phi_monotone, worst_at,
                           "lambda0 = " + fmt(l0) + ", decreasing range [" + fmt(traj.r_begin()) + ", " + fmt(b) +
                               "]");
    if (!strict_ok) {
        rep.passed = false;
        rep.details += "; u > u0 - lambda0 V violated";
    }
    return rep;
}

CheckReport v_sandwich_check(const Trajectory& traj, const CheckTolerances& tol)
{
    double const u0 = initial_height(traj);
    double const p = traj.params.p;
    double const two_n = 2.0 * traj.params.dim;
    double const b = range_end(traj, [](const OdeState& s) { return !(s.u > 0.0) || !(s.up < 0.0); });
    auto const rs = check_grid(traj, traj.r_begin(), b, tol.samples);
    double const top = source_term(u0, p);

    double worst = std::numeric_limits<double>::infinity();
    double worst_at = traj.r_begin();
    for (double r : rs) {
        auto const s = traj.at(r);
        double const r2 = r * r / two_n;
        double const slack = std::min(s.v - source_term(s.u, p) * r2, top * r2 - s.v);
        if (slack < worst) {
            worst = slack;
            worst_at = r;
        }
    }
    return make_report("v_sandwich", worst, tol.sandwich_slack, worst_at,
                       "u^p r^2/(2N) <= V <= u0^p r^2/(2N) on [" + fmt(traj.r_begin()) + ", " + fmt(b) + "]");
}

CheckReport barrier_check(const Trajectory& traj, const CheckTolerances& tol)
{
    double const u0 = initial_height(traj);
    double const p = traj.params.p;
    double const r0 = std::sqrt(2.0 * traj.params.dim / std::pow(u0, p / 2.0));
    double const decreasing_end =
        range_end(traj, [](const OdeState& s) { return !(s.u > 0.0) || !(s.up < 0.0); });
    double const b = std::min(r0, decreasing_end);
    auto const rs = check_grid(traj, traj.r_begin(), b, tol.samples);

    double worst = std::numeric_limits<double>::infinity();
    double worst_at = traj.r_begin();
    for (double r : rs) {
        double const slack = traj.at(r).u - u0 * (1.0 - r * r / (r0 * r0));
        if (slack < worst) {
            worst = slack;
            worst_at = r;
        }
    }
    return make_report("large_u0_barrier", worst, tol.barrier_slack, worst_at,
                       "r0 = " + fmt(r0) + ", R0 = " + fmt(decreasing_end));
}

CheckReport z_dynamics_check(const Trajectory& traj, const std::optional<VInfEstimate>& v_inf,
                             const CheckTolerances& tol)
{
    constexpr double h = 1e-3;
    constexpr double u_floor = 1e-11;
    double const nm1 = traj.params.radial_coeff();
    double const u0 = initial_height(traj);
    double const b = range_end(traj, [](const OdeState& s) { return !(s.u > u_floor); }) - h;
    double const a = traj.r_begin() + h;
    if (!(b > a)) {
        throw std::domain_error("z_dynamics_check: no range with u > 0");
    }

    auto z_of = [](const OdeState& s) { return -s.up / s.u; };
    double sup = 0.0;
    double sup_at = a;
    std::size_t const n = tol.samples;
    for (std::size_t i = 0; i < n; ++i) {
        double const r = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
        auto const s = traj.at(r);
        double const z = z_of(s);
        double const dz = (z_of(traj.at(r + h)) - z_of(traj.at(r - h))) / (2.0 * h);
        double const res = std::abs(dz - (z * z - nm1 * z / r + 1.0 - s.v));
        if (!(res <= sup)) {
            sup = res;
            sup_at = r;
        }
    }

    double const res_score = -sup / tol.z_residual;
    std::string details = "sup |z' - (z^2 - (N-1)z/r + 1 - V)| = " + fmt(sup) + " on [" + fmt(a) + ", " + fmt(b) + "]";
    double worst = res_score;
    double worst_at = sup_at;

    if (v_inf && v_inf->finite) {
        // Tail limit: z(r) = z_inf + c1/r + c2/r^2 fitted over the window where u < 1e-2 u0.
        double r_from = std::numeric_limits<double>::quiet_NaN();
        for (auto const& s : traj.nodes()) {
            if (s.u < 1e-2 * u0) {
                r_from = s.r;
                break;
            }
        }
        if (std::isnan(r_from) || !(b > r_from)) {
            throw std::domain_error("z_dynamics_check: no tail window for the z limit");
        }
        constexpr std::size_t m = 400;
        Eigen::MatrixXd design(m, 3);
        Eigen::VectorXd target(m);
        for (std::size_t i = 0; i < m; ++i) {
            double const r = r_from + (b - r_from) * static_cast<double>(i) / static_cast<double>(m - 1);
            auto const row = static_cast<Eigen::Index>(i);
            design(row, 0) = 1.0;
            design(row, 1) = 1.0 / r;
            design(row, 2) = 1.0 / (r * r);
            target(row) = z_of(traj.at(r));
        }
        Eigen::VectorXd const c = design.colPivHouseholderQr().solve(target);
        double const z_inf = c(0);
        double const expect = v_inf->value - 1.0;
        double const rel = std::abs(z_inf * z_inf - expect) / std::abs(expect);
        details += "; z_inf^2 = " + fmt(z_inf * z_inf) + " vs v_inf - 1 = " + fmt(expect) + " (rel " + fmt(rel) + ")";
        double const lim_score = -rel / tol.z_limit_rel;
        if (lim_score < worst) {
            worst = lim_score;
            worst_at = b;
        }
    }
    details += " [violation in tolerance units]";
    return make_report("z_dynamics", worst, 1.0, worst_at, details);
}

std::vector<double> newton_potential(const RadialDensity& density,
                                     const SystemParams& params,
                                     const std::vector<double>& r_eval)
{
    params.validate();
    if (!density.f) {
        throw std::invalid_argument("newton_potential: density function missing");
    }
    for (double r : r_eval) {
        if (!(r >= 0.0) || !std::isfinite(r)) {
            throw std::domain_error("newton_potential: evaluation radii must be finite and >= 0");
        }
    }
    std::vector<double> out(r_eval.size(), 0.0);
    if (r_eval.empty()) {
        return out;
    }
    int const n = params.dim;
    auto const& f = density.f;
    double const r_far = *std::max_element(r_eval.begin(), r_eval.end());

    double support = density.support;
    if (!std::isfinite(support)) {
        // Truncate where f s^{N-1} drops below 1e-16 of its peak.
        auto weight = [&](double s) { return std::abs(f(s)) * std::max(std::pow(s, n - 1), s) * (1.0 + std::abs(std::log(s))); };
        double R = std::max(1.0, r_far);
        double peak = 0.0;
        for (int i = 1; i <= 400; ++i) {
            peak = std::max(peak, weight(R * i / 400.0));
        }
        while (weight(R) > 1e-16 * peak || weight(0.75 * R) > 1e-16 * peak) {
            R *= 1.5;
            if (R > 1e8) {
                throw std::domain_error("newton_potential: density tail does not decay (non-convergent integral)");
            }
            peak = std::max(peak, weight(R));
        }
        support = R;
    }

    std::vector<double> pts;
    pts.reserve(r_eval.size() + 2);
    pts.push_back(0.0);
    pts.push_back(support);
    for (double r : r_eval) {
        pts.push_back(std::min(r, support));
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    // inner_w: int f s^{N-1}; inner_1: int f s; outer: int f s (N >= 3) or int f s ln s (N = 2).
    std::size_t const m = pts.size();
    std::vector<double> inner_w(m, 0.0), inner_1(m, 0.0), outer(m, 0.0);
    for (std::size_t i = 1; i < m; ++i) {
        double const lo = pts[i - 1];
        double const hi = pts[i];
        inner_w[i] = inner_w[i - 1] + gk_integrate([&](double s) { return f(s) * std::pow(s, n - 1); }, lo, hi);
        if (n == 2) {
            inner_1[i] = inner_1[i - 1] + gk_integrate([&](double s) { return f(s) * s; }, lo, hi);
        }
    }
    for (std::size_t i = m - 1; i-- > 0;) {
        double const lo = pts[i];
        double const hi = pts[i + 1];
        double const seg = n == 2 ? gk_integrate([&](double s) { return s > 0.0 ? f(s) * s * std::log(s) : 0.0; }, lo, hi)
                                  : gk_integrate([&](double s) { return f(s) * s; }, lo, hi);
        outer[i] = outer[i + 1] + seg;
    }

    for (std::size_t k = 0; k < r_eval.size(); ++k) {
        double const r = r_eval[k];
        double const rc = std::min(r, support);
        auto const idx = static_cast<std::size_t>(std::lower_bound(pts.begin(), pts.end(), rc) - pts.begin());
        if (n == 2) {
            double const near = r > 0.0 ? -std::log(r) * inner_1[idx] : 0.0;
            out[k] = near - outer[idx];
        } else {
            double const near = r > 0.0 ? std::pow(r, 2 - n) * inner_w[idx] : 0.0;
            out[k] = (near + outer[idx]) / static_cast<double>(n - 2);
        }
    }
    return out;
}

CheckReport potential_consistency(const GroundState& ground, const CheckTolerances& tol)
{
    const Trajectory& traj = ground.trajectory;
    if (traj.empty()) {
        throw std::domain_error("potential_consistency: empty ground-state trajectory");
    }
    double const p = ground.params.p;
    double const u0 = initial_height(traj);
    RadialDensity density{[&](double s) { return source_term(s < traj.r_begin() ? u0 : traj.at(s).u, p); },
                          traj.r_end()};

    constexpr std::size_t count = 400;
    std::vector<double> rs(count);
    for (std::size_t i = 0; i < count; ++i) {
        rs[i] = traj.r_end() * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    auto const w = newton_potential(density, ground.params, rs);

    double w_max = 0.0;
    for (double x : w) {
        w_max = std::max(w_max, std::abs(x));
    }
    double sup = 0.0;
    double sup_at = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        double const v = rs[i] == 0.0 ? 0.0 : traj.at(std::max(rs[i], traj.r_begin())).v;
        double const d = std::abs(v + (w[i] - w[0]));
        if (d > sup) {
            sup = d;
            sup_at = rs[i];
        }
    }
    double const bound = tol.potential_rel * w_max;
    auto rep = make_report("potential_consistency", bound - sup, 0.0, sup_at,
                           "sup |V - V(0) + W - W(0)| = " + fmt(sup) + ", max|W| = " + fmt(w_max) +
                               " [violation = allowance - deviation]");
    return rep;
}

namespace {

PhysicalScaling scaling_for(double v_inf, double p, double lambda, double gamma)
{
    if (!(v_inf - 1.0 > 1e-12)) {
        throw std::domain_error("to_physical: v_inf = " + fmt(v_inf) + " does not exceed 1");
    }
    PhysicalScaling s;
    s.lambda = lambda;
    s.gamma = gamma;
    s.sigma = std::sqrt(lambda / (v_inf - 1.0));
    double const sigma2 = s.sigma * s.sigma;
    s.b_scale = gamma / sigma2;
    s.a_scale = std::pow(s.b_scale / sigma2, 1.0 / p);
    s.v_lambda_0 = -v_inf / s.b_scale;
    return s;
}

} // namespace

PhysicalScaling physical_scaling(const GroundState& ground, double lambda, double gamma)
{
    if (ground.params.dim < 3) {
        throw std::domain_error("N=2 transform unsupported: the logarithmic potential has no vanishing normalization");
    }
    if (!(lambda > 0.0) || !(gamma > 0.0)) {
        throw std::invalid_argument("to_physical: lambda and gamma must be positive");
    }
    if (!ground.v_inf || !ground.v_inf->finite) {
        throw std::domain_error("to_physical: ground state has no finite v_inf estimate (" + ground.tail_note + ")");
    }
    return scaling_for(ground.v_inf->value, ground.params.p, lambda, gamma);
}

PhysicalSolution to_physical(const GroundState& ground, double lambda, double gamma, double grid_density)
{
    PhysicalSolution out;
    out.params = ground.params;
    physical_scaling(ground, lambda, gamma);
    if (!(grid_density > 0.0)) {
        throw std::invalid_argument("to_physical: grid density must be positive");
    }

    double const u0 = initial_height(ground.trajectory);
    double const r_end = ground.trajectory.r_end();
    double const spacing = 1.0 / grid_density;
    StepControls fine;
    fine.rtol = 1e-12;
    fine.atol = 1e-15;
    fine.h_max = spacing;
    fine.h_init = std::min(1e-4, spacing);
    fine.max_steps = static_cast<std::size_t>(4.0 * r_end * grid_density) + 10000;
    Trajectory const canon = integrate(series_start(u0, ground.params), ground.params, fine, {}, r_end);
    if (canon.stop != StopReason::r_max) {
        throw SolverError("to_physical", "fine re-integration stopped early (" + to_string(canon.stop) + ")");
    }
    out.scaling = scaling_for(estimate_vinf(canon, ground.params).value, ground.params.p, lambda, gamma);

    auto const& sc = out.scaling;
    auto const count = static_cast<std::size_t>(std::floor(r_end * grid_density)) + 1;
    out.r.reserve(count);
    out.u.reserve(count);
    out.v.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        double const rho = static_cast<double>(i) * spacing;
        double uc = u0;
        double vc = 0.0;
        if (rho > 0.0) {
            auto const s = canon.at(std::clamp(rho, canon.r_begin(), canon.r_end()));
            uc = s.u;
            vc = s.v;
        }
        out.r.push_back(rho / sc.sigma);
        out.u.push_back(uc / sc.a_scale);
        out.v.push_back(vc / sc.b_scale + sc.v_lambda_0);
    }
    return out;
}

CanonicalSamples to_canonical(const PhysicalSolution& physical)
{
    auto const& sc = physical.scaling;
    CanonicalSamples out;
    out.rho.reserve(physical.r.size());
    out.u.reserve(physical.r.size());
    out.v.reserve(physical.r.size());
    for (std::size_t i = 0; i < physical.r.size(); ++i) {
        out.rho.push_back(sc.sigma * physical.r[i]);
        out.u.push_back(sc.a_scale * physical.u[i]);
        out.v.push_back(sc.b_scale * (physical.v[i] - sc.v_lambda_0));
    }
    return out;
}

PdeResidual pde_residual(const std::vector<double>& r,
                         const std::vector<double>& u,
                         double lambda,
                         double gamma,
                         const SystemParams& params)
{
    params.validate();
    if (params.dim < 3) {
        throw std::domain_error("pde_residual: requires N >= 3");
    }
    if (r.size() != u.size()) {
        throw std::invalid_argument("pde_residual: r and u sizes differ");
    }
    std::size_t const n = r.size();
    std::size_t const last = n >= 10 ? static_cast<std::size_t>(std::floor(0.9 * static_cast<double>(n))) : 0;
    if (n < 5 || last < 3 || last - 2 < 200) {
        throw std::domain_error("pde_residual: grid too coarse (fewer than 200 points in the window)");
    }
    double const h = r[1] - r[0];
    if (r[0] != 0.0 || !(h > 0.0)) {
        throw std::invalid_argument("pde_residual: grid must be uniform and start at r = 0");
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (std::abs(r[i] - static_cast<double>(i) * h) > 1e-9 * h * static_cast<double>(i)) {
            throw std::invalid_argument("pde_residual: grid is not uniform");
        }
    }

    PdeResidual out;
    out.window_points = last - 2;

    double scale = 0.0;
    for (double x : u) {
        scale = std::max(scale, std::abs(lambda * x));
    }

    UniformInterpolant const interp(r, u);
    double decay = 0.0;
    if (u[n - 1] > 0.0 && u[n - 2] > u[n - 1]) {
        decay = std::log(u[n - 2] / u[n - 1]) / h;
    }
    double const r_last = r.back();
    double const u_last = u[n - 1];
    RadialDensity density{[&](double s) { return source_term(interp(s), params.p); }, r_last};
    if (decay > 0.0) {
        // exponential continuation past the grid
        density.f = [&, decay, r_last, u_last](double s) {
            return source_term(s <= r_last ? interp(s) : u_last * std::exp(-decay * (s - r_last)), params.p);
        };
        density.support = std::numeric_limits<double>::infinity();
    }
    std::vector<double> r_win(r.begin() + 2, r.begin() + static_cast<std::ptrdiff_t>(last));
    auto const w = newton_potential(density, params, r_win);

    double const nm1 = params.radial_coeff();
    double const h2 = h * h;
    for (std::size_t k = 0; k < r_win.size(); ++k) {
        std::size_t const i = k + 2;
        double const upp = (-u[i + 2] + 16.0 * u[i + 1] - 30.0 * u[i] + 16.0 * u[i - 1] - u[i - 2]) / (12.0 * h2);
        double const up = (-u[i + 2] + 8.0 * u[i + 1] - 8.0 * u[i - 1] + u[i - 2]) / (12.0 * h);
        double const lap = upp + nm1 / r[i] * up;
        double const res = std::abs(-lap + lambda * u[i] - gamma * w[k] * u[i]);
        if (res > out.absolute) {
            out.absolute = res;
            out.location = r[i];
        }
    }
    out.relative = scale > 0.0 ? out.absolute / scale : 0.0;
    return out;
}

} // namespace choquard
