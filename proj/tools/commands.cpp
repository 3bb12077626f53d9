#include "commands.hpp"

#include "config.hpp"
#include "suite.hpp"

#include "choquard/analyze.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>

#ifndef CHOQUARD_VERSION
#define CHOQUARD_VERSION "0.0.0"
#endif

namespace choquard::cli {

namespace {

using Json = nlohmann::ordered_json;

const std::string version_string = std::string("choquard ") + CHOQUARD_VERSION;

class IoError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

std::string g17(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

Json number(double x)
{
    return std::isfinite(x) ? Json(x) : Json(nullptr);
}

Json state_json(const OdeState& s)
{
    return Json{{"r", s.r}, {"u", s.u}, {"up", s.up}, {"v", s.v}, {"vp", s.vp}};
}

Json envelope(const RunConfig& cfg, const std::string& command)
{
    Json j;
    j["version"] = version_string;
    j["command"] = command;
    j["config"] = to_json(cfg);
    return j;
}

void csv_preamble(std::ostream& os, const RunConfig& cfg, const std::string& command)
{
    os << "# " << version_string << '\n';
    os << "# command: " << command << '\n';
    os << "# config: " << to_line(cfg) << '\n';
}

void write_output(const RunConfig& cfg, const std::function<void(std::ostream&)>& body)
{
    if (cfg.output == "-") {
        body(std::cout);
        std::cout.flush();
        if (!std::cout) {
            throw IoError("failed writing to stdout");
        }
        return;
    }
    std::ofstream file(cfg.output, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw IoError("cannot open output file '" + cfg.output + "'");
    }
    body(file);
    file.close();
    if (!file) {
        throw IoError("failed writing output file '" + cfg.output + "'");
    }
}

std::string format_or(const RunConfig& cfg, const char* fallback)
{
    return cfg.format.empty() ? fallback : cfg.format;
}

Json ground_json(const GroundState& g)
{
    Json r;
    r["u0_star"] = g.u0_star;
    r["bracket"] = Json{{"lo", g.bracket.lo}, {"hi", g.bracket.hi}};
    r["bracket_width"] = g.bracket_width;
    r["iterations"] = g.iterations;
    r["r_event_lo"] = g.r_event_lo;
    r["r_envelope"] = g.r_envelope;
    r["r_end"] = g.trajectory.r_end();
    if (g.v_inf) {
        r["v_inf"] = number(g.v_inf->value);
        r["v_inf_finite"] = g.v_inf->finite;
        r["mass"] = g.v_inf->mass;
        r["v_inf_radius"] = g.v_inf->radius;
    } else {
        r["v_inf"] = nullptr;
        r["v_inf_finite"] = false;
    }
    if (g.decay) {
        r["decay_k"] = g.decay->k;
        r["decay_log_coeff"] = g.decay->log_coeff;
        r["decay_window"] = Json{{"r_from", g.decay->r_from}, {"r_to", g.decay->r_to}};
    } else {
        r["decay_k"] = nullptr;
    }
    r["tail_note"] = g.tail_note;
    return r;
}

int cmd_solve(const RunConfig& cfg)
{
    auto const g = solve_ground_state(cfg.params, cfg.controls, cfg.bisection());
    auto const& t = g.trajectory;
    auto const rows = t.sample(t.r_begin(), t.r_end(), cfg.samples);
    if (format_or(cfg, "json") == "csv") {
        write_output(cfg, [&](std::ostream& os) {
            csv_preamble(os, cfg, "solve");
            os << "# u0_star: " << g17(g.u0_star) << '\n';
            os << "# bracket_width: " << g17(g.bracket_width) << '\n';
            os << "# v_inf: " << (g.v_inf ? g17(g.v_inf->value) : "nan") << '\n';
            os << "# decay_k: " << (g.decay ? g17(g.decay->k) : "nan") << '\n';
            os << "r,u,up,v,vp\n";
            for (auto const& s : rows) {
                os << g17(s.r) << ',' << g17(s.u) << ',' << g17(s.up) << ',' << g17(s.v) << ',' << g17(s.vp) << '\n';
            }
        });
        return exit_ok;
    }
    Json j = envelope(cfg, "solve");
    j["ground_state"] = ground_json(g);
    Json traj = Json::array();
    for (auto const& s : rows) {
        traj.push_back(Json::array({s.r, s.u, s.up, s.v, s.vp}));
    }
    j["trajectory"] = Json{{"columns", {"r", "u", "up", "v", "vp"}}, {"rows", traj}};
    write_output(cfg, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    return exit_ok;
}

int cmd_classify(const RunConfig& cfg)
{
    if (!(cfg.u0 > 0.0)) {
        throw ConfigError("u0 must be positive, got " + g17(cfg.u0));
    }
    auto const c = classify(cfg.u0, cfg.params, cfg.controls, cfg.policy);
    bool const certified = c.tag == Verdict::in_p && certify_p_side(c, cfg.controls);
    if (format_or(cfg, "json") == "csv") {
        write_output(cfg, [&](std::ostream& os) {
            csv_preamble(os, cfg, "classify");
            os << "u0,tag,r_event,r_explored,u,up,v,vp\n";
            auto const& s = c.event_state;
            os << g17(c.u0) << ',' << to_string(c.tag) << ',' << g17(c.r_event) << ',' << g17(c.r_explored) << ','
               << g17(s.u) << ',' << g17(s.up) << ',' << g17(s.v) << ',' << g17(s.vp) << '\n';
        });
    } else {
        Json j = envelope(cfg, "classify");
        Json r;
        r["u0"] = c.u0;
        r["tag"] = to_string(c.tag);
        r["r_event"] = c.r_event;
        r["r_explored"] = c.r_explored;
        r["event_state"] = state_json(c.event_state);
        r["certified"] = certified;
        r["note"] = c.note;
        j["classification"] = r;
        write_output(cfg, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    }
    return c.tag == Verdict::undetermined ? exit_undetermined : exit_ok;
}

int cmd_sweep(const RunConfig& cfg)
{
    auto const grid = sweep_grid(cfg);
    for (double u : grid) {
        if (!(u > 0.0)) {
            throw ConfigError("sweep heights must be positive, got " + g17(u));
        }
    }
    auto const out = sweep(grid, cfg.params, cfg.controls, cfg.policy);
    if (format_or(cfg, "csv") == "csv") {
        write_output(cfg, [&](std::ostream& os) {
            csv_preamble(os, cfg, "sweep");
            os << "u0,tag,r_event\n";
            for (auto const& c : out) {
                os << g17(c.u0) << ',' << to_string(c.tag) << ',' << g17(c.r_event) << '\n';
            }
        });
    } else {
        Json j = envelope(cfg, "sweep");
        Json rows = Json::array();
        for (auto const& c : out) {
            rows.push_back(Json{{"u0", c.u0}, {"tag", to_string(c.tag)}, {"r_event", c.r_event}, {"note", c.note}});
        }
        j["classifications"] = rows;
        write_output(cfg, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    }
    return exit_ok;
}

std::string status(const CheckReport& c)
{
    return c.skipped ? "SKIPPED" : (c.passed ? "PASS" : "FAIL");
}

int cmd_verify(const RunConfig& cfg)
{
    auto const suite = run_suite(cfg);
    if (format_or(cfg, "json") == "csv") {
        write_output(cfg, [&](std::ostream& os) {
            csv_preamble(os, cfg, "verify");
            os << "# u0_star: " << g17(suite.ground->u0_star) << '\n';
            os << "name,status,worst_violation,tolerance,location\n";
            for (auto const& c : suite.checks) {
                os << c.name << ',' << status(c) << ',' << g17(c.worst_violation) << ',' << g17(c.tolerance) << ','
                   << g17(c.location) << '\n';
            }
        });
    } else {
        Json j = envelope(cfg, "verify");
        j["u0_star"] = suite.ground->u0_star;
        j["all_passed"] = suite.all_passed;
        Json checks = Json::array();
        for (auto const& c : suite.checks) {
            checks.push_back(Json{{"name", c.name},
                                  {"status", status(c)},
                                  {"worst_violation", number(c.worst_violation)},
                                  {"tolerance", c.tolerance},
                                  {"location", number(c.location)},
                                  {"details", c.details}});
        }
        j["checks"] = checks;
        write_output(cfg, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    }
    return suite.all_passed ? exit_ok : exit_verification;
}

int cmd_transform(const RunConfig& cfg)
{
    if (cfg.params.dim == 2) {
        throw ConfigError("N=2 transform unsupported");
    }
    if (!(cfg.lambda > 0.0) || !(cfg.gamma > 0.0)) {
        throw ConfigError("lambda and gamma must be positive");
    }
    if (!(cfg.density > 0.0)) {
        throw ConfigError("density must be positive");
    }
    auto const g = solve_ground_state(cfg.params, cfg.controls, cfg.bisection());
    auto const ph = to_physical(g, cfg.lambda, cfg.gamma, cfg.density);
    auto const& s = ph.scaling;
    if (format_or(cfg, "csv") == "csv") {
        write_output(cfg, [&](std::ostream& os) {
            csv_preamble(os, cfg, "transform");
            os << "# scaling: lambda=" << g17(s.lambda) << " gamma=" << g17(s.gamma) << " sigma=" << g17(s.sigma)
               << " a_scale=" << g17(s.a_scale) << " b_scale=" << g17(s.b_scale) << " v_lambda_0=" << g17(s.v_lambda_0)
               << '\n';
            os << "# u0_star: " << g17(g.u0_star) << '\n';
            os << "r,u_lambda,v_lambda\n";
            for (std::size_t i = 0; i < ph.r.size(); ++i) {
                os << g17(ph.r[i]) << ',' << g17(ph.u[i]) << ',' << g17(ph.v[i]) << '\n';
            }
        });
    } else {
        Json j = envelope(cfg, "transform");
        j["scaling"] = Json{{"lambda", s.lambda},   {"gamma", s.gamma},     {"sigma", s.sigma},
                            {"a_scale", s.a_scale}, {"b_scale", s.b_scale}, {"v_lambda_0", s.v_lambda_0}};
        j["u0_star"] = g.u0_star;
        Json rows = Json::array();
        for (std::size_t i = 0; i < ph.r.size(); ++i) {
            rows.push_back(Json::array({ph.r[i], ph.u[i], ph.v[i]}));
        }
        j["profile"] = Json{{"columns", {"r", "u_lambda", "v_lambda"}}, {"rows", rows}};
        write_output(cfg, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    }
    return exit_ok;
}

const std::map<std::string, std::string>& key_help()
{
    static const std::map<std::string, std::string> help = {
        {"dim", "space dimension N (>= 2)"},
        {"p", "nonlinearity exponent p in [1, 2]"},
        {"rtol", "integrator relative tolerance"},
        {"atol", "integrator absolute tolerance"},
        {"h_init", "initial step size"},
        {"h_max", "largest step size"},
        {"max_steps", "step budget per integration"},
        {"tol", "bisection bracket width"},
        {"max_iterations", "bisection iteration cap"},
        {"r_max", "initial explored radius"},
        {"r_cap", "largest explored radius"},
        {"format", "csv or json"},
        {"output", "output path, '-' for stdout"},
        {"seed", "seed for verify's random pairs"},
        {"pairs", "number of wronskian pairs in verify"},
        {"samples", "trajectory samples written by solve"},
        {"u0", "initial height for classify"},
        {"lambda", "physical lambda for transform"},
        {"gamma", "physical gamma for transform"},
        {"density", "transform grid points per unit canonical radius"},
        {"grid", "sweep grid: linear or log"},
        {"from", "sweep lower end"},
        {"to", "sweep upper end"},
        {"step", "linear sweep spacing"},
        {"count", "number of sweep points (overrides step)"},
    };
    return help;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& err)
{
    CLI::App app{"Shooting solver for the radial Choquard ground state", "choquard"};
    app.set_version_flag("--version", version_string);
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "key = value config file; flags override it");

    std::map<std::string, std::string> flags;
    for (auto const& key : config_keys()) {
        std::string name = key;
        std::replace(name.begin(), name.end(), '_', '-');
        auto it = key_help().find(key);
        app.add_option("--" + name, flags[key], it == key_help().end() ? "" : it->second);
    }

    std::map<std::string, std::function<int(const RunConfig&)>> commands = {
        {"solve", cmd_solve},   {"classify", cmd_classify},   {"sweep", cmd_sweep},
        {"verify", cmd_verify}, {"transform", cmd_transform},
    };
    std::map<std::string, std::string> about = {
        {"solve", "find u0* by bisection and write the ground state"},
        {"classify", "classify one initial height (--u0)"},
        {"sweep", "classify a grid of heights"},
        {"verify", "run every numerical check for (N, p)"},
        {"transform", "map the ground state to physical (lambda, gamma)"},
    };
    for (auto const& [name, fn] : commands) {
        app.add_subcommand(name, about[name]);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int const code = app.exit(e, std::cout, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    RunConfig cfg;
    try {
        if (!config_path.empty()) {
            apply_config_file(cfg, config_path);
        }
        for (auto const& key : config_keys()) {
            std::string name = key;
            std::replace(name.begin(), name.end(), '_', '-');
            if (app.count("--" + name) > 0) {
                apply_setting(cfg, key, flags[key]);
            }
        }
        cfg.validate();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }

    std::string const name = app.get_subcommands().front()->get_name();
    try {
        return commands.at(name)(cfg);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const SolverError& e) {
        err << "solver failure in " << e.what() << '\n';
        return exit_solver;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return exit_io;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_io;
    }
}

} // namespace choquard::cli
