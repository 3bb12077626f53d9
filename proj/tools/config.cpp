#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace choquard::cli {

namespace {

std::string where(std::size_t line) { return line > 0 ? "line " + std::to_string(line) + ": " : ""; }

std::string shortest(double x)
{
    char buf[64];
    auto const res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

double to_double(const std::string& key, const std::string& text, std::size_t line)
{
    double x = 0.0;
    auto const* end = text.data() + text.size();
    auto const res = std::from_chars(text.data(), end, x);
    if (res.ec != std::errc{} || res.ptr != end || !std::isfinite(x)) {
        throw ConfigError(where(line) + key + ": expected a finite number, got '" + text + "'", line);
    }
    return x;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& text, std::size_t line)
{
    std::uint64_t x = 0;
    auto const* end = text.data() + text.size();
    auto const res = std::from_chars(text.data(), end, x);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw ConfigError(where(line) + key + ": expected a nonnegative integer, got '" + text + "'", line);
    }
    return x;
}

std::string trim(const std::string& s)
{
    auto const a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) {
        return "";
    }
    auto const b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

using Setter = std::function<void(RunConfig&, const std::string&, std::size_t)>;

const std::vector<std::pair<std::string, Setter>>& setters()
{
    auto num = [](const char* key, double RunConfig::*field) -> Setter {
        return [key, field](RunConfig& c, const std::string& v, std::size_t line) { c.*field = to_double(key, v, line); };
    };
    static const std::vector<std::pair<std::string, Setter>> table = {
        {"dim",
         [](RunConfig& c, const std::string& v, std::size_t l) {
             auto const n = to_unsigned("dim", v, l);
             c.params.dim = static_cast<int>(std::min<std::uint64_t>(n, 1000));
         }},
        {"p", [](RunConfig& c, const std::string& v, std::size_t l) { c.params.p = to_double("p", v, l); }},
        {"rtol", [](RunConfig& c, const std::string& v, std::size_t l) { c.controls.rtol = to_double("rtol", v, l); }},
        {"atol", [](RunConfig& c, const std::string& v, std::size_t l) { c.controls.atol = to_double("atol", v, l); }},
        {"h_init",
         [](RunConfig& c, const std::string& v, std::size_t l) { c.controls.h_init = to_double("h_init", v, l); }},
        {"h_max", [](RunConfig& c, const std::string& v, std::size_t l) { c.controls.h_max = to_double("h_max", v, l); }},
        {"max_steps",
         [](RunConfig& c, const std::string& v, std::size_t l) { c.controls.max_steps = to_unsigned("max_steps", v, l); }},
        {"tol", num("tol", &RunConfig::tol)},
        {"max_iterations",
         [](RunConfig& c, const std::string& v, std::size_t l) { c.max_iterations = to_unsigned("max_iterations", v, l); }},
        {"r_max",
         [](RunConfig& c, const std::string& v, std::size_t l) { c.policy.r_initial = to_double("r_max", v, l); }},
        {"r_cap", [](RunConfig& c, const std::string& v, std::size_t l) { c.policy.r_cap = to_double("r_cap", v, l); }},
        {"format", [](RunConfig& c, const std::string& v, std::size_t) { c.format = v; }},
        {"output", [](RunConfig& c, const std::string& v, std::size_t) { c.output = v; }},
        {"seed", [](RunConfig& c, const std::string& v, std::size_t l) { c.seed = to_unsigned("seed", v, l); }},
        {"pairs", [](RunConfig& c, const std::string& v, std::size_t l) { c.pairs = to_unsigned("pairs", v, l); }},
        {"samples", [](RunConfig& c, const std::string& v, std::size_t l) { c.samples = to_unsigned("samples", v, l); }},
        {"u0", num("u0", &RunConfig::u0)},
        {"lambda", num("lambda", &RunConfig::lambda)},
        {"gamma", num("gamma", &RunConfig::gamma)},
        {"density", num("density", &RunConfig::density)},
        {"grid", [](RunConfig& c, const std::string& v, std::size_t) { c.grid = v; }},
        {"from", num("from", &RunConfig::from)},
        {"to", num("to", &RunConfig::to)},
        {"step", num("step", &RunConfig::step)},
        {"count", [](RunConfig& c, const std::string& v, std::size_t l) { c.count = to_unsigned("count", v, l); }},
    };
    return table;
}

} // namespace

void RunConfig::validate() const
{
    try {
        params.validate();
        controls.validate();
        policy.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (!(tol > 0.0)) {
        throw ConfigError("tol must be positive");
    }
    if (max_iterations < 1) {
        throw ConfigError("max_iterations must be >= 1");
    }
    if (!format.empty() && format != "csv" && format != "json") {
        throw ConfigError("format must be csv or json, got '" + format + "'");
    }
    if (output.empty()) {
        throw ConfigError("output path is empty");
    }
    if (samples < 2) {
        throw ConfigError("samples must be >= 2");
    }
    if (grid != "linear" && grid != "log") {
        throw ConfigError("grid must be linear or log, got '" + grid + "'");
    }
}

BisectionOptions RunConfig::bisection() const
{
    BisectionOptions o;
    o.tol = tol;
    o.max_iterations = max_iterations;
    o.policy = policy;
    return o;
}

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (auto const& [name, fn] : setters()) {
            k.push_back(name);
        }
        return k;
    }();
    return keys;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value, std::size_t line)
{
    std::string k = key;
    std::replace(k.begin(), k.end(), '-', '_');
    for (auto const& [name, fn] : setters()) {
        if (name == k) {
            fn(cfg, value, line);
            return;
        }
    }
    throw ConfigError(where(line) + "unknown key '" + key + "'", line);
}

void apply_config_stream(RunConfig& cfg, std::istream& in)
{
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        auto const hash = raw.find('#');
        std::string const text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (text.empty()) {
            continue;
        }
        auto const eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(where(line) + "expected key = value, got '" + text + "'", line);
        }
        std::string const key = trim(text.substr(0, eq));
        std::string const value = trim(text.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError(where(line) + "expected key = value, got '" + text + "'", line);
        }
        apply_setting(cfg, key, value, line);
    }
}

void apply_config_file(RunConfig& cfg, const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    try {
        apply_config_stream(cfg, in);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what(), e.line());
    }
}

nlohmann::ordered_json to_json(const RunConfig& cfg)
{
    nlohmann::ordered_json j;
    j["dim"] = cfg.params.dim;
    j["p"] = cfg.params.p;
    j["rtol"] = cfg.controls.rtol;
    j["atol"] = cfg.controls.atol;
    j["h_init"] = cfg.controls.h_init;
    j["h_max"] = cfg.controls.h_max;
    j["max_steps"] = cfg.controls.max_steps;
    j["tol"] = cfg.tol;
    j["max_iterations"] = cfg.max_iterations;
    j["r_max"] = cfg.policy.r_initial;
    j["r_cap"] = cfg.policy.r_cap;
    j["format"] = cfg.format;
    j["output"] = cfg.output;
    j["seed"] = cfg.seed;
    j["pairs"] = cfg.pairs;
    j["samples"] = cfg.samples;
    j["u0"] = cfg.u0;
    j["lambda"] = cfg.lambda;
    j["gamma"] = cfg.gamma;
    j["density"] = cfg.density;
    j["grid"] = cfg.grid;
    j["from"] = cfg.from;
    j["to"] = cfg.to;
    j["step"] = cfg.step;
    j["count"] = cfg.count;
    return j;
}

std::string to_line(const RunConfig& cfg)
{
    std::ostringstream os;
    bool first = true;
    auto const j = to_json(cfg);
    for (auto const& [key, value] : j.items()) {
        os << (first ? "" : " ") << key << '=';
        if (value.is_string()) {
            os << value.get<std::string>();
        } else if (value.is_number_float()) {
            os << shortest(value.get<double>());
        } else {
            os << value.dump();
        }
        first = false;
    }
    return os.str();
}

std::vector<double> sweep_grid(const RunConfig& cfg)
{
    std::vector<double> out;
    if (cfg.from > cfg.to) {
        return out;
    }
    if (cfg.grid == "log") {
        if (!(cfg.from > 0.0)) {
            throw ConfigError("log grid needs from > 0");
        }
        if (cfg.count == 1) {
            out.push_back(cfg.from);
        }
        for (std::size_t i = 0; cfg.count > 1 && i < cfg.count; ++i) {
            double const t = static_cast<double>(i) / static_cast<double>(cfg.count - 1);
            out.push_back(i + 1 == cfg.count ? cfg.to : cfg.from * std::pow(cfg.to / cfg.from, t));
        }
        return out;
    }
    if (cfg.count > 0) {
        for (std::size_t i = 0; i < cfg.count; ++i) {
            double const t = cfg.count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(cfg.count - 1);
            out.push_back(cfg.from + t * (cfg.to - cfg.from));
        }
        return out;
    }
    if (!(cfg.step > 0.0)) {
        throw ConfigError("linear grid needs step > 0 or count > 0");
    }
    for (std::size_t i = 0;; ++i) {
        double const u = cfg.from + static_cast<double>(i) * cfg.step;
        if (u > cfg.to + 1e-9 * cfg.step) {
            break;
        }
        out.push_back(u);
    }
    return out;
}

} // namespace choquard::cli
