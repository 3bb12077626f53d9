#pragma once

#include "choquard/analyze.hpp"
#include "choquard/classify.hpp"
#include "choquard/integrate.hpp"
#include "choquard/model.hpp"
#include "choquard/shoot.hpp"

#include <json.hpp>

#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

namespace choquard::cli {

/// Bad flag or config value. `line` is the config-file line (0 for flags).
class ConfigError : public std::runtime_error
{
public:
    ConfigError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(what)
        , line_(line)
    {
    }

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct RunConfig
{
    SystemParams params;
    StepControls controls;
    double tol = 1e-10;
    std::size_t max_iterations = 200;
    RMaxPolicy policy;
    std::string format; // csv | json; empty picks the command's default
    std::string output = "-";
    std::uint64_t seed = 1;
    std::size_t pairs = 20;
    std::size_t samples = 1000;

    // classify
    double u0 = 0.0;
    // transform
    double lambda = 1.0;
    double gamma = 1.0;
    double density = default_grid_density;
    // sweep
    std::string grid = "linear";
    double from = 0.05;
    double to = 0.24;
    double step = 0.01;
    std::size_t count = 0; // 0 with grid=linear means "use step"

    /// Throws ConfigError when a field is outside its valid range.
    void validate() const;
    BisectionOptions bisection() const;
};

/// Keys accepted in config files and, with '-' for '_', as long flags.
const std::vector<std::string>& config_keys();

/// Sets one field from its text form. Throws ConfigError on unknown keys or malformed values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value, std::size_t line = 0);

/// `key = value` lines; '#' starts a comment; blank lines ignored.
void apply_config_stream(RunConfig& cfg, std::istream& in);
void apply_config_file(RunConfig& cfg, const std::string& path);

nlohmann::ordered_json to_json(const RunConfig& cfg);

/// Single-line `key=value key=value ...` form of the resolved config.
std::string to_line(const RunConfig& cfg);

/// Grid of u0 values for sweep; empty when count is 0 or from > to.
std::vector<double> sweep_grid(const RunConfig& cfg);

} // namespace choquard::cli
