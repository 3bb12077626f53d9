#pragma once

#include "config.hpp"

#include "choquard/analyze.hpp"

#include <optional>
#include <vector>

namespace choquard::cli {

struct SuiteResult
{
    std::vector<CheckReport> checks;
    std::optional<GroundState> ground;
    bool all_passed = false;
};

/// Every lemma-level check for the configured (N, p). Throws SolverError when the ground state
/// cannot be computed.
SuiteResult run_suite(const RunConfig& cfg);

} // namespace choquard::cli
