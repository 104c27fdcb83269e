#pragma once

// Pipeline commands behind the mereye subcommands.

#include "config.hpp"

#include "mereye/eye.hpp"
#include "mereye/mer.hpp"
#include "mereye/orders.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>

namespace mereye::cli {

struct Invocation {
    RunConfig config;
    std::filesystem::path out;  ///< output directory
    int jobs = 1;
    std::optional<std::filesystem::path> cache;
    std::ostream* log = nullptr;  ///< progress messages; null silences them
};

/// Builds an invocation from a config file plus command-line overrides.
[[nodiscard]] Invocation make_invocation(const std::filesystem::path& config_path,
                                         const std::optional<std::filesystem::path>& out,
                                         const std::optional<std::uint64_t>& seed, int jobs,
                                         const std::optional<std::filesystem::path>& cache,
                                         std::ostream* log);

struct OrdersOutcome {
    OrderResult be;
    OrderResult je;
    ResponseRequirement requirement;
    bool cache_hit = false;
};

/// orders_be.csv, orders_je.csv and orders_summary.txt.
OrdersOutcome cmd_orders(const Invocation& inv);

/// plan.csv from the orders summary at `orders_summary` (default:
/// <out>/orders_summary.txt).
SamplingPlan cmd_plan(const Invocation& inv, const std::optional<std::filesystem::path>& orders_summary);

struct EyeOutcome {
    EyeDensity density;
    EyeMetrics metrics;
    AssemblyMode mode = AssemblyMode::MonteCarlo;
    int m_b = 0;
    int m_j = 0;
    std::size_t simulations = 0;
    bool model_cache_hit = false;
};

/// Full MER pipeline: eye_density.csv, eye.pgm, eye_metrics.txt, eye_run.txt.
EyeOutcome cmd_eye(const Invocation& inv);

/// Brute-force transient eye: transient_density.csv, transient.pgm,
/// transient_metrics.txt.
EyeOutcome cmd_transient(const Invocation& inv);

/// comparison.txt in `out` from two metric reports.
ComparisonReport cmd_compare(const std::filesystem::path& reference, const std::filesystem::path& candidate,
                             const std::filesystem::path& out);

/// Parses argv and runs one subcommand. Returns the process exit code:
/// 0 success, 2 configuration error, 3 convergence or budget error, 4 I/O error.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace mereye::cli
