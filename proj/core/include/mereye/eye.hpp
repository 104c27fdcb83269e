#pragma once

// Statistical eye assembly from MER models, the brute-force transient eye,
// eye metrics and comparison reports.

#include "mereye/mer.hpp"
#include "mereye/orders.hpp"
#include "mereye/system.hpp"
#include "mereye/waveform.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mereye {

struct EyeBins {
    std::size_t phase_bins = 200;
    std::size_t voltage_bins = 256;
    double v_min = -2.5;
    double v_max = 7.5;

    void validate() const;
    /// [v_low - swing/2, v_high + swing/2], lowered by half a bin so that
    /// v_low and v_high fall on bin centres when voltage_bins is a multiple of 4.
    static EyeBins around(double v_low, double v_high, std::size_t phase_bins = 200,
                          std::size_t voltage_bins = 256);
    [[nodiscard]] double bin_height() const noexcept {
        return (v_max - v_min) / static_cast<double>(voltage_bins);
    }
    [[nodiscard]] double bin_width() const noexcept { return 1.0 / static_cast<double>(phase_bins); }
    [[nodiscard]] std::size_t voltage_bin(double v) const noexcept;
    bool operator==(const EyeBins&) const = default;
};

/// Phase x voltage probability grid over one UI; mass[p * voltage_bins + v].
class EyeDensity {
public:
    explicit EyeDensity(EyeBins bins);

    [[nodiscard]] const EyeBins& bins() const noexcept { return bins_; }
    [[nodiscard]] double at(std::size_t phase, std::size_t voltage) const;
    [[nodiscard]] std::span<const double> column(std::size_t phase) const;
    [[nodiscard]] std::span<const double> mass() const noexcept { return mass_; }
    [[nodiscard]] double column_sum(std::size_t phase) const;

    /// Adds `weight` to every (phase, voltage) cell visited by a window trace
    /// whose samples evenly cover [0, 1) UI.
    void deposit(std::span<const double> trace, double weight);
    void add(std::size_t phase, std::size_t voltage, double weight);
    /// Cell-wise addition; requires identical bins.
    void merge(const EyeDensity& other);
    /// Scales every non-empty column to unit mass.
    void normalize();

    bool operator==(const EyeDensity&) const = default;

private:
    EyeBins bins_;
    std::vector<double> mass_;
};

/// Integer hit counts; merging is exact and order-independent.
class EyeCounts {
public:
    explicit EyeCounts(EyeBins bins);
    void deposit(std::span<const double> trace);
    void merge(const EyeCounts& other);
    [[nodiscard]] EyeDensity normalized() const;
    [[nodiscard]] const EyeBins& bins() const noexcept { return bins_; }

private:
    EyeBins bins_;
    std::vector<std::uint64_t> counts_;
};

enum class AssemblyMode { Exhaustive, MonteCarlo };

struct AssemblyOptions {
    AssemblyMode mode = AssemblyMode::MonteCarlo;
    std::size_t samples = 100000;             ///< Monte Carlo draws
    std::uint64_t seed = 1;
    std::size_t exhaustive_budget = 2'000'000;  ///< evaluated traces
    int jobs = 1;
};

/// Folds MER traces over the sequence prior (uniform), T0 (uniform over its
/// grid) and RJ offsets (i.i.d. Gaussian truncated to the RJ range).
[[nodiscard]] EyeDensity assemble_eye(const MerModel& model, const ResponseRequirement& req,
                                      const JitterSpec& spec, const AssemblyOptions& options,
                                      const EyeBins& bins);

/// Traces exhaustive assembly would evaluate: per sequence, the RJ grid
/// raised to the number of jittered edges, times the T0 grid when PJ is on.
[[nodiscard]] std::size_t exhaustive_traces(const MerModel& model, const JitterSpec& spec);

/// Equal-weight eye over every required sequence with no jitter, simulated
/// directly.
[[nodiscard]] EyeDensity no_jitter_eye(const ResponseContext& ctx, const ResponseRequirement& req,
                                       const EyeBins& bins, int jobs = 1);

struct TransientOptions {
    std::size_t n_bits = 100000;
    std::uint64_t seed = 1;
    std::size_t warmup_bits = 16;
};

/// One long random bit stream, edges displaced by continuous-time PJ plus
/// truncated Gaussian RJ, simulated once and folded into UI windows.
[[nodiscard]] EyeDensity transient_eye(const ResponseContext& ctx, const JitterSpec& spec,
                                       const TransientOptions& options, const EyeBins& bins);

struct EyeMetrics {
    double eye_height = 0.0;     ///< volts
    double eye_width = 0.0;      ///< UI
    double center_phase = 0.0;   ///< UI
    double threshold_voltage = 0.0;
};

/// Open cells have mass <= mass_floor. Height: longest vertical run of open
/// cells through the threshold row, over all columns (earliest column wins
/// ties; its centre is center_phase). Width: run of open cells in the
/// threshold row through that column.
[[nodiscard]] EyeMetrics eye_metrics(const EyeDensity& density, double threshold_voltage,
                                     double mass_floor = 1e-9);

struct ComparisonRow {
    std::string metric;
    double reference = 0.0;
    double candidate = 0.0;
    std::optional<double> relative_error;  ///< empty when the reference is zero
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;  ///< eye_height, eye_width
    [[nodiscard]] const ComparisonRow& row(const std::string& metric) const;
};

[[nodiscard]] ComparisonReport compare_eyes(const EyeMetrics& reference, const EyeMetrics& candidate);

struct TotalVariation {
    double mean = 0.0;  ///< mean over phase columns
    double max = 0.0;
};

/// Per-column total-variation distance 0.5 * sum |p - q|.
[[nodiscard]] TotalVariation total_variation(const EyeDensity& a, const EyeDensity& b);

}  // namespace mereye
