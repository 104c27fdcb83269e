#pragma once

// Run configuration: YAML schema, validation, model construction and
// artifact fingerprints.

#include "mereye/eye.hpp"
#include "mereye/system.hpp"
#include "mereye/waveform.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mereye::cli {

enum class SystemKind { NonlinearLink, LtiFir, IdealWire };

struct SystemConfig {
    SystemKind kind = SystemKind::NonlinearLink;
    double z0_ohms = 50.0;
    double load_ohms = 200.0;
    double line_delay_s = 5e-9;
    double loss_alpha = 0.8;
    TransferKind driver_transfer = TransferKind::Tanh;
    double driver_gain = 3.0;
    double slew_v_per_s = 5e8;
    double v_low = 0.0;
    double v_high = 5.0;
    int fir_span_ui = 3;
    double fir_main_tap = 0.6;
};

struct SignalConfig {
    double period_s = 20e-9;
    int samples_per_ui = 200;
    [[nodiscard]] double dt() const noexcept { return period_s / samples_per_ui; }
};

enum class ModeChoice { Auto, Exhaustive, MonteCarlo };

struct AnalysisConfig {
    double threshold_frac = 0.01;
    double cutoff_threshold_frac = 0.005;
    double oversample = 3.0;
    int max_m = 12;
    std::size_t max_seqs_per_m = 256;
    int tx_points = 21;
    std::uint64_t seed = 1;
    ModeChoice mode = ModeChoice::Auto;
    std::size_t mc_samples = 100000;
    std::size_t exhaustive_budget = 2'000'000;
    std::size_t tensor_budget = 10000;
    std::size_t max_simulations = 5'000'000;
    std::size_t n_bits = 100000;
    std::size_t warmup_bits = 16;
    std::size_t phase_bins = 200;
    std::size_t voltage_bins = 256;
    std::optional<double> v_min;  ///< unset: derived from the received levels
    std::optional<double> v_max;
    double mass_floor = 1e-9;
};

struct OutputConfig {
    std::filesystem::path directory = "out";
    bool csv = true;
    bool pgm = true;
};

struct RunConfig {
    SystemConfig system;
    SignalConfig signal;
    JitterSpec jitter;
    AnalysisConfig analysis;
    OutputConfig output;

    void validate() const;
};

/// Parses YAML text. Unknown sections or keys and ill-typed values raise
/// ConfigError.
[[nodiscard]] RunConfig parse_config(const std::string& yaml_text);
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);

[[nodiscard]] DriverStage driver_stage(const RunConfig& cfg);
[[nodiscard]] std::shared_ptr<const SystemModel> make_system(const RunConfig& cfg);
/// System model, edge templates from its driver, and the estimated delay.
[[nodiscard]] ResponseContext make_context(const RunConfig& cfg);
[[nodiscard]] EyeBins eye_bins(const RunConfig& cfg, const ReceivedLevels& levels);

enum class Artifact { EdgeTemplates, Orders, Plan, MerModel };

/// 64-bit FNV-1a over the normalized text of the config fields that an
/// artifact depends on. Each artifact includes the inputs of its parents.
[[nodiscard]] std::uint64_t fingerprint(const RunConfig& cfg, Artifact artifact);
[[nodiscard]] std::string fingerprint_hex(std::uint64_t fp);
/// Canonical `key = value` text the fingerprint hashes.
[[nodiscard]] std::string normalized_subtree(const RunConfig& cfg, Artifact artifact);

}  // namespace mereye::cli
