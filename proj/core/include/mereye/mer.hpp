#pragma once

// MER scans under PJ/RJ, cutoff detection, minimal sampling plans and
// band-limited reconstruction of the MER grids.

#include "mereye/error.hpp"
#include "mereye/orders.hpp"
#include "mereye/system.hpp"
#include "mereye/waveform.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mereye {

enum class ScanAxis { PjPhase, RjOffset };

/// Response windows recorded over one swept jitter parameter.
struct MerScan {
    BitSequence sequence;
    ScanAxis axis = ScanAxis::PjPhase;
    int rj_index = 0;  ///< swept edge index (RJ scans only)
    double t0 = 0.0;   ///< PJ phase held fixed (RJ scans only)
    std::vector<double> grid;
    std::vector<Waveform> responses;

    [[nodiscard]] std::size_t window_samples() const noexcept {
        return responses.empty() ? 0 : responses.front().size();
    }
    /// Values of window sample `i` across the grid.
    [[nodiscard]] std::vector<double> slice(std::size_t i) const;
};

/// One row per T0 grid phase; RJ zero, PJ on edges -1..m_j.
[[nodiscard]] MerScan pj_scan(const ResponseContext& ctx, const BitSequence& seq, const JitterSpec& spec,
                              int m_j, int jobs = 1);

/// Sweeps the RJ offset of edge k over the RJ grid, other offsets taken from `fixed`.
[[nodiscard]] MerScan rj_scan(const ResponseContext& ctx, const BitSequence& seq, const JitterSpec& spec,
                              const JitterAssignment& fixed, int k, int jobs = 1);

struct CutoffOptions {
    double threshold_frac = 0.01;
    double amplitude = 5.0;  ///< volts; threshold = threshold_frac * amplitude
    bool hann = false;       ///< taper before the transform (aperiodic axes)
};

/// Highest frequency whose single-sided amplitude reaches the threshold.
/// `spacing` is the axis step, so bin k sits at k / (N * spacing). Returns 0
/// when only the DC bin qualifies.
[[nodiscard]] double cutoff_frequency(std::span<const double> curve, double spacing,
                                      const CutoffOptions& options);

/// Maximum of cutoff_frequency over every window sample of the scan. The
/// Hann taper is applied on RJ scans regardless of options.hann.
[[nodiscard]] double max_cutoff(const MerScan& scan, const CutoffOptions& options);

struct PlanEntry {
    std::string axis;
    double f_cut = 0.0;  ///< 1/axis-unit (hertz for time axes)
    double f_s = 0.0;
    double t_s = 0.0;
    std::size_t num = 1;
};

/// f_s = oversample * f_cut, T_s = 1/f_s, num = ceil(span / T_s); num = 1
/// (with f_s = 0 and T_s = span) when f_cut = 0.
[[nodiscard]] PlanEntry sampling_plan(double f_cut_max, double axis_span, double oversample = 3.0,
                                      std::string axis = {});

struct SamplingPlan {
    int m_j = 0;
    PlanEntry pj;
    std::vector<PlanEntry> rj;  ///< rj[m + 1] covers edge m

    [[nodiscard]] const PlanEntry& rj_at(int m) const;
};

struct PlanOptions {
    CutoffOptions cutoff;
    double oversample = 3.0;
    int jobs = 1;
};

/// Plans from scans of the alternating sequence with oldest index m_b. RJ
/// scans hold T0 = T_PJ and the other offsets at zero. Degenerate jitter
/// collapses the affected axes to one sample without simulating.
[[nodiscard]] SamplingPlan make_sampling_plan(const ResponseContext& ctx, const JitterSpec& spec, int m_b,
                                              int m_j, const PlanOptions& options);

/// Uniform coarse grid along one axis.
struct AxisGrid {
    std::vector<double> points;
    bool periodic = false;
    double period = 0.0;  ///< periodic axes only

    /// T0 = (j + 1) * T_PJ / num.
    static AxisGrid pj(const JitterSpec& spec, std::size_t num);
    /// num points spanning [-L, +L] inclusive; a single point sits at 0.
    static AxisGrid rj(const JitterSpec& spec, std::size_t num);

    [[nodiscard]] std::size_t size() const noexcept { return points.size(); }
};

/// Interpolation weights for evaluating at x from samples on `grid`.
/// Periodic axes use the trigonometric (Dirichlet) kernel. Aperiodic axes use
/// a linear trend through the end samples plus sine-series interpolation of
/// the residual (the odd extension about each end). A single-point grid
/// yields weight 1.
[[nodiscard]] std::vector<double> interpolation_weights(const AxisGrid& grid, double x);

/// Rows (grid.size() x width, row-major) interpolated to `target`; result is
/// target.size() x width.
[[nodiscard]] std::vector<double> reconstruct_axis(std::span<const double> rows, std::size_t width,
                                                   const AxisGrid& grid, std::span<const double> target);

/// Responses on the Cartesian product of per-edge RJ grids at one T0.
/// data is row-major over (dim -1, dim 0, ..., dim m_j, window sample).
struct MerTensor {
    BitSequence sequence;
    double t0 = 0.0;
    int m_j = 0;
    std::vector<AxisGrid> grids;  ///< grids[m + 1] for edge m
    std::size_t window = 0;
    std::vector<double> data;

    [[nodiscard]] std::vector<std::size_t> shape() const;
    [[nodiscard]] std::size_t points() const;
    [[nodiscard]] std::span<const double> at(std::span<const std::size_t> index) const;
};

struct TensorOptions {
    std::size_t budget = 10000;          ///< max simulations per tensor
    bool collapse_absent_edges = true;   ///< one sample on axes without an edge
    int jobs = 1;
};

[[nodiscard]] MerTensor build_mer_tensor(const ResponseContext& ctx, const BitSequence& seq,
                                         const JitterSpec& spec, const SamplingPlan& plan, double t0,
                                         const TensorOptions& options);

/// Reconstructs every dimension onto `target`, one dimension at a time in
/// `order` (default: -1, 0, ..., m_j).
[[nodiscard]] MerTensor reconstruct_tensor(const MerTensor& coarse, std::span<const double> target,
                                           std::span<const int> order = {});

/// Coarse samples over (T0, RJ offsets) for every required sequence, enough
/// to evaluate any in-range jitter assignment.
class MerModel {
public:
    struct Options {
        TensorOptions tensor;
        std::size_t max_simulations = 5'000'000;  ///< across all sequences
    };

    static MerModel build(const ResponseContext& ctx, const JitterSpec& spec, const SamplingPlan& plan,
                          const ResponseRequirement& req, const Options& options);

    [[nodiscard]] int m_b() const noexcept { return m_b_; }
    [[nodiscard]] int m_j() const noexcept { return m_j_; }
    [[nodiscard]] std::size_t window() const noexcept { return window_; }
    [[nodiscard]] double window_start() const noexcept { return window_start_; }
    [[nodiscard]] double dt() const noexcept { return dt_; }
    [[nodiscard]] double period() const noexcept { return period_; }
    [[nodiscard]] const JitterSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] std::size_t sequence_count() const noexcept { return entries_.size(); }
    /// Total simulations performed while building.
    [[nodiscard]] std::size_t simulations() const noexcept { return simulations_; }

    /// Response for sequence `code` (bit m is bit m + 1) with the PJ phase
    /// contracted; `out` receives the RJ-only tensor.
    void contract_phase(std::uint64_t code, double t0, std::vector<double>& out) const;
    /// Evaluates a phase-contracted tensor at RJ offsets rj[m + 1].
    void evaluate_contracted(std::uint64_t code, std::span<const double> contracted,
                             std::span<const double> rj, std::span<double> out,
                             std::vector<double>& scratch) const;

    [[nodiscard]] Waveform evaluate(const BitSequence& seq, const JitterAssignment& jit) const;

    /// Native-endian binary image of the coarse samples, for caching.
    void save(std::ostream& os) const;
    static MerModel load(std::istream& is);

private:
    struct Entry {
        AxisGrid pj;
        std::vector<AxisGrid> rj;
        std::vector<double> data;  ///< (pj, rj -1..m_j, window) row-major
    };

    [[nodiscard]] const Entry& entry(std::uint64_t code) const;

    int m_b_ = 0;
    int m_j_ = 0;
    std::size_t window_ = 0;
    double window_start_ = 0.0;
    double dt_ = 0.0;
    double period_ = 0.0;
    JitterSpec spec_;
    std::vector<Entry> entries_;
    std::size_t simulations_ = 0;
};

[[nodiscard]] inline Waveform mer_evaluate(const MerModel& model, const BitSequence& seq,
                                           const JitterAssignment& jit) {
    return model.evaluate(seq, jit);
}

}  // namespace mereye
