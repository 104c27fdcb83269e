#pragma once

// Time-series primitives, bit sequences, edge templates and jittered
// stimulus synthesis.
//
// Time convention: bit b_m of a sequence is generated at t = -m*T, so b_0
// (the current bit) occupies [0, T) and b_{-1} (the next bit) starts at T.
// The edge with index m is the transition b_{m+1} -> b_m at t = -m*T.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mereye {

/// Uniformly sampled real-valued time series.
class Waveform {
public:
    Waveform(double t0, double dt, std::vector<double> samples);

    static Waveform constant(double t0, double dt, std::size_t n, double value);

    [[nodiscard]] double t0() const noexcept { return t0_; }
    [[nodiscard]] double dt() const noexcept { return dt_; }
    [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }
    /// Time of the last sample.
    [[nodiscard]] double t_end() const noexcept {
        return t0_ + dt_ * static_cast<double>(samples_.size() - 1);
    }
    [[nodiscard]] double time_at(std::size_t i) const noexcept {
        return t0_ + dt_ * static_cast<double>(i);
    }
    [[nodiscard]] double operator[](std::size_t i) const noexcept { return samples_[i]; }
    [[nodiscard]] std::span<const double> samples() const noexcept { return samples_; }
    [[nodiscard]] std::vector<double> release() && noexcept { return std::move(samples_); }

    bool operator==(const Waveform&) const = default;

private:
    double t0_;
    double dt_;
    std::vector<double> samples_;
};

/// Binary sequence [b_m ... b_0 b_{-1}], stored oldest first.
class BitSequence {
public:
    BitSequence(std::vector<std::uint8_t> bits_oldest_first, double period);

    /// [...01010] with b_0 = 0, b_{-1} = 1.
    static BitSequence alternating(int oldest_index, double period);
    /// Bit b_m is bit (m + 1) of `code`.
    static BitSequence from_code(std::uint64_t code, int oldest_index, double period);

    [[nodiscard]] int oldest_index() const noexcept {
        return static_cast<int>(bits_.size()) - 2;
    }
    [[nodiscard]] std::size_t size() const noexcept { return bits_.size(); }
    [[nodiscard]] double period() const noexcept { return period_; }
    [[nodiscard]] std::uint8_t bit(int m) const;
    /// True when b_{m+1} != b_m. The state before the oldest bit is settled
    /// at the oldest bit's level, so the oldest index never carries an edge.
    [[nodiscard]] bool has_edge(int m) const;
    [[nodiscard]] int edge_count() const;
    [[nodiscard]] std::uint64_t code() const;
    [[nodiscard]] std::string to_string() const;

    bool operator==(const BitSequence&) const = default;

private:
    std::vector<std::uint8_t> bits_;
    double period_;
};

/// Rising/falling edge shapes U(t). Times are relative to the edge instant:
/// sample 0 of each template sits at t0 < 0 and the first sample at or past
/// the 50% level sits at t = 0.
class EdgeTemplate {
public:
    EdgeTemplate(Waveform rise, Waveform fall, double settle_time);

    [[nodiscard]] const Waveform& rise() const noexcept { return rise_; }
    [[nodiscard]] const Waveform& fall() const noexcept { return fall_; }
    [[nodiscard]] double settle_time() const noexcept { return settle_time_; }
    [[nodiscard]] double dt() const noexcept { return rise_.dt(); }
    [[nodiscard]] double v_low() const noexcept { return v_low_; }
    [[nodiscard]] double v_high() const noexcept { return v_high_; }
    [[nodiscard]] double level(std::uint8_t bit) const noexcept { return bit ? v_high_ : v_low_; }

    /// Normalized 0 -> 1 progress of the rising and falling shapes.
    [[nodiscard]] std::span<const double> rise_progress() const noexcept { return rise_progress_; }
    [[nodiscard]] std::span<const double> fall_progress() const noexcept { return fall_progress_; }
    /// Number of samples before the reference instant.
    [[nodiscard]] int rise_lead() const noexcept { return rise_lead_; }
    [[nodiscard]] int fall_lead() const noexcept { return fall_lead_; }

private:
    Waveform rise_;
    Waveform fall_;
    double settle_time_;
    double v_low_;
    double v_high_;
    std::vector<double> rise_progress_;
    std::vector<double> fall_progress_;
    int rise_lead_;
    int fall_lead_;
};

struct JitterSpec {
    double a_pj = 0.0;          ///< PJ amplitude, seconds
    double t_pj = 1.0;          ///< PJ period, seconds
    int t0_steps = 100;         ///< T0 grid covers (0, T_PJ] in T_PJ/t0_steps steps
    double sigma_rj = 0.0;      ///< RJ standard deviation, seconds
    double rj_range = 5.0;      ///< RJ offsets stay within +-rj_range*sigma
    int rj_steps = 100;         ///< cells across the RJ range

    void validate() const;

    [[nodiscard]] double rj_limit() const noexcept { return rj_range * sigma_rj; }
    [[nodiscard]] double rj_step() const noexcept {
        return 2.0 * rj_limit() / static_cast<double>(rj_steps);
    }
    /// T0 values (i+1) * T_PJ / t0_steps.
    [[nodiscard]] std::vector<double> t0_grid() const;
    /// Cell midpoints of the RJ range, ascending.
    [[nodiscard]] std::vector<double> rj_grid() const;
    /// Largest edge displacement either jitter source can produce.
    [[nodiscard]] double max_displacement() const noexcept { return a_pj + rj_limit(); }
};

/// Jitter applied to edges -1..max_index of one sequence.
struct JitterAssignment {
    double t0 = 0.0;
    int max_index = -1;
    std::vector<double> rj_offsets;  ///< rj_offsets[m + 1] is the offset of edge m

    static JitterAssignment zero(int max_index, double t0 = 0.0);

    [[nodiscard]] double rj_offset(int m) const;
    void set_rj_offset(int m, double value);
};

/// PJ displacement of edge m (bit-instant approximation).
[[nodiscard]] double pj_offset(int m, const JitterSpec& spec, double t0, double period) noexcept;

/// Gaussian density N(0, sigma^2). Throws DomainError when sigma <= 0.
[[nodiscard]] double rj_pdf(double dt, double sigma);

struct EdgeEvent {
    double time;
    bool rising;
};

/// Minimum separation between consecutive edges, as a fraction of T.
inline constexpr double kMinEdgeSeparationUi = 0.05;

/// Superposes edge templates on a constant starting level. Events must be
/// time-ordered and alternate in direction starting from `start_high`.
[[nodiscard]] Waveform synthesize_edges(const EdgeTemplate& edges, bool start_high,
                                        std::span<const EdgeEvent> events, double t_start,
                                        std::size_t n);

/// Start time of stimuli built for `seq`: one UI before the first possible edge.
[[nodiscard]] double stimulus_start(const BitSequence& seq) noexcept;

/// Stimulus with explicit per-edge displacements (offsets[m + 1] for edge m).
/// Edges beyond the offsets span are placed at their nominal instant.
[[nodiscard]] Waveform synthesize_sequence(const BitSequence& seq, const EdgeTemplate& edges,
                                           std::span<const double> offsets, double t_end);

/// Jittered input signal: PJ (bit-instant form) plus per-edge RJ on edges
/// -1..m_j, unjittered edges above m_j.
[[nodiscard]] Waveform build_stimulus(const BitSequence& seq, const EdgeTemplate& edges,
                                      const JitterSpec& spec, const JitterAssignment& jit,
                                      int m_j, double t_end);

/// Copy of `w` restricted to [start, start + duration] on the same dt.
/// Off-grid starts are resampled with the band-limited fractional-delay kernel.
[[nodiscard]] Waveform window(const Waveform& w, double start, double duration);

inline constexpr int kFractionalTaps = 16;

/// Normalized Kaiser-windowed sinc taps interpolating at fractional position
/// (j - frac) from samples j-8 .. j+7, frac in [0, 1).
[[nodiscard]] std::array<double, kFractionalTaps> fractional_delay_taps(double frac);

}  // namespace mereye
