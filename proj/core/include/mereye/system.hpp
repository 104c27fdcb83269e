#pragma once

// Behavioral transmission-system models and the short-term transient engine.

#include "mereye/waveform.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mereye {

enum class TransferKind { Linear, Tanh, HardLimit };

/// Driver stage: slew limiter followed by a static transfer curve.
struct DriverStage {
    TransferKind kind = TransferKind::Tanh;
    double gain = 3.0;
    double slew = 0.0;  ///< volts/second; <= 0 disables the limiter
    double v_low = 0.0;
    double v_high = 5.0;

    void validate() const;

    /// Static transfer. The tanh curve is normalized so v_low and v_high are
    /// fixed points.
    [[nodiscard]] double transfer(double v) const noexcept;
    [[nodiscard]] bool slew_limited() const noexcept { return slew > 0.0; }
    /// Drives `in` sampled at `dt`, starting from the state settled at in[0].
    [[nodiscard]] std::vector<double> apply(std::span<const double> in, double dt) const;
};

/// Deterministic, causal input -> far-end output map.
class SystemModel {
public:
    virtual ~SystemModel() = default;

    /// Output on the input's grid from input.t0() to t_end. The model starts
    /// settled at the input's first value; the input is held past its end.
    [[nodiscard]] virtual Waveform simulate(const Waveform& input, double t_end) const = 0;
    [[nodiscard]] virtual std::string describe() const = 0;
};

/// Discrete convolution with a finite impulse response.
class LtiChannelModel final : public SystemModel {
public:
    /// Taps at impulse.dt(); impulse.t0() is a non-negative bulk delay.
    explicit LtiChannelModel(Waveform impulse_response);

    static LtiChannelModel identity(double dt);
    /// Main tap at t = 0 plus a uniform tail over (0, span_ui * T); taps sum to 1.
    static LtiChannelModel fir_span(double dt, double period, int span_ui, double main_tap);

    [[nodiscard]] Waveform simulate(const Waveform& input, double t_end) const override;
    [[nodiscard]] std::string describe() const override;
    [[nodiscard]] const Waveform& impulse_response() const noexcept { return impulse_; }

private:
    Waveform impulse_;
    long delay_samples_;
};

struct LinkParams {
    DriverStage driver;
    double z0 = 50.0;          ///< characteristic impedance, ohms
    double load = 200.0;       ///< load resistance, ohms
    double line_delay = 5e-9;  ///< one-way delay, seconds
    double alpha = 0.9;        ///< per-traversal amplitude factor

    void validate() const;
    [[nodiscard]] double reflection() const noexcept { return (load - z0) / (load + z0); }
};

/// Driver stage launching into a lossy line terminated by a resistor, solved
/// with the Bergeron lattice. The driver is an ideal voltage source, so the
/// line-side reflection coefficient is -1.
class NonlinearLinkModel final : public SystemModel {
public:
    explicit NonlinearLinkModel(LinkParams params);

    [[nodiscard]] Waveform simulate(const Waveform& input, double t_end) const override;
    [[nodiscard]] std::string describe() const override;
    [[nodiscard]] const LinkParams& params() const noexcept { return params_; }

private:
    LinkParams params_;
};

[[nodiscard]] inline Waveform simulate(const SystemModel& model, const Waveform& input, double t_end) {
    return model.simulate(input, t_end);
}

struct DelayEstimate {
    double t_delay = 0.0;
};

/// Time from an isolated rising input edge (50% instant at t = 0) to the
/// output's first sample at or past 50% of its own swing.
[[nodiscard]] DelayEstimate estimate_delay(const SystemModel& model, const EdgeTemplate& edges,
                                           double horizon);

/// Rise/fall responses of `driver` to ideal steps on a `dt` grid.
[[nodiscard]] EdgeTemplate extract_edge_templates(const DriverStage& driver, double dt);

/// Everything needed to turn a bit sequence plus jitter into a recorded
/// response window [T_delay, T_delay + T).
struct ResponseContext {
    std::shared_ptr<const SystemModel> model;
    EdgeTemplate edges;
    double period;
    double t_delay;
    double amplitude;  ///< V_hi - V_lo, reference for all thresholds

    [[nodiscard]] double dt() const noexcept { return edges.dt(); }
    [[nodiscard]] std::size_t window_samples() const noexcept;
    /// Window start snapped to the simulation grid.
    [[nodiscard]] double window_start() const noexcept;

    /// One short transient simulation with explicit edge offsets.
    [[nodiscard]] Waveform respond(const BitSequence& seq, std::span<const double> offsets) const;
    [[nodiscard]] Waveform respond(const BitSequence& seq, const JitterSpec& spec,
                                   const JitterAssignment& jit, int m_j) const;
};

/// Output levels the system settles to for constant low and high inputs.
struct ReceivedLevels {
    double low = 0.0;
    double high = 0.0;
    [[nodiscard]] double midpoint() const noexcept { return 0.5 * (low + high); }
};

[[nodiscard]] ReceivedLevels received_levels(const ResponseContext& ctx);

/// Context with T_delay estimated from an isolated rising edge; the delay
/// search runs for `horizon_ui` bit periods.
[[nodiscard]] ResponseContext make_response_context(std::shared_ptr<const SystemModel> model,
                                                    EdgeTemplate edges, double period,
                                                    int horizon_ui = 40);

}  // namespace mereye
