#include "mereye/system.hpp"

#include "mereye/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mereye {

namespace {

std::size_t output_length(const Waveform& input, double t_end) {
    if (t_end < input.t0()) throw DomainError("simulation end precedes the input start");
    return static_cast<std::size_t>(std::floor((t_end - input.t0()) / input.dt() + 1e-9)) + 1;
}

// Input samples extended by holding the last value.
std::vector<double> held_input(const Waveform& input, std::size_t n) {
    const auto src = input.samples();
    std::vector<double> x(n, src.back());
    std::copy_n(src.begin(), std::min(n, src.size()), x.begin());
    return x;
}

long integer_steps(double value, double dt, const char* what) {
    const double steps = value / dt;
    const double r = std::round(steps);
    if (std::abs(steps - r) > 1e-6) {
        throw GridMismatchError(std::string(what) + " is not an integer number of time steps");
    }
    return static_cast<long>(r);
}

}  // namespace

// ---------------------------------------------------------------------------
// DriverStage

void DriverStage::validate() const {
    if (!(v_high > v_low)) throw DomainError("driver v_high must exceed v_low");
    if (kind == TransferKind::Tanh && !(gain > 0.0)) throw DomainError("driver gain must be positive");
    if (!std::isfinite(slew)) throw DomainError("driver slew must be finite (<= 0 disables it)");
}

double DriverStage::transfer(double v) const noexcept {
    const double mid = 0.5 * (v_low + v_high);
    const double swing = v_high - v_low;
    switch (kind) {
        case TransferKind::Linear:
            return v;
        case TransferKind::HardLimit:
            return v >= mid ? v_high : v_low;
        case TransferKind::Tanh:
        default:
            return mid + 0.5 * swing * std::tanh(gain * (v - mid) / swing) / std::tanh(0.5 * gain);
    }
}

std::vector<double> DriverStage::apply(std::span<const double> in, double dt) const {
    std::vector<double> out(in.size());
    if (in.empty()) return out;
    const double max_step = slew_limited() ? slew * dt : 0.0;
    double state = in[0];
    // Settled stretches repeat the same state; reuse the last transfer value.
    double cached_state = state;
    double cached_out = transfer(state);
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (slew_limited()) {
            state += std::clamp(in[i] - state, -max_step, max_step);
        } else {
            state = in[i];
        }
        if (state != cached_state) {
            cached_state = state;
            cached_out = transfer(state);
        }
        out[i] = cached_out;
    }
    return out;
}

// ---------------------------------------------------------------------------
// LtiChannelModel

LtiChannelModel::LtiChannelModel(Waveform impulse_response)
    : impulse_(std::move(impulse_response)),
      delay_samples_(integer_steps(impulse_.t0(), impulse_.dt(), "impulse response delay")) {
    if (delay_samples_ < 0) throw DomainError("impulse response must be causal");
}

LtiChannelModel LtiChannelModel::identity(double dt) {
    return LtiChannelModel(Waveform(0.0, dt, {1.0}));
}

LtiChannelModel LtiChannelModel::fir_span(double dt, double period, int span_ui, double main_tap) {
    if (span_ui < 1) throw DomainError("FIR span must be at least one UI");
    if (!(main_tap > 0.0 && main_tap <= 1.0)) throw DomainError("FIR main tap must lie in (0, 1]");
    const long per_ui = integer_steps(period, dt, "bit period");
    const auto n = static_cast<std::size_t>(per_ui * span_ui);
    std::vector<double> taps(n, n > 1 ? (1.0 - main_tap) / static_cast<double>(n - 1) : 0.0);
    taps[0] = n > 1 ? main_tap : 1.0;
    return LtiChannelModel(Waveform(0.0, dt, std::move(taps)));
}

Waveform LtiChannelModel::simulate(const Waveform& input, double t_end) const {
    if (std::abs(input.dt() - impulse_.dt()) > 1e-9 * impulse_.dt()) {
        throw GridMismatchError("input dt differs from the impulse response step");
    }
    const std::size_t n = output_length(input, t_end);
    const auto x = held_input(input, n);
    const auto h = impulse_.samples();
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < h.size(); ++k) {
            const long src = static_cast<long>(i) - delay_samples_ - static_cast<long>(k);
            acc += h[k] * x[static_cast<std::size_t>(std::max(0L, src))];
        }
        y[i] = acc;
    }
    return Waveform(input.t0(), input.dt(), std::move(y));
}

std::string LtiChannelModel::describe() const {
    std::ostringstream os;
    os << "lti(taps=" << impulse_.size() << ", delay_samples=" << delay_samples_ << ")";
    return os.str();
}

// ---------------------------------------------------------------------------
// NonlinearLinkModel

void LinkParams::validate() const {
    driver.validate();
    if (!(z0 > 0.0)) throw DomainError("Z0 must be positive");
    if (!(load > 0.0)) throw DomainError("load resistance must be positive");
    if (!(line_delay > 0.0)) throw DomainError("line delay must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("loss factor must lie in (0, 1]");
}

NonlinearLinkModel::NonlinearLinkModel(LinkParams params) : params_(std::move(params)) {
    params_.validate();
}

Waveform NonlinearLinkModel::simulate(const Waveform& input, double t_end) const {
    const double dt = input.dt();
    const long delay = integer_steps(params_.line_delay, dt, "line delay");
    if (delay < 1) throw GridMismatchError("line delay is shorter than one time step");

    const std::size_t n = output_length(input, t_end);
    const auto drive = params_.driver.apply(held_input(input, n), dt);

    const double gamma = params_.reflection();
    const double alpha = params_.alpha;
    const double round_trip = alpha * alpha * gamma;
    const double to_load = alpha * (1.0 + gamma);

    // Forward wave leaving the driver end; ring buffer of the last 2*delay values.
    const auto ring = static_cast<std::size_t>(2 * delay);
    std::vector<double> forward(ring, drive.front() / (1.0 + round_trip));
    std::vector<double> y(n);
    std::size_t slot = 0;                                 // holds the value launched 2*delay ago
    auto mid = static_cast<std::size_t>(delay);           // launched delay steps ago
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = to_load * forward[mid];
        forward[slot] = drive[i] - round_trip * forward[slot];
        if (++slot == ring) slot = 0;
        if (++mid == ring) mid = 0;
    }
    return Waveform(input.t0(), dt, std::move(y));
}

std::string NonlinearLinkModel::describe() const {
    std::ostringstream os;
    os << "link(z0=" << params_.z0 << ", load=" << params_.load << ", td=" << params_.line_delay
       << ", alpha=" << params_.alpha << ")";
    return os.str();
}

// ---------------------------------------------------------------------------
// Delay and templates

DelayEstimate estimate_delay(const SystemModel& model, const EdgeTemplate& edges, double horizon) {
    const double dt = edges.dt();
    const double t_start = -static_cast<double>(edges.rise_lead() + kFractionalTaps) * dt;
    const EdgeEvent rise{0.0, true};
    const auto n = static_cast<std::size_t>(std::ceil((horizon - t_start) / dt)) + 1;
    const auto input = synthesize_edges(edges, false, std::span(&rise, 1), t_start, n);
    const auto out = model.simulate(input, input.t_end());

    const double first = out[0];
    const double last = out[out.size() - 1];
    const double swing = last - first;
    if (!(std::abs(swing) > 1e-9 * (edges.v_high() - edges.v_low()))) {
        throw PropagationError("output never leaves its initial level");
    }
    const double half = first + 0.5 * swing;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const bool crossed = swing > 0 ? out[i] >= half : out[i] <= half;
        if (crossed) return {std::max(0.0, out.time_at(i))};
    }
    throw PropagationError("output never crosses 50% of its swing");
}

namespace {

Waveform edge_response(const DriverStage& driver, double dt, bool rising, double& settle_time) {
    constexpr std::size_t kPad = 4;
    const double swing = driver.v_high - driver.v_low;
    std::size_t motion = 8;
    if (driver.slew_limited()) {
        motion += static_cast<std::size_t>(std::ceil(swing / (driver.slew * dt)));
    }
    const std::size_t n = kPad + 2 * motion + 16;
    const double from = rising ? driver.v_low : driver.v_high;
    const double to = rising ? driver.v_high : driver.v_low;
    std::vector<double> step(n, to);
    std::fill_n(step.begin(), kPad, from);

    const auto y = driver.apply(step, dt);
    const double y0 = y.front();
    const double y1 = driver.transfer(to);
    const double span = y1 - y0;
    if (!(std::abs(span) > 0.0)) throw DomainError("driver does not respond to a full-swing step");

    auto progress = [&](std::size_t i) { return (y[i] - y0) / span; };
    std::size_t start = kPad - 1;
    while (start + 1 < n && std::abs(progress(start + 1)) <= 1e-12) ++start;
    std::size_t ref = start;
    while (ref < n && progress(ref) < 0.5) ++ref;
    std::size_t end = n - 1;
    while (end > ref && std::abs(progress(end) - 1.0) <= 1e-9) --end;
    ++end;
    if (end >= n - 1) throw DomainError("driver does not settle within the extraction horizon");
    std::size_t settle = end;
    while (settle > ref && std::abs(progress(settle - 1) - 1.0) <= 1e-3) --settle;
    settle_time = static_cast<double>(settle - ref) * dt;

    std::vector<double> samples(y.begin() + static_cast<long>(start), y.begin() + static_cast<long>(end) + 1);
    return Waveform(-static_cast<double>(ref - start) * dt, dt, std::move(samples));
}

}  // namespace

EdgeTemplate extract_edge_templates(const DriverStage& driver, double dt) {
    driver.validate();
    if (!(dt > 0.0)) throw DomainError("template dt must be positive");
    double settle_rise = 0.0;
    double settle_fall = 0.0;
    auto rise = edge_response(driver, dt, true, settle_rise);
    auto fall = edge_response(driver, dt, false, settle_fall);
    return EdgeTemplate(std::move(rise), std::move(fall), std::max(settle_rise, settle_fall));
}

// ---------------------------------------------------------------------------
// ResponseContext

std::size_t ResponseContext::window_samples() const noexcept {
    return static_cast<std::size_t>(std::llround(period / dt()));
}

double ResponseContext::window_start() const noexcept {
    return std::round(t_delay / dt()) * dt();
}

Waveform ResponseContext::respond(const BitSequence& seq, std::span<const double> offsets) const {
    const double start = window_start();
    const double duration = static_cast<double>(window_samples() - 1) * dt();
    const auto input = synthesize_sequence(seq, edges, offsets, start + duration);
    const auto output = model->simulate(input, start + duration);
    return window(output, start, duration);
}

Waveform ResponseContext::respond(const BitSequence& seq, const JitterSpec& spec,
                                  const JitterAssignment& jit, int m_j) const {
    const double start = window_start();
    const double duration = static_cast<double>(window_samples() - 1) * dt();
    const auto input = build_stimulus(seq, edges, spec, jit, m_j, start + duration);
    const auto output = model->simulate(input, start + duration);
    return window(output, start, duration);
}

ReceivedLevels received_levels(const ResponseContext& ctx) {
    auto settle = [&](double level) {
        const auto in = Waveform::constant(0.0, ctx.dt(), 4, level);
        const auto out = ctx.model->simulate(in, in.t_end());
        return out[out.size() - 1];
    };
    return {settle(ctx.edges.v_low()), settle(ctx.edges.v_high())};
}

ResponseContext make_response_context(std::shared_ptr<const SystemModel> model, EdgeTemplate edges,
                                      double period, int horizon_ui) {
    if (!model) throw DomainError("response context needs a model");
    if (!(period > 0.0)) throw DomainError("bit period must be positive");
    const double ratio = period / edges.dt();
    if (std::abs(ratio - std::round(ratio)) > 1e-6) {
        throw GridMismatchError("bit period is not an integer number of time steps");
    }
    const auto delay = estimate_delay(*model, edges, horizon_ui * period);
    const double amplitude = edges.v_high() - edges.v_low();
    return ResponseContext{std::move(model), std::move(edges), period, delay.t_delay, amplitude};
}

}  // namespace mereye
