#include "mereye/waveform.hpp"

#include "mereye/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mereye {

namespace {

constexpr double kKaiserBeta = 8.0;
constexpr int kHalfTaps = kFractionalTaps / 2;

// Positions closer than this (in samples) to an integer are treated as on-grid.
constexpr double kGridSnap = 1e-9;

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double sinc(double x) {
    if (x == 0.0) return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

// Power series of I0; converges to double precision well inside 40 terms for x <= 8.
double bessel_i0(double x) {
    const double q = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 40 && term > 1e-17 * sum; ++k) {
        term *= q / (static_cast<double>(k) * static_cast<double>(k));
        sum += term;
    }
    return sum;
}

double kaiser(double x) {
    static const double norm = 1.0 / bessel_i0(kKaiserBeta);
    const double r = 1.0 - x * x;
    if (r <= 0.0) return 0.0;
    return bessel_i0(kKaiserBeta * std::sqrt(r)) * norm;
}

std::vector<double> progress_of(const Waveform& w, double from, double to) {
    std::vector<double> p(w.size());
    const double span = to - from;
    for (std::size_t i = 0; i < w.size(); ++i) p[i] = (w[i] - from) / span;
    p.front() = 0.0;
    p.back() = 1.0;
    return p;
}

int lead_of(const Waveform& w) {
    const double lead = -w.t0() / w.dt();
    const double r = std::round(lead);
    if (std::abs(lead - r) > 1e-6 || r < 0.0) {
        throw DomainError("edge template t0 must be a non-positive multiple of dt");
    }
    return static_cast<int>(r);
}

// Adds sign * swing * progress(k - c) to out[k], and the settled step beyond
// the template to `tail` (a difference array).
void place_edge(std::span<const double> progress, int lead, double sign_swing, double c_samples,
                std::vector<double>& out, std::vector<double>& tail) {
    const auto n = static_cast<long>(out.size());
    const auto len = static_cast<long>(progress.size());
    c_samples -= static_cast<double>(lead);

    const double rounded = std::round(c_samples);
    const bool on_grid = std::abs(c_samples - rounded) < kGridSnap;
    const long c_int = on_grid ? static_cast<long>(rounded) : static_cast<long>(std::floor(c_samples));
    const double frac = on_grid ? 0.0 : c_samples - static_cast<double>(c_int);

    auto ext = [&](long j) -> double {
        if (j < 0) return 0.0;
        if (j >= len) return 1.0;
        return progress[static_cast<std::size_t>(j)];
    };

    long j_first;
    long j_settled;
    if (on_grid) {
        j_first = 0;
        j_settled = len;
    } else {
        j_first = -(kHalfTaps - 1);
        j_settled = len + kHalfTaps;
    }
    const long k_first = std::max(0L, c_int + j_first);
    const long k_settled = std::clamp(c_int + j_settled, 0L, n);

    if (on_grid) {
        for (long k = k_first; k < k_settled; ++k) out[k] += sign_swing * ext(k - c_int);
    } else {
        const auto taps = fractional_delay_taps(frac);
        for (long k = k_first; k < k_settled; ++k) {
            const long j = k - c_int;
            double acc = 0.0;
            for (int i = 0; i < kFractionalTaps; ++i) acc += taps[i] * ext(j - kHalfTaps + i);
            out[k] += sign_swing * acc;
        }
    }
    if (k_settled < n) tail[static_cast<std::size_t>(k_settled)] += sign_swing;
}

}  // namespace

// ---------------------------------------------------------------------------
// Waveform

Waveform::Waveform(double t0, double dt, std::vector<double> samples)
    : t0_(t0), dt_(dt), samples_(std::move(samples)) {
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw DomainError("waveform dt must be positive");
    if (samples_.empty()) throw DomainError("waveform needs at least one sample");
    if (!std::isfinite(t0_) || !all_finite(samples_)) {
        throw DomainError("waveform values must be finite");
    }
}

Waveform Waveform::constant(double t0, double dt, std::size_t n, double value) {
    return Waveform(t0, dt, std::vector<double>(n, value));
}

// ---------------------------------------------------------------------------
// BitSequence

BitSequence::BitSequence(std::vector<std::uint8_t> bits_oldest_first, double period)
    : bits_(std::move(bits_oldest_first)), period_(period) {
    if (bits_.size() < 2) throw DomainError("bit sequence needs at least b_0 and b_-1");
    if (!(period_ > 0.0)) throw DomainError("bit period must be positive");
    for (auto b : bits_) {
        if (b > 1) throw DomainError("bits must be 0 or 1");
    }
}

BitSequence BitSequence::alternating(int oldest_index, double period) {
    std::vector<std::uint8_t> bits;
    for (int m = oldest_index; m >= -1; --m) bits.push_back(static_cast<std::uint8_t>(std::abs(m) % 2));
    return BitSequence(std::move(bits), period);
}

BitSequence BitSequence::from_code(std::uint64_t code, int oldest_index, double period) {
    if (oldest_index < -1 || oldest_index > 62) throw DomainError("sequence index out of range");
    std::vector<std::uint8_t> bits;
    for (int m = oldest_index; m >= -1; --m) {
        bits.push_back(static_cast<std::uint8_t>((code >> (m + 1)) & 1U));
    }
    return BitSequence(std::move(bits), period);
}

std::uint8_t BitSequence::bit(int m) const {
    const int pos = oldest_index() - m;
    if (pos < 0 || pos >= static_cast<int>(bits_.size())) throw DomainError("bit index out of range");
    return bits_[static_cast<std::size_t>(pos)];
}

bool BitSequence::has_edge(int m) const {
    if (m >= oldest_index() || m < -1) return false;
    return bit(m + 1) != bit(m);
}

int BitSequence::edge_count() const {
    int n = 0;
    for (std::size_t i = 1; i < bits_.size(); ++i) n += bits_[i] != bits_[i - 1] ? 1 : 0;
    return n;
}

std::uint64_t BitSequence::code() const {
    std::uint64_t c = 0;
    for (int m = oldest_index(); m >= -1; --m) c |= static_cast<std::uint64_t>(bit(m)) << (m + 1);
    return c;
}

std::string BitSequence::to_string() const {
    std::string s = "[";
    for (auto b : bits_) s.push_back(b ? '1' : '0');
    s.push_back(']');
    return s;
}

// ---------------------------------------------------------------------------
// EdgeTemplate

EdgeTemplate::EdgeTemplate(Waveform rise, Waveform fall, double settle_time)
    : rise_(std::move(rise)),
      fall_(std::move(fall)),
      settle_time_(settle_time),
      v_low_(rise_[0]),
      v_high_(rise_[rise_.size() - 1]) {
    if (std::abs(rise_.dt() - fall_.dt()) > 1e-12 * rise_.dt()) {
        throw DomainError("rise and fall templates must share dt");
    }
    if (!(v_high_ > v_low_)) throw DomainError("rising template must end above its start");
    const double tol = 1e-3 * (v_high_ - v_low_);
    if (std::abs(fall_[0] - v_high_) > tol || std::abs(fall_[fall_.size() - 1] - v_low_) > tol) {
        throw DomainError("falling template must run from the high to the low level");
    }
    if (!(settle_time_ >= 0.0)) throw DomainError("settle time must be non-negative");
    rise_progress_ = progress_of(rise_, v_low_, v_high_);
    fall_progress_ = progress_of(fall_, v_high_, v_low_);
    rise_lead_ = lead_of(rise_);
    fall_lead_ = lead_of(fall_);
}

// ---------------------------------------------------------------------------
// Jitter

void JitterSpec::validate() const {
    if (!(a_pj >= 0.0)) throw DomainError("A_PJ must be >= 0");
    if (!(t_pj > 0.0)) throw DomainError("T_PJ must be > 0");
    if (t0_steps < 1) throw DomainError("T0 grid needs at least one step");
    if (!(sigma_rj >= 0.0)) throw DomainError("sigma_RJ must be >= 0");
    if (!(rj_range > 0.0)) throw DomainError("RJ range must be > 0");
    if (rj_steps < 1) throw DomainError("RJ grid needs at least one step");
}

std::vector<double> JitterSpec::t0_grid() const {
    std::vector<double> g(static_cast<std::size_t>(t0_steps));
    for (int i = 0; i < t0_steps; ++i) g[i] = t_pj * static_cast<double>(i + 1) / t0_steps;
    return g;
}

std::vector<double> JitterSpec::rj_grid() const {
    std::vector<double> g(static_cast<std::size_t>(rj_steps));
    const double step = rj_step();
    for (int i = 0; i < rj_steps; ++i) g[i] = -rj_limit() + step * (static_cast<double>(i) + 0.5);
    return g;
}

JitterAssignment JitterAssignment::zero(int max_index, double t0) {
    JitterAssignment j;
    j.t0 = t0;
    j.max_index = max_index;
    j.rj_offsets.assign(static_cast<std::size_t>(std::max(0, max_index + 2)), 0.0);
    return j;
}

double JitterAssignment::rj_offset(int m) const {
    if (m < -1 || m > max_index) throw DomainError("jitter index out of range");
    return rj_offsets[static_cast<std::size_t>(m + 1)];
}

void JitterAssignment::set_rj_offset(int m, double value) {
    if (m < -1 || m > max_index) throw DomainError("jitter index out of range");
    rj_offsets[static_cast<std::size_t>(m + 1)] = value;
}

double pj_offset(int m, const JitterSpec& spec, double t0, double period) noexcept {
    if (spec.a_pj == 0.0) return 0.0;
    return spec.a_pj * std::sin(2.0 * std::numbers::pi * (-m * period + t0) / spec.t_pj);
}

double rj_pdf(double dt, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("RJ density is degenerate for sigma <= 0");
    const double z = dt / sigma;
    return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
}

// ---------------------------------------------------------------------------
// Stimulus synthesis

std::array<double, kFractionalTaps> fractional_delay_taps(double frac) {
    std::array<double, kFractionalTaps> taps{};
    double sum = 0.0;
    for (int i = 0; i < kFractionalTaps; ++i) {
        const double d = static_cast<double>(kHalfTaps) - frac - static_cast<double>(i);
        taps[i] = sinc(d) * kaiser(d / kHalfTaps);
        sum += taps[i];
    }
    for (auto& t : taps) t /= sum;
    return taps;
}

Waveform synthesize_edges(const EdgeTemplate& edges, bool start_high, std::span<const EdgeEvent> events,
                          double t_start, std::size_t n) {
    const double dt = edges.dt();
    const double swing = edges.v_high() - edges.v_low();
    std::vector<double> out(n, 0.0);
    std::vector<double> tail(n, 0.0);
    bool high = start_high;
    for (const auto& ev : events) {
        if (ev.rising == high) throw DomainError("edge events must alternate in direction");
        const double c = (ev.time - t_start) / dt;
        if (ev.rising) {
            place_edge(edges.rise_progress(), edges.rise_lead(), swing, c, out, tail);
        } else {
            place_edge(edges.fall_progress(), edges.fall_lead(), -swing, c, out, tail);
        }
        high = ev.rising;
    }
    double level = start_high ? edges.v_high() : edges.v_low();
    for (std::size_t k = 0; k < n; ++k) {
        level += tail[k];
        out[k] += level;
    }
    return Waveform(t_start, dt, std::move(out));
}

double stimulus_start(const BitSequence& seq) noexcept {
    return -static_cast<double>(seq.oldest_index()) * seq.period();
}

namespace {

std::size_t samples_until(double t_start, double t_end, double dt) {
    if (!(t_end >= t_start)) throw DomainError("stimulus end precedes its start");
    return static_cast<std::size_t>(std::floor((t_end - t_start) / dt + 1e-9)) + 1;
}

void check_order(std::span<const EdgeEvent> events, double period) {
    for (std::size_t i = 1; i < events.size(); ++i) {
        if (events[i].time - events[i - 1].time < kMinEdgeSeparationUi * period) {
            throw EdgeOrderError("jitter would reorder or merge consecutive edges");
        }
    }
}

}  // namespace

Waveform synthesize_sequence(const BitSequence& seq, const EdgeTemplate& edges,
                             std::span<const double> offsets, double t_end) {
    const double period = seq.period();
    std::vector<EdgeEvent> events;
    for (int m = seq.oldest_index() - 1; m >= -1; --m) {
        if (!seq.has_edge(m)) continue;
        const auto slot = static_cast<std::size_t>(m + 1);
        const double offset = slot < offsets.size() ? offsets[slot] : 0.0;
        events.push_back({-m * period + offset, seq.bit(m) == 1});
    }
    check_order(events, period);
    const double t_start = stimulus_start(seq);
    return synthesize_edges(edges, seq.bit(seq.oldest_index()) == 1, events, t_start,
                            samples_until(t_start, t_end, edges.dt()));
}

Waveform build_stimulus(const BitSequence& seq, const EdgeTemplate& edges, const JitterSpec& spec,
                        const JitterAssignment& jit, int m_j, double t_end) {
    if (jit.max_index != m_j) throw DomainError("jitter assignment must cover edges -1..m_j");
    const double limit = spec.rj_limit() * (1.0 + 1e-12);
    std::vector<double> offsets(static_cast<std::size_t>(std::max(0, m_j + 2)), 0.0);
    for (int m = -1; m <= m_j; ++m) {
        const double rj = jit.rj_offset(m);
        if (std::abs(rj) > limit) throw DomainError("RJ offset exceeds the configured range");
        offsets[static_cast<std::size_t>(m + 1)] = pj_offset(m, spec, jit.t0, seq.period()) + rj;
    }
    return synthesize_sequence(seq, edges, offsets, t_end);
}

Waveform window(const Waveform& w, double start, double duration) {
    const double dt = w.dt();
    const double tol = 1e-9 * dt;
    if (!(duration >= 0.0)) throw DomainError("window duration must be non-negative");
    if (start < w.t0() - tol || start + duration > w.t_end() + tol) {
        throw DomainError("window lies outside the waveform span");
    }
    const auto n = static_cast<std::size_t>(std::llround(duration / dt)) + 1;
    const double pos = (start - w.t0()) / dt;
    const double rounded = std::round(pos);
    const auto src = w.samples();
    std::vector<double> out(n);
    if (std::abs(pos - rounded) < kGridSnap) {
        const auto first = static_cast<std::size_t>(rounded);
        if (first + n > src.size()) throw DomainError("window lies outside the waveform span");
        std::copy_n(src.begin() + static_cast<long>(first), n, out.begin());
    } else {
        const long base = static_cast<long>(std::floor(pos));
        const double frac = pos - static_cast<double>(base);
        // Evaluating at (j - (1 - frac)) with j = base + 1 + k.
        const auto taps = fractional_delay_taps(1.0 - frac);
        const auto last = static_cast<long>(src.size()) - 1;
        for (std::size_t k = 0; k < n; ++k) {
            const long j = base + 1 + static_cast<long>(k);
            double acc = 0.0;
            for (int i = 0; i < kFractionalTaps; ++i) {
                const long s = std::clamp(j - kHalfTaps + i, 0L, last);
                acc += taps[i] * src[static_cast<std::size_t>(s)];
            }
            out[k] = acc;
        }
    }
    return Waveform(start, dt, std::move(out));
}

}  // namespace mereye
