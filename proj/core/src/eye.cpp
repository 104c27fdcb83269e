#include "mereye/eye.hpp"

#include "mereye/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <tuple>

namespace mereye {

namespace {

constexpr std::size_t kMonteCarloChunk = 4096;

std::size_t phase_bin(std::size_t i, std::size_t n, std::size_t bins) noexcept {
    return i * bins / n;
}

double truncated_normal(std::mt19937_64& rng, double sigma, double limit) {
    std::normal_distribution<double> normal(0.0, sigma);
    for (;;) {
        const double x = normal(rng);
        if (std::abs(x) <= limit) return x;
    }
}

// Normalized weights of the RJ grid cells.
std::vector<double> rj_weights(const JitterSpec& spec) {
    const auto grid = spec.rj_grid();
    std::vector<double> w(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) w[i] = rj_pdf(grid[i], spec.sigma_rj);
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= sum;
    return w;
}

}  // namespace

// ---------------------------------------------------------------------------
// Bins and densities

void EyeBins::validate() const {
    if (phase_bins < 1 || voltage_bins < 1) throw DomainError("eye grid needs at least one bin per axis");
    if (!(v_max > v_min)) throw DomainError("eye voltage range must be increasing");
}

EyeBins EyeBins::around(double v_low, double v_high, std::size_t phase_bins, std::size_t voltage_bins) {
    const double half = 0.5 * (v_high - v_low);
    // Shifted by half a bin so settled levels land on bin centres, not edges.
    const double shift = 0.5 * (v_high - v_low + 2.0 * half) / static_cast<double>(voltage_bins);
    return EyeBins{phase_bins, voltage_bins, v_low - half - shift, v_high + half - shift};
}

std::size_t EyeBins::voltage_bin(double v) const noexcept {
    const double pos = (v - v_min) / (v_max - v_min) * static_cast<double>(voltage_bins);
    if (!(pos > 0.0)) return 0;
    return std::min(voltage_bins - 1, static_cast<std::size_t>(pos));
}

EyeDensity::EyeDensity(EyeBins bins) : bins_(bins) {
    bins_.validate();
    mass_.assign(bins_.phase_bins * bins_.voltage_bins, 0.0);
}

double EyeDensity::at(std::size_t phase, std::size_t voltage) const {
    if (phase >= bins_.phase_bins || voltage >= bins_.voltage_bins) throw DomainError("eye cell out of range");
    return mass_[phase * bins_.voltage_bins + voltage];
}

std::span<const double> EyeDensity::column(std::size_t phase) const {
    if (phase >= bins_.phase_bins) throw DomainError("eye column out of range");
    return std::span<const double>(mass_).subspan(phase * bins_.voltage_bins, bins_.voltage_bins);
}

double EyeDensity::column_sum(std::size_t phase) const {
    const auto c = column(phase);
    return std::accumulate(c.begin(), c.end(), 0.0);
}

void EyeDensity::deposit(std::span<const double> trace, double weight) {
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto p = phase_bin(i, trace.size(), bins_.phase_bins);
        mass_[p * bins_.voltage_bins + bins_.voltage_bin(trace[i])] += weight;
    }
}

void EyeDensity::add(std::size_t phase, std::size_t voltage, double weight) {
    if (phase >= bins_.phase_bins || voltage >= bins_.voltage_bins) throw DomainError("eye cell out of range");
    mass_[phase * bins_.voltage_bins + voltage] += weight;
}

void EyeDensity::merge(const EyeDensity& other) {
    if (!(other.bins_ == bins_)) throw DomainError("cannot merge densities with different bins");
    for (std::size_t i = 0; i < mass_.size(); ++i) mass_[i] += other.mass_[i];
}

void EyeDensity::normalize() {
    for (std::size_t p = 0; p < bins_.phase_bins; ++p) {
        const double sum = column_sum(p);
        if (sum <= 0.0) continue;
        for (std::size_t v = 0; v < bins_.voltage_bins; ++v) mass_[p * bins_.voltage_bins + v] /= sum;
    }
}

EyeCounts::EyeCounts(EyeBins bins) : bins_(bins) {
    bins_.validate();
    counts_.assign(bins_.phase_bins * bins_.voltage_bins, 0);
}

void EyeCounts::deposit(std::span<const double> trace) {
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto p = phase_bin(i, trace.size(), bins_.phase_bins);
        ++counts_[p * bins_.voltage_bins + bins_.voltage_bin(trace[i])];
    }
}

void EyeCounts::merge(const EyeCounts& other) {
    if (!(other.bins_ == bins_)) throw DomainError("cannot merge counts with different bins");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

EyeDensity EyeCounts::normalized() const {
    EyeDensity d(bins_);
    for (std::size_t p = 0; p < bins_.phase_bins; ++p) {
        std::uint64_t total = 0;
        for (std::size_t v = 0; v < bins_.voltage_bins; ++v) total += counts_[p * bins_.voltage_bins + v];
        if (total == 0) continue;
        const auto denom = static_cast<double>(total);
        for (std::size_t v = 0; v < bins_.voltage_bins; ++v) {
            const auto c = counts_[p * bins_.voltage_bins + v];
            if (c != 0) d.add(p, v, static_cast<double>(c) / denom);
        }
    }
    return d;
}

// ---------------------------------------------------------------------------
// Assembly

namespace {

EyeDensity assemble_exhaustive(const MerModel& model, const JitterSpec& spec, const AssemblyOptions& options,
                               const EyeBins& bins) {
    const std::size_t count = model.sequence_count();
    const bool pj = spec.a_pj > 0.0;
    const bool rj = spec.sigma_rj > 0.0;
    const auto t0_grid = spec.t0_grid();
    const auto rj_grid = rj ? spec.rj_grid() : std::vector<double>{0.0};
    const auto rj_w = rj ? rj_weights(spec) : std::vector<double>{1.0};
    const int dims = model.m_j() + 2;

    // Axes a sequence does not depend on are summed out analytically (their
    // weights add to one), so only the remaining grid points are evaluated.
    std::vector<std::vector<bool>> active(count, std::vector<bool>(static_cast<std::size_t>(dims), false));
    std::vector<bool> phase_active(count, false);
    std::size_t total = 0;
    for (std::size_t code = 0; code < count; ++code) {
        const auto seq = BitSequence::from_code(code, model.m_b(), model.period());
        std::size_t points = 1;
        for (int m = -1; m <= model.m_j(); ++m) {
            if (rj && seq.has_edge(m)) {
                active[code][static_cast<std::size_t>(m + 1)] = true;
                points *= rj_grid.size();
            }
            if (seq.has_edge(m)) phase_active[code] = pj;
        }
        if (phase_active[code]) points *= t0_grid.size();
        total += points;
        if (total > options.exhaustive_budget) {
            throw BudgetError("exhaustive eye needs more than " + std::to_string(options.exhaustive_budget) +
                              " traces; use Monte Carlo assembly");
        }
    }

    const double seq_w = 1.0 / static_cast<double>(count);
    std::vector<EyeDensity> parts(count, EyeDensity(bins));
    parallel_for(count, options.jobs, [&](std::size_t code) {
        const std::vector<double> phases = phase_active[code] ? t0_grid : std::vector<double>{spec.t_pj};
        const double t0_w = phase_active[code] ? 1.0 / static_cast<double>(t0_grid.size()) : 1.0;
        std::vector<double> contracted;
        std::vector<double> scratch;
        std::vector<double> trace(model.window());
        std::vector<double> offsets(static_cast<std::size_t>(dims), 0.0);
        std::vector<std::size_t> axes;
        for (std::size_t d = 0; d < active[code].size(); ++d) {
            if (active[code][d]) axes.push_back(d);
        }
        std::size_t points = 1;
        for (std::size_t k = 0; k < axes.size(); ++k) points *= rj_grid.size();
        for (double t0 : phases) {
            model.contract_phase(code, t0, contracted);
            for (std::size_t flat = 0; flat < points; ++flat) {
                double w = seq_w * t0_w;
                std::size_t rem = flat;
                for (auto it = axes.rbegin(); it != axes.rend(); ++it) {
                    const std::size_t i = rem % rj_grid.size();
                    rem /= rj_grid.size();
                    offsets[*it] = rj_grid[i];
                    w *= rj_w[i];
                }
                model.evaluate_contracted(code, contracted, offsets, trace, scratch);
                parts[code].deposit(trace, w);
            }
        }
    });
    EyeDensity total_density(bins);
    for (const auto& p : parts) total_density.merge(p);
    total_density.normalize();
    return total_density;
}

struct Draw {
    std::uint64_t code;
    std::size_t t0_index;
    std::vector<double> rj;
};

EyeDensity assemble_monte_carlo(const MerModel& model, const JitterSpec& spec, const AssemblyOptions& options,
                                const EyeBins& bins) {
    if (options.samples == 0) throw DomainError("Monte Carlo assembly needs at least one draw");
    const std::size_t count = model.sequence_count();
    const auto t0_grid = spec.t0_grid();
    const auto dims = static_cast<std::size_t>(model.m_j() + 2);
    const std::size_t chunks = (options.samples + kMonteCarloChunk - 1) / kMonteCarloChunk;

    std::vector<EyeCounts> parts(chunks, EyeCounts(bins));
    parallel_for(chunks, options.jobs, [&](std::size_t c) {
        std::mt19937_64 rng(mix_seed(options.seed, c));
        const std::size_t begin = c * kMonteCarloChunk;
        const std::size_t n = std::min(options.samples, begin + kMonteCarloChunk) - begin;
        std::vector<Draw> draws(n);
        for (auto& d : draws) {
            d.code = rng() % count;
            d.t0_index = spec.a_pj > 0.0 ? static_cast<std::size_t>(rng() % t0_grid.size()) : t0_grid.size() - 1;
            d.rj.assign(dims, 0.0);
            if (spec.sigma_rj > 0.0) {
                for (auto& x : d.rj) x = truncated_normal(rng, spec.sigma_rj, spec.rj_limit());
            }
        }
        // Group by (sequence, phase) so each phase contraction is done once.
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::tie(draws[a].code, draws[a].t0_index, a) < std::tie(draws[b].code, draws[b].t0_index, b);
        });
        std::vector<double> contracted;
        std::vector<double> scratch;
        std::vector<double> trace(model.window());
        bool have = false;
        std::uint64_t code = 0;
        std::size_t t0_index = 0;
        for (auto i : order) {
            const auto& d = draws[i];
            if (!have || d.code != code || d.t0_index != t0_index) {
                code = d.code;
                t0_index = d.t0_index;
                model.contract_phase(code, t0_grid[t0_index], contracted);
                have = true;
            }
            model.evaluate_contracted(code, contracted, d.rj, trace, scratch);
            parts[c].deposit(trace);
        }
    });
    EyeCounts total(bins);
    for (const auto& p : parts) total.merge(p);
    return total.normalized();
}

}  // namespace

std::size_t exhaustive_traces(const MerModel& model, const JitterSpec& spec) {
    const std::size_t rj_points = spec.sigma_rj > 0.0 ? spec.rj_grid().size() : 1;
    const std::size_t t0_points = spec.a_pj > 0.0 ? spec.t0_grid().size() : 1;
    constexpr auto cap = std::numeric_limits<std::size_t>::max();
    std::size_t total = 0;
    for (std::size_t code = 0; code < model.sequence_count(); ++code) {
        const auto seq = BitSequence::from_code(code, model.m_b(), model.period());
        std::size_t points = 1;
        bool any = false;
        for (int m = -1; m <= model.m_j(); ++m) {
            if (!seq.has_edge(m)) continue;
            any = true;
            points = points > cap / rj_points ? cap : points * rj_points;
        }
        if (any) points = points > cap / t0_points ? cap : points * t0_points;
        total = total > cap - points ? cap : total + points;
    }
    return total;
}

EyeDensity assemble_eye(const MerModel& model, const ResponseRequirement& req, const JitterSpec& spec,
                        const AssemblyOptions& options, const EyeBins& bins) {
    bins.validate();
    spec.validate();
    if (req.m_b != model.m_b() || req.m_j != model.m_j()) throw DomainError("requirement does not match the MER model");
    if (model.sequence_count() != req.sequence_count) throw DomainError("MER model does not cover every sequence");
    return options.mode == AssemblyMode::Exhaustive ? assemble_exhaustive(model, spec, options, bins)
                                                    : assemble_monte_carlo(model, spec, options, bins);
}

EyeDensity no_jitter_eye(const ResponseContext& ctx, const ResponseRequirement& req, const EyeBins& bins,
                         int jobs) {
    bins.validate();
    const auto count = static_cast<std::size_t>(req.sequence_count);
    const double w = 1.0 / static_cast<double>(count);
    std::vector<EyeDensity> parts(count, EyeDensity(bins));
    parallel_for(count, jobs, [&](std::size_t code) {
        const auto seq = BitSequence::from_code(code, req.m_b, ctx.period);
        parts[code].deposit(ctx.respond(seq, {}).samples(), w);
    });
    EyeDensity total(bins);
    for (const auto& p : parts) total.merge(p);
    total.normalize();
    return total;
}

// ---------------------------------------------------------------------------
// Transient oracle

EyeDensity transient_eye(const ResponseContext& ctx, const JitterSpec& spec, const TransientOptions& options,
                         const EyeBins& bins) {
    bins.validate();
    spec.validate();
    if (options.n_bits < 1000) throw DomainError("transient eye needs at least 1000 bits");
    const double period = ctx.period;
    const double dt = ctx.dt();
    const std::size_t total_bits = options.warmup_bits + options.n_bits + 1;

    std::mt19937_64 bit_rng(mix_seed(options.seed, 0x62697473));
    std::mt19937_64 jitter_rng(mix_seed(options.seed, 0x6A697474));
    std::vector<std::uint8_t> bits(total_bits);
    for (auto& b : bits) b = static_cast<std::uint8_t>(bit_rng() >> 63);

    // Edge i sits between bits i-1 and i at i*T. PJ follows absolute time:
    // the crossing solves t = iT + A sin(2 pi t / T_PJ) (a contraction, since
    // 2 pi A / T_PJ < 1 for any sensible spec).
    std::vector<EdgeEvent> events;
    const double omega = 2.0 * std::numbers::pi / spec.t_pj;
    for (std::size_t i = 1; i < total_bits; ++i) {
        if (bits[i] == bits[i - 1]) continue;
        const double nominal = static_cast<double>(i) * period;
        double t = nominal;
        if (spec.a_pj > 0.0) {
            for (int k = 0; k < 8; ++k) t = nominal + spec.a_pj * std::sin(omega * t);
        }
        if (spec.sigma_rj > 0.0) t += truncated_normal(jitter_rng, spec.sigma_rj, spec.rj_limit());
        events.push_back({t, bits[i] == 1});
    }
    for (std::size_t i = 1; i < events.size(); ++i) {
        if (events[i].time - events[i - 1].time < kMinEdgeSeparationUi * period) {
            throw EdgeOrderError("transient jitter would reorder consecutive edges");
        }
    }

    const double t_start = -period;
    const auto window = ctx.window_samples();
    const double window_start = ctx.window_start();
    const double t_end = static_cast<double>(total_bits - 1) * period + window_start + period;
    const auto n = static_cast<std::size_t>(std::ceil((t_end - t_start) / dt)) + 1;
    const auto input = synthesize_edges(ctx.edges, bits.front() == 1, events, t_start, n);
    const auto output = ctx.model->simulate(input, input.t_end());

    EyeCounts counts(bins);
    std::vector<double> trace(window);
    for (std::size_t b = options.warmup_bits; b < options.warmup_bits + options.n_bits; ++b) {
        const double start = static_cast<double>(b) * period + window_start;
        const auto first = static_cast<std::size_t>(std::llround((start - t_start) / dt));
        if (first + window > output.size()) throw DomainError("transient output shorter than the folded range");
        std::copy_n(output.samples().begin() + static_cast<long>(first), window, trace.begin());
        counts.deposit(trace);
    }
    return counts.normalized();
}

// ---------------------------------------------------------------------------
// Metrics

EyeMetrics eye_metrics(const EyeDensity& density, double threshold_voltage, double mass_floor) {
    const auto& bins = density.bins();
    EyeMetrics m;
    m.threshold_voltage = threshold_voltage;
    if (threshold_voltage < bins.v_min || threshold_voltage >= bins.v_max) return m;
    const std::size_t row = bins.voltage_bin(threshold_voltage);
    auto open = [&](std::size_t p, std::size_t v) { return density.at(p, v) <= mass_floor; };

    std::size_t best_len = 0;
    std::size_t best_col = 0;
    for (std::size_t p = 0; p < bins.phase_bins; ++p) {
        if (!open(p, row)) continue;
        std::size_t lo = row;
        while (lo > 0 && open(p, lo - 1)) --lo;
        std::size_t hi = row;
        while (hi + 1 < bins.voltage_bins && open(p, hi + 1)) ++hi;
        const std::size_t len = hi - lo + 1;
        if (len > best_len) {
            best_len = len;
            best_col = p;
        }
    }
    if (best_len == 0) return m;

    std::size_t left = best_col;
    while (left > 0 && open(left - 1, row)) --left;
    std::size_t right = best_col;
    while (right + 1 < bins.phase_bins && open(right + 1, row)) ++right;

    m.eye_height = static_cast<double>(best_len) * bins.bin_height();
    m.eye_width = static_cast<double>(right - left + 1) * bins.bin_width();
    m.center_phase = (static_cast<double>(best_col) + 0.5) * bins.bin_width();
    return m;
}

const ComparisonRow& ComparisonReport::row(const std::string& metric) const {
    for (const auto& r : rows) {
        if (r.metric == metric) return r;
    }
    throw DomainError("no comparison row for " + metric);
}

ComparisonReport compare_eyes(const EyeMetrics& reference, const EyeMetrics& candidate) {
    auto make = [](std::string name, double ref, double cand) {
        ComparisonRow r{std::move(name), ref, cand, std::nullopt};
        if (ref != 0.0) r.relative_error = (cand - ref) / ref;
        return r;
    };
    ComparisonReport report;
    report.rows.push_back(make("eye_height", reference.eye_height, candidate.eye_height));
    report.rows.push_back(make("eye_width", reference.eye_width, candidate.eye_width));
    return report;
}

TotalVariation total_variation(const EyeDensity& a, const EyeDensity& b) {
    if (!(a.bins() == b.bins())) throw DomainError("densities have different bins");
    TotalVariation tv;
    const auto& bins = a.bins();
    for (std::size_t p = 0; p < bins.phase_bins; ++p) {
        const auto ca = a.column(p);
        const auto cb = b.column(p);
        double d = 0.0;
        for (std::size_t v = 0; v < bins.voltage_bins; ++v) d += std::abs(ca[v] - cb[v]);
        d *= 0.5;
        tv.mean += d;
        tv.max = std::max(tv.max, d);
    }
    tv.mean /= static_cast<double>(bins.phase_bins);
    return tv;
}

}  // namespace mereye
