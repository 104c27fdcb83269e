#include "mereye/mer.hpp"

#include "mereye/parallel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <istream>
#include <ostream>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <optional>
#include <limits>

namespace mereye {

namespace {

constexpr double kPi = std::numbers::pi;

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

// Single-sided amplitude spectrum of real sequences of a fixed length.
class AmplitudeSpectrum {
public:
    explicit AmplitudeSpectrum(std::size_t n)
        : n_(n),
          in_(fftw_alloc_real(n), &fftw_free),
          out_(fftw_alloc_complex(n / 2 + 1), &fftw_free) {
        if (!in_ || !out_) throw std::bad_alloc();
        std::lock_guard lock(planner_mutex());
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(), out_.get(), FFTW_ESTIMATE);
        if (!plan_) throw DomainError("cannot plan the real DFT");
    }
    AmplitudeSpectrum(const AmplitudeSpectrum&) = delete;
    AmplitudeSpectrum& operator=(const AmplitudeSpectrum&) = delete;
    ~AmplitudeSpectrum() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan_);
    }

    /// amp[k] for k = 0..n/2, normalized so a unit sinusoid at bin k reads 1.
    void compute(std::span<const double> x, std::span<const double> taper, std::vector<double>& amp) {
        double norm = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double w = taper.empty() ? 1.0 : taper[i];
            in_.get()[i] = x[i] * w;
            norm += w;
        }
        fftw_execute(plan_);
        amp.resize(n_ / 2 + 1);
        for (std::size_t k = 0; k <= n_ / 2; ++k) {
            const double mag = std::hypot(out_.get()[k][0], out_.get()[k][1]);
            const bool unpaired = k == 0 || (n_ % 2 == 0 && k == n_ / 2);
            amp[k] = (unpaired ? 1.0 : 2.0) * mag / norm;
        }
    }

private:
    std::size_t n_;
    std::unique_ptr<double, decltype(&fftw_free)> in_;
    std::unique_ptr<fftw_complex, decltype(&fftw_free)> out_;
    fftw_plan plan_ = nullptr;
};

std::vector<double> hann(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n - 1)));
    }
    return w;
}

double highest_bin(const std::vector<double>& amp, double threshold) {
    for (std::size_t k = amp.size() - 1; k >= 1; --k) {
        if (amp[k] >= threshold) return static_cast<double>(k);
    }
    return 0.0;
}

std::vector<double> unit(std::size_t n, std::size_t j) {
    std::vector<double> w(n, 0.0);
    w[j] = 1.0;
    return w;
}

std::vector<double> periodic_weights(const AxisGrid& g, double x) {
    const std::size_t n = g.size();
    const double period = g.period;
    const double h = period / static_cast<double>(n);
    std::vector<double> w(n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = x - g.points[j];
        d -= period * std::round(d / period);
        if (std::abs(d) < 1e-12 * h) return unit(n, j);
        const double s = std::sin(kPi * d / period);
        const double top = std::sin(static_cast<double>(n) * kPi * d / period);
        w[j] = n % 2 == 1 ? top / (static_cast<double>(n) * s)
                          : top * std::cos(kPi * d / period) / (static_cast<double>(n) * s);
    }
    return w;
}

std::vector<double> aperiodic_weights(const AxisGrid& g, double x) {
    const std::size_t n = g.size();
    const double a = g.points.front();
    const double b = g.points.back();
    const double span = b - a;
    if (x < a - 1e-9 * span || x > b + 1e-9 * span) throw DomainError("evaluation point outside the sampled span");
    const auto intervals = static_cast<double>(n - 1);
    const double u = std::clamp((x - a) / span, 0.0, 1.0);
    const double pos = u * intervals;
    if (std::abs(pos - std::round(pos)) < 1e-12) return unit(n, static_cast<std::size_t>(std::round(pos)));

    std::vector<double> w(n, 0.0);
    w.front() = 1.0 - u;
    w.back() = u;
    for (std::size_t j = 1; j + 1 < n; ++j) {
        const double xj = static_cast<double>(j) / intervals;
        double k = 0.0;
        for (std::size_t q = 1; q + 1 < n; ++q) {
            const auto qd = static_cast<double>(q);
            k += std::sin(qd * kPi * u) * std::sin(qd * kPi * xj);
        }
        k *= 2.0 / intervals;
        w[j] += k;
        w.front() -= k * (1.0 - xj);
        w.back() -= k * xj;
    }
    return w;
}

// dst[i] += w * src[i]
void axpy(double w, const double* src, double* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += w * src[i];
}

// Contracts the leading dimension (size n) of a row-major block.
void contract_leading(std::span<const double> block, std::span<const double> weights, std::vector<double>& out) {
    const std::size_t n = weights.size();
    const std::size_t rest = block.size() / n;
    out.assign(rest, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        if (weights[j] != 0.0) axpy(weights[j], block.data() + j * rest, out.data(), rest);
    }
}

std::size_t checked_product(const std::vector<std::size_t>& dims) {
    std::size_t p = 1;
    for (auto d : dims) {
        if (d != 0 && p > std::numeric_limits<std::size_t>::max() / d) throw BudgetError("grid size overflows");
        p *= d;
    }
    return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Scans

std::vector<double> MerScan::slice(std::size_t i) const {
    std::vector<double> s(responses.size());
    for (std::size_t r = 0; r < responses.size(); ++r) s[r] = responses[r][i];
    return s;
}

MerScan pj_scan(const ResponseContext& ctx, const BitSequence& seq, const JitterSpec& spec, int m_j, int jobs) {
    spec.validate();
    MerScan scan{seq, ScanAxis::PjPhase, 0, 0.0, spec.t0_grid(), {}};
    std::vector<std::optional<Waveform>> rows(scan.grid.size());
    parallel_for(rows.size(), jobs, [&](std::size_t i) {
        rows[i] = ctx.respond(seq, spec, JitterAssignment::zero(m_j, scan.grid[i]), m_j);
    });
    scan.responses.reserve(rows.size());
    for (auto& r : rows) scan.responses.push_back(std::move(*r));
    return scan;
}

MerScan rj_scan(const ResponseContext& ctx, const BitSequence& seq, const JitterSpec& spec,
                const JitterAssignment& fixed, int k, int jobs) {
    spec.validate();
    if (!(spec.sigma_rj > 0.0)) throw DomainError("RJ scan requires sigma_RJ > 0");
    if (k < -1 || k > fixed.max_index) throw DomainError("RJ scan index outside the jitter range");
    MerScan scan{seq, ScanAxis::RjOffset, k, fixed.t0, spec.rj_grid(), {}};
    std::vector<std::optional<Waveform>> rows(scan.grid.size());
    parallel_for(rows.size(), jobs, [&](std::size_t i) {
        auto jit = fixed;
        jit.set_rj_offset(k, scan.grid[i]);
        rows[i] = ctx.respond(seq, spec, jit, fixed.max_index);
    });
    scan.responses.reserve(rows.size());
    for (auto& r : rows) scan.responses.push_back(std::move(*r));
    return scan;
}

// ---------------------------------------------------------------------------
// Cutoff detection and plans

double cutoff_frequency(std::span<const double> curve, double spacing, const CutoffOptions& options) {
    if (curve.size() < 4) throw DomainError("cutoff detection needs at least 4 samples");
    if (!(spacing > 0.0)) throw DomainError("axis spacing must be positive");
    AmplitudeSpectrum dft(curve.size());
    std::vector<double> amp;
    const auto taper = options.hann ? hann(curve.size()) : std::vector<double>{};
    // The mean is removed so the taper's main lobe does not leak DC into bin 1.
    std::vector<double> x(curve.begin(), curve.end());
    if (options.hann) {
        const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
        for (auto& v : x) v -= mean;
    }
    dft.compute(x, taper, amp);
    const double k = highest_bin(amp, options.threshold_frac * options.amplitude);
    return k / (static_cast<double>(curve.size()) * spacing);
}

double max_cutoff(const MerScan& scan, const CutoffOptions& options) {
    if (scan.responses.empty()) throw DomainError("empty scan");
    if (scan.grid.size() < 4) throw DomainError("cutoff detection needs at least 4 scan rows");
    const double spacing = scan.grid[1] - scan.grid[0];
    const std::size_t n = scan.grid.size();
    const bool taper = options.hann || scan.axis == ScanAxis::RjOffset;
    const auto window = taper ? hann(n) : std::vector<double>{};
    const double threshold = options.threshold_frac * options.amplitude;

    AmplitudeSpectrum dft(n);
    std::vector<double> amp;
    double best = 0.0;
    for (std::size_t i = 0; i < scan.window_samples(); ++i) {
        auto x = scan.slice(i);
        if (taper) {
            const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
            for (auto& v : x) v -= mean;
        }
        dft.compute(x, window, amp);
        best = std::max(best, highest_bin(amp, threshold));
    }
    return best / (static_cast<double>(n) * spacing);
}

PlanEntry sampling_plan(double f_cut_max, double axis_span, double oversample, std::string axis) {
    if (!(f_cut_max >= 0.0)) throw DomainError("cutoff frequency must be non-negative");
    if (!(axis_span >= 0.0)) throw DomainError("axis span must be non-negative");
    if (!(oversample > 0.0)) throw DomainError("oversampling factor must be positive");
    PlanEntry e;
    e.axis = std::move(axis);
    if (f_cut_max == 0.0 || axis_span == 0.0) {
        e.f_cut = f_cut_max;
        e.f_s = 0.0;
        e.t_s = axis_span;
        e.num = 1;
        return e;
    }
    e.f_cut = f_cut_max;
    e.f_s = oversample * f_cut_max;
    e.t_s = 1.0 / e.f_s;
    // Guard against span/T_s landing a hair above an integer.
    e.num = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(axis_span / e.t_s - 1e-9)));
    return e;
}

const PlanEntry& SamplingPlan::rj_at(int m) const {
    if (m < -1 || m > m_j) throw DomainError("plan index outside the jitter range");
    return rj.at(static_cast<std::size_t>(m + 1));
}

SamplingPlan make_sampling_plan(const ResponseContext& ctx, const JitterSpec& spec, int m_b, int m_j,
                                const PlanOptions& options) {
    spec.validate();
    if (m_j < 0 || m_j > m_b) throw DomainError("plan orders must satisfy 0 <= m_j <= m_b");
    const auto alt = BitSequence::alternating(m_b, ctx.period);
    SamplingPlan plan;
    plan.m_j = m_j;

    double f_pj = 0.0;
    if (spec.a_pj > 0.0) f_pj = max_cutoff(pj_scan(ctx, alt, spec, m_j, options.jobs), options.cutoff);
    plan.pj = sampling_plan(f_pj, spec.t_pj, options.oversample, "pj");

    const double span = 2.0 * spec.rj_limit();
    const double threshold = options.cutoff.threshold_frac * options.cutoff.amplitude;
    for (int k = -1; k <= m_j; ++k) {
        double f = 0.0;
        double trend = 0.0;
        if (spec.sigma_rj > 0.0) {
            const auto fixed = JitterAssignment::zero(m_j, spec.t_pj);
            const auto scan = rj_scan(ctx, alt, spec, fixed, k, options.jobs);
            f = max_cutoff(scan, options.cutoff);
            for (std::size_t i = 0; i < scan.window_samples(); ++i) {
                trend = std::max(trend, std::abs(scan.responses.back()[i] - scan.responses.front()[i]));
            }
        }
        auto entry = sampling_plan(f, span, options.oversample, "rj" + std::to_string(k));
        // The taper hides a monotone drift from the spectrum; the end samples carry it.
        if (entry.num == 1 && trend >= threshold) {
            entry.num = 2;
            entry.t_s = span;
        }
        plan.rj.push_back(std::move(entry));
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Axis reconstruction

AxisGrid AxisGrid::pj(const JitterSpec& spec, std::size_t num) {
    if (num < 1) throw DomainError("grid needs at least one point");
    AxisGrid g;
    g.periodic = true;
    g.period = spec.t_pj;
    for (std::size_t j = 0; j < num; ++j) {
        g.points.push_back(spec.t_pj * static_cast<double>(j + 1) / static_cast<double>(num));
    }
    return g;
}

AxisGrid AxisGrid::rj(const JitterSpec& spec, std::size_t num) {
    if (num < 1) throw DomainError("grid needs at least one point");
    AxisGrid g;
    const double limit = spec.rj_limit();
    if (num == 1) {
        g.points = {0.0};
        return g;
    }
    if (!(limit > 0.0)) throw DomainError("a multi-point RJ grid requires sigma_RJ > 0");
    for (std::size_t j = 0; j < num; ++j) {
        g.points.push_back(-limit + 2.0 * limit * static_cast<double>(j) / static_cast<double>(num - 1));
    }
    g.points.back() = limit;
    return g;
}

std::vector<double> interpolation_weights(const AxisGrid& grid, double x) {
    if (grid.points.empty()) throw DomainError("empty interpolation grid");
    if (grid.size() == 1) return {1.0};
    return grid.periodic ? periodic_weights(grid, x) : aperiodic_weights(grid, x);
}

std::vector<double> reconstruct_axis(std::span<const double> rows, std::size_t width, const AxisGrid& grid,
                                     std::span<const double> target) {
    const std::size_t n = grid.size();
    if (rows.size() != n * width) throw DomainError("row block does not match the grid");
    std::vector<double> out(target.size() * width, 0.0);
    for (std::size_t t = 0; t < target.size(); ++t) {
        const auto w = interpolation_weights(grid, target[t]);
        for (std::size_t j = 0; j < n; ++j) {
            if (w[j] != 0.0) axpy(w[j], rows.data() + j * width, out.data() + t * width, width);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tensors

std::vector<std::size_t> MerTensor::shape() const {
    std::vector<std::size_t> s;
    for (const auto& g : grids) s.push_back(g.size());
    return s;
}

std::size_t MerTensor::points() const { return checked_product(shape()); }

std::span<const double> MerTensor::at(std::span<const std::size_t> index) const {
    if (index.size() != grids.size()) throw DomainError("tensor index has the wrong rank");
    std::size_t flat = 0;
    for (std::size_t d = 0; d < grids.size(); ++d) {
        if (index[d] >= grids[d].size()) throw DomainError("tensor index out of range");
        flat = flat * grids[d].size() + index[d];
    }
    return std::span<const double>(data).subspan(flat * window, window);
}

MerTensor build_mer_tensor(const ResponseContext& ctx, const BitSequence& seq, const JitterSpec& spec,
                           const SamplingPlan& plan, double t0, const TensorOptions& options) {
    const int m_j = plan.m_j;
    if (static_cast<int>(plan.rj.size()) != m_j + 2) throw DomainError("plan does not cover edges -1..m_j");
    MerTensor t{seq, t0, m_j, {}, ctx.window_samples(), {}};
    for (int m = -1; m <= m_j; ++m) {
        const bool absent = options.collapse_absent_edges && !seq.has_edge(m);
        t.grids.push_back(AxisGrid::rj(spec, absent ? 1 : plan.rj_at(m).num));
    }
    const auto dims = t.shape();
    const std::size_t count = checked_product(dims);
    if (count > options.budget) {
        throw BudgetError("tensor needs " + std::to_string(count) + " simulations, budget is " +
                          std::to_string(options.budget));
    }
    t.data.assign(count * t.window, 0.0);
    parallel_for(count, options.jobs, [&](std::size_t flat) {
        auto jit = JitterAssignment::zero(m_j, t0);
        std::size_t rem = flat;
        for (int d = static_cast<int>(dims.size()) - 1; d >= 0; --d) {
            const auto i = rem % dims[d];
            rem /= dims[d];
            jit.set_rj_offset(d - 1, t.grids[d].points[i]);
        }
        const auto w = ctx.respond(seq, spec, jit, m_j);
        std::copy(w.samples().begin(), w.samples().end(), t.data.begin() + static_cast<long>(flat * t.window));
    });
    return t;
}

MerTensor reconstruct_tensor(const MerTensor& coarse, std::span<const double> target, std::span<const int> order) {
    std::vector<int> dims_order(order.begin(), order.end());
    if (dims_order.empty()) {
        for (int m = -1; m <= coarse.m_j; ++m) dims_order.push_back(m);
    }
    if (dims_order.size() != coarse.grids.size()) throw DomainError("reconstruction order must list every dimension");

    MerTensor out = coarse;
    std::vector<bool> done(coarse.grids.size(), false);
    for (int m : dims_order) {
        const auto d = static_cast<std::size_t>(m + 1);
        if (d >= out.grids.size() || done[d]) throw DomainError("reconstruction order is not a permutation");
        done[d] = true;

        const auto shape = out.shape();
        std::size_t outer = 1;
        for (std::size_t k = 0; k < d; ++k) outer *= shape[k];
        std::size_t inner = out.window;
        for (std::size_t k = d + 1; k < shape.size(); ++k) inner *= shape[k];
        const std::size_t n = shape[d];

        std::vector<std::vector<double>> weights(target.size());
        for (std::size_t t = 0; t < target.size(); ++t) weights[t] = interpolation_weights(out.grids[d], target[t]);

        std::vector<double> next(outer * target.size() * inner, 0.0);
        for (std::size_t o = 0; o < outer; ++o) {
            const double* src = out.data.data() + o * n * inner;
            double* dst = next.data() + o * target.size() * inner;
            for (std::size_t t = 0; t < target.size(); ++t) {
                for (std::size_t j = 0; j < n; ++j) {
                    if (weights[t][j] != 0.0) axpy(weights[t][j], src + j * inner, dst + t * inner, inner);
                }
            }
        }
        out.data = std::move(next);
        out.grids[d].points.assign(target.begin(), target.end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// MerModel

MerModel MerModel::build(const ResponseContext& ctx, const JitterSpec& spec, const SamplingPlan& plan,
                         const ResponseRequirement& req, const Options& options) {
    spec.validate();
    if (plan.m_j != req.m_j) throw DomainError("plan and requirement disagree on m_j");
    MerModel model;
    model.m_b_ = req.m_b;
    model.m_j_ = req.m_j;
    model.window_ = ctx.window_samples();
    model.window_start_ = ctx.window_start();
    model.dt_ = ctx.dt();
    model.period_ = ctx.period;
    model.spec_ = spec;

    const std::size_t count = static_cast<std::size_t>(req.sequence_count);
    std::vector<BitSequence> seqs;
    std::vector<std::size_t> pj_num(count);
    std::size_t total = 0;
    for (std::size_t code = 0; code < count; ++code) {
        seqs.push_back(BitSequence::from_code(code, req.m_b, ctx.period));
        bool jittered = false;
        std::size_t points = 1;
        for (int m = -1; m <= req.m_j; ++m) {
            if (!seqs.back().has_edge(m)) continue;
            jittered = true;
            points *= plan.rj_at(m).num;
        }
        pj_num[code] = (jittered && spec.a_pj > 0.0) ? plan.pj.num : 1;
        if (options.tensor.collapse_absent_edges) {
            total += pj_num[code] * points;
        } else {
            std::size_t full = 1;
            for (const auto& e : plan.rj) full *= e.num;
            total += pj_num[code] * full;
        }
    }
    if (total > options.max_simulations) {
        throw BudgetError("MER model needs " + std::to_string(total) + " simulations, limit is " +
                          std::to_string(options.max_simulations));
    }

    model.entries_.resize(count);
    auto inner = options.tensor;
    inner.jobs = 1;
    parallel_for(count, options.tensor.jobs, [&](std::size_t code) {
        Entry& e = model.entries_[code];
        e.pj = AxisGrid::pj(spec, pj_num[code]);
        for (double t0 : e.pj.points) {
            auto t = build_mer_tensor(ctx, seqs[code], spec, plan, t0, inner);
            if (e.rj.empty()) e.rj = t.grids;
            e.data.insert(e.data.end(), t.data.begin(), t.data.end());
        }
    });
    model.simulations_ = total;
    return model;
}

const MerModel::Entry& MerModel::entry(std::uint64_t code) const {
    if (code >= entries_.size()) throw DomainError("sequence code outside the MER model");
    return entries_[code];
}

void MerModel::contract_phase(std::uint64_t code, double t0, std::vector<double>& out) const {
    const Entry& e = entry(code);
    if (e.pj.size() == 1) {
        out.assign(e.data.begin(), e.data.end());
        return;
    }
    contract_leading(e.data, interpolation_weights(e.pj, t0), out);
}

void MerModel::evaluate_contracted(std::uint64_t code, std::span<const double> contracted,
                                   std::span<const double> rj, std::span<double> out,
                                   std::vector<double>& scratch) const {
    const Entry& e = entry(code);
    if (rj.size() != e.rj.size()) throw DomainError("RJ offsets must cover edges -1..m_j");
    if (out.size() != window_) throw DomainError("output span must hold one window");
    const double limit = spec_.rj_limit() * (1.0 + 1e-12);
    std::span<const double> cur = contracted;
    std::vector<double> buffer;
    for (std::size_t d = 0; d < e.rj.size(); ++d) {
        if (std::abs(rj[d]) > limit) throw DomainError("RJ offset outside the sampled range");
        if (e.rj[d].size() == 1) continue;
        contract_leading(cur, interpolation_weights(e.rj[d], rj[d]), buffer);
        scratch.swap(buffer);
        cur = scratch;
    }
    if (cur.size() != window_) throw DomainError("contracted tensor has the wrong size");
    std::copy(cur.begin(), cur.end(), out.begin());
}

Waveform MerModel::evaluate(const BitSequence& seq, const JitterAssignment& jit) const {
    if (seq.oldest_index() != m_b_) throw DomainError("sequence length does not match the MER model");
    if (jit.max_index != m_j_) throw DomainError("jitter assignment does not match the MER model");
    std::vector<double> contracted;
    std::vector<double> scratch;
    contract_phase(seq.code(), jit.t0, contracted);
    std::vector<double> out(window_);
    evaluate_contracted(seq.code(), contracted, jit.rj_offsets, out, scratch);
    return Waveform(window_start_, dt_, std::move(out));
}

namespace {

constexpr char kModelMagic[8] = {'M', 'E', 'R', 'M', 'O', 'D', '0', '1'};

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw IoError("truncated MER model image");
    return v;
}

void put_doubles(std::ostream& os, const std::vector<double>& v) {
    put<std::uint64_t>(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& is, std::uint64_t limit) {
    const auto n = get<std::uint64_t>(is);
    if (n > limit) throw IoError("MER model image has an implausible array length");
    std::vector<double> v(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw IoError("truncated MER model image");
    return v;
}

void put_grid(std::ostream& os, const AxisGrid& g) {
    put<std::uint8_t>(os, g.periodic ? 1 : 0);
    put(os, g.period);
    put_doubles(os, g.points);
}

AxisGrid get_grid(std::istream& is) {
    AxisGrid g;
    g.periodic = get<std::uint8_t>(is) != 0;
    g.period = get<double>(is);
    g.points = get_doubles(is, 1 << 20);
    return g;
}

}  // namespace

void MerModel::save(std::ostream& os) const {
    os.write(kModelMagic, sizeof kModelMagic);
    put<std::int32_t>(os, m_b_);
    put<std::int32_t>(os, m_j_);
    put<std::uint64_t>(os, window_);
    put(os, window_start_);
    put(os, dt_);
    put(os, period_);
    put(os, spec_.a_pj);
    put(os, spec_.t_pj);
    put<std::int32_t>(os, spec_.t0_steps);
    put(os, spec_.sigma_rj);
    put(os, spec_.rj_range);
    put<std::int32_t>(os, spec_.rj_steps);
    put<std::uint64_t>(os, simulations_);
    put<std::uint64_t>(os, entries_.size());
    for (const auto& e : entries_) {
        put_grid(os, e.pj);
        put<std::uint64_t>(os, e.rj.size());
        for (const auto& g : e.rj) put_grid(os, g);
        put_doubles(os, e.data);
    }
    if (!os) throw IoError("failed writing MER model image");
}

MerModel MerModel::load(std::istream& is) {
    char magic[sizeof kModelMagic];
    is.read(magic, sizeof magic);
    if (!is || !std::equal(magic, magic + sizeof magic, kModelMagic)) throw IoError("not a MER model image");
    MerModel m;
    m.m_b_ = get<std::int32_t>(is);
    m.m_j_ = get<std::int32_t>(is);
    m.window_ = get<std::uint64_t>(is);
    m.window_start_ = get<double>(is);
    m.dt_ = get<double>(is);
    m.period_ = get<double>(is);
    m.spec_.a_pj = get<double>(is);
    m.spec_.t_pj = get<double>(is);
    m.spec_.t0_steps = get<std::int32_t>(is);
    m.spec_.sigma_rj = get<double>(is);
    m.spec_.rj_range = get<double>(is);
    m.spec_.rj_steps = get<std::int32_t>(is);
    m.simulations_ = get<std::uint64_t>(is);
    const auto count = get<std::uint64_t>(is);
    if (m.m_b_ < 0 || m.m_b_ > 62 || m.m_j_ < 0 || m.m_j_ > m.m_b_ || count != (std::uint64_t{1} << (m.m_b_ + 2))) {
        throw IoError("MER model image header is inconsistent");
    }
    m.entries_.resize(count);
    for (auto& e : m.entries_) {
        e.pj = get_grid(is);
        const auto dims = get<std::uint64_t>(is);
        if (dims != static_cast<std::uint64_t>(m.m_j_ + 2)) throw IoError("MER model image has a bad RJ rank");
        e.rj.resize(dims);
        for (auto& g : e.rj) g = get_grid(is);
        std::uint64_t expect = e.pj.size() * m.window_;
        for (const auto& g : e.rj) expect *= g.size();
        e.data = get_doubles(is, expect);
        if (e.data.size() != expect) throw IoError("MER model image has a bad tensor size");
    }
    return m;
}

}  // namespace mereye
