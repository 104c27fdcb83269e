#include "mereye/orders.hpp"

#include "mereye/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace mereye {

namespace {

// Running pointwise bounds, seeded with the zero line.
struct Envelope {
    std::vector<double> upper;
    std::vector<double> lower;

    explicit Envelope(std::size_t n) : upper(n, 0.0), lower(n, 0.0) {}

    void add(std::span<const double> d) {
        if (d.size() != upper.size()) throw DomainError("difference waveforms differ in length");
        for (std::size_t i = 0; i < d.size(); ++i) {
            upper[i] = std::max(upper[i], d[i]);
            lower[i] = std::min(lower[i], d[i]);
        }
    }
    void merge(const Envelope& o) {
        add(o.upper);
        add(o.lower);
    }
    [[nodiscard]] double gap() const {
        double g = 0.0;
        for (std::size_t i = 0; i < upper.size(); ++i) g = std::max(g, upper[i] - lower[i]);
        return g;
    }
};

Waveform subtract(const Waveform& a, const Waveform& b) {
    if (a.size() != b.size()) throw DomainError("response windows differ in length");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] - b[i];
    return Waveform(a.t0(), a.dt(), std::move(d));
}

// Tail codes to test at one m: all of them when they fit the budget, else a
// uniform random draw from a stream keyed by (seed, m).
std::vector<std::uint64_t> tail_codes(int bits, const OrderSearch& search, std::uint64_t stream) {
    std::vector<std::uint64_t> codes;
    if (bits < 63 && (std::uint64_t{1} << bits) <= search.max_seqs_per_m) {
        codes.resize(std::size_t{1} << bits);
        for (std::size_t i = 0; i < codes.size(); ++i) codes[i] = i;
        return codes;
    }
    std::mt19937_64 rng(mix_seed(search.seed, stream));
    codes.resize(search.max_seqs_per_m);
    for (auto& c : codes) {
        c = bits >= 64 ? rng() : rng() & ((std::uint64_t{1} << bits) - 1);
    }
    return codes;
}

// The low `width` bits of `code`, most significant first (oldest bit first).
std::vector<std::uint8_t> unpack_oldest_first(std::uint64_t code, int width) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(width));
    for (int k = 0; k < width; ++k) bits[k] = static_cast<std::uint8_t>((code >> (width - 1 - k)) & 1U);
    return bits;
}

template <typename DistanceAt>
OrderResult scan_orders(const OrderSearch& search, double threshold, DistanceAt distance_at,
                        const char* label) {
    OrderResult result;
    result.threshold = threshold;
    int below = 0;
    for (int m = 1; m <= search.max_m; ++m) {
        const OrderPoint p = distance_at(m);
        result.distances.push_back(p);
        if (p.max_distance >= threshold) {
            result.order = m;
            below = 0;
        } else if (++below == 2) {
            return result;
        }
    }
    if (!result.distances.empty() && result.distances.back().max_distance >= threshold) {
        throw OrderNotConverged(std::string(label) + " order did not converge within max_m = " +
                                    std::to_string(search.max_m),
                                result);
    }
    return result;
}

}  // namespace

void OrderSearch::validate() const {
    if (!(threshold_frac > 0.0 && threshold_frac < 1.0)) throw DomainError("threshold_frac must lie in (0, 1)");
    if (max_m < 1) throw DomainError("max_m must be at least 1");
    if (max_m > 60) throw DomainError("max_m above 60 is not supported");
    if (max_seqs_per_m < 1) throw DomainError("max_seqs_per_m must be at least 1");
    if (tx_points < 2) throw DomainError("the T_x sweep needs at least two points");
}

double envelope_distance(std::span<const Waveform> diffs) {
    if (diffs.empty()) return 0.0;
    Envelope env(diffs.front().size());
    for (const auto& d : diffs) env.add(d.samples());
    return env.gap();
}

Waveform be_diff(const ResponseContext& ctx, std::span<const std::uint8_t> tail, int m) {
    if (m < 1) throw DomainError("bit-effect index must be at least 1");
    if (tail.size() != static_cast<std::size_t>(m)) throw DomainError("tail must hold b_{m-1}..b_0");
    std::vector<std::uint8_t> bits;
    bits.reserve(tail.size() + 2);
    bits.push_back(0);
    bits.insert(bits.end(), tail.begin(), tail.end());
    bits.push_back(tail.back());
    const auto zero = ctx.respond(BitSequence(bits, ctx.period), {});
    bits.front() = 1;
    const auto one = ctx.respond(BitSequence(bits, ctx.period), {});
    return subtract(zero, one);
}

OrderResult be_order(const ResponseContext& ctx, const OrderSearch& search) {
    search.validate();
    const double threshold = search.threshold_frac * ctx.amplitude;
    auto at = [&](int m) {
        const auto codes = tail_codes(m, search, static_cast<std::uint64_t>(m));
        std::vector<Envelope> parts(codes.size(), Envelope(ctx.window_samples()));
        parallel_for(codes.size(), search.jobs, [&](std::size_t i) {
            const auto tail = unpack_oldest_first(codes[i], m);
            parts[i].add(be_diff(ctx, tail, m).samples());
        });
        Envelope env(ctx.window_samples());
        for (const auto& p : parts) env.merge(p);
        return OrderPoint{m, env.gap(), codes.size()};
    };
    return scan_orders(search, threshold, at, "bit-effect");
}

Waveform je_diff(const ResponseContext& ctx, const BitSequence& seq, int m, double t_x) {
    if (m < -1 || !seq.has_edge(m)) throw DomainError("jitter-effect index must carry an edge");
    std::vector<double> offsets(static_cast<std::size_t>(m + 2), 0.0);
    const auto base = ctx.respond(seq, offsets);
    offsets.back() = t_x;
    return subtract(ctx.respond(seq, offsets), base);
}

OrderResult je_order(const ResponseContext& ctx, const JitterSpec& spec, const OrderSearch& search) {
    search.validate();
    spec.validate();
    const double threshold = search.threshold_frac * ctx.amplitude;
    const double t_max = spec.max_displacement();
    std::vector<double> tx(static_cast<std::size_t>(search.tx_points));
    for (int i = 0; i < search.tx_points; ++i) {
        tx[i] = -t_max + 2.0 * t_max * static_cast<double>(i) / (search.tx_points - 1);
    }

    auto at = [&](int m) {
        // b_{m+1} is the complement of b_m, so edge m always exists.
        const auto codes = tail_codes(m + 1, search, 0x4A45000000000000ULL + static_cast<std::uint64_t>(m));
        std::vector<Envelope> parts(codes.size(), Envelope(ctx.window_samples()));
        parallel_for(codes.size(), search.jobs, [&](std::size_t i) {
            auto tail = unpack_oldest_first(codes[i], m + 1);
            std::vector<std::uint8_t> bits;
            bits.reserve(tail.size() + 2);
            bits.push_back(static_cast<std::uint8_t>(1U - tail.front()));
            bits.insert(bits.end(), tail.begin(), tail.end());
            bits.push_back(tail.back());
            const BitSequence seq(std::move(bits), ctx.period);

            std::vector<double> offsets(static_cast<std::size_t>(m + 2), 0.0);
            const auto base = ctx.respond(seq, offsets);
            for (double t : tx) {
                if (t == 0.0) continue;
                offsets.back() = t;
                parts[i].add(subtract(ctx.respond(seq, offsets), base).samples());
            }
        });
        Envelope env(ctx.window_samples());
        for (const auto& p : parts) env.merge(p);
        return OrderPoint{m, env.gap(), codes.size()};
    };
    return scan_orders(search, threshold, at, "jitter-effect");
}

ResponseRequirement required_responses(int m_b, int m_j, const JitterSpec& spec) {
    if (m_b < 0 || m_j < 0) throw DomainError("orders must be non-negative");
    if (m_j > m_b) throw DomainError("jitter-effect order cannot exceed the bit-effect order");
    if (m_b > 60) throw DomainError("bit-effect order too large to enumerate");
    spec.validate();

    ResponseRequirement r;
    r.m_b = m_b;
    r.m_j = m_j;
    for (int m = m_b; m >= -1; --m) r.bit_indexes.push_back(m);
    for (int m = m_j; m >= -1; --m) r.jitter_indexes.push_back(m);
    r.sequence_count = std::uint64_t{1} << (m_b + 2);
    r.pj_grid_mers = r.sequence_count * static_cast<std::uint64_t>(spec.t0_steps);

    constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
    const auto steps = static_cast<std::uint64_t>(spec.rj_steps);
    std::uint64_t entries = 1;
    for (int d = 0; d < m_j + 2; ++d) {
        if (entries > kMax / steps) {
            r.rj_tensor_saturated = true;
            entries = kMax;
            break;
        }
        entries *= steps;
    }
    r.rj_tensor_entries = entries;
    return r;
}

}  // namespace mereye
