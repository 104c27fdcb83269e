#include "mereye/orders.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace mereye;
using namespace mereye::test;

namespace {

constexpr long kSpu = 200;

// Bit-effect distances for an FIR channel with ideal step edges, computed by
// direct convolution of a step stimulus over every tail.
std::vector<double> fir_be_distances(const std::vector<double>& taps, double window_start, int max_m) {
    const long ws = std::lround(window_start / kDt);
    std::vector<double> out;
    for (int m = 1; m <= max_m; ++m) {
        std::vector<double> upper(kSpu, 0.0);
        std::vector<double> lower(kSpu, 0.0);
        for (std::uint64_t code = 0; code < (std::uint64_t{1} << m); ++code) {
            std::vector<std::uint8_t> bits{0};
            for (int k = m - 1; k >= 0; --k) bits.push_back(static_cast<std::uint8_t>((code >> k) & 1U));
            bits.push_back(bits.back());
            const long first = -static_cast<long>(m + 1) * kSpu - static_cast<long>(taps.size());
            const auto n = static_cast<std::size_t>(ws - first + kSpu);
            const auto y0 = oracle::convolve(oracle::step_stimulus(bits, first, n, kSpu, 0.0, 5.0), taps);
            bits.front() = 1;
            const auto y1 = oracle::convolve(oracle::step_stimulus(bits, first, n, kSpu, 0.0, 5.0), taps);
            for (long j = 0; j < kSpu; ++j) {
                const auto i = static_cast<std::size_t>(ws - first + j);
                upper[j] = std::max(upper[j], y0[i] - y1[i]);
                lower[j] = std::min(lower[j], y0[i] - y1[i]);
            }
        }
        double gap = 0.0;
        for (long j = 0; j < kSpu; ++j) gap = std::max(gap, upper[j] - lower[j]);
        out.push_back(gap);
    }
    return out;
}

int order_from(const std::vector<double>& d, double threshold) {
    int order = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i] >= threshold) order = static_cast<int>(i) + 1;
    }
    return order;
}

OrderSearch quick_search() {
    OrderSearch s;
    s.max_m = 8;
    return s;
}

}  // namespace

TEST(EnvelopeDistance, IncludesZeroLine) {
    const std::vector<Waveform> one{Waveform(0.0, 1.0, {1.0, 2.0, 0.5})};
    EXPECT_DOUBLE_EQ(envelope_distance(one), 2.0);
    const std::vector<Waveform> two{Waveform(0.0, 1.0, {1.0, -1.0}), Waveform(0.0, 1.0, {-0.5, 0.25})};
    EXPECT_DOUBLE_EQ(envelope_distance(two), 1.5);
    EXPECT_EQ(envelope_distance({}), 0.0);
}

TEST(BeOrder, IdealWireIsZero) {
    const auto ctx = lti_context(LtiChannelModel::identity(kDt), step_driver());
    const auto r = be_order(ctx, quick_search());
    EXPECT_EQ(r.order, 0);
    for (const auto& p : r.distances) EXPECT_EQ(p.max_distance, 0.0);
}

TEST(BeOrder, FirSpanMatchesConvolutionOracle) {
    for (int span : {1, 2, 3, 4}) {
        const auto model = LtiChannelModel::fir_span(kDt, kPeriod, span, 0.6);
        const auto taps = std::vector<double>(model.impulse_response().samples().begin(), model.impulse_response().samples().end());
        const auto ctx = lti_context(model, step_driver());
        const auto r = be_order(ctx, quick_search());
        const auto expect = fir_be_distances(taps, ctx.window_start(), static_cast<int>(r.distances.size()));
        ASSERT_EQ(r.distances.size(), expect.size());
        for (std::size_t i = 0; i < expect.size(); ++i) {
            EXPECT_NEAR(r.distances[i].max_distance, expect[i], 1e-12) << "span " << span << " m " << i + 1;
        }
        EXPECT_EQ(r.order, order_from(expect, 0.01 * 5.0)) << span;
        EXPECT_EQ(r.order, span);
    }
}

TEST(BeDiff, SwapsOnlyTheTargetBit) {
    const auto ctx = reference_context(200.0);
    const std::vector<std::uint8_t> tail{1, 0, 1};
    const auto d = be_diff(ctx, tail, 3);
    const auto zero = ctx.respond(BitSequence({0, 1, 0, 1, 1}, kPeriod), {});
    const auto one = ctx.respond(BitSequence({1, 1, 0, 1, 1}, kPeriod), {});
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(d[i], zero[i] - one[i]);
    EXPECT_THROW((void)be_diff(ctx, tail, 2), DomainError);
    EXPECT_THROW((void)be_diff(ctx, {}, 0), DomainError);
}

TEST(JeDiff, ZeroDisplacementIsZero) {
    const auto ctx = reference_context(400.0);
    const BitSequence seq({0, 1, 1, 0, 0}, kPeriod);
    for (int m : {0, 2}) {
        const auto d = je_diff(ctx, seq, m, 0.0);
        for (double v : d.samples()) EXPECT_EQ(v, 0.0);
    }
    EXPECT_THROW((void)je_diff(ctx, seq, 1, 1e-9), DomainError);
}

TEST(JeDiff, MatchesDirectDisplacedResponse) {
    const auto ctx = reference_context(200.0);
    const BitSequence seq({1, 0, 1, 1}, kPeriod);
    const auto d = je_diff(ctx, seq, 1, -0.7e-9);
    const std::vector<double> shifted{0.0, 0.0, -0.7e-9};
    const std::vector<double> still{0.0, 0.0, 0.0};
    const auto a = ctx.respond(seq, shifted);
    const auto b = ctx.respond(seq, still);
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(d[i], a[i] - b[i]);
}

TEST(Orders, MatchedLineIsShortMemory) {
    const auto ctx = reference_context(50.0);
    EXPECT_LE(be_order(ctx, quick_search()).order, 1);
    EXPECT_LE(je_order(ctx, reference_jitter(), quick_search()).order, 1);
}

TEST(Orders, MismatchedLoadConvergesWithJeNotAboveBe) {
    const auto ctx = reference_context(200.0);
    const auto be = be_order(ctx, quick_search());
    const auto je = je_order(ctx, reference_jitter(), quick_search());
    EXPECT_GE(be.order, 1);
    EXPECT_LE(je.order, be.order);
    EXPECT_LT(be.distances.back().max_distance, be.threshold);
    EXPECT_DOUBLE_EQ(be.threshold, 0.05);
}

TEST(Orders, StrongerMismatchNeedsLongerMemory) {
    const int at50 = be_order(reference_context(50.0), quick_search()).order;
    const int at200 = be_order(reference_context(200.0), quick_search()).order;
    const int at400 = be_order(reference_context(400.0), quick_search()).order;
    EXPECT_LE(at50, at200);
    EXPECT_LT(at200, at400);
}

TEST(Orders, DeterministicAcrossRunsAndJobs) {
    const auto ctx = reference_context(400.0);
    auto s = quick_search();
    s.max_seqs_per_m = 5;  // forces the sampled branch from m = 3
    const auto a = je_order(ctx, reference_jitter(), s);
    s.jobs = 3;
    const auto b = je_order(ctx, reference_jitter(), s);
    ASSERT_EQ(a.distances.size(), b.distances.size());
    for (std::size_t i = 0; i < a.distances.size(); ++i) {
        EXPECT_EQ(a.distances[i].max_distance, b.distances[i].max_distance);
        EXPECT_EQ(a.distances[i].n_sequences, std::min<std::size_t>(5, std::size_t{1} << (i + 2)));
    }
    EXPECT_EQ(a.order, b.order);
}

TEST(Orders, ReportsNonConvergence) {
    auto s = quick_search();
    s.max_m = 1;
    try {
        (void)be_order(reference_context(400.0), s);
        FAIL() << "expected OrderNotConverged";
    } catch (const OrderNotConverged& e) {
        ASSERT_EQ(e.partial().distances.size(), 1U);
        EXPECT_GE(e.partial().distances[0].max_distance, e.partial().threshold);
    }
}

TEST(OrderSearch, Validation) {
    OrderSearch s;
    s.threshold_frac = 0.0;
    EXPECT_THROW(s.validate(), DomainError);
    s = OrderSearch{};
    s.tx_points = 1;
    EXPECT_THROW(s.validate(), DomainError);
    s = OrderSearch{};
    s.max_m = 0;
    EXPECT_THROW(s.validate(), DomainError);
}

TEST(RequiredResponses, CountsFollowOrders) {
    const auto r = required_responses(6, 3, reference_jitter());
    EXPECT_EQ(r.sequence_count, 256U);
    EXPECT_EQ(r.pj_grid_mers, 25600U);
    EXPECT_EQ(r.rj_tensor_entries, 10'000'000'000ULL);
    EXPECT_FALSE(r.rj_tensor_saturated);
    EXPECT_EQ(r.bit_indexes, (std::vector<int>{6, 5, 4, 3, 2, 1, 0, -1}));
    EXPECT_EQ(r.jitter_indexes, (std::vector<int>{3, 2, 1, 0, -1}));
}

TEST(RequiredResponses, ZeroOrders) {
    const auto r = required_responses(0, 0, reference_jitter());
    EXPECT_EQ(r.sequence_count, 4U);
    EXPECT_EQ(r.pj_grid_mers, 400U);
    EXPECT_EQ(r.rj_tensor_entries, 10'000U);
    EXPECT_EQ(r.bit_indexes, (std::vector<int>{0, -1}));
}

TEST(RequiredResponses, SaturatesAndRejects) {
    EXPECT_TRUE(required_responses(20, 12, reference_jitter()).rj_tensor_saturated);
    EXPECT_THROW((void)required_responses(1, 2, reference_jitter()), DomainError);
    EXPECT_THROW((void)required_responses(-1, 0, reference_jitter()), DomainError);
}
