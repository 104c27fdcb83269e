#include "mereye/mer.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>
#include <sstream>

using namespace mereye;
using namespace mereye::test;

namespace {

constexpr double kPi = std::numbers::pi;

CutoffOptions fine_cutoff() {
    CutoffOptions c;
    c.threshold_frac = 0.005;
    c.amplitude = kSwing;
    return c;
}

PlanOptions plan_options() {
    PlanOptions o;
    o.cutoff = fine_cutoff();
    return o;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

SamplingPlan fixed_plan(std::vector<std::size_t> rj_nums, std::size_t pj_num) {
    SamplingPlan p;
    p.m_j = static_cast<int>(rj_nums.size()) - 2;
    p.pj.num = pj_num;
    for (auto n : rj_nums) {
        PlanEntry e;
        e.num = n;
        p.rj.push_back(e);
    }
    return p;
}

}  // namespace

// --- cutoff detection ------------------------------------------------------------------

TEST(Cutoff, ConstantCurveIsDcOnly) {
    const std::vector<double> c(64, 3.3);
    EXPECT_EQ(cutoff_frequency(c, 1e-9, fine_cutoff()), 0.0);
}

TEST(Cutoff, PureHarmonicLandsOnItsBin) {
    const std::size_t n = 100;
    const double spacing = 1.18e-9;
    for (int k : {1, 7, 23}) {
        std::vector<double> c(n);
        for (std::size_t i = 0; i < n; ++i) c[i] = 1.0 + 0.2 * std::sin(2 * kPi * k * static_cast<double>(i) / n);
        EXPECT_DOUBLE_EQ(cutoff_frequency(c, spacing, fine_cutoff()), k / (n * spacing)) << k;
    }
}

TEST(Cutoff, AgreesWithDirectDft) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 0.05);
    for (bool taper : {false, true}) {
        for (std::size_t n : {17UL, 64UL, 100UL}) {
            std::vector<double> c(n);
            for (std::size_t i = 0; i < n; ++i) c[i] = g(rng) + std::exp(-0.01 * static_cast<double>(i * i));
            auto opt = fine_cutoff();
            opt.hann = taper;
            EXPECT_DOUBLE_EQ(cutoff_frequency(c, 1e-10, opt), oracle::cutoff(c, 1e-10, 0.025, taper));
        }
    }
}

TEST(Cutoff, RejectsShortCurves) {
    const std::vector<double> c(3, 0.0);
    EXPECT_THROW((void)cutoff_frequency(c, 1.0, fine_cutoff()), DomainError);
}

TEST(MaxCutoff, IsMaximumOverWindowSlices) {
    const auto ctx = reference_context(400.0);
    const auto seq = BitSequence::alternating(3, kPeriod);
    const auto spec = reference_jitter();
    const auto pj = pj_scan(ctx, seq, spec, 3);
    double expect = 0.0;
    for (std::size_t i = 0; i < pj.window_samples(); ++i) {
        expect = std::max(expect, oracle::cutoff(pj.slice(i), pj.grid[1] - pj.grid[0], 0.025, false));
    }
    EXPECT_DOUBLE_EQ(max_cutoff(pj, fine_cutoff()), expect);
    EXPECT_GT(expect, 0.0);

    const auto rj = rj_scan(ctx, seq, spec, JitterAssignment::zero(3, spec.t_pj), 0);
    expect = 0.0;
    for (std::size_t i = 0; i < rj.window_samples(); ++i) {
        expect = std::max(expect, oracle::cutoff(rj.slice(i), rj.grid[1] - rj.grid[0], 0.025, true));
    }
    EXPECT_DOUBLE_EQ(max_cutoff(rj, fine_cutoff()), expect);
}

// --- sampling plans ----------------------------------------------------------------------

TEST(SamplingPlan, PjWorkedNumbers) {
    const auto e = sampling_plan(14.6e6, 118e-9, 3.0, "pj");
    EXPECT_NEAR(e.f_s, 43.8e6, 1.0);
    EXPECT_NEAR(e.t_s, 22.8e-9, 0.05e-9);
    EXPECT_EQ(e.num, 6U);
    EXPECT_EQ(e.axis, "pj");
}

TEST(SamplingPlan, RjWorkedNumbers) {
    // The interval matches the published row; the count follows ceil(span / T_s).
    const auto e = sampling_plan(2.08e9, 4e-9);
    EXPECT_NEAR(e.t_s, 0.160e-9, 0.001e-9);
    EXPECT_EQ(e.num, 25U);
}

TEST(SamplingPlan, FlatAxisNeedsOneSample) {
    const auto e = sampling_plan(0.0, 118e-9);
    EXPECT_EQ(e.num, 1U);
    EXPECT_EQ(e.f_s, 0.0);
    EXPECT_EQ(e.t_s, 118e-9);
}

TEST(SamplingPlan, ExactMultipleDoesNotRoundUp) {
    EXPECT_EQ(sampling_plan(1.0 / 3.0, 5.0, 3.0).num, 5U);
    EXPECT_EQ(sampling_plan(1.0 / 3.0, 5.0001, 3.0).num, 6U);
}

TEST(SamplingPlan, CountGrowsWithCutoff) {
    std::size_t last = 0;
    for (double f = 1e6; f < 1e9; f *= 1.7) {
        const auto n = sampling_plan(f, 118e-9).num;
        EXPECT_GE(n, last);
        last = n;
    }
}

TEST(SamplingPlan, ReferenceLinkPlan) {
    const auto plan = make_sampling_plan(reference_context(400.0), reference_jitter(), 3, 3, plan_options());
    EXPECT_EQ(plan.m_j, 3);
    ASSERT_EQ(plan.rj.size(), 5U);
    EXPECT_GE(plan.pj.num, 2U);
    EXPECT_LE(plan.pj.num, 100U);
    for (int m = -1; m <= 3; ++m) EXPECT_EQ(plan.rj_at(m).axis, "rj" + std::to_string(m));
    // Older edges disturb the window less.
    EXPECT_GE(plan.rj_at(0).num, plan.rj_at(3).num);
}

TEST(SamplingPlan, DegenerateJitterCollapses) {
    auto spec = reference_jitter();
    spec.a_pj = 0.0;
    spec.sigma_rj = 0.0;
    const auto plan = make_sampling_plan(reference_context(200.0), spec, 2, 2, plan_options());
    EXPECT_EQ(plan.pj.num, 1U);
    for (const auto& e : plan.rj) EXPECT_EQ(e.num, 1U);
}

// --- scans -------------------------------------------------------------------------------

TEST(PjScan, RowsEqualDirectSimulations) {
    const auto ctx = reference_context(200.0);
    const auto seq = BitSequence::alternating(2, kPeriod);
    const auto spec = reference_jitter();
    const auto scan = pj_scan(ctx, seq, spec, 2);
    ASSERT_EQ(scan.responses.size(), 100U);
    for (std::size_t r = 0; r < 100; ++r) {
        EXPECT_EQ(scan.grid[r], spec.t0_grid()[r]);
        EXPECT_EQ(scan.responses[r], ctx.respond(seq, spec, JitterAssignment::zero(2, scan.grid[r]), 2));
    }
}

TEST(PjScan, NoPjMeansIdenticalRows) {
    const auto ctx = reference_context(400.0);
    auto spec = reference_jitter();
    spec.a_pj = 0.0;
    const auto scan = pj_scan(ctx, BitSequence::alternating(3, kPeriod), spec, 3);
    for (const auto& r : scan.responses) EXPECT_EQ(r, scan.responses.front());
}

TEST(PjScan, IdealWireRowsAreShiftedRamps) {
    // Through an ideal wire the window is the stimulus itself: a sum of
    // sampled ramps whose centres follow the PJ displacement.
    const auto ctx = lti_context(LtiChannelModel::identity(kDt), linear_slewed_driver());
    const auto seq = BitSequence::alternating(2, kPeriod);
    const auto spec = reference_jitter();
    const auto scan = pj_scan(ctx, seq, spec, 2);
    const double width = 5.0 / 5e8;
    const double lead = -ctx.edges.rise().t0();
    auto ramp = [&](double t) { return std::clamp(5.0 * (t + lead) / width, 0.0, 5.0); };
    double worst = 0.0;
    for (std::size_t r = 0; r < scan.responses.size(); ++r) {
        for (std::size_t i = 0; i < scan.window_samples(); ++i) {
            const double t = scan.responses[r].time_at(i);
            // alternating from b_2 = 0: edges at m = 1 (0 -> 1), 0 (1 -> 0), -1 (0 -> 1)
            double v = 0.0;
            for (int m = 1; m >= -1; --m) {
                const double at = oracle::pj_edge_time(m, kPeriod, spec.a_pj, spec.t_pj, scan.grid[r]);
                v += (m % 2 == 0 ? -1.0 : 1.0) * ramp(t - at);
            }
            worst = std::max(worst, std::abs(scan.responses[r][i] - v));
        }
    }
    // Limited by the fractional-delay kernel at the ramp corners.
    EXPECT_LT(worst, 2e-3 * kSwing);
}

TEST(RjScan, RowsEqualDirectSimulations) {
    const auto ctx = reference_context(400.0);
    const auto seq = BitSequence::alternating(3, kPeriod);
    const auto spec = reference_jitter();
    auto fixed = JitterAssignment::zero(3, 37e-9);
    fixed.set_rj_offset(-1, 0.3e-9);
    const auto scan = rj_scan(ctx, seq, spec, fixed, 1);
    ASSERT_EQ(scan.responses.size(), 100U);
    for (std::size_t r = 0; r < 100; r += 9) {
        auto jit = fixed;
        jit.set_rj_offset(1, spec.rj_grid()[r]);
        EXPECT_EQ(scan.responses[r], ctx.respond(seq, spec, jit, 3));
    }
}

TEST(RjScan, OldEdgeOnMatchedLineLeavesWindowUntouched) {
    const auto ctx = reference_context(50.0);
    const auto seq = BitSequence::alternating(2, kPeriod);
    const auto scan = rj_scan(ctx, seq, reference_jitter(), JitterAssignment::zero(2, 0.0), 2);
    for (const auto& r : scan.responses) EXPECT_NEAR(max_abs_diff(r.samples(), scan.responses[0].samples()), 0.0, 1e-12);
}

TEST(RjScan, Rejections) {
    const auto ctx = reference_context(200.0);
    const auto seq = BitSequence::alternating(2, kPeriod);
    EXPECT_THROW((void)rj_scan(ctx, seq, pj_only(), JitterAssignment::zero(2), 0), DomainError);
    EXPECT_THROW((void)rj_scan(ctx, seq, reference_jitter(), JitterAssignment::zero(1), 2), DomainError);
}

// --- axis reconstruction -----------------------------------------------------------------

TEST(ReconstructAxis, CoarseEqualsTargetIsIdentity) {
    const auto spec = reference_jitter();
    for (const auto& grid : {AxisGrid::pj(spec, 6), AxisGrid::rj(spec, 9)}) {
        std::vector<double> rows(grid.size() * 3);
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = std::sin(1.3 * static_cast<double>(i));
        const auto out = reconstruct_axis(rows, 3, grid, grid.points);
        EXPECT_EQ(out, rows);
    }
}

TEST(ReconstructAxis, SingleSampleBroadcasts) {
    const auto spec = reference_jitter();
    const auto grid = AxisGrid::rj(spec, 1);
    const std::vector<double> rows{1.0, 2.0};
    const auto target = spec.rj_grid();
    const auto out = reconstruct_axis(rows, 2, grid, target);
    for (std::size_t t = 0; t < target.size(); ++t) {
        EXPECT_EQ(out[2 * t], 1.0);
        EXPECT_EQ(out[2 * t + 1], 2.0);
    }
}

TEST(ReconstructAxis, PeriodicTrigPolynomialIsExact) {
    const auto spec = reference_jitter();
    for (std::size_t n : {5UL, 6UL, 7UL}) {
        const auto grid = AxisGrid::pj(spec, n);
        const int top = static_cast<int>((n - 1) / 2);
        auto f = [&](double t0) {
            double v = 2.0;
            for (int k = 1; k <= top; ++k) {
                v += 0.3 / k * std::sin(2 * kPi * k * t0 / spec.t_pj + k) + 0.1 * std::cos(2 * kPi * k * t0 / spec.t_pj);
            }
            return v;
        };
        std::vector<double> rows;
        for (double p : grid.points) rows.push_back(f(p));
        const auto target = spec.t0_grid();
        const auto out = reconstruct_axis(rows, 1, grid, target);
        for (std::size_t t = 0; t < target.size(); ++t) EXPECT_NEAR(out[t], f(target[t]), 1e-9) << n;
    }
}

TEST(ReconstructAxis, AperiodicTrendPlusSineSeriesIsExact) {
    const auto spec = reference_jitter();
    const double limit = spec.rj_limit();
    for (std::size_t n : {3UL, 9UL, 15UL}) {
        const auto grid = AxisGrid::rj(spec, n);
        auto f = [&](double x) {
            const double u = (x + limit) / (2 * limit);
            double v = 1.5 - 0.8 * u;
            for (std::size_t q = 1; q + 1 < n; ++q) v += 0.2 / static_cast<double>(q) * std::sin(static_cast<double>(q) * kPi * u);
            return v;
        };
        std::vector<double> rows;
        for (double p : grid.points) rows.push_back(f(p));
        const auto target = spec.rj_grid();
        const auto out = reconstruct_axis(rows, 1, grid, target);
        for (std::size_t t = 0; t < target.size(); ++t) EXPECT_NEAR(out[t], f(target[t]), 1e-6 * kSwing) << n;
    }
}

TEST(ReconstructAxis, OutsideAperiodicSpanRejected) {
    const auto spec = reference_jitter();
    const auto grid = AxisGrid::rj(spec, 5);
    const std::vector<double> rows(5, 0.0);
    const std::vector<double> target{spec.rj_limit() * 1.01};
    EXPECT_THROW((void)reconstruct_axis(rows, 1, grid, target), DomainError);
}

TEST(ReconstructAxis, ReferencePjScanFromPlannedSamples) {
    const auto ctx = reference_context(400.0);
    const auto spec = reference_jitter();
    const auto seq = BitSequence::alternating(3, kPeriod);
    const auto plan = make_sampling_plan(ctx, spec, 3, 3, plan_options());
    const auto grid = AxisGrid::pj(spec, plan.pj.num);
    std::vector<double> rows;
    for (double t0 : grid.points) {
        const auto w = ctx.respond(seq, spec, JitterAssignment::zero(3, t0), 3);
        rows.insert(rows.end(), w.samples().begin(), w.samples().end());
    }
    const auto full = pj_scan(ctx, seq, spec, 3);
    const auto out = reconstruct_axis(rows, ctx.window_samples(), grid, full.grid);
    double worst = 0.0;
    for (std::size_t r = 0; r < full.grid.size(); ++r) {
        const std::span<const double> row(out.data() + r * ctx.window_samples(), ctx.window_samples());
        worst = std::max(worst, max_abs_diff(row, full.responses[r].samples()));
    }
    EXPECT_LE(worst, 0.01 * kSwing) << "pj samples " << plan.pj.num;
}

// --- tensors -----------------------------------------------------------------------------

TEST(MerTensor, PlanProductSimulations) {
    const auto ctx = reference_context(400.0);
    const auto spec = reference_jitter();
    const auto seq = BitSequence::alternating(4, kPeriod);
    const auto plan = fixed_plan({1, 2, 5, 15, 6}, 6);
    TensorOptions opt;
    opt.budget = 900;
    const auto t = build_mer_tensor(ctx, seq, spec, plan, 59e-9, opt);
    EXPECT_EQ(t.points(), 900U);
    EXPECT_EQ(t.data.size(), 900U * ctx.window_samples());

    const std::vector<std::size_t> idx{0, 1, 3, 11, 5};
    auto jit = JitterAssignment::zero(3, 59e-9);
    for (int m = -1; m <= 3; ++m) jit.set_rj_offset(m, t.grids[m + 1].points[idx[m + 1]]);
    const auto direct = ctx.respond(seq, spec, jit, 3);
    const auto got = t.at(idx);
    for (std::size_t i = 0; i < direct.size(); ++i) EXPECT_EQ(got[i], direct[i]);

    opt.budget = 899;
    EXPECT_THROW((void)build_mer_tensor(ctx, seq, spec, plan, 59e-9, opt), BudgetError);
}

TEST(MerTensor, SingleSamplePlanIsOneSimulation) {
    const auto ctx = reference_context(200.0);
    const auto seq = BitSequence::alternating(2, kPeriod);
    const auto spec = reference_jitter();
    const auto t = build_mer_tensor(ctx, seq, spec, fixed_plan({1, 1, 1, 1}, 1), 0.0, {});
    EXPECT_EQ(t.points(), 1U);
    const auto direct = ctx.respond(seq, spec, JitterAssignment::zero(2, 0.0), 2);
    EXPECT_EQ(t.data, std::vector<double>(direct.samples().begin(), direct.samples().end()));
}

TEST(MerTensor, AxesWithoutEdgesCollapse) {
    const auto ctx = reference_context(200.0);
    // b_2..b_-1 = 1 1 0 0: only edge 0 exists.
    const BitSequence seq({1, 1, 0, 0}, kPeriod);
    const auto t = build_mer_tensor(ctx, seq, reference_jitter(), fixed_plan({4, 5, 6, 7}, 1), 0.0, {});
    EXPECT_EQ(t.shape(), (std::vector<std::size_t>{1, 5, 1, 1}));
    TensorOptions full;
    full.collapse_absent_edges = false;
    EXPECT_EQ(build_mer_tensor(ctx, seq, reference_jitter(), fixed_plan({2, 2, 2, 2}, 1), 0.0, full).points(), 16U);
}

namespace {

MerTensor synthetic_tensor(const JitterSpec& spec, std::vector<std::size_t> nums) {
    MerTensor t{BitSequence::alternating(3, kPeriod), 0.0, static_cast<int>(nums.size()) - 2, {}, 2, {}};
    for (auto n : nums) t.grids.push_back(AxisGrid::rj(spec, n));
    const double limit = spec.rj_limit();
    auto factor = [&](std::size_t d, double x) {
        const double u = (x + limit) / (2 * limit);
        const auto n = t.grids[d].size();
        double v = 1.0 + 0.1 * static_cast<double>(d) * u;
        if (n > 2) v += 0.3 * std::sin(static_cast<double>(n - 2) * kPi * u);
        return v;
    };
    const auto shape = t.shape();
    const std::size_t count = t.points();
    for (std::size_t flat = 0; flat < count; ++flat) {
        std::size_t rem = flat;
        double p = 1.0;
        for (int d = static_cast<int>(shape.size()) - 1; d >= 0; --d) {
            p *= factor(static_cast<std::size_t>(d), t.grids[d].points[rem % shape[d]]);
            rem /= shape[d];
        }
        t.data.push_back(p);
        t.data.push_back(-0.5 * p);
    }
    return t;
}

}  // namespace

TEST(ReconstructTensor, CoarseTargetIsIdentity) {
    const auto spec = reference_jitter();
    const auto t = synthetic_tensor(spec, {5, 5, 5});
    const auto out = reconstruct_tensor(t, t.grids[0].points);
    EXPECT_EQ(out.data, t.data);
}

TEST(ReconstructTensor, SeparableSurfaceIsExactAndOrderFree) {
    const auto spec = reference_jitter();
    const auto t = synthetic_tensor(spec, {4, 7, 3});
    const auto exact = synthetic_tensor(spec, {4, 7, 3});
    std::vector<double> target;
    for (int i = 0; i < 21; ++i) target.push_back(-spec.rj_limit() + spec.rj_limit() * i / 10.0);
    const auto out = reconstruct_tensor(t, target);
    EXPECT_EQ(out.shape(), (std::vector<std::size_t>{21, 21, 21}));

    // Rebuild the analytic values on the target lattice.
    const double limit = spec.rj_limit();
    const std::vector<std::size_t> nums{4, 7, 3};
    auto factor = [&](std::size_t d, double x) {
        const double u = (x + limit) / (2 * limit);
        double v = 1.0 + 0.1 * static_cast<double>(d) * u;
        if (nums[d] > 2) v += 0.3 * std::sin(static_cast<double>(nums[d] - 2) * kPi * u);
        return v;
    };
    for (std::size_t a = 0; a < 21; a += 4) {
        for (std::size_t b = 0; b < 21; b += 3) {
            for (std::size_t c = 0; c < 21; c += 5) {
                const std::vector<std::size_t> idx{a, b, c};
                const double p = factor(0, target[a]) * factor(1, target[b]) * factor(2, target[c]);
                EXPECT_NEAR(out.at(idx)[0], p, 1e-6 * kSwing);
                EXPECT_NEAR(out.at(idx)[1], -0.5 * p, 1e-6 * kSwing);
            }
        }
    }
    const std::vector<int> order{1, -1, 0};
    const auto other = reconstruct_tensor(t, target, order);
    EXPECT_LT(max_abs_diff(other.data, out.data), 1e-12);
    (void)exact;

    const std::vector<int> bad{1, 1, 0};
    EXPECT_THROW((void)reconstruct_tensor(t, target, bad), DomainError);
}

// --- MER model -------------------------------------------------------------------------

namespace {

void spot_check(double load, int m_b, int m_j, std::uint64_t seed) {
    const auto ctx = reference_context(load);
    const auto spec = reference_jitter();
    const auto plan = make_sampling_plan(ctx, spec, m_b, m_j, plan_options());
    const auto req = required_responses(m_b, m_j, spec);
    MerModel::Options opt;
    opt.tensor.budget = 100000;
    const auto model = MerModel::build(ctx, spec, plan, req, opt);
    EXPECT_EQ(model.sequence_count(), req.sequence_count);

    std::mt19937_64 rng(seed);
    const auto t0s = spec.t0_grid();
    const auto rjs = spec.rj_grid();
    double worst = 0.0;
    for (int trial = 0; trial < 60; ++trial) {
        const auto code = rng() % req.sequence_count;
        const auto seq = BitSequence::from_code(code, m_b, kPeriod);
        auto jit = JitterAssignment::zero(m_j, t0s[rng() % t0s.size()]);
        for (int m = -1; m <= m_j; ++m) jit.set_rj_offset(m, rjs[rng() % rjs.size()]);
        const auto got = mer_evaluate(model, seq, jit);
        const auto direct = ctx.respond(seq, spec, jit, m_j);
        EXPECT_EQ(got.t0(), direct.t0());
        worst = std::max(worst, max_abs_diff(got.samples(), direct.samples()));
    }
    EXPECT_LE(worst, 0.01 * kSwing) << load << " ohms";
}

}  // namespace

TEST(MerModel, SpotChecksAgainstDirectSimulation) {
    spot_check(10.0, 2, 1, 11);
    spot_check(400.0, 3, 3, 12);
}

TEST(MerModel, RejectsMismatchedQueries) {
    const auto ctx = reference_context(50.0);
    const auto spec = reference_jitter();
    const auto plan = make_sampling_plan(ctx, spec, 1, 0, plan_options());
    const auto model = MerModel::build(ctx, spec, plan, required_responses(1, 0, spec), {});
    EXPECT_THROW((void)model.evaluate(BitSequence::alternating(2, kPeriod), JitterAssignment::zero(0)), DomainError);
    EXPECT_THROW((void)model.evaluate(BitSequence::alternating(1, kPeriod), JitterAssignment::zero(1)), DomainError);
    auto far = JitterAssignment::zero(0);
    far.set_rj_offset(0, 1.1 * spec.rj_limit());
    EXPECT_THROW((void)model.evaluate(BitSequence::alternating(1, kPeriod), far), DomainError);

    MerModel::Options tight;
    tight.max_simulations = 1;
    EXPECT_THROW((void)MerModel::build(ctx, spec, plan, required_responses(1, 0, spec), tight), BudgetError);
}

TEST(MerModel, SaveLoadRoundTrip) {
    const auto ctx = reference_context(20.0);
    const auto spec = reference_jitter();
    const auto plan = make_sampling_plan(ctx, spec, 2, 1, plan_options());
    const auto model = MerModel::build(ctx, spec, plan, required_responses(2, 1, spec), {});
    std::stringstream ss;
    model.save(ss);
    const auto back = MerModel::load(ss);
    EXPECT_EQ(back.m_b(), 2);
    EXPECT_EQ(back.m_j(), 1);
    EXPECT_EQ(back.simulations(), model.simulations());
    auto jit = JitterAssignment::zero(1, 33e-9);
    jit.set_rj_offset(0, 0.7e-9);
    jit.set_rj_offset(1, -1.1e-9);
    for (std::uint64_t code = 0; code < 16; ++code) {
        const auto seq = BitSequence::from_code(code, 2, kPeriod);
        EXPECT_EQ(back.evaluate(seq, jit), model.evaluate(seq, jit));
    }

    std::stringstream truncated(ss.str().substr(0, 40));
    EXPECT_THROW((void)MerModel::load(truncated), IoError);
    std::stringstream garbage("not a model at all");
    EXPECT_THROW((void)MerModel::load(garbage), IoError);
}
