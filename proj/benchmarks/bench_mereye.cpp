#include "mereye/eye.hpp"
#include "mereye/mer.hpp"
#include "mereye/orders.hpp"
#include "mereye/system.hpp"

#include <benchmark/benchmark.h>

#include <memory>

using namespace mereye;

namespace {

constexpr double kPeriod = 20e-9;
constexpr double kDt = kPeriod / 200;

LinkParams link(double load) {
    LinkParams p;
    p.driver.kind = TransferKind::Tanh;
    p.driver.gain = 3.0;
    p.driver.slew = 5e8;
    p.z0 = 50.0;
    p.load = load;
    p.line_delay = 5e-9;
    p.alpha = 0.8;
    return p;
}

ResponseContext context(double load) {
    const auto p = link(load);
    return make_response_context(std::make_shared<NonlinearLinkModel>(p), extract_edge_templates(p.driver, kDt),
                                 kPeriod);
}

JitterSpec jitter() {
    JitterSpec s;
    s.a_pj = 1e-9;
    s.t_pj = 118e-9;
    s.sigma_rj = 0.4e-9;
    return s;
}

void BM_ShortTransient(benchmark::State& state) {
    const auto ctx = context(static_cast<double>(state.range(0)));
    const auto seq = BitSequence::alternating(3, kPeriod);
    const auto jit = JitterAssignment::zero(3, jitter().t_pj);
    for (auto _ : state) benchmark::DoNotOptimize(ctx.respond(seq, jitter(), jit, 3));
}
BENCHMARK(BM_ShortTransient)->Arg(10)->Arg(50)->Arg(400);

void BM_LongTransient(benchmark::State& state) {
    const auto ctx = context(200.0);
    const auto lv = received_levels(ctx);
    TransientOptions opt;
    opt.n_bits = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(transient_eye(ctx, jitter(), opt, EyeBins::around(lv.low, lv.high)));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LongTransient)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_PjReconstruction(benchmark::State& state) {
    const auto ctx = context(400.0);
    const auto spec = jitter();
    const auto seq = BitSequence::alternating(3, kPeriod);
    const auto coarse = AxisGrid::pj(spec, 6);
    std::vector<double> rows;
    for (double t0 : coarse.points) {
        const auto w = ctx.respond(seq, spec, JitterAssignment::zero(3, t0), 3);
        rows.insert(rows.end(), w.samples().begin(), w.samples().end());
    }
    const auto target = AxisGrid::pj(spec, 100);
    for (auto _ : state) benchmark::DoNotOptimize(reconstruct_axis(rows, ctx.window_samples(), coarse, target.points));
}
BENCHMARK(BM_PjReconstruction);

struct Assembly {
    ResponseContext ctx;
    ResponseRequirement req;
    MerModel model;
    EyeBins bins;
};

const Assembly& assembly() {
    static const Assembly a = [] {
        auto ctx = context(200.0);
        const auto spec = jitter();
        const int m_b = be_order(ctx, OrderSearch{}).order;
        const int m_j = je_order(ctx, spec, OrderSearch{}).order;
        PlanOptions po;
        po.cutoff.amplitude = ctx.amplitude;
        const auto plan = make_sampling_plan(ctx, spec, m_b, m_j, po);
        auto req = required_responses(m_b, m_j, spec);
        auto model = MerModel::build(ctx, spec, plan, req, MerModel::Options{});
        const auto lv = received_levels(ctx);
        return Assembly{std::move(ctx), std::move(req), std::move(model), EyeBins::around(lv.low, lv.high)};
    }();
    return a;
}

void BM_MonteCarloAssembly(benchmark::State& state) {
    const auto& a = assembly();
    AssemblyOptions opt;
    opt.mode = AssemblyMode::MonteCarlo;
    opt.samples = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(assemble_eye(a.model, a.req, jitter(), opt, a.bins));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MonteCarloAssembly)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
