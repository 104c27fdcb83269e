#include "commands.hpp"

#include "mereye/error.hpp"
#include "mereye/io.hpp"
#include "mereye/parallel.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

namespace mereye::cli {

namespace {

// Stream identifiers for the per-component seeds derived from analysis.seed.
constexpr std::uint64_t kOrderStream = 1;
constexpr std::uint64_t kAssemblyStream = 2;
constexpr std::uint64_t kTransientStream = 3;

void note(const Invocation& inv, const std::string& msg) {
    if (inv.log) *inv.log << "mereye: " << msg << '\n';
}

template <typename Writer>
std::string render(Writer&& w) {
    std::ostringstream os;
    w(os);
    return os.str();
}

std::optional<std::string> cached(const Invocation& inv, const std::string& name) {
    if (!inv.cache) return std::nullopt;
    const auto path = *inv.cache / name;
    if (!std::filesystem::exists(path)) return std::nullopt;
    return read_file(path);
}

void store(const Invocation& inv, const std::string& name, const std::string& contents) {
    if (inv.cache) write_file(*inv.cache / name, contents);
}

OrderSearch order_search(const Invocation& inv) {
    const auto& a = inv.config.analysis;
    OrderSearch s;
    s.threshold_frac = a.threshold_frac;
    s.max_m = a.max_m;
    s.max_seqs_per_m = a.max_seqs_per_m;
    s.tx_points = a.tx_points;
    s.seed = mix_seed(a.seed, kOrderStream);
    s.jobs = inv.jobs;
    return s;
}

std::string orders_summary(const RunConfig& cfg, const OrdersOutcome& o) {
    const auto& r = o.requirement;
    KeyValues kv{
        {"m_b", std::to_string(r.m_b)},
        {"m_j", std::to_string(r.m_j)},
        {"be_threshold_v", format_double(o.be.threshold)},
        {"je_threshold_v", format_double(o.je.threshold)},
        {"sequence_count", std::to_string(r.sequence_count)},
        {"pj_grid_mers", std::to_string(r.pj_grid_mers)},
        {"rj_tensor_entries", r.rj_tensor_saturated ? std::string("saturated") : std::to_string(r.rj_tensor_entries)},
        {"orders_fingerprint", fingerprint_hex(fingerprint(cfg, Artifact::Orders))},
    };
    return render([&](std::ostream& os) { write_key_values(os, kv); });
}

int parse_int(const KeyValues& kv, const char* key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw IoError(std::string("orders summary lacks ") + key);
    try {
        std::size_t used = 0;
        const int v = std::stoi(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument(key);
        return v;
    } catch (const std::exception&) {
        throw IoError(std::string("orders summary has a malformed ") + key);
    }
}

OrdersOutcome compute_orders(const Invocation& inv, const ResponseContext& ctx) {
    const auto& cfg = inv.config;
    const auto tag = fingerprint_hex(fingerprint(cfg, Artifact::Orders));
    const auto search = order_search(inv);
    const double threshold = search.threshold_frac * ctx.amplitude;
    OrdersOutcome o;
    const auto be_text = cached(inv, "orders-" + tag + "-be.csv");
    const auto je_text = cached(inv, "orders-" + tag + "-je.csv");
    if (be_text && je_text) {
        std::istringstream be(*be_text);
        std::istringstream je(*je_text);
        o.be = read_orders_csv(be, threshold);
        o.je = read_orders_csv(je, threshold);
        o.cache_hit = true;
        note(inv, "orders: cache hit " + tag);
    } else {
        const auto t = std::chrono::steady_clock::now();
        o.be = be_order(ctx, search);
        o.je = je_order(ctx, cfg.jitter, search);
        const std::chrono::duration<double> took = std::chrono::steady_clock::now() - t;
        note(inv, "orders: m_b = " + std::to_string(o.be.order) + ", m_j = " + std::to_string(o.je.order) + " (" +
                      format_double(std::round(took.count() * 100) / 100) + " s)");
        store(inv, "orders-" + tag + "-be.csv", render([&](std::ostream& os) { write_orders_csv(os, o.be); }));
        store(inv, "orders-" + tag + "-je.csv", render([&](std::ostream& os) { write_orders_csv(os, o.je); }));
    }
    if (o.je.order > o.be.order) {
        throw OrderNotConverged("jitter-effect order " + std::to_string(o.je.order) +
                                    " exceeds bit-effect order " + std::to_string(o.be.order),
                                o.je);
    }
    o.requirement = required_responses(o.be.order, o.je.order, cfg.jitter);
    return o;
}

PlanOptions plan_options(const Invocation& inv, const ResponseContext& ctx) {
    PlanOptions p;
    p.cutoff.threshold_frac = inv.config.analysis.cutoff_threshold_frac;
    p.cutoff.amplitude = ctx.amplitude;
    p.oversample = inv.config.analysis.oversample;
    p.jobs = inv.jobs;
    return p;
}

SamplingPlan compute_plan(const Invocation& inv, const ResponseContext& ctx, int m_b, int m_j) {
    const auto tag = fingerprint_hex(fingerprint(inv.config, Artifact::Plan));
    const auto name = "plan-" + tag + "-" + std::to_string(m_b) + "-" + std::to_string(m_j) + ".csv";
    if (const auto text = cached(inv, name)) {
        std::istringstream is(*text);
        note(inv, "plan: cache hit " + tag);
        return read_plan_csv(is);
    }
    auto plan = make_sampling_plan(ctx, inv.config.jitter, m_b, m_j, plan_options(inv, ctx));
    store(inv, name, render([&](std::ostream& os) { write_plan_csv(os, plan); }));
    return plan;
}

MerModel compute_model(const Invocation& inv, const ResponseContext& ctx, const SamplingPlan& plan,
                       const ResponseRequirement& req, bool& hit) {
    const auto tag = fingerprint_hex(fingerprint(inv.config, Artifact::MerModel));
    const auto name = "mer-" + tag + "-" + std::to_string(req.m_b) + "-" + std::to_string(req.m_j) + ".bin";
    if (const auto bytes = cached(inv, name)) {
        std::istringstream is(*bytes);
        hit = true;
        note(inv, "scans: cache hit " + tag);
        return MerModel::load(is);
    }
    hit = false;
    MerModel::Options opts;
    opts.tensor.budget = inv.config.analysis.tensor_budget;
    opts.tensor.jobs = inv.jobs;
    opts.max_simulations = inv.config.analysis.max_simulations;
    const auto t = std::chrono::steady_clock::now();
    auto model = MerModel::build(ctx, inv.config.jitter, plan, req, opts);
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - t;
    note(inv, "scans: " + std::to_string(model.simulations()) + " simulations (" +
                  format_double(std::round(took.count() * 100) / 100) + " s)");
    if (inv.cache) {
        std::ostringstream os;
        model.save(os);
        store(inv, name, os.str());
    }
    return model;
}

void write_eye_files(const Invocation& inv, const std::string& stem, const EyeDensity& density,
                     const EyeMetrics& metrics) {
    const auto& out = inv.out;
    if (inv.config.output.csv) {
        write_file(out / (stem + "_density.csv"), render([&](std::ostream& os) { write_density_csv(os, density); }));
    }
    if (inv.config.output.pgm) {
        write_file(out / (stem + ".pgm"), render([&](std::ostream& os) { write_density_pgm(os, density); }));
    }
    write_file(out / (stem + "_metrics.txt"),
               render([&](std::ostream& os) { write_key_values(os, metrics_report(metrics)); }));
}

const char* mode_name(AssemblyMode m) { return m == AssemblyMode::Exhaustive ? "exhaustive" : "monte_carlo"; }

}  // namespace

Invocation make_invocation(const std::filesystem::path& config_path, const std::optional<std::filesystem::path>& out,
                           const std::optional<std::uint64_t>& seed, int jobs,
                           const std::optional<std::filesystem::path>& cache, std::ostream* log) {
    Invocation inv;
    inv.config = load_config(config_path);
    if (seed) inv.config.analysis.seed = *seed;
    inv.out = out ? *out : inv.config.output.directory;
    if (jobs < 1) throw ConfigError("--jobs must be at least 1");
    inv.jobs = jobs;
    inv.cache = cache;
    inv.log = log;
    return inv;
}

OrdersOutcome cmd_orders(const Invocation& inv) {
    const auto ctx = make_context(inv.config);
    OrdersOutcome o;
    try {
        o = compute_orders(inv, ctx);
    } catch (const OrderNotConverged& e) {
        write_file(inv.out / "orders_partial.csv",
                   render([&](std::ostream& os) { write_orders_csv(os, e.partial()); }));
        throw;
    }
    write_file(inv.out / "orders_be.csv", render([&](std::ostream& os) { write_orders_csv(os, o.be); }));
    write_file(inv.out / "orders_je.csv", render([&](std::ostream& os) { write_orders_csv(os, o.je); }));
    write_file(inv.out / "orders_summary.txt", orders_summary(inv.config, o));
    return o;
}

SamplingPlan cmd_plan(const Invocation& inv, const std::optional<std::filesystem::path>& orders_summary_path) {
    const auto path = orders_summary_path ? *orders_summary_path : inv.out / "orders_summary.txt";
    if (!std::filesystem::exists(path)) {
        throw IoError("orders summary " + path.string() + " not found; run `mereye orders` first or pass --orders");
    }
    std::istringstream is(read_file(path));
    const auto kv = read_key_values(is);
    const auto fp = kv.find("orders_fingerprint");
    if (fp == kv.end() || fp->second != fingerprint_hex(fingerprint(inv.config, Artifact::Orders))) {
        throw ConfigError("orders summary " + path.string() + " was produced from a different configuration");
    }
    const int m_b = parse_int(kv, "m_b");
    const int m_j = parse_int(kv, "m_j");
    const auto ctx = make_context(inv.config);
    auto plan = compute_plan(inv, ctx, m_b, m_j);
    write_file(inv.out / "plan.csv", render([&](std::ostream& os) { write_plan_csv(os, plan); }));
    return plan;
}

EyeOutcome cmd_eye(const Invocation& inv) {
    const auto& cfg = inv.config;
    const auto ctx = make_context(cfg);
    const auto orders = compute_orders(inv, ctx);
    const auto& req = orders.requirement;
    const auto plan = compute_plan(inv, ctx, req.m_b, req.m_j);
    bool hit = false;
    const auto model = compute_model(inv, ctx, plan, req, hit);

    const auto levels = received_levels(ctx);
    const auto bins = eye_bins(cfg, levels);
    AssemblyOptions opts;
    opts.samples = cfg.analysis.mc_samples;
    opts.seed = mix_seed(cfg.analysis.seed, kAssemblyStream);
    opts.exhaustive_budget = cfg.analysis.exhaustive_budget;
    opts.jobs = inv.jobs;
    switch (cfg.analysis.mode) {
        case ModeChoice::Exhaustive: opts.mode = AssemblyMode::Exhaustive; break;
        case ModeChoice::MonteCarlo: opts.mode = AssemblyMode::MonteCarlo; break;
        case ModeChoice::Auto:
            opts.mode = exhaustive_traces(model, cfg.jitter) <= cfg.analysis.exhaustive_budget
                            ? AssemblyMode::Exhaustive
                            : AssemblyMode::MonteCarlo;
            break;
    }
    note(inv, std::string("eye: ") + mode_name(opts.mode) + " assembly");

    EyeOutcome r{assemble_eye(model, req, cfg.jitter, opts, bins), {}, opts.mode, req.m_b, req.m_j,
                 model.simulations(), hit};
    r.metrics = eye_metrics(r.density, levels.midpoint(), cfg.analysis.mass_floor);
    write_eye_files(inv, "eye", r.density, r.metrics);

    KeyValues run{
        {"m_b", std::to_string(req.m_b)},
        {"m_j", std::to_string(req.m_j)},
        {"mode", mode_name(opts.mode)},
        {"simulations", std::to_string(model.simulations())},
        {"traces", std::to_string(opts.mode == AssemblyMode::Exhaustive ? exhaustive_traces(model, cfg.jitter)
                                                                        : opts.samples)},
        {"received_low_v", format_double(levels.low)},
        {"received_high_v", format_double(levels.high)},
        {"t_delay_s", format_double(ctx.t_delay)},
        {"model_fingerprint", fingerprint_hex(fingerprint(cfg, Artifact::MerModel))},
    };
    run["plan_pj_num"] = std::to_string(plan.pj.num);
    for (const auto& e : plan.rj) run["plan_" + e.axis + "_num"] = std::to_string(e.num);
    write_file(inv.out / "eye_run.txt", render([&](std::ostream& os) { write_key_values(os, run); }));
    return r;
}

EyeOutcome cmd_transient(const Invocation& inv) {
    const auto& cfg = inv.config;
    const auto ctx = make_context(cfg);
    const auto levels = received_levels(ctx);
    TransientOptions opts;
    opts.n_bits = cfg.analysis.n_bits;
    opts.seed = mix_seed(cfg.analysis.seed, kTransientStream);
    opts.warmup_bits = cfg.analysis.warmup_bits;
    const auto t = std::chrono::steady_clock::now();
    EyeOutcome r{transient_eye(ctx, cfg.jitter, opts, eye_bins(cfg, levels)), {}, AssemblyMode::MonteCarlo, 0, 0,
                 1, false};
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - t;
    note(inv, "transient: " + std::to_string(opts.n_bits) + " bits (" +
                  format_double(std::round(took.count() * 100) / 100) + " s)");
    r.metrics = eye_metrics(r.density, levels.midpoint(), cfg.analysis.mass_floor);
    write_eye_files(inv, "transient", r.density, r.metrics);
    return r;
}

ComparisonReport cmd_compare(const std::filesystem::path& reference, const std::filesystem::path& candidate,
                             const std::filesystem::path& out) {
    auto load = [](const std::filesystem::path& p) {
        std::istringstream is(read_file(p));
        return parse_metrics_report(read_key_values(is));
    };
    const auto report = compare_eyes(load(reference), load(candidate));
    write_file(out / "comparison.txt",
               render([&](std::ostream& os) { write_key_values(os, comparison_report(report)); }));
    return report;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"MER eye-diagram estimation with periodic and random jitter", "mereye"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::string> cache_dir;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    app.add_option("--config", config_path, "YAML run configuration");
    app.add_option("--out", out_dir, "Output directory (overrides output.directory)");
    app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Override analysis.seed");
    app.add_option("--cache", cache_dir, "Directory for reusable orders, plans and scans");

    auto* orders = app.add_subcommand("orders", "Determine the bit-effect and jitter-effect orders");
    auto* plan = app.add_subcommand("plan", "Compute the MER sampling plan");
    std::optional<std::string> orders_path;
    plan->add_option("--orders", orders_path, "orders_summary.txt from a previous `orders` run");
    auto* eye = app.add_subcommand("eye", "Estimate the eye diagram from reconstructed MERs");
    auto* transient = app.add_subcommand("transient", "Brute-force transient eye diagram");
    auto* compare = app.add_subcommand("compare", "Compare two eye metric reports");
    std::string reference;
    std::string candidate;
    compare->add_option("--reference", reference, "Reference metrics report")->required();
    compare->add_option("--candidate", candidate, "Candidate metrics report")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    auto path_or = [](const std::optional<std::string>& s) {
        return s ? std::optional<std::filesystem::path>(*s) : std::nullopt;
    };

    try {
        if (compare->parsed()) {
            const std::filesystem::path dest = out_dir ? *out_dir : ".";
            const auto r = cmd_compare(reference, candidate, dest);
            write_key_values(out, comparison_report(r));
            return 0;
        }
        if (config_path.empty()) throw ConfigError("--config is required for this command");
        const auto inv = make_invocation(config_path, path_or(out_dir), seed, jobs, path_or(cache_dir), &err);
        if (orders->parsed()) {
            const auto o = cmd_orders(inv);
            out << "m_b = " << o.requirement.m_b << "\nm_j = " << o.requirement.m_j << '\n';
        } else if (plan->parsed()) {
            write_plan_csv(out, cmd_plan(inv, path_or(orders_path)));
        } else if (eye->parsed()) {
            write_key_values(out, metrics_report(cmd_eye(inv).metrics));
        } else if (transient->parsed()) {
            write_key_values(out, metrics_report(cmd_transient(inv).metrics));
        }
        return 0;
    } catch (const ConfigError& e) {
        err << "mereye: configuration error: " << e.what() << '\n';
        return 2;
    } catch (const OrderNotConverged& e) {
        err << "mereye: " << e.what() << '\n';
        write_orders_csv(err, e.partial());
        return 3;
    } catch (const BudgetError& e) {
        err << "mereye: " << e.what() << '\n';
        return 3;
    } catch (const IoError& e) {
        err << "mereye: I/O error: " << e.what() << '\n';
        return 4;
    } catch (const DomainError& e) {
        err << "mereye: invalid parameters: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "mereye: " << e.what() << '\n';
        return 3;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "mereye: I/O error: " << e.what() << '\n';
        return 4;
    }
}

}  // namespace mereye::cli
