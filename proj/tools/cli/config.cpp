#include "config.hpp"

#include "mereye/error.hpp"
#include "mereye/io.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace mereye::cli {

namespace {

class Section {
public:
    Section(const YAML::Node& root, std::string name) : name_(std::move(name)) {
        if (!root[name_]) return;
        node_ = root[name_];
        if (!node_.IsMap()) throw ConfigError("section '" + name_ + "' must be a mapping");
    }

    template <typename T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        if (!node_ || !node_[key]) return;
        try {
            out = node_[key].as<T>();
        } catch (const YAML::Exception&) {
            throw ConfigError(name_ + "." + key + " has the wrong type");
        }
    }

    template <typename T>
    void read_optional(const char* key, std::optional<T>& out) {
        seen_.insert(key);
        if (!node_ || !node_[key]) return;
        if (node_[key].IsNull()) return;
        try {
            out = node_[key].as<T>();
        } catch (const YAML::Exception&) {
            throw ConfigError(name_ + "." + key + " has the wrong type");
        }
    }

    [[nodiscard]] YAML::Node raw(const char* key) {
        seen_.insert(key);
        return node_ ? node_[key] : YAML::Node();
    }

    /// Rejects keys that were never asked for.
    void finish() const {
        if (!node_) return;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!seen_.count(key)) throw ConfigError("unknown key " + name_ + "." + key);
        }
    }

private:
    std::string name_;
    YAML::Node node_;
    std::set<std::string> seen_;
};

SystemKind parse_kind(const std::string& s) {
    if (s == "nonlinear_link") return SystemKind::NonlinearLink;
    if (s == "lti_fir") return SystemKind::LtiFir;
    if (s == "ideal_wire") return SystemKind::IdealWire;
    throw ConfigError("system.kind must be nonlinear_link, lti_fir or ideal_wire (got '" + s + "')");
}

const char* kind_name(SystemKind k) {
    switch (k) {
        case SystemKind::NonlinearLink: return "nonlinear_link";
        case SystemKind::LtiFir: return "lti_fir";
        case SystemKind::IdealWire: return "ideal_wire";
    }
    return "?";
}

TransferKind parse_transfer(const std::string& s) {
    if (s == "tanh") return TransferKind::Tanh;
    if (s == "linear") return TransferKind::Linear;
    if (s == "hard_limit") return TransferKind::HardLimit;
    throw ConfigError("system.driver_transfer must be tanh, linear or hard_limit (got '" + s + "')");
}

const char* transfer_name(TransferKind k) {
    switch (k) {
        case TransferKind::Tanh: return "tanh";
        case TransferKind::Linear: return "linear";
        case TransferKind::HardLimit: return "hard_limit";
    }
    return "?";
}

ModeChoice parse_mode(const std::string& s) {
    if (s == "auto") return ModeChoice::Auto;
    if (s == "exhaustive") return ModeChoice::Exhaustive;
    if (s == "monte_carlo") return ModeChoice::MonteCarlo;
    throw ConfigError("analysis.mode must be auto, exhaustive or monte_carlo (got '" + s + "')");
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void RunConfig::validate() const {
    const auto& s = system;
    require(positive(s.z0_ohms), "system.z0_ohms must be positive");
    require(positive(s.load_ohms), "system.load_ohms must be positive");
    require(positive(s.line_delay_s), "system.line_delay_s must be positive");
    require(s.loss_alpha > 0.0 && s.loss_alpha <= 1.0, "system.loss_alpha must lie in (0, 1]");
    require(positive(s.driver_gain), "system.driver_gain must be positive");
    require(std::isfinite(s.slew_v_per_s) && s.slew_v_per_s >= 0.0, "system.slew_v_per_s must be >= 0");
    require(std::isfinite(s.v_low) && std::isfinite(s.v_high) && s.v_high > s.v_low,
            "system.v_high must exceed system.v_low");
    require(s.fir_span_ui >= 1, "system.fir_span_ui must be >= 1");
    require(s.fir_main_tap > 0.0 && s.fir_main_tap <= 1.0, "system.fir_main_tap must lie in (0, 1]");

    require(positive(signal.period_s), "signal.period_s must be positive");
    require(signal.samples_per_ui >= 8, "signal.samples_per_ui must be >= 8");

    try {
        jitter.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("jitter: ") + e.what());
    }

    const auto& a = analysis;
    require(a.threshold_frac > 0.0 && a.threshold_frac < 1.0, "analysis.threshold_frac must lie in (0, 1)");
    require(a.cutoff_threshold_frac > 0.0 && a.cutoff_threshold_frac < 1.0,
            "analysis.cutoff_threshold_frac must lie in (0, 1)");
    require(a.oversample > 2.0, "analysis.oversample must exceed 2");
    require(a.max_m >= 1 && a.max_m <= 40, "analysis.max_m must lie in [1, 40]");
    require(a.max_seqs_per_m >= 1, "analysis.max_seqs_per_m must be >= 1");
    require(a.tx_points >= 2, "analysis.tx_points must be >= 2");
    require(a.mc_samples >= 1, "analysis.mc_samples must be >= 1");
    require(a.n_bits >= 1000, "analysis.n_bits must be >= 1000");
    require(a.tensor_budget >= 1, "analysis.tensor_budget must be >= 1");
    require(a.max_simulations >= 1, "analysis.max_simulations must be >= 1");
    require(a.phase_bins >= 2 && a.voltage_bins >= 2, "analysis bins must be >= 2");
    require(a.v_min.has_value() == a.v_max.has_value(), "analysis.v_min and analysis.v_max go together");
    if (a.v_min) require(*a.v_max > *a.v_min, "analysis.v_max must exceed analysis.v_min");
    require(a.mass_floor >= 0.0 && a.mass_floor < 1.0, "analysis.mass_floor must lie in [0, 1)");
}

RunConfig parse_config(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("malformed YAML: ") + e.what());
    }
    RunConfig cfg;
    if (!root || root.IsNull()) {
        cfg.validate();
        return cfg;
    }
    if (!root.IsMap()) throw ConfigError("configuration must be a mapping of sections");
    static const std::set<std::string> sections{"system", "signal", "jitter", "analysis", "output"};
    for (const auto& kv : root) {
        const auto name = kv.first.as<std::string>();
        if (!sections.count(name)) throw ConfigError("unknown section '" + name + "'");
    }

    {
        Section s(root, "system");
        auto& c = cfg.system;
        std::string kind = kind_name(c.kind);
        std::string transfer = transfer_name(c.driver_transfer);
        s.read("kind", kind);
        c.kind = parse_kind(kind);
        s.read("z0_ohms", c.z0_ohms);
        s.read("load_ohms", c.load_ohms);
        s.read("line_delay_s", c.line_delay_s);
        s.read("loss_alpha", c.loss_alpha);
        s.read("driver_transfer", transfer);
        c.driver_transfer = parse_transfer(transfer);
        s.read("driver_gain", c.driver_gain);
        s.read("slew_v_per_s", c.slew_v_per_s);
        s.read("v_low", c.v_low);
        s.read("v_high", c.v_high);
        s.read("fir_span_ui", c.fir_span_ui);
        s.read("fir_main_tap", c.fir_main_tap);
        s.finish();
    }
    {
        Section s(root, "signal");
        s.read("period_s", cfg.signal.period_s);
        s.read("samples_per_ui", cfg.signal.samples_per_ui);
        s.finish();
    }
    {
        Section s(root, "jitter");
        auto& j = cfg.jitter;
        s.read("a_pj_s", j.a_pj);
        s.read("t_pj_s", j.t_pj);
        s.read("t0_steps", j.t0_steps);
        s.read("sigma_rj_s", j.sigma_rj);
        s.read("rj_range", j.rj_range);
        s.read("rj_steps", j.rj_steps);
        s.finish();
    }
    {
        Section s(root, "analysis");
        auto& a = cfg.analysis;
        std::string mode = "auto";
        s.read("threshold_frac", a.threshold_frac);
        s.read("cutoff_threshold_frac", a.cutoff_threshold_frac);
        s.read("oversample", a.oversample);
        s.read("max_m", a.max_m);
        s.read("max_seqs_per_m", a.max_seqs_per_m);
        s.read("tx_points", a.tx_points);
        s.read("seed", a.seed);
        s.read("mode", mode);
        a.mode = parse_mode(mode);
        s.read("mc_samples", a.mc_samples);
        s.read("exhaustive_budget", a.exhaustive_budget);
        s.read("tensor_budget", a.tensor_budget);
        s.read("max_simulations", a.max_simulations);
        s.read("n_bits", a.n_bits);
        s.read("warmup_bits", a.warmup_bits);
        s.read("phase_bins", a.phase_bins);
        s.read("voltage_bins", a.voltage_bins);
        s.read_optional("v_min", a.v_min);
        s.read_optional("v_max", a.v_max);
        s.read("mass_floor", a.mass_floor);
        s.finish();
    }
    {
        Section s(root, "output");
        std::string dir = cfg.output.directory.string();
        s.read("directory", dir);
        cfg.output.directory = dir;
        const auto formats = s.raw("formats");
        if (formats) {
            if (!formats.IsSequence()) throw ConfigError("output.formats must be a list");
            cfg.output.csv = cfg.output.pgm = false;
            for (const auto& f : formats) {
                const auto name = f.as<std::string>();
                if (name == "csv") {
                    cfg.output.csv = true;
                } else if (name == "pgm") {
                    cfg.output.pgm = true;
                } else {
                    throw ConfigError("output.formats accepts csv and pgm (got '" + name + "')");
                }
            }
        }
        s.finish();
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const IoError&) {
        throw ConfigError("cannot read configuration " + path.string());
    }
    return parse_config(text);
}

DriverStage driver_stage(const RunConfig& cfg) {
    DriverStage d;
    d.kind = cfg.system.driver_transfer;
    d.gain = cfg.system.driver_gain;
    d.slew = cfg.system.slew_v_per_s;
    d.v_low = cfg.system.v_low;
    d.v_high = cfg.system.v_high;
    return d;
}

std::shared_ptr<const SystemModel> make_system(const RunConfig& cfg) {
    const double dt = cfg.signal.dt();
    switch (cfg.system.kind) {
        case SystemKind::IdealWire:
            return std::make_shared<LtiChannelModel>(LtiChannelModel::identity(dt));
        case SystemKind::LtiFir:
            return std::make_shared<LtiChannelModel>(LtiChannelModel::fir_span(
                dt, cfg.signal.period_s, cfg.system.fir_span_ui, cfg.system.fir_main_tap));
        case SystemKind::NonlinearLink: {
            LinkParams p;
            p.driver = driver_stage(cfg);
            p.z0 = cfg.system.z0_ohms;
            p.load = cfg.system.load_ohms;
            p.line_delay = cfg.system.line_delay_s;
            p.alpha = cfg.system.loss_alpha;
            return std::make_shared<NonlinearLinkModel>(p);
        }
    }
    throw ConfigError("unsupported system kind");
}

ResponseContext make_context(const RunConfig& cfg) {
    auto edges = extract_edge_templates(driver_stage(cfg), cfg.signal.dt());
    return make_response_context(make_system(cfg), std::move(edges), cfg.signal.period_s);
}

EyeBins eye_bins(const RunConfig& cfg, const ReceivedLevels& levels) {
    const auto& a = cfg.analysis;
    if (a.v_min) return EyeBins{a.phase_bins, a.voltage_bins, *a.v_min, *a.v_max};
    return EyeBins::around(levels.low, levels.high, a.phase_bins, a.voltage_bins);
}

std::string normalized_subtree(const RunConfig& cfg, Artifact artifact) {
    std::ostringstream os;
    auto kv = [&](const char* key, const auto& v) {
        os << key << " = ";
        if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>) {
            os << format_double(v);
        } else {
            os << v;
        }
        os << '\n';
    };
    const auto& s = cfg.system;
    kv("system.driver_transfer", transfer_name(s.driver_transfer));
    kv("system.driver_gain", s.driver_gain);
    kv("system.slew_v_per_s", s.slew_v_per_s);
    kv("system.v_low", s.v_low);
    kv("system.v_high", s.v_high);
    kv("signal.period_s", cfg.signal.period_s);
    kv("signal.samples_per_ui", cfg.signal.samples_per_ui);
    if (artifact == Artifact::EdgeTemplates) return os.str();

    kv("system.kind", kind_name(s.kind));
    if (s.kind == SystemKind::NonlinearLink) {
        kv("system.z0_ohms", s.z0_ohms);
        kv("system.load_ohms", s.load_ohms);
        kv("system.line_delay_s", s.line_delay_s);
        kv("system.loss_alpha", s.loss_alpha);
    } else if (s.kind == SystemKind::LtiFir) {
        kv("system.fir_span_ui", s.fir_span_ui);
        kv("system.fir_main_tap", s.fir_main_tap);
    }
    const auto& j = cfg.jitter;
    kv("jitter.a_pj_s", j.a_pj);
    kv("jitter.t_pj_s", j.t_pj);
    kv("jitter.t0_steps", j.t0_steps);
    kv("jitter.sigma_rj_s", j.sigma_rj);
    kv("jitter.rj_range", j.rj_range);
    kv("jitter.rj_steps", j.rj_steps);
    const auto& a = cfg.analysis;
    kv("analysis.threshold_frac", a.threshold_frac);
    kv("analysis.max_m", a.max_m);
    kv("analysis.max_seqs_per_m", a.max_seqs_per_m);
    kv("analysis.tx_points", a.tx_points);
    kv("analysis.seed", a.seed);
    if (artifact == Artifact::Orders) return os.str();

    kv("analysis.cutoff_threshold_frac", a.cutoff_threshold_frac);
    kv("analysis.oversample", a.oversample);
    if (artifact == Artifact::Plan) return os.str();

    kv("analysis.tensor_budget", a.tensor_budget);
    kv("analysis.max_simulations", a.max_simulations);
    return os.str();
}

std::uint64_t fingerprint(const RunConfig& cfg, Artifact artifact) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : normalized_subtree(cfg, artifact)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fingerprint_hex(std::uint64_t fp) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fp));
    return buf;
}

}  // namespace mereye::cli
