#include "mereye/io.hpp"

#include "mereye/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mereye {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& s, const std::string& what) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) throw IoError("malformed number for " + what + ": '" + s + "'");
    return v;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, sep)) out.push_back(trim(cell));
    return out;
}

}  // namespace

void write_orders_csv(std::ostream& os, const OrderResult& result) {
    os << "m,max_distance_volts,n_sequences\n";
    for (const auto& p : result.distances) {
        os << p.m << ',' << format_double(p.max_distance) << ',' << p.n_sequences << '\n';
    }
}

OrderResult read_orders_csv(std::istream& is, double threshold) {
    std::string line;
    if (!std::getline(is, line) || trim(line) != "m,max_distance_volts,n_sequences") {
        throw IoError("orders file has an unexpected header");
    }
    OrderResult r;
    r.threshold = threshold;
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 3) throw IoError("orders row must have 3 columns");
        OrderPoint p;
        const double m = parse_double(cells[0], "m");
        const double n = parse_double(cells[2], "n_sequences");
        if (m < 0 || m != std::floor(m) || n < 0 || n != std::floor(n)) throw IoError("orders row has a non-integer count");
        p.m = static_cast<int>(m);
        p.max_distance = parse_double(cells[1], "max_distance_volts");
        p.n_sequences = static_cast<std::size_t>(n);
        if (p.max_distance >= threshold) r.order = std::max(r.order, p.m);
        r.distances.push_back(p);
    }
    return r;
}

void write_plan_csv(std::ostream& os, const SamplingPlan& plan) {
    os << "axis,f_cut_hz,f_s_hz,t_s,num\n";
    auto row = [&](const PlanEntry& e) {
        os << e.axis << ',' << format_double(e.f_cut) << ',' << format_double(e.f_s) << ','
           << format_double(e.t_s) << ',' << e.num << '\n';
    };
    row(plan.pj);
    for (const auto& e : plan.rj) row(e);
}

SamplingPlan read_plan_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || trim(line) != "axis,f_cut_hz,f_s_hz,t_s,num") {
        throw IoError("plan file has an unexpected header");
    }
    SamplingPlan plan;
    bool have_pj = false;
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 5) throw IoError("plan row must have 5 columns");
        PlanEntry e;
        e.axis = cells[0];
        e.f_cut = parse_double(cells[1], "f_cut_hz");
        e.f_s = parse_double(cells[2], "f_s_hz");
        e.t_s = parse_double(cells[3], "t_s");
        const double num = parse_double(cells[4], "num");
        if (num < 1 || num != std::floor(num)) throw IoError("plan num must be a positive integer");
        e.num = static_cast<std::size_t>(num);
        if (e.axis == "pj") {
            plan.pj = e;
            have_pj = true;
        } else {
            if (e.axis != "rj" + std::to_string(static_cast<int>(plan.rj.size()) - 1)) {
                throw IoError("plan RJ rows must run rj-1, rj0, ... in order");
            }
            plan.rj.push_back(e);
        }
    }
    if (!have_pj || plan.rj.size() < 2) throw IoError("plan file needs a pj row and RJ rows for edges -1 and 0");
    plan.m_j = static_cast<int>(plan.rj.size()) - 2;
    return plan;
}

void write_scan_csv(std::ostream& os, const MerScan& scan) {
    os << "axis_value";
    for (std::size_t i = 0; i < scan.window_samples(); ++i) os << ",s" << i;
    os << '\n';
    for (std::size_t r = 0; r < scan.responses.size(); ++r) {
        os << format_double(scan.grid[r]);
        for (double v : scan.responses[r].samples()) os << ',' << format_double(v);
        os << '\n';
    }
}

void write_density_csv(std::ostream& os, const EyeDensity& density) {
    const auto& b = density.bins();
    os << "phase_bin,voltage_bin,mass\n";
    for (std::size_t p = 0; p < b.phase_bins; ++p) {
        const auto col = density.column(p);
        for (std::size_t v = 0; v < b.voltage_bins; ++v) {
            if (col[v] != 0.0) os << p << ',' << v << ',' << format_double(col[v]) << '\n';
        }
    }
}

void write_density_pgm(std::ostream& os, const EyeDensity& density) {
    const auto& b = density.bins();
    const auto mass = density.mass();
    double lo = 0.0;
    double hi = 0.0;
    for (double m : mass) {
        if (m <= 0.0) continue;
        lo = lo == 0.0 ? m : std::min(lo, m);
        hi = std::max(hi, m);
    }
    os << "P5\n" << b.phase_bins << ' ' << b.voltage_bins << "\n255\n";
    const double span = hi > lo ? std::log(hi) - std::log(lo) : 1.0;
    std::string row(b.phase_bins, '\0');
    for (std::size_t r = 0; r < b.voltage_bins; ++r) {
        const std::size_t v = b.voltage_bins - 1 - r;  // highest voltage on top
        for (std::size_t p = 0; p < b.phase_bins; ++p) {
            const double m = density.at(p, v);
            int gray = 255;
            if (m > 0.0) {
                const double level = hi > lo ? (std::log(m) - std::log(lo)) / span : 1.0;
                gray = 254 - static_cast<int>(std::lround(254.0 * level));
            }
            row[p] = static_cast<char>(static_cast<unsigned char>(gray));
        }
        os.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
}

void write_key_values(std::ostream& os, const KeyValues& kv) {
    for (const auto& [k, v] : kv) os << k << " = " << v << '\n';
}

KeyValues read_key_values(std::istream& is) {
    KeyValues kv;
    std::string line;
    while (std::getline(is, line)) {
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw IoError("report line without '=': " + t);
        kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return kv;
}

KeyValues metrics_report(const EyeMetrics& m) {
    return {
        {"eye_height_v", format_double(m.eye_height)},
        {"eye_width_ui", format_double(m.eye_width)},
        {"center_phase_ui", format_double(m.center_phase)},
        {"threshold_v", format_double(m.threshold_voltage)},
    };
}

EyeMetrics parse_metrics_report(const KeyValues& kv) {
    auto get = [&](const char* key) {
        const auto it = kv.find(key);
        if (it == kv.end()) throw IoError(std::string("metrics report lacks ") + key);
        return parse_double(it->second, key);
    };
    EyeMetrics m;
    m.eye_height = get("eye_height_v");
    m.eye_width = get("eye_width_ui");
    m.center_phase = get("center_phase_ui");
    m.threshold_voltage = get("threshold_v");
    return m;
}

KeyValues comparison_report(const ComparisonReport& r) {
    auto err = [](const ComparisonRow& row) {
        return row.relative_error ? format_double(*row.relative_error) : std::string("undefined");
    };
    const auto& h = r.row("eye_height");
    const auto& w = r.row("eye_width");
    return {
        {"reference_eye_height_v", format_double(h.reference)},
        {"eye_height_v", format_double(h.candidate)},
        {"rel_err_height", err(h)},
        {"reference_eye_width_ui", format_double(w.reference)},
        {"eye_width_ui", format_double(w.candidate)},
        {"rel_err_width", err(w)},
    };
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw IoError("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace mereye
