#include "pam/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "pam/errors.hpp"

namespace pam {

Config default_config() { return Config{}; }

GridSpec make_grid(double dx, double guard, double half_width, double horizon) {
    GridSpec g;
    g.dx = dx;
    g.dt = guard * dx * dx;
    g.half_width = half_width;
    g.horizon = horizon;
    g.validate();
    return g;
}

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, const std::string& where) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: bad number '" + v + "' at " + where);
    }
}

std::uint64_t parse_u64(const std::string& v, const std::string& where) {
    try {
        std::size_t used = 0;
        const unsigned long long u = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return u;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer '" + v + "' at " + where);
    }
}

long parse_long(const std::string& v, const std::string& where) {
    try {
        std::size_t used = 0;
        const long u = std::stol(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return u;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer '" + v + "' at " + where);
    }
}

std::vector<double> parse_list(const std::string& v, const std::string& where) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_double(item, where));
    }
    if (out.empty()) throw ConfigError("config: empty list at " + where);
    return out;
}

std::vector<std::string> parse_names(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

using Setter = std::function<void(Config&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"run.t", [](Config& c, const std::string& v, const std::string& w) { c.t = parse_double(v, w); }},
        {"run.seed", [](Config& c, const std::string& v, const std::string& w) { c.seed = parse_u64(v, w); }},
        {"run.threads", [](Config& c, const std::string& v, const std::string& w) { c.threads = static_cast<int>(parse_long(v, w)); }},
        {"run.out", [](Config& c, const std::string& v, const std::string&) { c.out_dir = v; }},
        {"run.enabled", [](Config& c, const std::string& v, const std::string&) { c.enabled = parse_names(v); }},

        {"simulate.replicas", [](Config& c, const std::string& v, const std::string& w) { c.simulate.replicas = parse_u64(v, w); }},
        {"simulate.dx", [](Config& c, const std::string& v, const std::string& w) { c.simulate.dx = parse_double(v, w); }},
        {"simulate.guard", [](Config& c, const std::string& v, const std::string& w) { c.simulate.guard = parse_double(v, w); }},
        {"simulate.half_width", [](Config& c, const std::string& v, const std::string& w) { c.simulate.half_width = parse_double(v, w); }},
        {"simulate.points", [](Config& c, const std::string& v, const std::string& w) { c.simulate.points = parse_list(v, w); }},
        {"simulate.stationarity_x", [](Config& c, const std::string& v, const std::string& w) { c.simulate.stationarity_x = parse_double(v, w); }},
        {"simulate.snapshot_replica", [](Config& c, const std::string& v, const std::string& w) { c.simulate.snapshot_replica = parse_long(v, w); }},

        {"oracle.t", [](Config& c, const std::string& v, const std::string& w) { c.oracle.t = parse_double(v, w); }},
        {"oracle.dx", [](Config& c, const std::string& v, const std::string& w) { c.oracle.dx = parse_double(v, w); }},
        {"oracle.guard", [](Config& c, const std::string& v, const std::string& w) { c.oracle.guard = parse_double(v, w); }},
        {"oracle.half_width", [](Config& c, const std::string& v, const std::string& w) { c.oracle.half_width = parse_double(v, w); }},
        {"oracle.x_window", [](Config& c, const std::string& v, const std::string& w) { c.oracle.x_window = parse_double(v, w); }},
        {"oracle.tolerance", [](Config& c, const std::string& v, const std::string& w) { c.oracle.tolerance = parse_double(v, w); }},

        {"tail.replicas", [](Config& c, const std::string& v, const std::string& w) { c.tail.replicas = parse_u64(v, w); }},
        {"tail.dx", [](Config& c, const std::string& v, const std::string& w) { c.tail.dx = parse_double(v, w); }},
        {"tail.guard", [](Config& c, const std::string& v, const std::string& w) { c.tail.guard = parse_double(v, w); }},
        {"tail.half_width", [](Config& c, const std::string& v, const std::string& w) { c.tail.half_width = parse_double(v, w); }},
        {"tail.theta_min", [](Config& c, const std::string& v, const std::string& w) { c.tail.theta_min = parse_double(v, w); }},
        {"tail.theta_max", [](Config& c, const std::string& v, const std::string& w) { c.tail.theta_max = parse_double(v, w); }},
        {"tail.theta_step", [](Config& c, const std::string& v, const std::string& w) { c.tail.theta_step = parse_double(v, w); }},
        {"tail.min_tail_count", [](Config& c, const std::string& v, const std::string& w) { c.tail.min_tail_count = parse_long(v, w); }},
        {"tail.bootstrap", [](Config& c, const std::string& v, const std::string& w) { c.tail.bootstrap = parse_u64(v, w); }},
        {"tail.calibration_replicas", [](Config& c, const std::string& v, const std::string& w) { c.tail.calibration_replicas = parse_u64(v, w); }},

        {"cov.replicas", [](Config& c, const std::string& v, const std::string& w) { c.cov.replicas = parse_u64(v, w); }},
        {"cov.dx", [](Config& c, const std::string& v, const std::string& w) { c.cov.dx = parse_double(v, w); }},
        {"cov.guard", [](Config& c, const std::string& v, const std::string& w) { c.cov.guard = parse_double(v, w); }},
        {"cov.half_width", [](Config& c, const std::string& v, const std::string& w) { c.cov.half_width = parse_double(v, w); }},
        {"cov.xs", [](Config& c, const std::string& v, const std::string& w) { c.cov.xs = parse_list(v, w); }},

        {"gap.replicas", [](Config& c, const std::string& v, const std::string& w) { c.gap.replicas = parse_u64(v, w); }},
        {"gap.dx", [](Config& c, const std::string& v, const std::string& w) { c.gap.dx = parse_double(v, w); }},
        {"gap.guard", [](Config& c, const std::string& v, const std::string& w) { c.gap.guard = parse_double(v, w); }},
        {"gap.half_width", [](Config& c, const std::string& v, const std::string& w) { c.gap.half_width = parse_double(v, w); }},
        {"gap.points", [](Config& c, const std::string& v, const std::string& w) { c.gap.points = parse_list(v, w); }},
        {"gap.xs", [](Config& c, const std::string& v, const std::string& w) { c.gap.xs = parse_list(v, w); }},
        {"gap.grid", [](Config& c, const std::string& v, const std::string& w) { c.gap.grid = static_cast<int>(parse_long(v, w)); }},

        {"density.replicas", [](Config& c, const std::string& v, const std::string& w) { c.density.replicas = parse_u64(v, w); }},
        {"density.dx", [](Config& c, const std::string& v, const std::string& w) { c.density.dx = parse_double(v, w); }},
        {"density.guard", [](Config& c, const std::string& v, const std::string& w) { c.density.guard = parse_double(v, w); }},
        {"density.half_width", [](Config& c, const std::string& v, const std::string& w) { c.density.half_width = parse_double(v, w); }},
        {"density.y_min", [](Config& c, const std::string& v, const std::string& w) { c.density.y_min = parse_double(v, w); }},
        {"density.y_max", [](Config& c, const std::string& v, const std::string& w) { c.density.y_max = parse_double(v, w); }},
        {"density.y_step", [](Config& c, const std::string& v, const std::string& w) { c.density.y_step = parse_double(v, w); }},
        {"density.bandwidth", [](Config& c, const std::string& v, const std::string& w) { c.density.bandwidth = parse_double(v, w); }},

        {"maxscan.replicas", [](Config& c, const std::string& v, const std::string& w) { c.maxscan.replicas = parse_u64(v, w); }},
        {"maxscan.dx", [](Config& c, const std::string& v, const std::string& w) { c.maxscan.dx = parse_double(v, w); }},
        {"maxscan.guard", [](Config& c, const std::string& v, const std::string& w) { c.maxscan.guard = parse_double(v, w); }},
        {"maxscan.half_width", [](Config& c, const std::string& v, const std::string& w) { c.maxscan.half_width = parse_double(v, w); }},
        {"maxscan.radii", [](Config& c, const std::string& v, const std::string& w) { c.maxscan.radii = parse_list(v, w); }},

        {"blocking.replicas", [](Config& c, const std::string& v, const std::string& w) { c.blocking.replicas = parse_u64(v, w); }},
        {"blocking.dx", [](Config& c, const std::string& v, const std::string& w) { c.blocking.dx = parse_double(v, w); }},
        {"blocking.guard", [](Config& c, const std::string& v, const std::string& w) { c.blocking.guard = parse_double(v, w); }},
        {"blocking.window_half_width", [](Config& c, const std::string& v, const std::string& w) { c.blocking.window_half_width = parse_double(v, w); }},
        {"blocking.radii", [](Config& c, const std::string& v, const std::string& w) { c.blocking.radii = parse_list(v, w); }},
        {"blocking.a", [](Config& c, const std::string& v, const std::string& w) { c.blocking.a = parse_double(v, w); }},
        {"blocking.beta", [](Config& c, const std::string& v, const std::string& w) { c.blocking.beta = parse_double(v, w); }},

        {"identities.samples", [](Config& c, const std::string& v, const std::string& w) { c.identities.samples = parse_u64(v, w); }},
        {"identities.tolerance", [](Config& c, const std::string& v, const std::string& w) { c.identities.tolerance = parse_double(v, w); }},
        {"identities.perturb", [](Config& c, const std::string& v, const std::string& w) { c.identities.perturb = parse_double(v, w); }},
    };
    return table;
}

}  // namespace

void apply_config_text(Config& cfg, const std::string& text, const std::string& origin) {
    std::stringstream ss(text);
    std::string line, section = "run";
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config: malformed section header at " + where);
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected 'key = value' at " + where);
        const std::string key = section + "." + trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end())
            throw ConfigError("config: unknown key '" + key + "' at " + where);
        it->second(cfg, value, where);
    }
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    Config cfg = default_config();
    apply_config_text(cfg, buf.str(), path);
    return cfg;
}

namespace {

void emit(std::string& out, const std::string& key, const std::string& value) {
    out += key;
    out += " = ";
    out += value;
    out += "\n";
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += fmt(v[i]);
    }
    return s;
}

}  // namespace

std::string serialize_config(const Config& c) {
    std::string s;
    s += "[run]\n";
    emit(s, "t", fmt(c.t));
    emit(s, "seed", std::to_string(c.seed));
    emit(s, "threads", std::to_string(c.threads));
    emit(s, "out", c.out_dir);
    {
        std::string names;
        for (std::size_t i = 0; i < c.enabled.size(); ++i) {
            if (i) names += ",";
            names += c.enabled[i];
        }
        emit(s, "enabled", names);
    }
    s += "[simulate]\n";
    emit(s, "replicas", std::to_string(c.simulate.replicas));
    emit(s, "dx", fmt(c.simulate.dx));
    emit(s, "guard", fmt(c.simulate.guard));
    emit(s, "half_width", fmt(c.simulate.half_width));
    emit(s, "points", fmt_list(c.simulate.points));
    emit(s, "stationarity_x", fmt(c.simulate.stationarity_x));
    emit(s, "snapshot_replica", std::to_string(c.simulate.snapshot_replica));
    s += "[oracle]\n";
    emit(s, "t", fmt(c.oracle.t));
    emit(s, "dx", fmt(c.oracle.dx));
    emit(s, "guard", fmt(c.oracle.guard));
    emit(s, "half_width", fmt(c.oracle.half_width));
    emit(s, "x_window", fmt(c.oracle.x_window));
    emit(s, "tolerance", fmt(c.oracle.tolerance));
    s += "[tail]\n";
    emit(s, "replicas", std::to_string(c.tail.replicas));
    emit(s, "dx", fmt(c.tail.dx));
    emit(s, "guard", fmt(c.tail.guard));
    emit(s, "half_width", fmt(c.tail.half_width));
    emit(s, "theta_min", fmt(c.tail.theta_min));
    emit(s, "theta_max", fmt(c.tail.theta_max));
    emit(s, "theta_step", fmt(c.tail.theta_step));
    emit(s, "min_tail_count", std::to_string(c.tail.min_tail_count));
    emit(s, "bootstrap", std::to_string(c.tail.bootstrap));
    emit(s, "calibration_replicas", std::to_string(c.tail.calibration_replicas));
    s += "[cov]\n";
    emit(s, "replicas", std::to_string(c.cov.replicas));
    emit(s, "dx", fmt(c.cov.dx));
    emit(s, "guard", fmt(c.cov.guard));
    emit(s, "half_width", fmt(c.cov.half_width));
    emit(s, "xs", fmt_list(c.cov.xs));
    s += "[gap]\n";
    emit(s, "replicas", std::to_string(c.gap.replicas));
    emit(s, "dx", fmt(c.gap.dx));
    emit(s, "guard", fmt(c.gap.guard));
    emit(s, "half_width", fmt(c.gap.half_width));
    emit(s, "points", fmt_list(c.gap.points));
    emit(s, "xs", fmt_list(c.gap.xs));
    emit(s, "grid", std::to_string(c.gap.grid));
    s += "[density]\n";
    emit(s, "replicas", std::to_string(c.density.replicas));
    emit(s, "dx", fmt(c.density.dx));
    emit(s, "guard", fmt(c.density.guard));
    emit(s, "half_width", fmt(c.density.half_width));
    emit(s, "y_min", fmt(c.density.y_min));
    emit(s, "y_max", fmt(c.density.y_max));
    emit(s, "y_step", fmt(c.density.y_step));
    emit(s, "bandwidth", fmt(c.density.bandwidth));
    s += "[maxscan]\n";
    emit(s, "replicas", std::to_string(c.maxscan.replicas));
    emit(s, "dx", fmt(c.maxscan.dx));
    emit(s, "guard", fmt(c.maxscan.guard));
    emit(s, "half_width", fmt(c.maxscan.half_width));
    emit(s, "radii", fmt_list(c.maxscan.radii));
    s += "[blocking]\n";
    emit(s, "replicas", std::to_string(c.blocking.replicas));
    emit(s, "dx", fmt(c.blocking.dx));
    emit(s, "guard", fmt(c.blocking.guard));
    emit(s, "window_half_width", fmt(c.blocking.window_half_width));
    emit(s, "radii", fmt_list(c.blocking.radii));
    emit(s, "a", fmt(c.blocking.a));
    emit(s, "beta", fmt(c.blocking.beta));
    s += "[identities]\n";
    emit(s, "samples", std::to_string(c.identities.samples));
    emit(s, "tolerance", fmt(c.identities.tolerance));
    emit(s, "perturb", fmt(c.identities.perturb));
    return s;
}

std::uint64_t config_hash(const Config& c, const std::string& experiment) {
    // Only fields that define the statistical experiment participate: shared
    // t/seed plus the experiment's own section. Replica count is excluded so
    // a resumed, extended ensemble stays compatible with its records.
    std::string payload = experiment + "\n";
    emit(payload, "t", fmt(c.t));
    emit(payload, "seed", std::to_string(c.seed));
    if (experiment == "simulate") {
        emit(payload, "dx", fmt(c.simulate.dx));
        emit(payload, "guard", fmt(c.simulate.guard));
        emit(payload, "half_width", fmt(c.simulate.half_width));
        emit(payload, "points", fmt_list(c.simulate.points));
        emit(payload, "stationarity_x", fmt(c.simulate.stationarity_x));
    } else if (experiment == "oracle") {
        emit(payload, "t", fmt(c.oracle.t));
        emit(payload, "dx", fmt(c.oracle.dx));
        emit(payload, "guard", fmt(c.oracle.guard));
        emit(payload, "half_width", fmt(c.oracle.half_width));
    } else if (experiment == "tail") {
        emit(payload, "dx", fmt(c.tail.dx));
        emit(payload, "guard", fmt(c.tail.guard));
        emit(payload, "half_width", fmt(c.tail.half_width));
    } else if (experiment == "cov") {
        emit(payload, "dx", fmt(c.cov.dx));
        emit(payload, "guard", fmt(c.cov.guard));
        emit(payload, "half_width", fmt(c.cov.half_width));
        emit(payload, "xs", fmt_list(c.cov.xs));
    } else if (experiment == "gap") {
        emit(payload, "dx", fmt(c.gap.dx));
        emit(payload, "guard", fmt(c.gap.guard));
        emit(payload, "half_width", fmt(c.gap.half_width));
        emit(payload, "points", fmt_list(c.gap.points));
        emit(payload, "xs", fmt_list(c.gap.xs));
    } else if (experiment == "density") {
        emit(payload, "dx", fmt(c.density.dx));
        emit(payload, "guard", fmt(c.density.guard));
        emit(payload, "half_width", fmt(c.density.half_width));
    } else if (experiment == "maxscan") {
        emit(payload, "dx", fmt(c.maxscan.dx));
        emit(payload, "guard", fmt(c.maxscan.guard));
        emit(payload, "half_width", fmt(c.maxscan.half_width));
        emit(payload, "radii", fmt_list(c.maxscan.radii));
    } else if (experiment == "blocking") {
        emit(payload, "dx", fmt(c.blocking.dx));
        emit(payload, "guard", fmt(c.blocking.guard));
        emit(payload, "window_half_width", fmt(c.blocking.window_half_width));
        emit(payload, "radii", fmt_list(c.blocking.radii));
        emit(payload, "a", fmt(c.blocking.a));
        emit(payload, "beta", fmt(c.blocking.beta));
    } else if (experiment == "identities") {
        emit(payload, "samples", std::to_string(c.identities.samples));
        emit(payload, "tolerance", fmt(c.identities.tolerance));
    }
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : payload) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace pam
