#pragma once

// Run configuration: `key = value` files with `#` comments, overridden by
// command-line flags.
//
//   x_half_nm      half slit separation X               (50)
//   sigma_nm       slit width sigma                     (10)
//   mass_me        particle mass in electron masses     (1)
//   n_traj         trajectories per ensemble            (40000)
//   theory         dbb | revised                        (revised)
//   seed           master seed                          (1)
//   t0_ps          start time                           (0)
//   t_final_ps     end time                             (5)
//   dt_ps          base RK4 step                        (0.005)
//   record_stride  base steps between recorded samples  (20)
//   slices_ps      comma-separated slice times          (t0, 3.5, t_final)
//   bins           histogram bins per observable        (200)
//   include_stalled  true | false                       (false)
//   threads        worker threads, 0 = all cores        (0)
//   out_dir        output directory                     (qtraj_out)

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qtraj/ensemble.hpp"
#include "qtraj/format.hpp"

namespace qtraj {

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, std::string reason)
        : std::runtime_error("config key '" + key + "': " + reason), key_(std::move(key)), reason_(std::move(reason)) {}
    const std::string& key() const noexcept { return key_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string key_;
    std::string reason_;
};

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "x_half_nm", "sigma_nm",      "mass_me", "n_traj", "theory",          "seed",    "t0_ps",  "t_final_ps",
        "dt_ps",     "record_stride", "slices_ps", "bins", "include_stalled", "threads", "out_dir"};
    return keys;
}

struct RunConfig {
    DoubleSlitParams params;
    EnsembleConfig ensemble;
    std::string out_dir = "qtraj_out";
};

namespace detail {
inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}
}  // namespace detail

/// Parses `key = value` lines. Blank lines and text after `#` are ignored.
inline ConfigEntries parse_config_text(std::string_view text) {
    ConfigEntries entries;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const std::string body = detail::trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError(body, "line " + std::to_string(line_no) + " is not of the form key = value");
        entries.emplace_back(detail::trim(std::string_view(body).substr(0, eq)),
                             detail::trim(std::string_view(body).substr(eq + 1)));
    }
    return entries;
}

inline ConfigEntries read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

namespace detail {

template <class T, class Parse>
T config_value(const std::map<std::string, std::string>& kv, const std::string& key, T fallback, Parse&& parse) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        return parse(it->second);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(key, e.what());
    }
}

inline std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string item = trim(std::string_view(text).substr(pos, comma - pos));
        if (item.empty()) throw std::invalid_argument("empty list element");
        out.push_back(parse_double(item));
        pos = comma + 1;
    }
    return out;
}

inline bool parse_bool(const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw std::invalid_argument("expected true or false, got '" + text + "'");
}

}  // namespace detail

/// Builds a validated configuration from file entries, then flag overrides
/// (later entries win). Unknown keys and invalid values raise ConfigError.
inline RunConfig parse_config(const ConfigEntries& file, const ConfigEntries& overrides = {}) {
    std::map<std::string, std::string> kv;
    const auto& known = config_keys();
    for (const auto* source : {&file, &overrides}) {
        for (const auto& [k, v] : *source) {
            if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError(k, "unknown key");
            kv[k] = v;
        }
    }
    using detail::config_value;
    auto number = [](const std::string& s) {
        const double v = parse_double(s);
        if (!std::isfinite(v)) throw std::invalid_argument("must be finite");
        return v;
    };
    auto count = [](const std::string& s) { return parse_integer<std::size_t>(s); };

    RunConfig cfg;
    auto& params = cfg.params;
    params.x_half = config_value(kv, "x_half_nm", params.x_half, number);
    params.sigma = config_value(kv, "sigma_nm", params.sigma, number);
    params.units = UnitSystem::with_mass(config_value(kv, "mass_me", 1.0, number));
    if (!(params.sigma > 0.0)) throw ConfigError("sigma_nm", "must be positive");
    if (!(params.x_half >= 0.0)) throw ConfigError("x_half_nm", "must be non-negative");
    if (!(params.units.mass > 0.0)) throw ConfigError("mass_me", "must be positive");

    auto& ens = cfg.ensemble;
    ens = EnsembleConfig::defaults(params);
    ens.n_traj = config_value(kv, "n_traj", ens.n_traj, count);
    if (ens.n_traj < 1) throw ConfigError("n_traj", "must be at least 1");
    ens.theory = config_value(kv, "theory", ens.theory, [](const std::string& s) { return parse_theory(s); });
    ens.master_seed = config_value(kv, "seed", ens.master_seed,
                                   [](const std::string& s) { return parse_integer<std::uint64_t>(s); });

    auto& sched = ens.schedule;
    sched.t0 = config_value(kv, "t0_ps", sched.t0, number);
    sched.t_final = config_value(kv, "t_final_ps", sched.t_final, number);
    if (!(sched.t_final > sched.t0)) throw ConfigError("t_final_ps", "must exceed t0_ps");
    sched.dt_base = config_value(kv, "dt_ps", sched.dt_base, number);
    if (!(sched.dt_base > 0.0)) throw ConfigError("dt_ps", "must be positive");
    sched.dt_min = sched.dt_base / 1048576.0;
    sched.record_stride = config_value(kv, "record_stride", sched.record_stride, count);
    if (sched.record_stride < 1) throw ConfigError("record_stride", "must be at least 1");

    std::vector<double> slices{sched.t0};
    if (sched.t0 < 3.5 && 3.5 < sched.t_final) slices.push_back(3.5);
    slices.push_back(sched.t_final);
    ens.slice_times = config_value(kv, "slices_ps", slices, detail::parse_list);
    for (double t : ens.slice_times)
        if (!(t >= sched.t0 && t <= sched.t_final))
            throw ConfigError("slices_ps", "slice " + format_double(t) + " outside [t0_ps, t_final_ps]");

    ens.n_bins = config_value(kv, "bins", ens.n_bins, count);
    if (ens.n_bins < 1) throw ConfigError("bins", "must be at least 1");
    ens.include_stalled = config_value(kv, "include_stalled", ens.include_stalled, detail::parse_bool);
    ens.threads = config_value(kv, "threads", 0u, [](const std::string& s) { return parse_integer<unsigned>(s); });
    ens.derive_ranges(params);
    cfg.out_dir = config_value(kv, "out_dir", cfg.out_dir, [](const std::string& s) {
        if (s.empty()) throw std::invalid_argument("must not be empty");
        return s;
    });

    try {
        params.validate();
        ens.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config", e.what());
    }
    return cfg;
}

/// Resolved configuration in the config-file format; parsing it back yields
/// the same RunConfig.
inline std::string echo_config(const RunConfig& cfg) {
    const auto& p = cfg.params;
    const auto& e = cfg.ensemble;
    std::string slices;
    for (std::size_t i = 0; i < e.slice_times.size(); ++i) {
        if (i) slices += ",";
        slices += format_double(e.slice_times[i]);
    }
    const ConfigEntries entries = {
        {"x_half_nm", format_double(p.x_half)},
        {"sigma_nm", format_double(p.sigma)},
        {"mass_me", format_double(p.units.mass)},
        {"n_traj", std::to_string(e.n_traj)},
        {"theory", std::string(to_string(e.theory))},
        {"seed", std::to_string(e.master_seed)},
        {"t0_ps", format_double(e.schedule.t0)},
        {"t_final_ps", format_double(e.schedule.t_final)},
        {"dt_ps", format_double(e.schedule.dt_base)},
        {"record_stride", std::to_string(e.schedule.record_stride)},
        {"slices_ps", slices},
        {"bins", std::to_string(e.n_bins)},
        {"include_stalled", e.include_stalled ? "true" : "false"},
        {"threads", std::to_string(e.threads)},
        {"out_dir", cfg.out_dir},
    };
    std::string out;
    for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
    return out;
}

}  // namespace qtraj
