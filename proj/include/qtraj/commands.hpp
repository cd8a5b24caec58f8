#pragma once

// Entry points behind `qtraj run | compare | verify`.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qtraj/checks.hpp"
#include "qtraj/config.hpp"
#include "qtraj/ensemble.hpp"
#include "qtraj/io.hpp"

namespace qtraj {

inline std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

/// Position and momentum reports for every configured slice time.
inline std::vector<SliceReport> analyse_slices(const EnsembleResult& result) {
    std::vector<SliceReport> out;
    for (double t : result.config.slice_times) {
        out.push_back(analyse_slice(result, t, Observable::position));
        out.push_back(analyse_slice(result, t, Observable::momentum));
    }
    return out;
}

namespace detail {

inline std::string fixed(double v, int digits = 4) {
    std::ostringstream s;
    s.imbue(std::locale::classic());
    s << std::setprecision(digits) << v;
    return s.str();
}

inline void print_counts(std::ostream& log, const EnsembleResult& r) {
    const auto c = r.counts();
    log << to_string(r.theory()) << ": " << r.trajectories.size() << " trajectories, " << c.completed
        << " completed, " << c.exited_domain << " exited_domain, " << c.node_stalled << " node_stalled\n";
}

inline void print_slices(std::ostream& log, const std::vector<SliceReport>& reports) {
    for (const auto& s : reports) {
        log << "  t=" << fixed(s.t) << " ps " << to_string(s.observable) << ": n=" << s.contributing
            << " excluded=" << s.excluded << " KS=" << fixed(s.ks.statistic) << " (crit " << fixed(s.ks.critical_at_alpha)
            << ", " << (s.ks.passed ? "pass" : "fail") << ")";
        if (s.central_dip) log << " central_dip=" << fixed(*s.central_dip);
        log << "\n";
    }
}

struct Outputs {
    std::filesystem::path dir;
    std::vector<OutputFile> files;

    std::filesystem::path add(const std::string& name) { return dir / name; }
    void record(const std::filesystem::path& p) { files.push_back(describe_output(p)); }
};

}  // namespace detail

/// Runs one ensemble and writes trajectories_<theory>.csv,
/// histograms_<theory>.json and manifest.json into cfg.out_dir.
inline int cmd_run(const RunConfig& cfg, std::ostream& log) {
    RunManifest manifest;
    manifest.command = "run";
    manifest.config_echo = echo_config(cfg);
    manifest.master_seed = cfg.ensemble.master_seed;
    manifest.started = utc_now();

    std::filesystem::create_directories(cfg.out_dir);
    detail::Outputs out{cfg.out_dir, {}};
    const auto result = run_ensemble(cfg.ensemble, cfg.params);
    const auto reports = analyse_slices(result);
    const std::string tag(to_string(result.theory()));

    const auto traj_path = out.add("trajectories_" + tag + ".csv");
    write_trajectories(result, traj_path);
    out.record(traj_path);
    const auto hist_path = out.add("histograms_" + tag + ".json");
    write_histograms(result, reports, hist_path);
    out.record(hist_path);

    detail::print_counts(log, result);
    detail::print_slices(log, reports);

    manifest.status_counts.emplace_back(tag, result.counts());
    manifest.outputs = out.files;
    manifest.finished = utc_now();
    write_manifest(manifest, out.dir / "manifest.json");
    log << "wrote " << out.files.size() << " data files and manifest.json to " << out.dir.string() << "\n";
    return 0;
}

/// Side-by-side statistics of both theories on the same seed (identical
/// initial positions). Writes per-theory trajectories and histograms,
/// compare.tsv and manifest.json.
inline int cmd_compare(const RunConfig& cfg, std::ostream& log) {
    RunManifest manifest;
    manifest.command = "compare";
    manifest.config_echo = echo_config(cfg);
    manifest.master_seed = cfg.ensemble.master_seed;
    manifest.started = utc_now();

    std::filesystem::create_directories(cfg.out_dir);
    detail::Outputs out{cfg.out_dir, {}};

    std::vector<EnsembleResult> results;
    std::vector<std::vector<SliceReport>> reports;
    for (Theory theory : {Theory::dbb, Theory::revised}) {
        EnsembleConfig ens = cfg.ensemble;
        ens.theory = theory;
        results.push_back(run_ensemble(ens, cfg.params));
        reports.push_back(analyse_slices(results.back()));
        const std::string tag(to_string(theory));
        const auto traj_path = out.add("trajectories_" + tag + ".csv");
        write_trajectories(results.back(), traj_path);
        out.record(traj_path);
        const auto hist_path = out.add("histograms_" + tag + ".json");
        write_histograms(results.back(), reports.back(), hist_path);
        out.record(hist_path);
        manifest.status_counts.emplace_back(tag, results.back().counts());
        detail::print_counts(log, results.back());
    }

    std::ostringstream table;
    table << "t_ps\tobservable\tmetric\tdbb\trevised\n";
    auto row = [&](const SliceReport& d, const std::string& metric, double a, double b) {
        table << format_double(d.t) << '\t' << to_string(d.observable) << '\t' << metric << '\t' << format_double(a)
              << '\t' << format_double(b) << '\n';
    };
    const auto& dbb = reports[0];
    const auto& rev = reports[1];
    for (std::size_t i = 0; i < dbb.size(); ++i) {
        row(dbb[i], "contributing", static_cast<double>(dbb[i].contributing), static_cast<double>(rev[i].contributing));
        row(dbb[i], "ks_statistic", dbb[i].ks.statistic, rev[i].ks.statistic);
        row(dbb[i], "ks_critical", dbb[i].ks.critical_at_alpha, rev[i].ks.critical_at_alpha);
        row(dbb[i], "ks_passed", dbb[i].ks.passed, rev[i].ks.passed);
        if (dbb[i].central_dip) {
            row(dbb[i], "central_dip", *dbb[i].central_dip, *rev[i].central_dip);
            row(dbb[i], "oracle_central_dip", *dbb[i].oracle_central_dip, *rev[i].oracle_central_dip);
            row(dbb[i], "side_band_peak_density", *dbb[i].side_band_peak, *rev[i].side_band_peak);
        }
    }
    const auto table_path = out.add("compare.tsv");
    write_text_file(table_path, table.str());
    out.record(table_path);
    log << table.str();

    manifest.outputs = out.files;
    manifest.finished = utc_now();
    write_manifest(manifest, out.dir / "manifest.json");
    log << "wrote " << out.files.size() << " data files and manifest.json to " << out.dir.string() << "\n";
    return 0;
}

/// Analytic self-checks; returns 1 if any fails.
inline int cmd_verify(const DoubleSlitParams& params, const VerifyOptions& opt, std::ostream& log) {
    bool ok = true;
    for (const auto& c : run_all_checks(params, opt)) {
        log << (c.passed ? "PASS " : "FAIL ") << c.name << ": worst " << detail::fixed(c.worst, 3) << " < "
            << detail::fixed(c.threshold, 3) << " over " << c.points << " points\n";
        ok = ok && c.passed;
    }
    return ok ? 0 : 1;
}

}  // namespace qtraj
