#pragma once

// Plot-ready text outputs: trajectories CSV, per-slice histogram documents and
// the run manifest. All numbers are written locale-independently.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qtraj/ensemble.hpp"
#include "qtraj/format.hpp"

namespace qtraj {

inline constexpr std::string_view tool_version = "0.1.0";

class IoError : public std::runtime_error {
public:
    IoError(const std::filesystem::path& path, const std::string& what)
        : std::runtime_error(path.string() + ": " + what) {}
};

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path, "cannot open for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) throw IoError(path, "write failed");
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::string file_digest(const std::filesystem::path& path) { return digest_hex(read_text_file(path)); }

// ---------------------------------------------------------------------------
// Trajectories: header `traj_id,t,x,p,status`, one row per recorded sample,
// trajectory-major.

inline std::string trajectories_csv(const EnsembleResult& result) {
    std::string out = "traj_id,t,x,p,status\n";
    for (std::size_t id = 0; id < result.trajectories.size(); ++id) {
        const auto& tr = result.trajectories[id];
        const std::string tail = "," + std::string(to_string(tr.status)) + "\n";
        const std::string head = std::to_string(id) + ",";
        for (const auto& s : tr.samples) {
            out += head;
            out += format_double(s.t);
            out += ',';
            out += format_double(s.x);
            out += ',';
            out += format_double(s.p);
            out += tail;
        }
    }
    return out;
}

inline void write_trajectories(const EnsembleResult& result, const std::filesystem::path& path) {
    write_text_file(path, trajectories_csv(result));
}

struct TrajectoryRow {
    std::size_t traj_id = 0;
    Sample sample;
    TrajectoryStatus status = TrajectoryStatus::completed;
};

inline std::vector<TrajectoryRow> read_trajectories(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    std::vector<TrajectoryRow> rows;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "traj_id,t,x,p,status") throw IoError(path, "missing or wrong header");
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        std::vector<std::string_view> cols;
        std::string_view rest(line);
        for (std::size_t comma; (comma = rest.find(',')) != std::string_view::npos; rest.remove_prefix(comma + 1))
            cols.push_back(rest.substr(0, comma));
        cols.push_back(rest);
        if (cols.size() != 5) throw IoError(path, "line " + std::to_string(line_no) + ": expected 5 columns");
        try {
            rows.push_back({parse_integer<std::size_t>(cols[0]),
                            {parse_double(cols[1]), parse_double(cols[2]), parse_double(cols[3])},
                            parse_status(cols[4])});
        } catch (const std::invalid_argument& e) {
            throw IoError(path, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Histogram document (JSON): one entry per slice with edges, counts,
// normalized density, oracle density at bin centres and the test statistics.

inline nlohmann::json to_json(const KSResult& ks) {
    return {{"statistic", ks.statistic},
            {"n", ks.n},
            {"alpha", ks.alpha},
            {"critical", ks.critical_at_alpha},
            {"passed", ks.passed}};
}

inline nlohmann::json to_json(const SliceReport& r) {
    nlohmann::json j;
    j["t"] = r.t;
    j["observable"] = std::string(to_string(r.observable));
    j["contributing"] = r.contributing;
    j["excluded"] = r.excluded;
    j["below_range"] = r.histogram.below;
    j["above_range"] = r.histogram.above;
    j["edges"] = r.histogram.edges;
    j["counts"] = r.histogram.counts;
    j["density"] = r.histogram.density;
    j["oracle"] = r.oracle;
    j["ks"] = to_json(r.ks);
    if (r.central_dip) {
        // nlohmann writes non-finite numbers as null.
        j["central_dip"] = *r.central_dip;
        j["oracle_central_dip"] = *r.oracle_central_dip;
        j["side_band_peak_density"] = *r.side_band_peak;
    }
    return j;
}

inline nlohmann::json histograms_document(const EnsembleResult& result, const std::vector<SliceReport>& slices) {
    nlohmann::json doc;
    doc["theory"] = std::string(to_string(result.theory()));
    doc["seed"] = result.master_seed();
    doc["config_digest"] = result.config_digest;
    doc["n_traj"] = result.trajectories.size();
    doc["sigma_p"] = result.params.sigma_p();
    auto& arr = doc["slices"] = nlohmann::json::array();
    for (const auto& s : slices) arr.push_back(to_json(s));
    return doc;
}

inline void write_histograms(const EnsembleResult& result, const std::vector<SliceReport>& slices,
                             const std::filesystem::path& path) {
    write_text_file(path, histograms_document(result, slices).dump(1) + "\n");
}

// ---------------------------------------------------------------------------

struct OutputFile {
    std::string name;
    std::string digest;
    std::uintmax_t bytes = 0;
};

struct RunManifest {
    std::string command;
    std::string config_echo;
    std::uint64_t master_seed = 0;
    std::string started;
    std::string finished;
    std::vector<std::pair<std::string, StatusCounts>> status_counts;  // per theory
    std::vector<OutputFile> outputs;
};

inline OutputFile describe_output(const std::filesystem::path& path) {
    return {path.filename().string(), file_digest(path), std::filesystem::file_size(path)};
}

inline void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
    nlohmann::json j;
    j["tool"] = "qtraj";
    j["version"] = std::string(tool_version);
    j["command"] = m.command;
    j["config"] = m.config_echo;
    j["seed"] = m.master_seed;
    j["started_utc"] = m.started;
    j["finished_utc"] = m.finished;
    auto& counts = j["status_counts"] = nlohmann::json::object();
    for (const auto& [theory, c] : m.status_counts)
        counts[theory] = {{"completed", c.completed}, {"exited_domain", c.exited_domain}, {"node_stalled", c.node_stalled}};
    auto& files = j["outputs"] = nlohmann::json::array();
    for (const auto& f : m.outputs) files.push_back({{"file", f.name}, {"fnv1a64", f.digest}, {"bytes", f.bytes}});
    write_text_file(path, j.dump(1) + "\n");
}

}  // namespace qtraj
