#pragma once
/**
 * @file io.hpp
 * @brief Trajectory CSV and summary JSON artifacts.
 *
 * All writers produce bytes that depend only on their inputs: fixed column
 * order, fixed numeric formatting, and no timestamps.
 */

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "goflock/metrics.hpp"
#include "goflock/sim.hpp"

namespace goflock {

inline constexpr const char* kTrajectoryHeader =
    "run_id,t,agent_id,x,y,z,vx,vy,vz,w1x,w1y,w1z,w2x,w2y,w2z,w3x,w3y,w3z,w4x,w4y,w4z,goal_visible";

namespace detail {

inline void put_number(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    // "-0.000000" and "0.000000" must not differ between platforms.
    if (std::string_view(buf) == "-0.000000") std::snprintf(buf, sizeof buf, "%.6f", 0.0);
    out += buf;
}

inline void put_vec(std::string& out, const Vec3& v) {
    put_number(out, v.x);
    out += ',';
    put_number(out, v.y);
    out += ',';
    put_number(out, v.z);
}

inline void put_optional_vec(std::string& out, const std::optional<Vec3>& v) {
    if (v) {
        put_vec(out, *v);
    } else {
        out += ",,";
    }
}

}  // namespace detail

/// One row per agent per frame. Absent virtual agents are empty fields.
inline void write_trajectory_csv(std::ostream& os, const RunRecord& rec, bool header = true) {
    if (header) os << kTrajectoryHeader << '\n';
    std::string line;
    for (const auto& f : rec.frames) {
        for (std::size_t i = 0; i < f.positions.size(); ++i) {
            line.clear();
            line += std::to_string(rec.run_id);
            line += ',';
            detail::put_number(line, f.t);
            line += ',';
            line += std::to_string(i);
            line += ',';
            detail::put_vec(line, f.positions[i]);
            line += ',';
            detail::put_vec(line, f.velocities[i]);
            line += ',';
            const PerceptionOutput p = i < f.perception.size() ? f.perception[i] : PerceptionOutput{};
            detail::put_vec(line, p.w1);
            line += ',';
            detail::put_optional_vec(line, p.w2);
            line += ',';
            detail::put_optional_vec(line, p.w3);
            line += ',';
            detail::put_optional_vec(line, p.w4);
            line += ',';
            line += p.goal_visible ? '1' : '0';
            line += '\n';
            os << line;
        }
    }
}

/// Non-finite values (an empty world's obstacle distance) become null.
inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

/// Batch summary in the artifact key layout.
inline nlohmann::json summary_json(const std::string& controller, const BatchSummary& s) {
    nlohmann::json j;
    j["controller"] = controller;
    j["runs"] = s.runs;
    j["success_rate"] = s.success_rate;
    j["D_mean"] = s.dispersion.mean;
    j["D_std"] = s.dispersion.std;
    j["C_mean"] = s.cosine.mean;
    j["C_std"] = s.cosine.std;
    j["AV_mean"] = s.av.mean;
    j["AV_std"] = s.av.std;
    j["min_interagent_mean"] = finite_or_null(s.min_interagent_mean);
    j["min_obstacle_mean"] = finite_or_null(s.min_obstacle_mean);
    return j;
}

/// Per-run summary: outcome, metrics and minimum distances.
inline nlohmann::json run_summary_json(const RunRecord& rec, const MetricSeries& m) {
    nlohmann::json j;
    j["run_id"] = rec.run_id;
    j["controller"] = to_string(rec.controller);
    j["mode"] = to_string(rec.mode);
    j["outcome"] = to_string(rec.outcome);
    j["steps"] = rec.frames.empty() ? 0 : rec.frames.size() - 1;
    j["duration"] = rec.frames.empty() ? 0.0 : rec.frames.back().t;
    j["D_mean"] = m.mean_dispersion();
    const auto c = m.mean_cosine();
    j["C_mean"] = c ? nlohmann::json(*c) : nlohmann::json(nullptr);
    j["AV"] = m.av.value;
    j["AV_time"] = m.av.time;
    j["AV_reached"] = m.av.reached;
    j["min_interagent"] = finite_or_null(m.min_interagent);
    j["min_obstacle"] = finite_or_null(m.min_obstacle);
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : rec.events) {
        const char* kind = e.kind == EventKind::arrival              ? "arrival"
                           : e.kind == EventKind::agent_collision    ? "agent_collision"
                                                                     : "obstacle_collision";
        events.push_back({{"step", e.step}, {"t", e.t}, {"kind", kind}, {"agent", e.agent}, {"other", e.other},
                          {"distance", finite_or_null(e.distance)}});
    }
    j["events"] = std::move(events);
    return j;
}

/// Malformed trajectory CSV.
struct CsvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parse a trajectory CSV back into a RunRecord (frames, perception and
/// run id; obstacles, goal and events are not part of the format).
inline RunRecord read_trajectory_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kTrajectoryHeader) throw CsvError("missing or unexpected CSV header");
    RunRecord rec;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != 22) throw CsvError("line " + std::to_string(line_no) + ": expected 22 fields");
        auto num = [&](std::size_t k) {
            try {
                return std::stod(f[k]);
            } catch (const std::exception&) {
                throw CsvError("line " + std::to_string(line_no) + ": bad number in column " + std::to_string(k));
            }
        };
        auto vec = [&](std::size_t k) { return Vec3{num(k), num(k + 1), num(k + 2)}; };
        auto opt = [&](std::size_t k) { return f[k].empty() ? std::optional<Vec3>{} : std::optional<Vec3>{vec(k)}; };
        rec.run_id = static_cast<int>(num(0));
        const double t = num(1);
        if (rec.frames.empty() || rec.frames.back().t != t) {
            rec.frames.push_back(Frame{});
            rec.frames.back().t = t;
        }
        Frame& fr = rec.frames.back();
        fr.positions.push_back(vec(3));
        fr.velocities.push_back(vec(6));
        fr.perception.push_back(PerceptionOutput{vec(9), opt(12), opt(15), opt(18), f[21] == "1"});
    }
    if (rec.frames.size() > 1) rec.dt = rec.frames[1].t - rec.frames[0].t;
    return rec;
}

/// Write `text` to `path`, creating parent directories.
inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

}  // namespace goflock
