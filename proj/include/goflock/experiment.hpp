#pragma once
/**
 * @file experiment.hpp
 * @brief Experiment presets, the batch suite runner and the timing bench.
 *
 * A suite runs every variant of an ExperimentSpec for seeds
 * `seed_base .. seed_base + runs - 1`. Runs execute on up to `jobs` worker
 * threads; results are gathered by seed, so every artifact except the
 * run manifest is independent of the job count.
 *
 * Output layout under `spec.output_dir`:
 *
 *     spec.json                    the effective configuration
 *     comparison.md                side-by-side table of all variants
 *     manifest.json                wall-clock metadata (the only file with timestamps)
 *     scenarios/seed_<n>.txt       obstacle primitive list of each seed
 *     <variant>/summary.json       batch summary
 *     <variant>/run_<n>.json       per-run outcome, metrics and events
 *     <variant>/run_<n>.csv        trajectory (when write_trajectories)
 *     <variant>/centroids.svg      overlaid centroid paths
 */

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "goflock/config.hpp"
#include "goflock/io.hpp"
#include "goflock/metrics.hpp"
#include "goflock/plot.hpp"
#include "goflock/sim.hpp"

namespace goflock {

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace presets {

/// Slab in the middle of the course; GO-Flock against the siphon variant.
inline ExperimentSpec experiment1() {
    ExperimentSpec s;
    s.name = "experiment1";
    s.scenario.kind = ScenarioKind::single_slab;
    s.scenario.agent_count = 9;
    s.scenario.world_bounds = {{0, -15, 0}, {40, 15, 10}};
    s.scenario.start_region = {{5, -4, 4.5}, {7, 4, 5.5}};
    s.scenario.goal = {35, 0, 5};
    s.scenario.goal_jitter = {1, 4, 0.5};
    s.scenario.lattice_vertical = false;
    s.variants = {{ControllerKind::goflock, AvoidanceMode::full}, {ControllerKind::siphon, AvoidanceMode::full}};
    s.runs = 20;
    s.sim.max_duration = 60;
    s.sim.halt_on_collision = false;
    s.sim.solid_obstacles = true;
    s.output_dir = "out/experiment1";
    return s;
}

/// Random field of 2 m-diagonal boxes; GO-Flock against the passive baseline.
inline ExperimentSpec experiment2() {
    ExperimentSpec s;
    s.name = "experiment2";
    s.scenario.kind = ScenarioKind::random_field;
    s.scenario.agent_count = 9;
    s.scenario.world_bounds = {{0, -15, 0}, {46, 15, 10}};
    s.scenario.start_region = {{5, -4, 4.5}, {7, 4, 5.5}};
    s.scenario.goal = {40, 0, 5};
    s.scenario.field.x_min = 10;
    s.scenario.field.x_max = 34;
    s.scenario.goal_jitter = {1, 4, 0.5};
    s.scenario.lattice_vertical = false;
    s.variants = {{ControllerKind::goflock, AvoidanceMode::full}, {ControllerKind::baseline, AvoidanceMode::full}};
    s.runs = 30;
    s.sim.max_duration = 60;
    s.sim.halt_on_collision = false;
    s.sim.solid_obstacles = true;
    s.output_dir = "out/experiment2";
    return s;
}

/// Six agents, tau = 2, one 2.5 m-diagonal box; no avoidance, w2 only, w3/w4 only.
inline ExperimentSpec ablation() {
    ExperimentSpec s;
    s.name = "ablation";
    s.scenario.kind = ScenarioKind::custom;
    s.scenario.agent_count = 6;
    s.scenario.agent_spacing = 2.0;
    s.scenario.min_agent_separation = 1.0;
    s.scenario.world_bounds = {{0, -10, 0}, {30, 10, 10}};
    s.scenario.start_region = {{4, -0.5, 4.5}, {5, 0.5, 5.5}};
    s.scenario.goal = {26, 0, 5};
    s.scenario.goal_jitter = {0.5, 0.5, 0.5};
    s.scenario.lattice_vertical = true;
    const double half = 0.5 * 2.5 / std::numbers::sqrt2;
    s.scenario.custom_primitives = {make_box({15 - half, -half, 0}, {15 + half, half, 10})};
    s.gains.tau = 2.0;
    s.variants = {{ControllerKind::goflock, AvoidanceMode::none},
                  {ControllerKind::goflock, AvoidanceMode::w2_only},
                  {ControllerKind::goflock, AvoidanceMode::w34_only}};
    s.runs = 20;
    s.sim.max_duration = 60;
    s.output_dir = "out/ablation";
    return s;
}

/// One fixed forest layout flown from randomized starts and goals.
inline ExperimentSpec forest(int layout, double phi_max) {
    ExperimentSpec s;
    s.name = "forest" + std::to_string(layout) + "_vmax" + std::to_string(static_cast<int>(std::lround(phi_max)));
    s.scenario.kind = ScenarioKind::forest;
    s.scenario.layout_seed = 1000 + layout;
    s.scenario.agent_count = 9;
    s.scenario.world_bounds = {{-8, 0, 0}, {38, 40, 12}};
    s.scenario.start_region = {{-4.5, 14, 4}, {-3.5, 26, 6}};
    s.scenario.goal = {34.5, 20, 5};
    s.scenario.goal_jitter = {0.5, 6, 1};
    s.scenario.lattice_vertical = true;
    s.gains.phi_max = phi_max;
    s.variants = {{ControllerKind::goflock, AvoidanceMode::full}};
    s.runs = 30;
    s.sim.max_duration = 120;
    s.output_dir = "out/" + s.name;
    return s;
}

inline std::vector<std::string> names() {
    return {"experiment1", "experiment2", "ablation", "forest1_vmax1", "forest1_vmax2", "forest2_vmax1",
            "forest2_vmax2"};
}

/// Look up a preset by name; throws ConfigError for unknown names.
inline ExperimentSpec by_name(const std::string& name) {
    if (name == "experiment1") return experiment1();
    if (name == "experiment2") return experiment2();
    if (name == "ablation") return ablation();
    for (int layout : {1, 2}) {
        for (int v : {1, 2}) {
            if (name == "forest" + std::to_string(layout) + "_vmax" + std::to_string(v)) return forest(layout, v);
        }
    }
    throw ConfigError("unknown preset: " + name);
}

}  // namespace presets

// ---------------------------------------------------------------------------
// Suite runner
// ---------------------------------------------------------------------------

/// A run aborted (non-finite state or scenario failure).
struct SuiteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunResult {
    std::uint64_t seed{0};
    MetricSeries metrics;
    Outcome outcome{Outcome::timeout};
    int collision_events{0};
    double max_speed{0.0};
    double duration{0.0};
    std::vector<Vec3> centroid_path;  // downsampled
};

struct VariantResult {
    Variant variant;
    std::vector<RunResult> runs;  // ordered by seed
    BatchSummary summary;
    std::optional<ProgressProfile> profile;

    int count(Outcome o) const {
        return static_cast<int>(std::count_if(runs.begin(), runs.end(), [&](const RunResult& r) { return r.outcome == o; }));
    }
    /// Runs with at least one collision event.
    int runs_with_collisions() const {
        return static_cast<int>(
            std::count_if(runs.begin(), runs.end(), [](const RunResult& r) { return r.collision_events > 0; }));
    }
    double max_speed() const {
        double m = 0.0;
        for (const auto& r : runs) m = std::max(m, r.max_speed);
        return m;
    }
};

struct SuiteResult {
    ExperimentSpec spec;
    std::vector<VariantResult> variants;
    double wall_seconds{0.0};

    const VariantResult& find(const std::string& label) const {
        for (const auto& v : variants) {
            if (v.variant.label() == label) return v;
        }
        throw std::out_of_range("no variant " + label);
    }
};

struct SuiteOptions {
    int jobs{1};
    bool write_artifacts{true};
    /// Called after each finished run (from worker threads, serialized).
    std::function<void(const Variant&, const RunResult&)> progress{};
};

/// Scenario of one seed of a spec.
inline Scenario scenario_for(const ExperimentSpec& spec, std::uint64_t seed) {
    ScenarioConfig cfg = spec.scenario;
    cfg.seed = seed;
    return generate_scenario(cfg);
}

/// Simulate one seed of one variant.
inline RunRecord simulate(const ExperimentSpec& spec, const Variant& v, std::uint64_t seed) {
    return run_episode(scenario_for(spec, seed), v.controller, spec.gains, spec.sim, v.mode, static_cast<int>(seed));
}

/// Whether a progress profile applies (single-slab scenes) and its anchor.
inline std::optional<ProgressProfile> make_profile(const ExperimentSpec& spec) {
    if (spec.scenario.kind != ScenarioKind::single_slab) return std::nullopt;
    const Vec3 anchor{spec.scenario.slab.center_x, spec.scenario.slab.center_y, 0.0};
    return ProgressProfile(anchor, {1, 0, 0}, 6.0, 0.5);
}

namespace detail {

inline std::string dir_name(const Variant& v) {
    std::string s = v.label();
    std::replace(s.begin(), s.end(), '/', '_');
    return s;
}

inline std::string pm(const MeanStd& m, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f ± %.*f", digits, m.mean, digits, m.std);
    return buf;
}

inline std::string fixed(double v, int digits = 3) {
    if (!std::isfinite(v)) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace detail

/// Markdown table with one column per variant.
inline std::string comparison_table(const SuiteResult& r) {
    std::ostringstream os;
    os << "# " << r.spec.name << " (" << r.spec.runs << " runs per variant, seeds " << r.spec.seed_base << ".."
       << r.spec.seed_base + static_cast<std::uint64_t>(r.spec.runs) - 1 << ")\n\n";
    os << "| Metric |";
    for (const auto& v : r.variants) os << ' ' << v.variant.label() << " |";
    os << "\n|---|";
    for (std::size_t i = 0; i < r.variants.size(); ++i) os << "---|";
    os << '\n';
    auto row = [&](const std::string& name, auto cell) {
        os << "| " << name << " |";
        for (const auto& v : r.variants) os << ' ' << cell(v) << " |";
        os << '\n';
    };
    row("D [m]", [](const VariantResult& v) { return detail::pm(v.summary.dispersion); });
    row("C", [](const VariantResult& v) { return detail::pm(v.summary.cosine); });
    row("AV [m/s]", [](const VariantResult& v) { return detail::pm(v.summary.av); });
    row("success rate", [](const VariantResult& v) { return detail::fixed(v.summary.success_rate); });
    row("timeouts", [](const VariantResult& v) { return std::to_string(v.count(Outcome::timeout)); });
    row("runs with collisions", [](const VariantResult& v) { return std::to_string(v.runs_with_collisions()); });
    row("min inter-agent [m]", [](const VariantResult& v) { return detail::fixed(v.summary.min_interagent_mean); });
    row("min agent-obstacle [m]", [](const VariantResult& v) { return detail::fixed(v.summary.min_obstacle_mean); });
    row("max speed [m/s]", [](const VariantResult& v) { return detail::fixed(v.max_speed(), 6); });
    if (std::any_of(r.variants.begin(), r.variants.end(), [](const VariantResult& v) { return v.profile.has_value(); })) {
        row("C trough near obstacle", [](const VariantResult& v) {
            const auto t = v.profile ? v.profile->trough() : std::nullopt;
            return t ? detail::fixed(*t) : std::string("n/a");
        });
    }
    return os.str();
}

inline RunResult summarize_run(const RunRecord& rec, std::uint64_t seed) {
    RunResult rr;
    rr.seed = seed;
    rr.metrics = evaluate(rec);
    rr.outcome = rec.outcome;
    rr.duration = rec.frames.empty() ? 0.0 : rec.frames.back().t;
    for (const auto& e : rec.events) {
        if (e.kind != EventKind::arrival) ++rr.collision_events;
    }
    for (const auto& f : rec.frames) {
        for (const auto& v : f.velocities) rr.max_speed = std::max(rr.max_speed, v.norm());
    }
    const std::size_t stride = 6;
    for (std::size_t k = 0; k < rec.frames.size(); k += stride) rr.centroid_path.push_back(centroid(rec.frames[k].positions));
    if (!rec.frames.empty() && (rec.frames.size() - 1) % stride != 0) {
        rr.centroid_path.push_back(centroid(rec.frames.back().positions));
    }
    return rr;
}

/// Execute every (variant, seed) pair and optionally write artifacts.
inline SuiteResult run_suite(const ExperimentSpec& spec, const SuiteOptions& opt = {}) {
    spec.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const std::filesystem::path out(spec.output_dir);
    const std::size_t n_var = spec.variants.size();
    const std::size_t n_runs = static_cast<std::size_t>(spec.runs);

    SuiteResult result;
    result.spec = spec;
    result.variants.resize(n_var);
    std::vector<std::vector<std::optional<ProgressProfile>>> profiles(n_var);
    for (std::size_t v = 0; v < n_var; ++v) {
        result.variants[v].variant = spec.variants[v];
        result.variants[v].runs.resize(n_runs);
        profiles[v].resize(n_runs);
    }

    if (opt.write_artifacts) {
        std::filesystem::create_directories(out);
        write_text_file(out / "spec.json", save_spec(spec));
        for (std::size_t i = 0; i < n_runs; ++i) {
            const std::uint64_t seed = spec.seed_base + i;
            std::ostringstream os;
            write_primitive_list(os, scenario_for(spec, seed).obstacles);
            write_text_file(out / "scenarios" / ("seed_" + std::to_string(seed) + ".txt"), os.str());
        }
    }

    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::exception_ptr failure;
    std::string failure_msg;
    auto worker = [&] {
        for (;;) {
            const std::size_t task = next.fetch_add(1);
            if (task >= n_var * n_runs) return;
            {
                std::lock_guard lock(mu);
                if (failure) return;
            }
            const std::size_t v = task / n_runs;
            const std::size_t i = task % n_runs;
            const Variant& variant = spec.variants[v];
            const std::uint64_t seed = spec.seed_base + i;
            try {
                const RunRecord rec = simulate(spec, variant, seed);
                RunResult rr = summarize_run(rec, seed);
                auto prof = make_profile(spec);
                if (prof) prof->add(rec, rr.metrics);
                if (opt.write_artifacts) {
                    const auto dir = out / detail::dir_name(variant);
                    const std::string stem = "run_" + std::to_string(seed);
                    if (spec.write_trajectories) {
                        std::ostringstream csv;
                        write_trajectory_csv(csv, rec);
                        write_text_file(dir / (stem + ".csv"), csv.str());
                    }
                    write_text_file(dir / (stem + ".json"), run_summary_json(rec, rr.metrics).dump(2) + "\n");
                }
                std::lock_guard lock(mu);
                profiles[v][i] = std::move(prof);
                result.variants[v].runs[i] = std::move(rr);
                if (opt.progress) opt.progress(variant, result.variants[v].runs[i]);
            } catch (const std::exception& e) {
                std::lock_guard lock(mu);
                if (!failure) {
                    failure = std::current_exception();
                    failure_msg = "run failed: variant " + variant.label() + " seed " + std::to_string(seed) + ": " +
                                  e.what();
                }
                return;
            }
        }
    };
    const int jobs = std::max(1, opt.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) throw SuiteError(failure_msg);

    for (std::size_t v = 0; v < n_var; ++v) {
        auto& vr = result.variants[v];
        std::vector<MetricSeries> ms;
        for (const auto& r : vr.runs) ms.push_back(r.metrics);
        vr.summary = summarize(ms);
        vr.profile = make_profile(spec);
        if (vr.profile) {
            for (const auto& p : profiles[v]) vr.profile->merge(*p);
        }
    }
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (opt.write_artifacts) {
        for (const auto& vr : result.variants) {
            const auto dir = out / detail::dir_name(vr.variant);
            write_text_file(dir / "summary.json", summary_json(vr.variant.label(), vr.summary).dump(2) + "\n");
            std::vector<RunRecord> paths;
            for (const auto& r : vr.runs) {
                RunRecord rec;
                rec.run_id = static_cast<int>(r.seed);
                rec.obstacles = scenario_for(spec, spec.seed_base).obstacles;
                for (const auto& c : r.centroid_path) rec.frames.push_back(Frame{0.0, {c}, {Vec3{}}, {}, 0.0, 0.0});
                paths.push_back(std::move(rec));
            }
            write_text_file(dir / "centroids.svg", batch_paths_svg(paths));
        }
        write_text_file(out / "comparison.md", comparison_table(result));
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        nlohmann::json manifest{{"name", spec.name},
                                {"finished_utc", stamp},
                                {"wall_seconds", result.wall_seconds},
                                {"jobs", jobs}};
        write_text_file(out / "manifest.json", manifest.dump(2) + "\n");
    }
    return result;
}

// ---------------------------------------------------------------------------
// Timing bench
// ---------------------------------------------------------------------------

struct BenchReport {
    std::string scenario;
    int agents{0};
    int perception_iterations{0};
    int navigation_iterations{0};
    double perception_ms{0.0};   // mean wall time of one agent's perception tick
    double navigation_us{0.0};   // mean wall time of one agent's command evaluation
};

/// Time the per-agent perception tick (render, integrate, inflate, plan,
/// waypoint, virtual agents) and the navigation command. The scenario is
/// first simulated for `warmup_seconds` so maps and neighbourhoods are
/// realistic.
inline BenchReport bench(const ScenarioConfig& scenario_cfg, ControllerKind controller, const NavGains& gains,
                         const SimConfig& sim_cfg, int perception_iterations = 1000, int navigation_iterations = 100000,
                         double warmup_seconds = 4.0) {
    using clock = std::chrono::steady_clock;
    const Scenario sc = generate_scenario(scenario_cfg);
    Simulation sim(sc, controller, gains, sim_cfg);
    const int warm = static_cast<int>(std::lround(warmup_seconds / sim_cfg.dt));
    for (int k = 0; k < warm; ++k) sim.step();

    BenchReport rep;
    rep.scenario = to_string(scenario_cfg.kind);
    rep.agents = static_cast<int>(sim.agents().size());
    rep.perception_iterations = perception_iterations;
    rep.navigation_iterations = navigation_iterations;
    const auto pos = sim.positions();
    const auto vel = sim.velocities();
    const std::size_t n = pos.size();

    std::vector<Perceiver> perceivers;
    for (const auto& a : sim.agents()) perceivers.push_back(a.perceiver);
    const PerceptionMode pm = controller == ControllerKind::goflock ? PerceptionMode::full : PerceptionMode::nearest_only;
    std::vector<PerceptionOutput> outputs(n);
    auto t0 = clock::now();
    for (int it = 0; it < perception_iterations; ++it) {
        const std::size_t i = static_cast<std::size_t>(it) % n;
        const Vec3 to = sc.goal - pos[i];
        const CameraPose pose{pos[i], std::atan2(to.y, to.x), 0.0};
        perceivers[i].update_map(pose, sc.obstacles);
        outputs[i] = perceivers[i].perceive(pos[i], sc.goal, sc.obstacles, pm);
    }
    rep.perception_ms =
        std::chrono::duration<double, std::milli>(clock::now() - t0).count() / std::max(1, perception_iterations);

    std::vector<ControlInput> inputs;
    for (std::size_t i = 0; i < n; ++i) {
        inputs.push_back(ControlInput{pos[i], sc.goal, outputs[i],
                                      select_neighbors(static_cast<int>(i), pos[i], pos, vel, gains.k_nbr), false,
                                      std::nullopt});
    }
    Vec3 sink{};
    t0 = clock::now();
    for (int it = 0; it < navigation_iterations; ++it) {
        const std::size_t i = static_cast<std::size_t>(it) % n;
        // Neighbour selection is part of the per-step command cost.
        inputs[i].neighbors = select_neighbors(static_cast<int>(i), pos[i], pos, vel, gains.k_nbr);
        sink += command_for(controller, inputs[i], gains);
    }
    rep.navigation_us =
        std::chrono::duration<double, std::micro>(clock::now() - t0).count() / std::max(1, navigation_iterations);
    if (!sink.is_finite()) throw SimulationError("non-finite command during bench");
    return rep;
}

}  // namespace goflock
