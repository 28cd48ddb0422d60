// Command-line front end: single runs, experiment suites, the ablation,
// timing bench and plotting of saved trajectories.
//
// Exit codes: 0 success, 2 configuration error, 3 run failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "goflock/goflock.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRun = 3;

struct Options {
    std::string config;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string controller;
    std::string mode;
    std::optional<int> runs;
    int jobs{1};
    bool print_schema{false};
    bool dump_config{false};
    // plot
    std::string csv;
    std::string obstacles;
    // bench
    int perception_iters{1000};
    int navigation_iters{100000};
};

/// Effective spec: file or preset, then command-line overrides.
goflock::ExperimentSpec resolve_spec(const Options& o, const std::string& default_preset) {
    using namespace goflock;
    if (!o.config.empty() && !o.preset.empty()) throw ConfigError("--config and --preset are mutually exclusive");
    ExperimentSpec spec = !o.config.empty() ? load_spec_file(o.config)
                                            : presets::by_name(o.preset.empty() ? default_preset : o.preset);
    if (o.seed) spec.seed_base = *o.seed;
    if (o.runs) spec.runs = *o.runs;
    if (!o.out.empty()) spec.output_dir = o.out;
    if (!o.controller.empty() || !o.mode.empty()) {
        try {
            Variant v;
            v.controller = o.controller.empty() ? spec.variants.front().controller : controller_from_string(o.controller);
            v.mode = o.mode.empty() ? AvoidanceMode::full : avoidance_from_string(o.mode);
            spec.variants = {v};
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return spec;
}

void print_variant_line(const goflock::VariantResult& v) {
    const auto& s = v.summary;
    std::printf("%-18s runs %3d  success %.2f  D %.3f±%.3f  C %.3f±%.3f  AV %.3f±%.3f  timeouts %d  collided %d\n",
                v.variant.label().c_str(), s.runs, s.success_rate, s.dispersion.mean, s.dispersion.std, s.cosine.mean,
                s.cosine.std, s.av.mean, s.av.std, v.count(goflock::Outcome::timeout), v.runs_with_collisions());
}

int cmd_run(const Options& o) {
    using namespace goflock;
    ExperimentSpec spec = resolve_spec(o, "experiment1");
    const std::uint64_t seed = spec.seed_base;
    const Variant variant = spec.variants.front();
    const RunRecord rec = simulate(spec, variant, seed);
    const MetricSeries m = evaluate(rec);
    const std::filesystem::path out(spec.output_dir);
    const std::string stem = "run_" + std::to_string(seed);
    std::ostringstream csv;
    write_trajectory_csv(csv, rec);
    write_text_file(out / (stem + ".csv"), csv.str());
    write_text_file(out / (stem + ".json"), run_summary_json(rec, m).dump(2) + "\n");
    write_text_file(out / (stem + "_trajectory.svg"), trajectory_svg(rec));
    write_text_file(out / (stem + "_metrics.svg"), metrics_svg(rec));
    std::ostringstream obs;
    write_primitive_list(obs, rec.obstacles);
    write_text_file(out / (stem + "_obstacles.txt"), obs.str());
    const auto c = m.mean_cosine();
    std::printf("%s seed %llu: %s after %.2f s  D %.3f  C %s  AV %.3f  min agent %.3f  min obstacle %.3f\n",
                variant.label().c_str(), static_cast<unsigned long long>(seed), to_string(rec.outcome).c_str(),
                rec.frames.back().t, m.mean_dispersion(), c ? std::to_string(*c).c_str() : "n/a", m.av.value,
                m.min_interagent, m.min_obstacle);
    std::printf("artifacts in %s\n", out.string().c_str());
    return kExitOk;
}

int cmd_suite(const Options& o, const std::string& default_preset) {
    using namespace goflock;
    const ExperimentSpec spec = resolve_spec(o, default_preset);
    SuiteOptions so;
    so.jobs = o.jobs;
    so.progress = [](const Variant& v, const RunResult& r) {
        std::fprintf(stderr, "  %-18s seed %4llu  %-9s %.1f s\n", v.label().c_str(),
                     static_cast<unsigned long long>(r.seed), to_string(r.outcome).c_str(), r.duration);
    };
    const SuiteResult res = run_suite(spec, so);
    std::printf("%s: %d runs per variant in %.1f s\n", spec.name.c_str(), spec.runs, res.wall_seconds);
    for (const auto& v : res.variants) print_variant_line(v);
    std::printf("\n%s\nartifacts in %s\n", comparison_table(res).c_str(), spec.output_dir.c_str());
    return kExitOk;
}

int cmd_bench(const Options& o) {
    using namespace goflock;
    const ExperimentSpec spec = resolve_spec(o, "forest1_vmax2");
    const Variant v = spec.variants.front();
    ScenarioConfig sc = spec.scenario;
    sc.seed = spec.seed_base;
    const BenchReport r = bench(sc, v.controller, spec.gains, spec.sim, o.perception_iters, o.navigation_iters);
    std::printf("scenario %s, %d agents, controller %s\n", r.scenario.c_str(), r.agents, v.label().c_str());
    std::printf("perception tick : %8.3f ms per agent (%d iterations)\n", r.perception_ms, r.perception_iterations);
    std::printf("navigation cmd  : %8.3f us per agent (%d iterations)\n", r.navigation_us, r.navigation_iterations);
    return kExitOk;
}

int cmd_plot(const Options& o) {
    using namespace goflock;
    if (o.csv.empty()) throw ConfigError("plot needs --csv");
    std::ifstream in(o.csv);
    if (!in) throw ConfigError("cannot open " + o.csv);
    RunRecord rec = read_trajectory_csv(in);
    if (!o.obstacles.empty()) {
        std::ifstream obs(o.obstacles);
        if (!obs) throw ConfigError("cannot open " + o.obstacles);
        try {
            rec.obstacles = read_primitive_list(obs);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    } else if (!rec.frames.empty()) {
        // Frame the world around the trajectories.
        Vec3 lo = rec.frames.front().positions.front(), hi = lo;
        for (const auto& f : rec.frames) {
            for (const auto& p : f.positions) {
                lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
                hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
            }
        }
        rec.obstacles.world_bounds = {lo - Vec3{2, 2, 2}, hi + Vec3{2, 2, 2}};
    }
    const std::filesystem::path out(o.out.empty() ? "." : o.out);
    const std::string stem = std::filesystem::path(o.csv).stem().string();
    write_text_file(out / (stem + "_trajectory.svg"), trajectory_svg(rec, 800, 600, false));
    write_text_file(out / (stem + "_metrics.svg"), metrics_svg(rec));
    std::printf("wrote %s and %s\n", (out / (stem + "_trajectory.svg")).string().c_str(),
                (out / (stem + "_metrics.svg")).string().c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"goflock: deterministic 3D flocking simulator"};
    app.require_subcommand(0, 1);
    app.fallthrough();
    Options o;
    app.add_flag("--print-schema", o.print_schema, "Print the configuration JSON schema and exit");
    app.add_option("--seed", o.seed, "Seed (run) or seed base (suite)");
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--controller", o.controller, "Restrict to one controller: goflock | baseline | siphon");

    auto add_spec_options = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "Experiment configuration file (JSON)");
        sub->add_option("--preset", o.preset, "Built-in experiment preset");
        sub->add_option("--mode", o.mode, "GO-Flock avoidance mode: full | none | w2_only | w34_only");
        sub->add_flag("--dump-config", o.dump_config, "Print the effective configuration and exit");
    };
    auto* run = app.add_subcommand("run", "Simulate one episode and write CSV, JSON and SVG artifacts");
    add_spec_options(run);
    auto* suite = app.add_subcommand("suite", "Run an experiment batch over consecutive seeds");
    add_spec_options(suite);
    suite->add_option("--runs", o.runs, "Number of seeds per variant");
    suite->add_option("--jobs", o.jobs, "Parallel worker threads")->check(CLI::PositiveNumber);
    auto* ablate = app.add_subcommand("ablate", "Run the three-mode avoidance ablation");
    add_spec_options(ablate);
    ablate->add_option("--runs", o.runs, "Number of seeds per mode");
    ablate->add_option("--jobs", o.jobs, "Parallel worker threads")->check(CLI::PositiveNumber);
    auto* benchc = app.add_subcommand("bench", "Time the perception tick and the navigation command");
    add_spec_options(benchc);
    benchc->add_option("--perception-iters", o.perception_iters, "Perception iterations")->check(CLI::PositiveNumber);
    benchc->add_option("--navigation-iters", o.navigation_iters, "Navigation iterations")->check(CLI::PositiveNumber);
    auto* plot = app.add_subcommand("plot", "Render SVG plots from a trajectory CSV");
    plot->add_option("--csv", o.csv, "Trajectory CSV written by run or suite")->required();
    plot->add_option("--obstacles", o.obstacles, "Obstacle primitive list (scenarios/seed_<n>.txt)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (o.print_schema) {
            std::cout << goflock::config_schema().dump(2) << "\n";
            return kExitOk;
        }
        if (o.dump_config) {
            const std::string def = *ablate ? "ablation" : "experiment1";
            std::cout << goflock::save_spec(resolve_spec(o, def));
            return kExitOk;
        }
        if (*run) return cmd_run(o);
        if (*suite) return cmd_suite(o, "experiment1");
        if (*ablate) return cmd_suite(o, "ablation");
        if (*benchc) return cmd_bench(o);
        if (*plot) return cmd_plot(o);
        std::cout << app.help();
        return kExitOk;
    } catch (const goflock::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const goflock::ScenarioError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const goflock::CsvError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const goflock::PlotError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRun;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "run failed: %s\n", e.what());
        return kExitRun;
    }
}
