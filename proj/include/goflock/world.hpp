#pragma once
/**
 * @file world.hpp
 * @brief Obstacle worlds, scenario generation, synthetic depth rendering and
 *        ground-truth visibility.
 *
 * Scenario kinds:
 *   - single_slab:  one infinitely tall box (default 5 m x 0.5 m footprint)
 *                   spanning the world's z range.
 *   - random_field: infinitely tall square boxes of a given horizontal
 *                   diagonal on a hexagonal lattice (columns along y, odd
 *                   columns shifted by half a pitch) whose pitch leaves `gap`
 *                   metres of clearance between neighbours, each centre
 *                   jittered uniformly by up to `jitter` per axis.
 *   - forest:       trees made of a trunk cylinder plus a cluster of foliage
 *                   spheres, laid on a jittered hexagonal lattice whose pitch
 *                   is adjusted until the horizontal canopy coverage matches
 *                   the requested fraction.
 *   - custom:       caller-supplied primitive list.
 *
 * Agents start on a jittered lattice centred inside `start_region` (by default
 * standing in the y-z plane, i.e. abreast of the direction of travel); the goal is
 * `goal` plus a uniform offset within +/- `goal_jitter`.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "goflock/geometry.hpp"
#include "goflock/random.hpp"

namespace goflock {

struct ObstacleSet {
    std::vector<Primitive> primitives;
    AxisAlignedBox world_bounds{{0, 0, 0}, {40, 30, 10}};
    bool operator==(const ObstacleSet&) const = default;
};

/// Distance from p to the closest obstacle surface (0 inside an obstacle),
/// or +inf for an empty world.
inline double distance_to_obstacles(const ObstacleSet& obs, const Vec3& p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& prim : obs.primitives) best = std::min(best, distance_to_primitive(prim, p));
    return best;
}

enum class ScenarioKind { single_slab, random_field, forest, custom };

inline std::string to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::single_slab: return "single_slab";
        case ScenarioKind::random_field: return "random_field";
        case ScenarioKind::forest: return "forest";
        case ScenarioKind::custom: return "custom";
    }
    return "custom";
}

inline ScenarioKind scenario_kind_from_string(const std::string& s) {
    if (s == "single_slab") return ScenarioKind::single_slab;
    if (s == "random_field") return ScenarioKind::random_field;
    if (s == "forest") return ScenarioKind::forest;
    if (s == "custom") return ScenarioKind::custom;
    throw std::invalid_argument("unknown scenario kind: " + s);
}

struct SlabParams {
    double center_x{20.0};
    double center_y{0.0};
    double width{5.0};      // along y
    double thickness{0.5};  // along x
    bool operator==(const SlabParams&) const = default;
};

struct FieldParams {
    double x_min{12.0}, x_max{28.0};
    double y_min{-12.0}, y_max{12.0};
    double diagonal{2.0};
    double gap{3.0};     // nominal clear distance between neighbouring boxes
    double jitter{0.5};  // per-axis uniform jitter of each centre

    double pitch() const { return gap + diagonal / std::numbers::sqrt2; }
    bool operator==(const FieldParams&) const = default;
};

struct ForestParams {
    double x_min{0.0}, x_max{30.0};
    double y_min{0.0}, y_max{40.0};
    double coverage{0.25};
    double trunk_radius_min{0.2}, trunk_radius_max{0.5};
    double foliage_radius_min{1.5}, foliage_radius_max{2.3};
    double canopy_z_min{5.0}, canopy_z_max{9.0};
    double gap_min{2.5};  // minimum horizontal canopy-to-canopy gap
    bool operator==(const ForestParams&) const = default;
};

struct ScenarioConfig {
    ScenarioKind kind{ScenarioKind::custom};
    std::uint64_t seed{0};
    /// When >= 0, obstacles are generated from this seed instead of `seed`,
    /// so one layout can be flown from many randomized starts and goals.
    std::int64_t layout_seed{-1};
    int agent_count{9};
    AxisAlignedBox world_bounds{{0, -15, 0}, {40, 15, 10}};
    AxisAlignedBox start_region{{5, -1, 4.5}, {7, 1, 5.5}};
    Vec3 goal{35, 0, 5};
    Vec3 goal_jitter{0, 0, 0};
    double agent_spacing{3.0};
    bool lattice_vertical{true};  // start lattice in the y-z plane (abreast) rather than x-y
    double position_jitter{0.3};
    double min_agent_separation{1.5};
    double start_clearance{1.5};
    SlabParams slab{};
    FieldParams field{};
    ForestParams forest{};
    std::vector<Primitive> custom_primitives{};
    bool operator==(const ScenarioConfig&) const = default;
};

struct Scenario {
    ObstacleSet obstacles;
    std::vector<Vec3> starts;
    Vec3 goal;
};

/// Thrown when rejection sampling cannot satisfy the configuration.
struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<Primitive> make_slab(const ScenarioConfig& cfg) {
    const auto& s = cfg.slab;
    return {make_box({s.center_x - s.thickness / 2, s.center_y - s.width / 2, cfg.world_bounds.min.z},
                     {s.center_x + s.thickness / 2, s.center_y + s.width / 2, cfg.world_bounds.max.z})};
}

inline std::vector<Primitive> make_field(const ScenarioConfig& cfg, Rng& rng) {
    const auto& f = cfg.field;
    const double side = f.diagonal / std::numbers::sqrt2;
    const double pitch = f.pitch();
    const double col = pitch * std::numbers::sqrt3 / 2.0;
    const int nx = std::max(1, static_cast<int>(std::floor((f.x_max - f.x_min) / col)) + 1);
    const int ny = std::max(1, static_cast<int>(std::floor((f.y_max - f.y_min) / pitch)) + 1);
    // Centre the lattice inside the field rectangle.
    const double x0 = f.x_min + 0.5 * ((f.x_max - f.x_min) - (nx - 1) * col);
    const double y0 = f.y_min + 0.5 * ((f.y_max - f.y_min) - (ny - 1) * pitch);
    std::vector<Primitive> out;
    out.reserve(static_cast<std::size_t>(nx * ny));
    for (int i = 0; i < nx; ++i) {
        const double shift = (i % 2 == 1) ? 0.5 * pitch : 0.0;
        for (int j = 0; j < ny; ++j) {
            const double yc = y0 + j * pitch + shift;
            if (yc > f.y_max) continue;
            const double x = x0 + i * col + rng.uniform(-f.jitter, f.jitter);
            const double y = yc + rng.uniform(-f.jitter, f.jitter);
            out.emplace_back(make_box({x - side / 2, y - side / 2, cfg.world_bounds.min.z},
                                      {x + side / 2, y + side / 2, cfg.world_bounds.max.z}));
        }
    }
    return out;
}

struct Tree {
    double x, y;
    std::vector<Primitive> parts;
    double footprint_radius;
};

inline Tree make_tree(const ForestParams& p, double x, double y, double floor_z, Rng& rng) {
    Tree t{x, y, {}, 0.0};
    const double trunk_r = rng.uniform(p.trunk_radius_min, p.trunk_radius_max);
    const double canopy_z = rng.uniform(p.canopy_z_min, p.canopy_z_max);
    const int n_spheres = 3 + static_cast<int>(rng.below(3));
    double top = canopy_z;
    double reach = trunk_r;
    std::vector<Primitive> foliage;
    for (int k = 0; k < n_spheres; ++k) {
        const double r = rng.uniform(p.foliage_radius_min, p.foliage_radius_max);
        const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double off = k == 0 ? 0.0 : rng.uniform(0.3, 0.9);
        const double dz = k == 0 ? 0.0 : rng.uniform(-1.0, 1.0);
        const Vec3 c{x + off * std::cos(ang), y + off * std::sin(ang), canopy_z + dz};
        foliage.emplace_back(make_sphere(c, r));
        top = std::max(top, c.z);
        reach = std::max(reach, off + r);
    }
    t.parts.emplace_back(make_cylinder(x, y, trunk_r, floor_z, top));
    for (auto& f : foliage) t.parts.push_back(std::move(f));
    t.footprint_radius = reach;
    return t;
}

// Horizontal coverage raster over the forest area at 0.1 m.
inline double canopy_coverage(const std::vector<Primitive>& prims, const ForestParams& p) {
    constexpr double kCell = 0.1;
    const int nx = static_cast<int>(std::round((p.x_max - p.x_min) / kCell));
    const int ny = static_cast<int>(std::round((p.y_max - p.y_min) / kCell));
    std::vector<std::uint8_t> covered(static_cast<std::size_t>(nx) * ny, 0);
    for (const auto& prim : prims) {
        const auto b = bounds_of(prim);
        const int i0 = std::max(0, static_cast<int>(std::floor((b.min.x - p.x_min) / kCell)));
        const int i1 = std::min(nx - 1, static_cast<int>(std::floor((b.max.x - p.x_min) / kCell)));
        const int j0 = std::max(0, static_cast<int>(std::floor((b.min.y - p.y_min) / kCell)));
        const int j1 = std::min(ny - 1, static_cast<int>(std::floor((b.max.y - p.y_min) / kCell)));
        for (int i = i0; i <= i1; ++i) {
            for (int j = j0; j <= j1; ++j) {
                const double x = p.x_min + (i + 0.5) * kCell;
                const double y = p.y_min + (j + 0.5) * kCell;
                bool in = false;
                if (const auto* c = std::get_if<VerticalCylinder>(&prim)) {
                    in = std::hypot(x - c->cx, y - c->cy) <= c->radius;
                } else if (const auto* s = std::get_if<Sphere>(&prim)) {
                    in = std::hypot(x - s->center.x, y - s->center.y) <= s->radius;
                } else {
                    in = true;
                }
                if (in) covered[static_cast<std::size_t>(i) * ny + j] = 1;
            }
        }
    }
    std::size_t n = 0;
    for (auto c : covered) n += c;
    return static_cast<double>(n) / static_cast<double>(covered.size());
}

inline std::vector<Primitive> forest_with_pitch(const ScenarioConfig& cfg, double pitch, std::uint64_t seed) {
    const auto& p = cfg.forest;
    Rng rng(seed);
    std::vector<Tree> trees;
    const double row_h = pitch * std::sqrt(3.0) / 2.0;
    const double jitter = 0.2 * pitch;
    int row = 0;
    for (double y = p.y_min + row_h / 2; y < p.y_max; y += row_h, ++row) {
        const double shift = (row % 2) ? pitch / 2 : 0.0;
        for (double x = p.x_min + pitch / 4 + shift; x < p.x_max; x += pitch) {
            // Re-jitter a few times to respect the minimum canopy gap; drop
            // the tree if it never fits.
            for (int attempt = 0; attempt < 8; ++attempt) {
                const double tx = std::clamp(x + rng.uniform(-jitter, jitter), p.x_min, p.x_max);
                const double ty = std::clamp(y + rng.uniform(-jitter, jitter), p.y_min, p.y_max);
                auto tree = make_tree(p, tx, ty, cfg.world_bounds.min.z, rng);
                const bool fits = std::none_of(trees.begin(), trees.end(), [&](const Tree& o) {
                    return std::hypot(o.x - tree.x, o.y - tree.y) - o.footprint_radius - tree.footprint_radius <
                           p.gap_min;
                });
                if (fits) {
                    trees.push_back(std::move(tree));
                    break;
                }
            }
        }
    }
    std::vector<Primitive> prims;
    for (auto& t : trees) {
        for (auto& part : t.parts) prims.push_back(std::move(part));
    }
    return prims;
}

inline std::vector<Primitive> make_forest(const ScenarioConfig& cfg, Rng& rng) {
    const auto& p = cfg.forest;
    if (!(p.coverage > 0.0 && p.coverage < 0.9)) throw ScenarioError("forest coverage must be in (0, 0.9)");
    const std::uint64_t layout_seed = static_cast<std::uint64_t>(rng.uniform() * 9007199254740992.0);
    // Expected footprint radius of one tree, used for the first pitch guess.
    const double r_mean = 0.5 * (p.foliage_radius_min + p.foliage_radius_max) + 0.6;
    double pitch = std::sqrt(std::numbers::pi * r_mean * r_mean / (p.coverage * std::sqrt(3.0) / 2.0));
    // Below this spacing almost every candidate is rejected by the gap rule,
    // and the candidate count grows without bound.
    const double min_pitch = p.foliage_radius_min;
    std::vector<Primitive> best;
    double best_err = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 12; ++iter) {
        pitch = std::max(pitch, min_pitch);
        auto prims = forest_with_pitch(cfg, pitch, layout_seed);
        const double cov = canopy_coverage(prims, p);
        const double err = std::abs(cov - p.coverage);
        if (err < best_err) {
            best_err = err;
            best = std::move(prims);
        }
        if (err < 0.01 || cov <= 0.0 || (pitch == min_pitch && cov < p.coverage)) break;
        pitch *= std::sqrt(cov / p.coverage);
    }
    if (best_err > 0.03) throw ScenarioError("forest coverage target not reachable");
    return best;
}

}  // namespace detail

/// Fraction of the forest area whose vertical projection hits any primitive.
inline double canopy_coverage(const ObstacleSet& obs, const ForestParams& p) {
    return detail::canopy_coverage(obs.primitives, p);
}

/// Deterministic scenario construction. Throws ScenarioError when agents
/// cannot be placed after a bounded number of attempts.
inline Scenario generate_scenario(const ScenarioConfig& cfg) {
    if (cfg.agent_count < 1) throw std::invalid_argument("agent_count must be >= 1");
    Rng rng(cfg.seed);
    Rng obstacle_rng = cfg.layout_seed >= 0 ? Rng(static_cast<std::uint64_t>(cfg.layout_seed)).fork(1) : rng.fork(1);
    Rng agent_rng = rng.fork(2);
    Rng goal_rng = rng.fork(3);

    Scenario sc;
    sc.obstacles.world_bounds = cfg.world_bounds;
    switch (cfg.kind) {
        case ScenarioKind::single_slab: sc.obstacles.primitives = detail::make_slab(cfg); break;
        case ScenarioKind::random_field: sc.obstacles.primitives = detail::make_field(cfg, obstacle_rng); break;
        case ScenarioKind::forest: sc.obstacles.primitives = detail::make_forest(cfg, obstacle_rng); break;
        case ScenarioKind::custom: sc.obstacles.primitives = cfg.custom_primitives; break;
    }

    sc.goal = cfg.goal + Vec3{goal_rng.uniform(-1, 1) * cfg.goal_jitter.x, goal_rng.uniform(-1, 1) * cfg.goal_jitter.y,
                              goal_rng.uniform(-1, 1) * cfg.goal_jitter.z};

    const int n = cfg.agent_count;
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    const int rows = (n + cols - 1) / cols;
    constexpr int kAttempts = 200;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
        const Vec3 c{agent_rng.uniform(cfg.start_region.min.x, cfg.start_region.max.x),
                     agent_rng.uniform(cfg.start_region.min.y, cfg.start_region.max.y),
                     agent_rng.uniform(cfg.start_region.min.z, cfg.start_region.max.z)};
        std::vector<Vec3> starts;
        starts.reserve(n);
        bool ok = true;
        for (int k = 0; k < n && ok; ++k) {
            const int col = k % cols;
            const int row = k / cols;
            const double j = cfg.position_jitter;
            const double a = (col - (cols - 1) / 2.0) * cfg.agent_spacing;
            const double b = (row - (rows - 1) / 2.0) * cfg.agent_spacing;
            const Vec3 offset = cfg.lattice_vertical ? Vec3{0.0, a, b} : Vec3{a, b, 0.0};
            const Vec3 p = c + offset + Vec3{agent_rng.uniform(-j, j), agent_rng.uniform(-j, j), agent_rng.uniform(-j, j)};
            if (!cfg.world_bounds.contains(p)) ok = false;
            if (ok && distance_to_obstacles(sc.obstacles, p) < cfg.start_clearance) ok = false;
            for (const auto& q : starts) {
                if (distance(p, q) < cfg.min_agent_separation) ok = false;
            }
            starts.push_back(p);
        }
        if (ok) {
            sc.starts = std::move(starts);
            return sc;
        }
    }
    throw ScenarioError("could not place agents: start region overcrowded or obstructed");
}

// ---------------------------------------------------------------------------
// Depth camera
// ---------------------------------------------------------------------------

/// Marker stored for pixels whose ray returns nothing within range.
inline constexpr double kNoReturn = std::numeric_limits<double>::infinity();

struct CameraIntrinsics {
    int width{64};
    int height{48};
    double hfov{std::numbers::pi / 2};  // radians
    double max_range{10.0};
    bool operator==(const CameraIntrinsics&) const = default;

    /// Vertical FOV implied by square pixels.
    double vfov() const { return 2.0 * std::atan(std::tan(hfov / 2) * height / width); }
    double focal() const { return (width / 2.0) / std::tan(hfov / 2); }
};

struct CameraPose {
    Vec3 position;
    double yaw{0.0};    // about +z, 0 looks along +x
    double pitch{0.0};  // positive looks up
};

struct DepthImage {
    int width{0};
    int height{0};
    double hfov{0.0};
    double vfov{0.0};
    double max_range{0.0};
    CameraPose pose;
    std::vector<double> depths;  // row-major, kNoReturn for no hit

    double at(int u, int v) const { return depths[static_cast<std::size_t>(v) * width + u]; }
};

/// Unit ray through pixel (u, v). The principal point sits at (W/2, H/2), so
/// pixel (W/2, H/2) looks exactly along the optical axis.
inline Vec3 pixel_ray(const CameraPose& pose, const CameraIntrinsics& in, int u, int v) {
    const double f = in.focal();
    const double cp = std::cos(pose.pitch), sp = std::sin(pose.pitch);
    const double cy = std::cos(pose.yaw), sy = std::sin(pose.yaw);
    const Vec3 forward{cp * cy, cp * sy, sp};
    const Vec3 right{sy, -cy, 0.0};
    const Vec3 up = right.cross(forward);
    const double xr = (u - in.width / 2.0) / f;
    const double yu = (in.height / 2.0 - v) / f;
    return (forward + right * xr + up * yu).normalized();
}

/// Primitives whose bounds come within `range` of `p`.
inline std::vector<Primitive> primitives_near(const ObstacleSet& obs, const Vec3& p, double range) {
    std::vector<Primitive> out;
    for (const auto& prim : obs.primitives) {
        const auto b = bounds_of(prim);
        const Vec3 q{std::clamp(p.x, b.min.x, b.max.x), std::clamp(p.y, b.min.y, b.max.y),
                     std::clamp(p.z, b.min.z, b.max.z)};
        if (distance(p, q) <= range) out.push_back(prim);
    }
    return out;
}

/// Range image along each pixel ray. Agents are never rendered.
inline DepthImage render_depth(const CameraPose& pose, const CameraIntrinsics& in, const ObstacleSet& obs) {
    if (in.width <= 0 || in.height <= 0 || !(in.hfov > 0.0 && in.hfov < std::numbers::pi) || !(in.max_range > 0.0)) {
        throw std::invalid_argument("invalid camera intrinsics");
    }
    DepthImage img;
    img.width = in.width;
    img.height = in.height;
    img.hfov = in.hfov;
    img.vfov = in.vfov();
    img.max_range = in.max_range;
    img.pose = pose;
    img.depths.assign(static_cast<std::size_t>(in.width) * in.height, kNoReturn);
    const auto nearby = primitives_near(obs, pose.position, in.max_range);
    if (nearby.empty()) return img;
    for (int v = 0; v < in.height; ++v) {
        for (int u = 0; u < in.width; ++u) {
            const auto hit = raycast(pose.position, pixel_ray(pose, in, u, v), in.max_range, nearby);
            if (hit) img.depths[static_cast<std::size_t>(v) * in.width + u] = *hit;
        }
    }
    return img;
}

/// True iff nothing lies between a and b. Surface contact (including exact
/// tangency) blocks the line.
inline bool line_of_sight(const Vec3& a, const Vec3& b, const ObstacleSet& obs) {
    const Vec3 d = b - a;
    const double len = d.norm();
    if (!(len > 0.0)) throw std::invalid_argument("line_of_sight requires distinct endpoints");
    return !raycast(a, d / len, len, obs.primitives).has_value();
}

// ---------------------------------------------------------------------------
// Plain-text primitive list
// ---------------------------------------------------------------------------
//   bounds minx miny minz maxx maxy maxz
//   box minx miny minz maxx maxy maxz
//   cylinder cx cy radius zmin zmax
//   sphere cx cy cz radius

inline void write_primitive_list(std::ostream& os, const ObstacleSet& obs) {
    os.precision(17);
    const auto& w = obs.world_bounds;
    os << "bounds " << w.min.x << ' ' << w.min.y << ' ' << w.min.z << ' ' << w.max.x << ' ' << w.max.y << ' '
       << w.max.z << '\n';
    for (const auto& prim : obs.primitives) {
        if (const auto* b = std::get_if<AxisAlignedBox>(&prim)) {
            os << "box " << b->min.x << ' ' << b->min.y << ' ' << b->min.z << ' ' << b->max.x << ' ' << b->max.y
               << ' ' << b->max.z << '\n';
        } else if (const auto* c = std::get_if<VerticalCylinder>(&prim)) {
            os << "cylinder " << c->cx << ' ' << c->cy << ' ' << c->radius << ' ' << c->z_min << ' ' << c->z_max
               << '\n';
        } else if (const auto* s = std::get_if<Sphere>(&prim)) {
            os << "sphere " << s->center.x << ' ' << s->center.y << ' ' << s->center.z << ' ' << s->radius << '\n';
        }
    }
}

inline ObstacleSet read_primitive_list(std::istream& is) {
    ObstacleSet obs;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        auto fail = [&] { throw std::invalid_argument("bad primitive on line " + std::to_string(line_no)); };
        if (tag == "bounds" || tag == "box") {
            Vec3 a, b;
            if (!(ls >> a.x >> a.y >> a.z >> b.x >> b.y >> b.z)) fail();
            if (tag == "bounds") obs.world_bounds = make_box(a, b);
            else obs.primitives.emplace_back(make_box(a, b));
        } else if (tag == "cylinder") {
            double cx, cy, r, z0, z1;
            if (!(ls >> cx >> cy >> r >> z0 >> z1)) fail();
            obs.primitives.emplace_back(make_cylinder(cx, cy, r, z0, z1));
        } else if (tag == "sphere") {
            Vec3 c;
            double r;
            if (!(ls >> c.x >> c.y >> c.z >> r)) fail();
            obs.primitives.emplace_back(make_sphere(c, r));
        } else {
            fail();
        }
    }
    return obs;
}

}  // namespace goflock
