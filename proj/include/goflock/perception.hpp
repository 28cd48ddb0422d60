#pragma once
/**
 * @file perception.hpp
 * @brief Waypoint and virtual-agent extraction from a local occupancy grid.
 *
 * Per perception tick an agent renders a depth image, folds it into its
 * sliding grid, inflates the grid, plans a 26-connected A* path toward the
 * goal and string-pulls that path to the farthest vertex still in line of
 * sight. That vertex is the target waypoint w1; it hugs the inflated
 * obstacle's edge. Three virtual agents come from the raw (uninflated) map:
 *
 *   w2  occupied voxel nearest the agent
 *   w3  occupied voxel nearest the segment agent -> w1
 *   w4  point of that segment nearest w3
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "goflock/geometry.hpp"
#include "goflock/mapping.hpp"
#include "goflock/world.hpp"

namespace goflock {

struct PerceptionOutput {
    Vec3 w1;
    std::optional<Vec3> w2;
    std::optional<Vec3> w3;
    std::optional<Vec3> w4;
    bool goal_visible{false};
    bool operator==(const PerceptionOutput&) const = default;
};

struct GridPath {
    std::vector<VoxelIndex> cells;
    std::vector<Vec3> waypoints;  // voxel centres
    double cost{0.0};
};

/// Planning was asked to start inside an occupied voxel.
struct StartOccupiedError : std::runtime_error {
    StartOccupiedError() : std::runtime_error("plan start voxel is occupied") {}
};

/// The 26 neighbour offsets in lexicographic order.
inline const std::array<VoxelIndex, 26>& neighbor_offsets() {
    static const std::array<VoxelIndex, 26> offsets = [] {
        std::array<VoxelIndex, 26> o{};
        int k = 0;
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz)
                    if (dx || dy || dz) o[k++] = {dx, dy, dz};
        return o;
    }();
    return offsets;
}

/// Obstacle-free shortest distance between voxels on a 26-connected lattice
/// with Euclidean step costs, in voxel units.
inline double lattice_distance(const VoxelIndex& a, const VoxelIndex& b) {
    std::array<int, 3> d{std::abs(a[0] - b[0]), std::abs(a[1] - b[1]), std::abs(a[2] - b[2])};
    std::sort(d.begin(), d.end());
    return std::numbers::sqrt3 * d[0] + std::numbers::sqrt2 * (d[1] - d[0]) + (d[2] - d[1]);
}

namespace detail {

// Point where the ray start->goal leaves the window, pulled half a voxel inside.
inline Vec3 project_into_window(const OccupancyGrid& grid, const Vec3& start, const Vec3& goal) {
    const auto b = grid.bounds();
    const double margin = grid.resolution() * 0.5;
    const Vec3 d = goal - start;
    double t = 1.0;
    for (int k = 0; k < 3; ++k) {
        if (d[k] > 0) t = std::min(t, (b.max[k] - margin - start[k]) / d[k]);
        else if (d[k] < 0) t = std::min(t, (b.min[k] + margin - start[k]) / d[k]);
    }
    return start + d * std::max(0.0, t);
}

// Nearest non-occupied voxel to `v` within `radius` voxels (Euclidean in
// index space), ties to the smallest index.
inline std::optional<VoxelIndex> nearest_free_voxel(const OccupancyGrid& grid, const VoxelIndex& v, int radius) {
    std::optional<VoxelIndex> best;
    int best_d2 = radius * radius + 1;
    for (int dx = -radius; dx <= radius; ++dx) {
        for (int dy = -radius; dy <= radius; ++dy) {
            for (int dz = -radius; dz <= radius; ++dz) {
                const VoxelIndex w{v[0] + dx, v[1] + dy, v[2] + dz};
                const int d2 = dx * dx + dy * dy + dz * dz;
                if (d2 > radius * radius || !grid.in_range(w) || grid.occupied(w)) continue;
                if (d2 < best_d2 || (d2 == best_d2 && w < *best)) {
                    best_d2 = d2;
                    best = w;
                }
            }
        }
    }
    return best;
}

struct AStarScratch {
    std::vector<double> g;
    std::vector<std::int64_t> parent;
    std::vector<std::uint32_t> seen;   // generation stamp for g/parent validity
    std::vector<std::uint32_t> closed;
    std::uint32_t generation{0};

    void prepare(std::size_t n) {
        if (g.size() != n) {
            g.assign(n, 0.0);
            parent.assign(n, -1);
            seen.assign(n, 0);
            closed.assign(n, 0);
            generation = 0;
        }
        if (++generation == 0) {
            std::fill(seen.begin(), seen.end(), 0);
            std::fill(closed.begin(), closed.end(), 0);
            generation = 1;
        }
    }
};

}  // namespace detail

/// Cost-minimal 26-connected path over non-occupied voxels of an inflated grid.
///
/// Edge costs are Euclidean step lengths; the heuristic is the exact
/// obstacle-free lattice distance (consistent, so the first expansion of the
/// goal is optimal). Ties break on (f, h, linear index). A goal outside the
/// window is replaced by the window-boundary point on start->goal; an occupied
/// goal voxel is retargeted to the nearest free voxel within 2 voxels.
///
/// Returns nullopt when the goal is unreachable; throws StartOccupiedError if
/// the start voxel is occupied.
inline std::optional<GridPath> plan_path(const OccupancyGrid& grid, const Vec3& start, const Vec3& goal) {
    if (!grid.inflated()) throw std::invalid_argument("plan_path expects an inflated grid");
    const VoxelIndex s = grid.voxel_of(start);
    if (!grid.in_range(s)) throw std::invalid_argument("plan start lies outside the grid window");
    if (grid.occupied(s)) throw StartOccupiedError();

    const Vec3 target = grid.contains(goal) ? goal : detail::project_into_window(grid, start, goal);
    VoxelIndex t = grid.voxel_of(target);
    if (!grid.in_range(t)) return std::nullopt;
    if (grid.occupied(t)) {
        const auto alt = detail::nearest_free_voxel(grid, t, 2);
        if (!alt) return std::nullopt;
        t = *alt;
    }

    thread_local detail::AStarScratch scratch;
    scratch.prepare(grid.size());
    const std::uint32_t gen = scratch.generation;

    struct Node {
        double f;
        double h;
        std::size_t idx;
        bool operator>(const Node& o) const {
            if (f != o.f) return f > o.f;
            if (h != o.h) return h > o.h;
            return idx > o.idx;
        }
    };
    std::priority_queue<Node, std::vector<Node>, std::greater<>> open;
    const double res = grid.resolution();
    const std::size_t s_idx = grid.linear(s);
    const std::size_t t_idx = grid.linear(t);
    scratch.g[s_idx] = 0.0;
    scratch.parent[s_idx] = -1;
    scratch.seen[s_idx] = gen;
    const double h0 = lattice_distance(s, t) * res;
    open.push({h0, h0, s_idx});

    static const double step_cost[4] = {0.0, 1.0, std::numbers::sqrt2, std::numbers::sqrt3};
    bool found = false;
    while (!open.empty()) {
        const Node cur = open.top();
        open.pop();
        if (scratch.closed[cur.idx] == gen) continue;
        scratch.closed[cur.idx] = gen;
        if (cur.idx == t_idx) {
            found = true;
            break;
        }
        const VoxelIndex v = grid.unlinear(cur.idx);
        const double gv = scratch.g[cur.idx];
        for (const auto& o : neighbor_offsets()) {
            const VoxelIndex w{v[0] + o[0], v[1] + o[1], v[2] + o[2]};
            if (!grid.in_range(w)) continue;
            const std::size_t wi = grid.linear(w);
            if (grid.at(wi) == Cell::occupied || scratch.closed[wi] == gen) continue;
            const double ng = gv + step_cost[std::abs(o[0]) + std::abs(o[1]) + std::abs(o[2])] * res;
            if (scratch.seen[wi] != gen || ng < scratch.g[wi]) {
                scratch.seen[wi] = gen;
                scratch.g[wi] = ng;
                scratch.parent[wi] = static_cast<std::int64_t>(cur.idx);
                const double h = lattice_distance(w, t) * res;
                open.push({ng + h, h, wi});
            }
        }
    }
    if (!found) return std::nullopt;

    GridPath path;
    for (std::int64_t i = static_cast<std::int64_t>(t_idx); i >= 0; i = scratch.parent[static_cast<std::size_t>(i)]) {
        path.cells.push_back(grid.unlinear(static_cast<std::size_t>(i)));
        if (static_cast<std::size_t>(i) == s_idx) break;
    }
    std::reverse(path.cells.begin(), path.cells.end());
    path.waypoints.reserve(path.cells.size());
    for (std::size_t k = 0; k < path.cells.size(); ++k) {
        path.waypoints.push_back(grid.center(path.cells[k]));
        if (k > 0) {
            const auto& a = path.cells[k - 1];
            const auto& b = path.cells[k];
            path.cost += step_cost[std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2])] * res;
        }
    }
    return path;
}

/// True when every voxel on a->b is free of occupancy, ignoring an initial run
/// of occupied voxels around `a` (an agent may sit inside the inflation
/// margin and must still be able to see its way out).
inline bool grid_visible(const OccupancyGrid& grid, const Vec3& a, const Vec3& b) {
    bool leaving = grid.occupied(grid.voxel_of(a));
    bool clear = true;
    traverse_voxels(grid, a, b, [&](const VoxelIndex& v) {
        if (grid.occupied(v)) {
            if (leaving) return true;
            clear = false;
            return false;
        }
        leaving = false;
        return true;
    });
    return clear;
}

/// String-pulled target waypoint: the farthest path vertex visible from
/// `agent_pos` in `grid`. When the final vertex is visible and the goal
/// itself is a free in-window point reachable in a straight line, the goal
/// is returned instead.
inline Vec3 select_waypoint(const GridPath& path, const Vec3& agent_pos, const Vec3& goal, const OccupancyGrid& grid) {
    if (path.waypoints.empty()) throw std::invalid_argument("select_waypoint needs a non-empty path");
    for (std::size_t k = path.waypoints.size(); k-- > 0;) {
        const Vec3& cand = path.waypoints[k];
        if (k == 0 || grid_visible(grid, agent_pos, cand)) {
            if (k + 1 == path.waypoints.size() && grid.contains(goal) && !grid.occupied(grid.voxel_of(goal)) &&
                grid_visible(grid, agent_pos, goal)) {
                return goal;
            }
            return cand;
        }
    }
    return path.waypoints.front();
}

struct VirtualAgents {
    std::optional<Vec3> w2;
    std::optional<Vec3> w3;
    std::optional<Vec3> w4;
};

/// w2/w3/w4 from occupied voxel centres within `sense_radius` of the agent.
/// All three are absent when no occupied voxel is in range.
inline VirtualAgents compute_virtual_agents(const Vec3& agent_pos, const Vec3& w1, const OccupancyGrid& grid,
                                            double sense_radius) {
    VirtualAgents out;
    const Segment seg{agent_pos, w1};
    const double res = grid.resolution();
    const VoxelIndex c = grid.voxel_of(agent_pos);
    const int r = static_cast<int>(std::ceil(sense_radius / res)) + 1;
    const double r2 = sense_radius * sense_radius;
    double best_w2 = std::numeric_limits<double>::infinity();
    double best_w3 = std::numeric_limits<double>::infinity();
    for (int ix = std::max(0, c[0] - r); ix <= std::min(grid.nx() - 1, c[0] + r); ++ix) {
        for (int iy = std::max(0, c[1] - r); iy <= std::min(grid.ny() - 1, c[1] + r); ++iy) {
            const std::size_t row = grid.linear(ix, iy, 0);
            for (int iz = std::max(0, c[2] - r); iz <= std::min(grid.nz() - 1, c[2] + r); ++iz) {
                if (grid.at(row + iz) != Cell::occupied) continue;
                const Vec3 q = grid.center({ix, iy, iz});
                const double d2 = (q - agent_pos).squared_norm();
                if (d2 > r2) continue;
                if (d2 < best_w2) {
                    best_w2 = d2;
                    out.w2 = q;
                }
                const double s2 = (nearest_point_on_segment(seg, q) - q).squared_norm();
                if (s2 < best_w3) {
                    best_w3 = s2;
                    out.w3 = q;
                }
            }
        }
    }
    if (out.w3) out.w4 = nearest_point_on_segment(seg, *out.w3);
    return out;
}

// ---------------------------------------------------------------------------
// Per-agent perception pipeline
// ---------------------------------------------------------------------------

struct PerceptionConfig {
    CameraIntrinsics camera{};
    double resolution{0.25};
    Vec3 window{20.0, 20.0, 10.0};
    double inflation{0.5};
    double sense_radius{5.0};
    bool operator==(const PerceptionConfig&) const = default;
};

/// How much of the pipeline a controller needs.
enum class PerceptionMode {
    full,          // map, plan, w1..w4
    nearest_only,  // map and w2 only; w1 is always the goal
};

/// Owns one agent's map. Every tick: re-centre, render, integrate, inflate,
/// then plan and extract virtual agents.
class Perceiver {
public:
    explicit Perceiver(PerceptionConfig cfg = {}) : cfg_(cfg) {}

    const OccupancyGrid& map() const { return map_; }
    const OccupancyGrid& inflated_map() const { return inflated_; }
    const PerceptionConfig& config() const { return cfg_; }

    /// Fold a depth image taken from `pose` into the map and refresh the
    /// inflated copy. Voxels outside the world box are blocked for planning.
    /// With `refresh_planning_map` false the inflated copy is left untouched,
    /// which is enough for PerceptionMode::nearest_only.
    void update_map(const CameraPose& pose, const ObstacleSet& world, bool refresh_planning_map = true) {
        if (map_.size() == 0) {
            map_ = OccupancyGrid::window(pose.position, cfg_.resolution, cfg_.window);
        } else {
            map_.recenter(pose.position);
        }
        const DepthImage img = render_depth(pose, cfg_.camera, world);
        integrate_depth(map_, img);
        if (!refresh_planning_map) return;
        inflate_into(map_, cfg_.inflation, inflated_);
        block_outside(world.world_bounds);
    }

    PerceptionOutput perceive(const Vec3& pos, const Vec3& goal, const ObstacleSet& world, PerceptionMode mode) const {
        PerceptionOutput out;
        const bool los = pos != goal && line_of_sight(pos, goal, world);
        if (mode == PerceptionMode::nearest_only) {
            out.w1 = goal;
            out.goal_visible = los;
            out.w2 = nearest_occupied(map_, pos, cfg_.sense_radius);
            return out;
        }
        const Vec3 goal_in = map_.contains(goal) ? goal : detail::project_into_window(map_, pos, goal);
        out.goal_visible = los && grid_visible(inflated_, pos, goal_in);
        if (out.goal_visible) {
            out.w1 = goal;
        } else {
            out.w1 = plan_waypoint(pos, goal);
        }
        const auto va = compute_virtual_agents(pos, out.w1, map_, cfg_.sense_radius);
        out.w2 = va.w2;
        out.w3 = va.w3;
        out.w4 = va.w4;
        return out;
    }

private:
    Vec3 plan_waypoint(const Vec3& pos, const Vec3& goal) const {
        Vec3 start = pos;
        VoxelIndex sv = inflated_.voxel_of(pos);
        if (inflated_.occupied(sv)) {
            // Inside the inflation margin: plan from the closest free voxel.
            const int radius = static_cast<int>(std::ceil(cfg_.inflation / cfg_.resolution)) + 2;
            const auto alt = detail::nearest_free_voxel(inflated_, sv, radius);
            if (!alt) return goal;
            start = inflated_.center(*alt);
        }
        const auto path = plan_path(inflated_, start, goal);
        if (!path) return goal;
        return select_waypoint(*path, pos, goal, inflated_);
    }

    void block_outside(const AxisAlignedBox& world) {
        const double res = inflated_.resolution();
        const Vec3 o = inflated_.origin();
        const int n[3] = {inflated_.nx(), inflated_.ny(), inflated_.nz()};
        std::array<std::vector<char>, 3> out;
        bool any = false;
        for (int k = 0; k < 3; ++k) {
            out[k].resize(static_cast<std::size_t>(n[k]));
            for (int i = 0; i < n[k]; ++i) {
                const double c = o[k] + (i + 0.5) * res;
                out[k][i] = c < world.min[k] || c > world.max[k];
                any = any || out[k][i];
            }
        }
        if (!any) return;
        std::size_t li = 0;
        for (int ix = 0; ix < n[0]; ++ix) {
            for (int iy = 0; iy < n[1]; ++iy) {
                const bool oxy = out[0][ix] || out[1][iy];
                for (int iz = 0; iz < n[2]; ++iz, ++li) {
                    if (oxy || out[2][iz]) inflated_.cell_ref(li) = Cell::occupied;
                }
            }
        }
    }

    PerceptionConfig cfg_;
    OccupancyGrid map_;
    OccupancyGrid inflated_;
};

}  // namespace goflock
