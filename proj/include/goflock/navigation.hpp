#pragma once
/**
 * @file navigation.hpp
 * @brief Collective navigation control law and the two comparison controllers.
 *
 * Desired velocity of agent i:
 *
 *     v_des = v_goal + sum_j P(v_neigh_ij) + v_obs,   then |v_des| <= phi_max
 *
 *   v_neigh_ij  phi_n (tau - |p_ij|) p_ij_hat outside the dead zone
 *               |tau - |p_ij|| <= beta, zero inside it (p_ij = x_i - x_j)
 *   v_goal      min(phi_g |t - x_i|, phi_g) toward t, where t is the goal
 *               when visible and the waypoint w1 otherwise
 *   v_obs       phi_o [ max(s - |w4 - w3|, 0)/s * unit(w4 - w3)
 *                     + max(s - |x_i - w2|, 0)/s * unit(x_i - w2) ]
 *   P           removes the component along unit(w4 - w3) while the agent
 *               is closer than the activation distance to w2
 *
 * Variants:
 *   goflock   the full law above
 *   baseline  target fixed to the goal, only the w2 repulsion, no projection
 *   siphon    baseline plus a pull from a stuck agent toward the nearest
 *             free agent
 */

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "goflock/geometry.hpp"
#include "goflock/perception.hpp"

namespace goflock {

struct NavGains {
    double phi_n{6.0};      // inter-agent gain
    double phi_g{6.0};      // agent-goal gain
    double phi_o{12.0};     // agent-obstacle gain
    double tau{3.0};        // desired inter-agent distance [m]
    double beta{0.1};       // dead-zone half width [m]
    double sigma_s{1.5};    // obstacle safety distance [m]
    int k_nbr{3};           // neighbours considered
    double phi_max{2.0};    // speed cap [m/s]
    double phi_s{6.0};      // siphon gain
    double projection_distance{1.5};  // neighbour projection activates below this w2 distance [m]
    /// |w4 - w3| at or below this counts as coincident (segment runs through
    /// the w3 voxel); default is half a 0.25 m voxel's diagonal.
    double coincidence_distance{0.125 * 1.7320508075688772};
    bool operator==(const NavGains&) const = default;

    void validate() const {
        if (phi_n < 0 || phi_g < 0 || phi_o < 0 || phi_s < 0 || beta < 0) {
            throw std::invalid_argument("navigation gains must be non-negative");
        }
        if (!(tau > 0) || !(sigma_s > 0) || k_nbr < 1 || !(phi_max > 0) || !(projection_distance >= 0) ||
            !(coincidence_distance >= 0)) {
            throw std::invalid_argument("tau, sigma_s, phi_max must be positive and k_nbr >= 1");
        }
    }
};

enum class ControllerKind { goflock, baseline, siphon };

/// Which obstacle-avoidance pieces the goflock controller uses.
enum class AvoidanceMode {
    full,       // w2 and w3/w4 repulsion, projection along w4 - w3
    none,       // no repulsion, no projection
    w2_only,    // w2 repulsion, projection along x_i - w2
    w34_only,   // w3/w4 repulsion, projection along w4 - w3
};

inline std::string to_string(ControllerKind k) {
    switch (k) {
        case ControllerKind::goflock: return "goflock";
        case ControllerKind::baseline: return "baseline";
        case ControllerKind::siphon: return "siphon";
    }
    return "goflock";
}

inline ControllerKind controller_from_string(const std::string& s) {
    if (s == "goflock") return ControllerKind::goflock;
    if (s == "baseline") return ControllerKind::baseline;
    if (s == "siphon") return ControllerKind::siphon;
    throw std::invalid_argument("unknown controller: " + s);
}

inline std::string to_string(AvoidanceMode m) {
    switch (m) {
        case AvoidanceMode::full: return "full";
        case AvoidanceMode::none: return "none";
        case AvoidanceMode::w2_only: return "w2_only";
        case AvoidanceMode::w34_only: return "w34_only";
    }
    return "full";
}

inline AvoidanceMode avoidance_from_string(const std::string& s) {
    if (s == "full") return AvoidanceMode::full;
    if (s == "none") return AvoidanceMode::none;
    if (s == "w2_only") return AvoidanceMode::w2_only;
    if (s == "w34_only") return AvoidanceMode::w34_only;
    throw std::invalid_argument("unknown avoidance mode: " + s);
}

struct Neighbor {
    int id;
    Vec3 position;
    Vec3 velocity;
    double distance;
};

using NeighborView = std::vector<Neighbor>;

/// The k Euclidean-nearest other agents, nearest first, ties by id.
inline NeighborView select_neighbors(int self_id, const Vec3& self_pos, std::span<const Vec3> positions,
                                     std::span<const Vec3> velocities, int k) {
    NeighborView all;
    all.reserve(positions.size());
    for (std::size_t j = 0; j < positions.size(); ++j) {
        if (static_cast<int>(j) == self_id) continue;
        const Vec3 v = j < velocities.size() ? velocities[j] : Vec3{};
        all.push_back({static_cast<int>(j), positions[j], v, distance(self_pos, positions[j])});
    }
    const auto by_distance = [](const Neighbor& a, const Neighbor& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
    };
    const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), by_distance);
    all.resize(keep);
    return all;
}

/// Spring-like spacing term with a dead zone around tau. Coincident agents
/// repel along +z at magnitude phi_n * tau.
inline Vec3 neighbor_term(const Vec3& self_pos, const Vec3& other_pos, const NavGains& g) {
    const Vec3 p = self_pos - other_pos;
    const double d = p.norm();
    if (d == 0.0) return {0.0, 0.0, g.phi_n * g.tau};
    const double err = g.tau - d;
    if (std::abs(err) <= g.beta) return {};
    return p * (g.phi_n * err / d);
}

/// Saturating attraction toward `target`; zero when already there.
inline Vec3 goal_term(const Vec3& self_pos, const Vec3& target, const NavGains& g) {
    const Vec3 p = target - self_pos;
    const double d = p.norm();
    if (d == 0.0) return {};
    return p * (std::min(g.phi_g * d, g.phi_g) / d);
}

/// Same as goal_term(self, t) with t = goal when visible and w1 otherwise.
inline Vec3 goal_term(const Vec3& self_pos, const Vec3& w1, const Vec3& goal, bool goal_visible, const NavGains& g) {
    return goal_term(self_pos, goal_visible ? goal : w1, g);
}

namespace detail {

inline Vec3 ramp(double sigma, double dist, const Vec3& dir) {
    return dir * (std::max(sigma - dist, 0.0) / sigma);
}

}  // namespace detail

/// Repulsion from the virtual agents. Absent agents contribute nothing.
/// When w4 lies within the coincidence distance of w3 that addend is pushed
/// along unit(x_i - w2) at full strength.
inline Vec3 obstacle_term(const Vec3& self_pos, const std::optional<Vec3>& w2, const std::optional<Vec3>& w3,
                          const std::optional<Vec3>& w4, const NavGains& g,
                          AvoidanceMode mode = AvoidanceMode::full) {
    Vec3 sum{};
    Vec3 away_w2{};
    bool has_away = false;
    if (w2) {
        if (const auto u = try_unit(self_pos - *w2)) {
            away_w2 = *u;
            has_away = true;
        }
    }
    const bool use_w34 = mode == AvoidanceMode::full || mode == AvoidanceMode::w34_only;
    const bool use_w2 = mode == AvoidanceMode::full || mode == AvoidanceMode::w2_only;
    if (use_w34 && w3 && w4) {
        const Vec3 p = *w4 - *w3;
        const double d = p.norm();
        if (d > g.coincidence_distance && d > 0.0) {
            sum += detail::ramp(g.sigma_s, d, p / d);
        } else if (has_away) {
            sum += detail::ramp(g.sigma_s, 0.0, away_w2);
        }
    }
    if (use_w2 && has_away) {
        sum += detail::ramp(g.sigma_s, distance(self_pos, *w2), away_w2);
    }
    return sum * g.phi_o;
}

/// Remove the component of `v` along `axis` (any length) when active.
/// A zero axis leaves v unchanged.
inline Vec3 project_out(const Vec3& v, const Vec3& axis) {
    const auto u = try_unit(axis);
    if (!u) return v;
    return v - *u * v.dot(*u);
}

/// Neighbour-sum projection: active while the agent is closer than the
/// activation distance to w2; strips the part of v along unit(w4 - w3).
inline Vec3 project_neighbor_term(const Vec3& v_neigh, const std::optional<Vec3>& w3,
                                  const std::optional<Vec3>& w4, double self_to_w2_dist, const NavGains& g) {
    if (!w3 || !w4 || distance(*w3, *w4) <= g.coincidence_distance) return v_neigh;
    if (!(self_to_w2_dist < g.projection_distance)) return v_neigh;
    return project_out(v_neigh, *w4 - *w3);
}

/// Clamp |v| to phi_max, preserving direction.
inline Vec3 clamp_speed(const Vec3& v, double phi_max) {
    const double n = v.norm();
    if (n <= phi_max) return v;
    return v * (phi_max / n);
}

inline Vec3 compose_command(const Vec3& goal_t, const Vec3& neighbor_sum, const Vec3& obstacle_t, const NavGains& g) {
    return clamp_speed(goal_t + neighbor_sum + obstacle_t, g.phi_max);
}

/// Everything one agent knows when choosing a velocity.
struct ControlInput {
    Vec3 position;
    Vec3 goal;
    PerceptionOutput perception;
    NeighborView neighbors;
    /// Siphon only: whether this agent is stuck, and the nearest free agent.
    bool stuck{false};
    std::optional<Vec3> nearest_free;
};

inline Vec3 neighbor_sum(const Vec3& self_pos, const NeighborView& nbrs, const NavGains& g) {
    Vec3 s{};
    for (const auto& n : nbrs) s += neighbor_term(self_pos, n.position, g);
    return s;
}

/// Full collective-navigation command with a selectable avoidance mode.
inline Vec3 goflock_command(const ControlInput& in, const NavGains& g, AvoidanceMode mode = AvoidanceMode::full) {
    const auto& pc = in.perception;
    const Vec3 v_goal = goal_term(in.position, pc.w1, in.goal, pc.goal_visible, g);
    Vec3 v_nbr = neighbor_sum(in.position, in.neighbors, g);
    const double d_w2 = pc.w2 ? distance(in.position, *pc.w2) : std::numeric_limits<double>::infinity();
    switch (mode) {
        case AvoidanceMode::full:
        case AvoidanceMode::w34_only:
            v_nbr = project_neighbor_term(v_nbr, pc.w3, pc.w4, d_w2, g);
            break;
        case AvoidanceMode::w2_only:
            if (pc.w2 && d_w2 < g.projection_distance) v_nbr = project_out(v_nbr, in.position - *pc.w2);
            break;
        case AvoidanceMode::none: break;
    }
    const Vec3 v_obs = mode == AvoidanceMode::none ? Vec3{} : obstacle_term(in.position, pc.w2, pc.w3, pc.w4, g, mode);
    return compose_command(v_goal, v_nbr, v_obs, g);
}

/// Goal-only target, w2 repulsion only, no projection.
inline Vec3 baseline_command(const ControlInput& in, const NavGains& g) {
    const Vec3 v_goal = goal_term(in.position, in.goal, g);
    const Vec3 v_nbr = neighbor_sum(in.position, in.neighbors, g);
    const Vec3 v_obs = obstacle_term(in.position, in.perception.w2, std::nullopt, std::nullopt, g,
                                     AvoidanceMode::w2_only);
    return compose_command(v_goal, v_nbr, v_obs, g);
}

/// Pull added by the siphon controller; zero unless stuck with a free agent.
inline Vec3 siphon_term(const Vec3& self_pos, bool stuck, const std::optional<Vec3>& nearest_free, const NavGains& g) {
    if (!stuck || !nearest_free) return {};
    const auto u = try_unit(*nearest_free - self_pos);
    return u ? *u * g.phi_s : Vec3{};
}

inline Vec3 siphon_command(const ControlInput& in, const NavGains& g) {
    const Vec3 v_goal = goal_term(in.position, in.goal, g);
    const Vec3 v_nbr = neighbor_sum(in.position, in.neighbors, g);
    const Vec3 v_obs = obstacle_term(in.position, in.perception.w2, std::nullopt, std::nullopt, g,
                                     AvoidanceMode::w2_only);
    return compose_command(v_goal, v_nbr, v_obs + siphon_term(in.position, in.stuck, in.nearest_free, g), g);
}

inline Vec3 command_for(ControllerKind kind, const ControlInput& in, const NavGains& g,
                        AvoidanceMode mode = AvoidanceMode::full) {
    switch (kind) {
        case ControllerKind::goflock: return goflock_command(in, g, mode);
        case ControllerKind::baseline: return baseline_command(in, g);
        case ControllerKind::siphon: return siphon_command(in, g);
    }
    return {};
}

}  // namespace goflock
