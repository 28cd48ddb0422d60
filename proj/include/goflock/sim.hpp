#pragma once
/**
 * @file sim.hpp
 * @brief Fixed-step episode engine.
 *
 * Each step reads a frozen copy of every agent's pose from the previous step
 * (double buffering), so the update order of agents never changes results.
 * Perception runs every `perception_period` seconds; control runs every step
 * and is followed by a first-order velocity lag and Euler integration.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "goflock/geometry.hpp"
#include "goflock/navigation.hpp"
#include "goflock/perception.hpp"
#include "goflock/world.hpp"

namespace goflock {

struct SimConfig {
    double dt{1.0 / 30.0};
    double perception_period{0.2};
    double alpha{0.3};             // velocity lag, 1 = ideal tracking
    double max_duration{120.0};
    double goal_radius{5.0};       // success once every agent is this close to the goal
    double collision_radius{0.3};
    bool halt_on_collision{true};
    /// When continuing past collisions, keep agent centres out of obstacle
    /// interiors (slide along the surface) instead of passing through.
    bool solid_obstacles{false};
    double stuck_window{2.0};       // siphon: displacement look-back [s]
    double stuck_displacement{0.2}; // siphon: below this over the window counts as stuck [m]
    PerceptionConfig perception{};
    bool operator==(const SimConfig&) const = default;

    int perception_every() const { return std::max(1, static_cast<int>(std::lround(perception_period / dt))); }
    int max_steps() const { return static_cast<int>(std::floor(max_duration / dt + 1e-9)); }

    void validate() const {
        if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
        if (!(perception_period >= dt)) throw std::invalid_argument("perception period must be >= dt");
        if (!(alpha >= 0 && alpha <= 1)) throw std::invalid_argument("alpha must lie in [0, 1]");
        if (!(max_duration > 0) || !(goal_radius > 0) || !(collision_radius > 0)) {
            throw std::invalid_argument("durations and radii must be positive");
        }
    }
};

enum class Outcome { success, collision, timeout };

inline std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::success: return "success";
        case Outcome::collision: return "collision";
        case Outcome::timeout: return "timeout";
    }
    return "timeout";
}

enum class EventKind { obstacle_collision, agent_collision, arrival };

struct Event {
    int step;
    double t;
    EventKind kind;
    int agent;
    int other;  // second agent for agent_collision, -1 otherwise
    double distance;
};

struct Frame {
    double t{0.0};
    std::vector<Vec3> positions;
    std::vector<Vec3> velocities;
    std::vector<PerceptionOutput> perception;
    double min_interagent{std::numeric_limits<double>::infinity()};
    double min_obstacle{std::numeric_limits<double>::infinity()};
};

struct RunRecord {
    int run_id{0};
    ControllerKind controller{ControllerKind::goflock};
    AvoidanceMode mode{AvoidanceMode::full};
    double dt{1.0 / 30.0};
    Vec3 goal;
    ObstacleSet obstacles;
    std::vector<Frame> frames;
    std::vector<Event> events;
    Outcome outcome{Outcome::timeout};

    std::size_t agent_count() const { return frames.empty() ? 0 : frames.front().positions.size(); }
};

/// Non-finite state detected during integration.
struct SimulationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AgentState {
    int id{0};
    Vec3 position;
    Vec3 velocity;
    Perceiver perceiver;
    PerceptionOutput perception;
    std::deque<Vec3> history;  // recent positions, newest last (siphon)
};

/// Collisions (obstacle surface or other agent centre within the collision
/// radius) and arrival (every agent within goal_radius of the goal).
inline std::vector<Event> detect_events(std::span<const Vec3> positions, const ObstacleSet& world, const Vec3& goal,
                                        const SimConfig& cfg, int step = 0, double t = 0.0) {
    std::vector<Event> events;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const double d = distance_to_obstacles(world, positions[i]);
        if (d <= cfg.collision_radius) {
            events.push_back({step, t, EventKind::obstacle_collision, static_cast<int>(i), -1, d});
        }
    }
    for (std::size_t i = 0; i < positions.size(); ++i) {
        for (std::size_t j = i + 1; j < positions.size(); ++j) {
            const double d = distance(positions[i], positions[j]);
            if (d <= cfg.collision_radius) {
                events.push_back({step, t, EventKind::agent_collision, static_cast<int>(i), static_cast<int>(j), d});
            }
        }
    }
    const bool all_in = !positions.empty() && std::all_of(positions.begin(), positions.end(), [&](const Vec3& p) {
        return distance(p, goal) <= cfg.goal_radius;
    });
    if (all_in) events.push_back({step, t, EventKind::arrival, -1, -1, 0.0});
    return events;
}

inline double min_pairwise_distance(std::span<const Vec3> positions) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < positions.size(); ++i)
        for (std::size_t j = i + 1; j < positions.size(); ++j) best = std::min(best, distance(positions[i], positions[j]));
    return best;
}

class Simulation {
public:
    Simulation(const Scenario& scenario, ControllerKind controller, const NavGains& gains, const SimConfig& cfg,
               AvoidanceMode mode = AvoidanceMode::full)
        : world_(scenario.obstacles), goal_(scenario.goal), controller_(controller), mode_(mode), gains_(gains),
          cfg_(cfg) {
        gains_.validate();
        cfg_.validate();
        if (scenario.starts.empty()) throw std::invalid_argument("scenario has no agents");
        agents_.reserve(scenario.starts.size());
        for (std::size_t i = 0; i < scenario.starts.size(); ++i) {
            AgentState a{static_cast<int>(i), scenario.starts[i], {}, Perceiver(cfg.perception), {}, {}};
            a.perception.w1 = goal_;
            agents_.push_back(std::move(a));
        }
    }

    const std::vector<AgentState>& agents() const { return agents_; }
    int step_index() const { return step_; }
    double time() const { return step_ * cfg_.dt; }
    const ObstacleSet& world() const { return world_; }
    const Vec3& goal() const { return goal_; }

    std::vector<Vec3> positions() const {
        std::vector<Vec3> out;
        for (const auto& a : agents_) out.push_back(a.position);
        return out;
    }
    std::vector<Vec3> velocities() const {
        std::vector<Vec3> out;
        for (const auto& a : agents_) out.push_back(a.velocity);
        return out;
    }

    /// Advance one step. `order` permutes the per-agent processing order; it
    /// must not (and does not) affect the result.
    void step(std::span<const int> order = {}) {
        const std::vector<Vec3> prev_pos = positions();
        const std::vector<Vec3> prev_vel = velocities();
        const std::size_t n = agents_.size();
        std::vector<int> ids(n);
        if (order.empty()) {
            std::iota(ids.begin(), ids.end(), 0);
        } else {
            if (order.size() != n) throw std::invalid_argument("update order must list every agent once");
            ids.assign(order.begin(), order.end());
        }

        const bool perceive_now = step_ % cfg_.perception_every() == 0;
        if (perceive_now) {
            for (int id : ids) run_perception(agents_[static_cast<std::size_t>(id)], prev_vel[static_cast<std::size_t>(id)]);
        }

        std::vector<bool> stuck(n, false);
        if (controller_ == ControllerKind::siphon) {
            for (std::size_t i = 0; i < n; ++i) stuck[i] = is_stuck(agents_[i], prev_pos[i]);
        }

        std::vector<Vec3> next_pos(n), next_vel(n);
        for (int id : ids) {
            const auto i = static_cast<std::size_t>(id);
            const AgentState& a = agents_[i];
            ControlInput in{prev_pos[i], goal_, a.perception,
                            select_neighbors(id, prev_pos[i], prev_pos, prev_vel, gains_.k_nbr), stuck[i], std::nullopt};
            if (controller_ == ControllerKind::siphon && stuck[i]) in.nearest_free = nearest_free(id, prev_pos, stuck);
            const Vec3 v_des = command_for(controller_, in, gains_, mode_);
            Vec3 v = prev_vel[i] * (1.0 - cfg_.alpha) + v_des * cfg_.alpha;
            v = clamp_speed(v, gains_.phi_max);
            Vec3 x = prev_pos[i] + v * cfg_.dt;
            if (cfg_.solid_obstacles) resolve_contact(x, v);
            if (!x.is_finite() || !v.is_finite()) {
                throw SimulationError("non-finite state for agent " + std::to_string(id) + " at step " +
                                      std::to_string(step_));
            }
            next_pos[i] = x;
            next_vel[i] = v;
        }
        const std::size_t keep = static_cast<std::size_t>(std::lround(cfg_.stuck_window / cfg_.dt)) + 1;
        for (std::size_t i = 0; i < n; ++i) {
            agents_[i].position = next_pos[i];
            agents_[i].velocity = next_vel[i];
            if (controller_ == ControllerKind::siphon) {
                auto& h = agents_[i].history;
                h.push_back(prev_pos[i]);
                while (h.size() > keep) h.pop_front();
            }
        }
        ++step_;
    }

private:
    void run_perception(AgentState& a, const Vec3& vel) {
        const PerceptionMode pm =
            controller_ == ControllerKind::goflock ? PerceptionMode::full : PerceptionMode::nearest_only;
        a.perceiver.update_map(camera_pose(a, vel), world_, pm == PerceptionMode::full);
        a.perception = a.perceiver.perceive(a.position, goal_, world_, pm);
    }

    // Forward-facing camera: along horizontal velocity when moving, else
    // toward the current target.
    CameraPose camera_pose(const AgentState& a, const Vec3& vel) const {
        Vec3 heading{vel.x, vel.y, 0.0};
        if (heading.norm() < 0.2) {
            const Vec3 to = a.perception.w1 - a.position;
            heading = {to.x, to.y, 0.0};
            if (heading.norm() == 0.0) heading = {goal_.x - a.position.x, goal_.y - a.position.y, 0.0};
        }
        const double yaw = heading.norm() > 0.0 ? std::atan2(heading.y, heading.x) : 0.0;
        return {a.position, yaw, 0.0};
    }

    // Move an interior point to the nearest obstacle surface and drop the
    // velocity component pointing into the obstacle.
    void resolve_contact(Vec3& x, Vec3& v) const {
        for (const auto& prim : world_.primitives) {
            if (!detail::inside(prim, x)) continue;
            const Vec3 surface = nearest_point_on_primitive(prim, x);
            const Vec3 out = surface - x;
            x = surface;
            if (out.norm() > 0.0) {
                const Vec3 n = out.normalized();
                const double vn = v.dot(n);
                if (vn < 0.0) v -= n * vn;
            }
        }
    }

    bool is_stuck(const AgentState& a, const Vec3& pos) const {
        if (a.perception.goal_visible) return false;
        const std::size_t need = static_cast<std::size_t>(std::lround(cfg_.stuck_window / cfg_.dt));
        if (a.history.size() < need) return false;
        return distance(pos, a.history.front()) < cfg_.stuck_displacement;
    }

    std::optional<Vec3> nearest_free(int self, const std::vector<Vec3>& pos, const std::vector<bool>& stuck) const {
        std::optional<Vec3> best;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < pos.size(); ++j) {
            if (static_cast<int>(j) == self || stuck[j]) continue;
            const double d = distance(pos[static_cast<std::size_t>(self)], pos[j]);
            if (d < best_d) {
                best_d = d;
                best = pos[j];
            }
        }
        return best;
    }

    ObstacleSet world_;
    Vec3 goal_;
    ControllerKind controller_;
    AvoidanceMode mode_;
    NavGains gains_;
    SimConfig cfg_;
    std::vector<AgentState> agents_;
    int step_{0};
};

/// Run until arrival, collision (when halting), or timeout.
///
/// Outcomes: `collision` when halting on the first contact, or when the flock
/// arrives after having collided; `success` for a clean arrival; `timeout`
/// when the flock never arrives (collisions, if any, stay in the event log).
inline RunRecord run_episode(const Scenario& scenario, ControllerKind controller, const NavGains& gains,
                             const SimConfig& cfg, AvoidanceMode mode = AvoidanceMode::full, int run_id = 0) {
    Simulation sim(scenario, controller, gains, cfg, mode);
    RunRecord rec;
    rec.run_id = run_id;
    rec.controller = controller;
    rec.mode = mode;
    rec.dt = cfg.dt;
    rec.goal = scenario.goal;
    rec.obstacles = scenario.obstacles;

    auto snapshot = [&](int step) {
        Frame f;
        f.t = step * cfg.dt;
        f.positions = sim.positions();
        f.velocities = sim.velocities();
        for (const auto& a : sim.agents()) f.perception.push_back(a.perception);
        f.min_interagent = min_pairwise_distance(f.positions);
        for (const auto& p : f.positions) f.min_obstacle = std::min(f.min_obstacle, distance_to_obstacles(rec.obstacles, p));
        return f;
    };

    rec.frames.push_back(snapshot(0));
    const int max_steps = cfg.max_steps();
    bool collided = false;
    // Contacts seen on the previous step; while continuing after a collision
    // only the onset of each contact is logged.
    std::set<std::pair<int, int>> in_contact;
    for (int k = 1; k <= max_steps; ++k) {
        sim.step();
        // The perception used during step k-1 belongs with the state it produced.
        rec.frames.back().perception.clear();
        for (const auto& a : sim.agents()) rec.frames.back().perception.push_back(a.perception);
        rec.frames.push_back(snapshot(k));
        const auto events = detect_events(rec.frames.back().positions, rec.obstacles, rec.goal, cfg, k, k * cfg.dt);
        bool arrived = false;
        std::set<std::pair<int, int>> contact_now;
        for (const auto& e : events) {
            if (e.kind == EventKind::arrival) {
                arrived = true;
                rec.events.push_back(e);
                continue;
            }
            collided = true;
            const std::pair<int, int> key{e.agent, e.other};
            contact_now.insert(key);
            if (!in_contact.contains(key)) rec.events.push_back(e);
        }
        in_contact = std::move(contact_now);
        if (collided && cfg.halt_on_collision) {
            rec.outcome = Outcome::collision;
            return rec;
        }
        if (arrived) {
            rec.outcome = collided ? Outcome::collision : Outcome::success;
            return rec;
        }
    }
    // A flock that never arrived timed out, whether or not it also collided.
    rec.outcome = Outcome::timeout;
    return rec;
}

}  // namespace goflock
