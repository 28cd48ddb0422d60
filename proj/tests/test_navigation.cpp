// Control-law terms, their composition and the comparison controllers.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "goflock/navigation.hpp"
#include "test_support.hpp"

using namespace goflock;
using goflock::test_support::expect_vec_near;

namespace {

Vec3 random_vec(std::mt19937_64& gen, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    return {u(gen), u(gen), u(gen)};
}

ControlInput open_input(const Vec3& pos, const Vec3& goal) {
    ControlInput in;
    in.position = pos;
    in.goal = goal;
    in.perception.w1 = goal;
    in.perception.goal_visible = true;
    return in;
}

}  // namespace

TEST(NavGains, DefaultsMatchPublishedTable) {
    const NavGains g;
    EXPECT_EQ(g.phi_n, 6.0);
    EXPECT_EQ(g.phi_g, 6.0);
    EXPECT_EQ(g.phi_o, 12.0);
    EXPECT_EQ(g.tau, 3.0);
    EXPECT_EQ(g.sigma_s, 1.5);
    EXPECT_EQ(g.k_nbr, 3);
    EXPECT_EQ(g.phi_max, 2.0);
    EXPECT_EQ(g.beta, 0.1);
    EXPECT_EQ(g.projection_distance, g.sigma_s);
    EXPECT_NO_THROW(g.validate());
    NavGains bad;
    bad.tau = 0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = NavGains{};
    bad.phi_o = -1;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(NavEnums, RoundTrip) {
    for (auto k : {ControllerKind::goflock, ControllerKind::baseline, ControllerKind::siphon}) {
        EXPECT_EQ(controller_from_string(to_string(k)), k);
    }
    for (auto m : {AvoidanceMode::full, AvoidanceMode::none, AvoidanceMode::w2_only, AvoidanceMode::w34_only}) {
        EXPECT_EQ(avoidance_from_string(to_string(m)), m);
    }
    EXPECT_THROW(controller_from_string("boids"), std::invalid_argument);
    EXPECT_THROW(avoidance_from_string("partial"), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// select_neighbors
// ---------------------------------------------------------------------------

TEST(SelectNeighbors, LineKeepsNearestOnly) {
    const std::vector<Vec3> pos{{0, 0, 0}, {1, 0, 0}, {3, 0, 0}};
    const auto n = select_neighbors(0, pos[0], pos, {}, 1);
    ASSERT_EQ(n.size(), 1u);
    EXPECT_EQ(n[0].id, 1);
    EXPECT_EQ(n[0].distance, 1.0);
}

TEST(SelectNeighbors, FewerThanKReturnsAllOthers) {
    const std::vector<Vec3> pos{{0, 0, 0}, {5, 0, 0}};
    const auto n = select_neighbors(1, pos[1], pos, {}, 3);
    ASSERT_EQ(n.size(), 1u);
    EXPECT_EQ(n[0].id, 0);
    EXPECT_TRUE(select_neighbors(0, pos[0], std::vector<Vec3>{pos[0]}, {}, 3).empty());
}

TEST(SelectNeighbors, NineAgentsMatchFullSort) {
    std::mt19937_64 gen(4);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Vec3> pos;
        for (int i = 0; i < 9; ++i) pos.push_back(random_vec(gen, 5));
        if (trial % 10 == 0) pos[4] = pos[2];  // equal distances break by id
        for (int self = 0; self < 9; ++self) {
            std::vector<std::pair<double, int>> oracle;
            for (int j = 0; j < 9; ++j) {
                if (j != self) oracle.push_back({distance(pos[self], pos[j]), j});
            }
            std::sort(oracle.begin(), oracle.end());
            const auto got = select_neighbors(self, pos[self], pos, {}, 3);
            ASSERT_EQ(got.size(), 3u);
            for (int r = 0; r < 3; ++r) EXPECT_EQ(got[r].id, oracle[r].second);
        }
    }
}

// ---------------------------------------------------------------------------
// neighbor_term
// ---------------------------------------------------------------------------

TEST(NeighborTerm, Examples) {
    const NavGains g;
    expect_vec_near(neighbor_term({0, 0, 0}, {1, 0, 0}, g), {-12, 0, 0}, 1e-12);
    expect_vec_near(neighbor_term({0, 0, 0}, {7, 0, 0}, g), {24, 0, 0}, 1e-12);
    EXPECT_EQ(neighbor_term({0, 0, 0}, {3.05, 0, 0}, g), Vec3{});
    EXPECT_EQ(neighbor_term({0, 0, 0}, {0, 2.95, 0}, g), Vec3{});
}

TEST(NeighborTerm, CoincidentRepelsAlongZ) {
    const NavGains g;
    expect_vec_near(neighbor_term({1, 2, 3}, {1, 2, 3}, g), {0, 0, g.phi_n * g.tau}, 1e-12);
}

TEST(NeighborTerm, PropertyAntisymmetryAndDeadZone) {
    const NavGains g;
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> ud(0.01, 8.0);
    int zero_band = 0;
    for (int trial = 0; trial < 20000; ++trial) {
        const Vec3 a = random_vec(gen, 10);
        const Vec3 dir = *try_unit(random_vec(gen, 1) + Vec3{1e-3, 0, 0});
        const double d = trial % 4 == 0 ? g.tau + (ud(gen) / 8.0 - 0.5) * 2.5 * g.beta : ud(gen);
        const Vec3 b = a + dir * d;
        const Vec3 tij = neighbor_term(a, b, g);
        const Vec3 tji = neighbor_term(b, a, g);
        expect_vec_near(tij, tji * -1.0, 1e-9);
        const double dd = distance(a, b);
        if (std::abs(g.tau - dd) <= g.beta) {
            EXPECT_EQ(tij, Vec3{});
            ++zero_band;
        } else {
            EXPECT_GT(tij.norm(), 0.0);
            EXPECT_NEAR(tij.norm(), g.phi_n * std::abs(g.tau - dd), 1e-9);
        }
    }
    EXPECT_GT(zero_band, 1000);
}

// ---------------------------------------------------------------------------
// goal_term
// ---------------------------------------------------------------------------

TEST(GoalTerm, Examples) {
    const NavGains g;
    expect_vec_near(goal_term({0, 0, 0}, {10, 0, 0}, g), {6, 0, 0}, 1e-12);
    expect_vec_near(goal_term({0, 0, 0}, {0, 0.5, 0}, g), {0, 3, 0}, 1e-12);
    EXPECT_EQ(goal_term({1, 1, 1}, {1, 1, 1}, g), Vec3{});
}

TEST(GoalTerm, TargetSelection) {
    const NavGains g;
    const Vec3 w1{0, 10, 0}, goal{10, 0, 0};
    expect_vec_near(goal_term({0, 0, 0}, w1, goal, true, g), {6, 0, 0}, 1e-12);
    expect_vec_near(goal_term({0, 0, 0}, w1, goal, false, g), {0, 6, 0}, 1e-12);
}

TEST(GoalTerm, PropertyMagnitudeBounded) {
    const NavGains g;
    std::mt19937_64 gen(6);
    for (int trial = 0; trial < 10000; ++trial) {
        const Vec3 a = random_vec(gen, 3), b = random_vec(gen, 3);
        const Vec3 t = goal_term(a, b, g);
        EXPECT_LE(t.norm(), g.phi_g + 1e-12);
        EXPECT_NEAR(t.norm(), std::min(g.phi_g * distance(a, b), g.phi_g), 1e-9);
    }
}

// ---------------------------------------------------------------------------
// obstacle_term
// ---------------------------------------------------------------------------

TEST(ObstacleTerm, OrthogonalExample) {
    const NavGains g;
    // u = +x (w4 - w3 direction, length 0.5), v = +y (x_i - w2 direction, length 1.0).
    const Vec3 self{0, 0, 0};
    const Vec3 w2{0, -1, 0}, w3{5, 0, 0}, w4{5.5, 0, 0};
    expect_vec_near(obstacle_term(self, w2, w3, w4, g), {8, 4, 0}, 1e-12);
    // Single-piece modes keep their own addend.
    expect_vec_near(obstacle_term(self, w2, w3, w4, g, AvoidanceMode::w2_only), {0, 4, 0}, 1e-12);
    expect_vec_near(obstacle_term(self, w2, w3, w4, g, AvoidanceMode::w34_only), {8, 0, 0}, 1e-12);
}

TEST(ObstacleTerm, ZeroBeyondSafetyDistanceAndWhenAbsent) {
    const NavGains g;
    EXPECT_EQ(obstacle_term({0, 0, 0}, Vec3{0, -1.5, 0}, Vec3{5, 0, 0}, Vec3{6.6, 0, 0}, g), Vec3{});
    EXPECT_EQ(obstacle_term({0, 0, 0}, std::nullopt, std::nullopt, std::nullopt, g), Vec3{});
}

TEST(ObstacleTerm, CoincidentW3W4FallsBackToAwayFromW2) {
    const NavGains g;
    const Vec3 self{0, 0, 0}, w2{1, 0, 0}, w3{2, 0, 0};
    // w34 addend: full strength along (self - w2) = -x -> 12; w2 addend: 12 * 0.5/1.5 = 4.
    expect_vec_near(obstacle_term(self, w2, w3, w3, g), {-16, 0, 0}, 1e-12);
}

TEST(ObstacleTerm, PropertyZeroWhenBothFar) {
    const NavGains g;
    std::mt19937_64 gen(8);
    for (int trial = 0; trial < 5000; ++trial) {
        const Vec3 self = random_vec(gen, 5);
        const Vec3 d2 = *try_unit(random_vec(gen, 1) + Vec3{0, 0, 1e-3});
        const Vec3 d34 = *try_unit(random_vec(gen, 1) + Vec3{1e-3, 0, 0});
        std::uniform_real_distribution<double> far(g.sigma_s, 5.0);
        const Vec3 w2 = self + d2 * far(gen);
        const Vec3 w3 = random_vec(gen, 5);
        const Vec3 w4 = w3 + d34 * far(gen);
        EXPECT_EQ(obstacle_term(self, w2, w3, w4, g), Vec3{});
    }
}

// ---------------------------------------------------------------------------
// Projection, clamp, composition
// ---------------------------------------------------------------------------

TEST(ProjectNeighborTerm, Examples) {
    const NavGains g;
    const Vec3 w3{0, 0, 0}, w4{0, 2, 0};
    expect_vec_near(project_neighbor_term({1, 1, 0}, w3, w4, 1.0, g), {1, 0, 0}, 1e-12);
    expect_vec_near(project_neighbor_term({0, 3, 0}, w3, w4, 1.0, g), {0, 0, 0}, 1e-12);
    EXPECT_EQ(project_neighbor_term({1, 1, 0}, w3, w4, 4.0, g), (Vec3{1, 1, 0}));
    EXPECT_EQ(project_neighbor_term({1, 1, 0}, std::nullopt, std::nullopt, 0.5, g), (Vec3{1, 1, 0}));
    EXPECT_EQ(project_neighbor_term({1, 1, 0}, w3, w3, 0.5, g), (Vec3{1, 1, 0}));
}

TEST(ProjectNeighborTerm, PropertyOrthogonalWhenActive) {
    const NavGains g;
    std::mt19937_64 gen(9);
    for (int trial = 0; trial < 20000; ++trial) {
        const Vec3 v = random_vec(gen, 20);
        const Vec3 w3 = random_vec(gen, 5);
        std::uniform_real_distribution<double> len(2 * g.coincidence_distance, 3.0);
        const Vec3 w4 = w3 + *try_unit(random_vec(gen, 1) + Vec3{1e-3, 0, 0}) * len(gen);
        const Vec3 out = project_neighbor_term(v, w3, w4, 0.5, g);
        EXPECT_NEAR(out.dot(*try_unit(w4 - w3)), 0.0, 1e-9);
        EXPECT_LE(out.norm(), v.norm() + 1e-9);
    }
}

TEST(ClampSpeed, Examples) {
    const Vec3 big{6, 8, 0};
    expect_vec_near(clamp_speed(big, 2.0), {1.2, 1.6, 0}, 1e-12);
    EXPECT_EQ(clamp_speed({1.5, 0, 0}, 2.0), (Vec3{1.5, 0, 0}));
    const NavGains g;
    EXPECT_EQ(compose_command({}, {}, {}, g), Vec3{});
    expect_vec_near(compose_command({6, 0, 0}, {0, 8, 0}, {0, 0, 0}, g), {1.2, 1.6, 0}, 1e-12);
}

TEST(ComposeCommand, PropertyNeverExceedsCap) {
    const NavGains g;
    std::mt19937_64 gen(10);
    for (int trial = 0; trial < 20000; ++trial) {
        const Vec3 c = compose_command(random_vec(gen, 10), random_vec(gen, 50), random_vec(gen, 30), g);
        EXPECT_LE(c.norm(), g.phi_max + 1e-12);
    }
}

// ---------------------------------------------------------------------------
// Controllers
// ---------------------------------------------------------------------------

TEST(Controllers, IdenticalWithoutObstacles) {
    const NavGains g;
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 2000; ++trial) {
        ControlInput in = open_input(random_vec(gen, 10), random_vec(gen, 30));
        std::vector<Vec3> pos{in.position};
        for (int j = 0; j < 5; ++j) pos.push_back(in.position + random_vec(gen, 4));
        in.neighbors = select_neighbors(0, in.position, pos, {}, g.k_nbr);
        in.stuck = false;
        in.nearest_free = pos[1];
        const Vec3 a = goflock_command(in, g);
        EXPECT_EQ(a, baseline_command(in, g));
        EXPECT_EQ(a, siphon_command(in, g));
    }
}

TEST(Controllers, BaselineReducesToGoalPlusNeighborsWithoutW2) {
    const NavGains g;
    ControlInput in = open_input({0, 0, 0}, {10, 0, 0});
    in.perception.goal_visible = false;
    in.perception.w1 = {0, 10, 0};
    in.perception.w3 = Vec3{5, 0.5, 0};
    in.perception.w4 = Vec3{5, 0, 0};
    in.neighbors = {{1, {0, 1, 0}, {}, 1.0}};
    const Vec3 expected = clamp_speed(goal_term({0, 0, 0}, {10, 0, 0}, g) + neighbor_term({0, 0, 0}, {0, 1, 0}, g),
                                      g.phi_max);
    expect_vec_near(baseline_command(in, g), expected, 1e-12);
}

TEST(Controllers, BaselineStallsInFrontOfSlab) {
    // Agent on the slab normal with the goal straight behind the slab.
    // Closed form: phi_o (sigma - d)/sigma = phi_g  ->  d = sigma (1 - phi_g/phi_o) = 0.75.
    const NavGains g;
    const auto cmd_at = [&](double d) {
        ControlInput in = open_input({0, 0, 5}, {20, 0, 5});
        in.perception.goal_visible = false;
        in.perception.w2 = Vec3{d, 0, 5};
        return baseline_command(in, g);
    };
    const double d_eq = g.sigma_s * (1.0 - g.phi_g / g.phi_o);
    EXPECT_NEAR(d_eq, 0.75, 1e-12);
    EXPECT_LT(cmd_at(d_eq).norm(), 1e-12);
    // Numerical equilibrium search along the normal agrees.
    double lo = 0.05, hi = 1.49;
    ASSERT_LT(cmd_at(lo).x * cmd_at(hi).x, 0.0);
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (cmd_at(mid).x > 0 ? hi : lo) = mid;
    }
    EXPECT_NEAR(0.5 * (lo + hi), d_eq, 1e-9);
}

TEST(Controllers, SiphonTerm) {
    const NavGains g;
    expect_vec_near(siphon_term({0, 0, 0}, true, Vec3{0, 5, 0}, g), {0, g.phi_s, 0}, 1e-12);
    EXPECT_EQ(siphon_term({0, 0, 0}, false, Vec3{0, 5, 0}, g), Vec3{});
    EXPECT_EQ(siphon_term({0, 0, 0}, true, std::nullopt, g), Vec3{});
    ControlInput in = open_input({0, 0, 0}, {10, 0, 0});
    in.perception.goal_visible = false;
    in.perception.w2 = Vec3{1, 0, 0};
    in.stuck = true;
    EXPECT_EQ(siphon_command(in, g), baseline_command(in, g));
    in.nearest_free = Vec3{0, 5, 0};
    EXPECT_NE(siphon_command(in, g), baseline_command(in, g));
}

TEST(Controllers, GoflockUsesWaypointAndModes) {
    const NavGains g;
    ControlInput in = open_input({0, 0, 0}, {10, 0, 0});
    in.perception.goal_visible = false;
    in.perception.w1 = {0, 10, 0};
    const Vec3 c = goflock_command(in, g);
    EXPECT_GT(c.y, 1.9);
    EXPECT_NEAR(c.x, 0.0, 1e-12);
    // The none mode ignores obstacles entirely.
    in.perception.w2 = Vec3{0, 0.5, 0};
    EXPECT_EQ(goflock_command(in, g, AvoidanceMode::none), c);
    EXPECT_LT(goflock_command(in, g, AvoidanceMode::full).y, c.y);
    for (auto k : {ControllerKind::goflock, ControllerKind::baseline, ControllerKind::siphon}) {
        EXPECT_LE(command_for(k, in, g).norm(), g.phi_max + 1e-12);
    }
}
