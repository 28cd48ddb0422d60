// Vector and primitive geometry: nearest points, raycasts, and their
// sampling oracles.

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "goflock/geometry.hpp"
#include "test_support.hpp"

using namespace goflock;
using goflock::test_support::expect_vec_near;

namespace {

/// Minimiser of |s(t) - p| over t in [0,1] by dense sampling.
Vec3 segment_oracle(const Segment& s, const Vec3& p, int samples = 200000) {
    Vec3 best = s.a;
    double best_d = distance(s.a, p);
    for (int k = 0; k <= samples; ++k) {
        const double t = static_cast<double>(k) / samples;
        const Vec3 q = s.a + (s.b - s.a) * t;
        const double d = distance(q, p);
        if (d < best_d) {
            best_d = d;
            best = q;
        }
    }
    return best;
}

/// Uniform-ish surface samples of a primitive.
std::vector<Vec3> surface_samples(const Primitive& prim, std::mt19937_64& gen, int n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        std::visit(
            [&](const auto& q) {
                using T = std::decay_t<decltype(q)>;
                if constexpr (std::is_same_v<T, AxisAlignedBox>) {
                    const int face = static_cast<int>(u(gen) * 6) % 6;
                    const int axis = face / 2;
                    Vec3 p{q.min.x + u(gen) * (q.max.x - q.min.x), q.min.y + u(gen) * (q.max.y - q.min.y),
                           q.min.z + u(gen) * (q.max.z - q.min.z)};
                    p[axis] = (face % 2 == 0) ? q.min[axis] : q.max[axis];
                    out.push_back(p);
                } else if constexpr (std::is_same_v<T, VerticalCylinder>) {
                    const double a = u(gen) * 2 * std::numbers::pi;
                    const double part = u(gen);
                    if (part < 0.8) {
                        out.push_back({q.cx + q.radius * std::cos(a), q.cy + q.radius * std::sin(a),
                                       q.z_min + u(gen) * (q.z_max - q.z_min)});
                    } else {
                        const double r = q.radius * std::sqrt(u(gen));
                        out.push_back({q.cx + r * std::cos(a), q.cy + r * std::sin(a), part < 0.9 ? q.z_min : q.z_max});
                    }
                } else {
                    const double z = 2 * u(gen) - 1;
                    const double a = u(gen) * 2 * std::numbers::pi;
                    const double r = std::sqrt(1 - z * z);
                    out.push_back(q.center + Vec3{r * std::cos(a), r * std::sin(a), z} * q.radius);
                }
            },
            prim);
    }
    return out;
}

/// First t where a marched ray enters the primitive, refined by bisection.
std::optional<double> march(const Primitive& prim, const Vec3& o, const Vec3& d, double max_t, double step = 1e-3) {
    double prev = 0.0;
    for (double t = step; t <= max_t + step; t += step) {
        const double tt = std::min(t, max_t);
        if (detail::inside(prim, o + d * tt)) {
            double lo = prev, hi = tt;
            for (int k = 0; k < 60; ++k) {
                const double mid = 0.5 * (lo + hi);
                (detail::inside(prim, o + d * mid) ? hi : lo) = mid;
            }
            return hi;
        }
        prev = tt;
        if (tt == max_t) break;
    }
    return std::nullopt;
}

bool on_surface(const Primitive& prim, const Vec3& p, double tol = 1e-6) {
    // On the surface: inside a slightly grown copy, outside a slightly shrunk one.
    return std::visit(
        [&](const auto& q) {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, AxisAlignedBox>) {
                const Vec3 t{tol, tol, tol};
                const AxisAlignedBox grown{q.min - t, q.max + t};
                const AxisAlignedBox shrunk{q.min + t, q.max - t};
                return grown.contains(p) && !shrunk.contains(p);
            } else if constexpr (std::is_same_v<T, VerticalCylinder>) {
                const double r = std::hypot(p.x - q.cx, p.y - q.cy);
                const bool in_grown = r <= q.radius + tol && p.z >= q.z_min - tol && p.z <= q.z_max + tol;
                const bool in_shrunk = r < q.radius - tol && p.z > q.z_min + tol && p.z < q.z_max - tol;
                return in_grown && !in_shrunk;
            } else {
                return std::abs(distance(p, q.center) - q.radius) <= tol;
            }
        },
        prim);
}

Primitive random_primitive(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> c(-3.0, 3.0), s(0.2, 2.0);
    const int kind = static_cast<int>(gen() % 3);
    if (kind == 0) {
        const Vec3 lo{c(gen), c(gen), c(gen)};
        return make_box(lo, lo + Vec3{s(gen), s(gen), s(gen)});
    }
    if (kind == 1) {
        const double z0 = c(gen);
        return make_cylinder(c(gen), c(gen), s(gen), z0, z0 + 2 * s(gen));
    }
    return make_sphere({c(gen), c(gen), c(gen)}, s(gen));
}

}  // namespace

// ---------------------------------------------------------------------------
// Vec3
// ---------------------------------------------------------------------------

TEST(Vec3, ArithmeticAndNorm) {
    const Vec3 a{1, 2, 3}, b{4, -5, 6};
    EXPECT_EQ(a + b, (Vec3{5, -3, 9}));
    EXPECT_EQ(a - b, (Vec3{-3, 7, -3}));
    EXPECT_DOUBLE_EQ(a.dot(b), 4 - 10 + 18);
    EXPECT_EQ(a.cross(b), (Vec3{2 * 6 - 3 * -5, 3 * 4 - 1 * 6, 1 * -5 - 2 * 4}));
    EXPECT_DOUBLE_EQ((Vec3{3, 4, 12}).norm(), 13.0);
    EXPECT_DOUBLE_EQ(a[0], 1);
    EXPECT_DOUBLE_EQ(a[2], 3);
}

TEST(Vec3, NormalizingZeroThrows) {
    EXPECT_THROW(Vec3{}.normalized(), std::domain_error);
    EXPECT_FALSE(try_unit(Vec3{}).has_value());
    expect_vec_near((Vec3{0, 0, 5}).normalized(), {0, 0, 1}, 0.0);
}

TEST(Vec3, NonFiniteDetected) {
    EXPECT_TRUE((Vec3{1, 2, 3}).is_finite());
    EXPECT_FALSE((Vec3{std::numeric_limits<double>::quiet_NaN(), 0, 0}).is_finite());
    EXPECT_FALSE((Vec3{0, std::numeric_limits<double>::infinity(), 0}).is_finite());
}

// ---------------------------------------------------------------------------
// nearest_point_on_segment
// ---------------------------------------------------------------------------

TEST(NearestPointOnSegment, PerpendicularFootInside) {
    expect_vec_near(nearest_point_on_segment({{0, 0, 0}, {10, 0, 0}}, {5, 3, 0}), {5, 0, 0}, 1e-12);
}

TEST(NearestPointOnSegment, ClampedToEndpoint) {
    expect_vec_near(nearest_point_on_segment({{0, 0, 0}, {10, 0, 0}}, {12, 1, 0}), {10, 0, 0}, 1e-12);
}

TEST(NearestPointOnSegment, DiagonalMatchesDenseSampling) {
    const Segment s{{0, 0, 0}, {4, 4, 0}};
    const Vec3 p{4, 0, 0};
    const Vec3 oracle = segment_oracle(s, p);
    expect_vec_near(oracle, {2, 2, 0}, 1e-4);
    expect_vec_near(nearest_point_on_segment(s, p), oracle, 1e-4);
}

TEST(NearestPointOnSegment, DegenerateReturnsA) {
    expect_vec_near(nearest_point_on_segment({{1, 2, 3}, {1, 2, 3}}, {9, 9, 9}), {1, 2, 3}, 0.0);
}

TEST(NearestPointOnSegment, PropertyNoFartherThanEndpointsOrSamples) {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-10, 10);
    for (int trial = 0; trial < 2000; ++trial) {
        const Segment s{{u(gen), u(gen), u(gen)}, {u(gen), u(gen), u(gen)}};
        const Vec3 p{u(gen), u(gen), u(gen)};
        const Vec3 q = nearest_point_on_segment(s, p);
        const double d = distance(q, p);
        EXPECT_LE(d, std::min(distance(s.a, p), distance(s.b, p)) + 1e-12);
        // q lies on the segment.
        EXPECT_NEAR(distance(s.a, q) + distance(q, s.b), distance(s.a, s.b), 1e-9);
        for (int k = 0; k <= 50; ++k) {
            EXPECT_LE(d, distance(s.a + (s.b - s.a) * (k / 50.0), p) + 1e-12);
        }
    }
}

// ---------------------------------------------------------------------------
// Primitive constructors
// ---------------------------------------------------------------------------

TEST(Primitives, ConstructorsValidate) {
    EXPECT_THROW(make_box({1, 0, 0}, {0, 1, 1}), std::invalid_argument);
    EXPECT_THROW(make_cylinder(0, 0, 0.0, 0, 1), std::invalid_argument);
    EXPECT_THROW(make_cylinder(0, 0, 1.0, 2, 1), std::invalid_argument);
    EXPECT_THROW(make_sphere({0, 0, 0}, -1), std::invalid_argument);
    EXPECT_NO_THROW(make_box({0, 0, 0}, {0, 0, 0}));
}

TEST(Primitives, BoundsOf) {
    EXPECT_EQ(bounds_of(make_cylinder(1, 2, 0.5, 0, 3)), (AxisAlignedBox{{0.5, 1.5, 0}, {1.5, 2.5, 3}}));
    EXPECT_EQ(bounds_of(make_sphere({1, 1, 1}, 2)), (AxisAlignedBox{{-1, -1, -1}, {3, 3, 3}}));
}

// ---------------------------------------------------------------------------
// nearest_point_on_primitive
// ---------------------------------------------------------------------------

TEST(NearestPointOnPrimitive, BoxFaceProjection) {
    expect_vec_near(nearest_point_on_primitive(make_box({-1, -1, 0}, {1, 1, 10}), {3, 0, 5}), {1, 0, 5}, 1e-12);
}

TEST(NearestPointOnPrimitive, SphereRadialProjection) {
    expect_vec_near(nearest_point_on_primitive(make_sphere({0, 0, 0}, 2), {6, 0, 0}), {2, 0, 0}, 1e-12);
}

TEST(NearestPointOnPrimitive, CylinderMatchesDenseSurfaceSampling) {
    const Primitive c = make_cylinder(0, 0, 1, 0, 10);
    const Vec3 p{2, 2, 5};
    // Oracle: dense grid over the lateral surface at z = 5 plus nearby heights.
    Vec3 best;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 100000; ++i) {
        const double a = 2 * std::numbers::pi * i / 100000.0;
        const Vec3 q{std::cos(a), std::sin(a), 5.0};
        if (distance(q, p) < best_d) {
            best_d = distance(q, p);
            best = q;
        }
    }
    const double h = std::sqrt(2.0) / 2.0;
    expect_vec_near(best, {h, h, 5}, 1e-4);
    expect_vec_near(nearest_point_on_primitive(c, p), {h, h, 5}, 1e-12);
}

TEST(NearestPointOnPrimitive, InteriorPointsMapToNearestSurface) {
    expect_vec_near(nearest_point_on_primitive(make_box({0, 0, 0}, {4, 2, 10}), {1, 0.5, 5}), {1, 0, 5}, 1e-12);
    expect_vec_near(nearest_point_on_primitive(make_sphere({0, 0, 0}, 2), {0.5, 0, 0}), {2, 0, 0}, 1e-12);
    expect_vec_near(nearest_point_on_primitive(make_cylinder(0, 0, 1, 0, 10), {0.5, 0, 5}), {1, 0, 5}, 1e-12);
    // Close to the cap: the cap is nearer than the side wall.
    expect_vec_near(nearest_point_on_primitive(make_cylinder(0, 0, 1, 0, 10), {0, 0, 9.9}), {0, 0, 10}, 1e-12);
    EXPECT_DOUBLE_EQ(distance_to_primitive(make_sphere({0, 0, 0}, 2), {0.5, 0, 0}), 0.0);
}

TEST(NearestPointOnPrimitive, PropertyBeatsSurfaceSamples) {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(-8, 8);
    for (int trial = 0; trial < 60; ++trial) {
        const Primitive prim = random_primitive(gen);
        Vec3 p{u(gen), u(gen), u(gen)};
        if (detail::inside(prim, p)) continue;
        const Vec3 q = nearest_point_on_primitive(prim, p);
        EXPECT_TRUE(on_surface(prim, q)) << "trial " << trial;
        const double d = distance(q, p);
        for (const Vec3& s : surface_samples(prim, gen, 10000)) {
            ASSERT_LE(d, distance(s, p) * (1 + 1e-6) + 1e-12) << "trial " << trial;
        }
    }
}

// ---------------------------------------------------------------------------
// raycast
// ---------------------------------------------------------------------------

TEST(Raycast, AxisAlignedSlabEntry) {
    const std::vector<Primitive> obs{make_box({4, -1, 0}, {5, 1, 10})};
    const auto hit = raycast({0, 0, 5}, {1, 0, 0}, 100, obs);
    ASSERT_TRUE(hit);
    EXPECT_NEAR(*hit, 4.0, 1e-12);
}

TEST(Raycast, MissWithoutObstacles) {
    EXPECT_FALSE(raycast({0, 0, 5}, {1, 0, 0}, 100, std::vector<Primitive>{}).has_value());
}

TEST(Raycast, SphereMatchesMarchingOracle) {
    const std::vector<Primitive> obs{make_sphere({10, 0, 5}, 2)};
    const auto hit = raycast({0, 0, 5}, {1, 0, 0}, 100, obs);
    ASSERT_TRUE(hit);
    EXPECT_NEAR(*hit, 8.0, 1e-12);
    const auto oracle = march(obs[0], {0, 0, 5}, {1, 0, 0}, 20);
    ASSERT_TRUE(oracle);
    EXPECT_NEAR(*oracle, *hit, 1e-6);
}

TEST(Raycast, RangeLimitAndNearestWins) {
    const std::vector<Primitive> obs{make_box({8, -1, 0}, {9, 1, 10}), make_box({4, -1, 0}, {5, 1, 10})};
    EXPECT_NEAR(*raycast({0, 0, 5}, {1, 0, 0}, 100, obs), 4.0, 1e-12);
    EXPECT_FALSE(raycast({0, 0, 5}, {1, 0, 0}, 3.9, obs).has_value());
    EXPECT_TRUE(raycast({0, 0, 5}, {1, 0, 0}, 4.0, obs).has_value());
}

TEST(Raycast, RejectsBadArguments) {
    const std::vector<Primitive> obs;
    EXPECT_THROW(raycast({0, 0, 0}, {2, 0, 0}, 10, obs), std::invalid_argument);
    EXPECT_THROW(raycast({0, 0, 0}, {0, 0, 0}, 10, obs), std::invalid_argument);
    EXPECT_THROW(raycast({0, 0, 0}, {1, 0, 0}, 0, obs), std::invalid_argument);
}

TEST(Raycast, CylinderSideAndCap) {
    const std::vector<Primitive> obs{make_cylinder(5, 0, 1, 0, 4)};
    EXPECT_NEAR(*raycast({0, 0, 2}, {1, 0, 0}, 20, obs), 4.0, 1e-12);
    EXPECT_NEAR(*raycast({5, 0, 10}, {0, 0, -1}, 20, obs), 6.0, 1e-12);
    EXPECT_FALSE(raycast({0, 0, 5}, {1, 0, 0}, 20, obs).has_value());
}

TEST(Raycast, PropertyHitsLieOnSurfaceAndMatchMarching) {
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(-1, 1);
    int hits = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const Primitive prim = random_primitive(gen);
        Vec3 o{8 * u(gen), 8 * u(gen), 8 * u(gen)};
        if (detail::inside(prim, o)) continue;
        // Aim roughly at the primitive so a good share of rays hit.
        const Vec3 target = bounds_of(prim).center() + Vec3{u(gen), u(gen), u(gen)};
        const auto d = try_unit(target - o);
        if (!d) continue;
        const std::vector<Primitive> obs{prim};
        const auto hit = raycast(o, *d, 30, obs);
        const auto oracle = march(prim, o, *d, 30, 2e-3);
        ASSERT_EQ(hit.has_value(), oracle.has_value()) << "trial " << trial;
        if (!hit) continue;
        ++hits;
        EXPECT_TRUE(on_surface(prim, o + *d * *hit)) << "trial " << trial;
        EXPECT_NEAR(*hit, *oracle, 1e-6) << "trial " << trial;
    }
    EXPECT_GT(hits, 100);
}

TEST(Geometry, OperationsArePure) {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 100; ++trial) {
        const Primitive prim = random_primitive(gen);
        const Vec3 p{5, -4, 3};
        const Vec3 a = nearest_point_on_primitive(prim, p);
        const Vec3 b = nearest_point_on_primitive(prim, p);
        EXPECT_EQ(a, b);
    }
}
