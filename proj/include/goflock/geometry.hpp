#pragma once
/**
 * @file geometry.hpp
 * @brief Double-precision vector and primitive geometry.
 *
 * Vec3 arithmetic, segments, analytic obstacle primitives (axis-aligned box,
 * vertical cylinder, sphere), nearest-point queries and ray intersection.
 * Everything here is a pure function of its arguments.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace goflock {

/// Surface-membership tolerance used throughout [m].
inline constexpr double kSurfaceTol = 1e-6;

struct Vec3 {
    double x{0.0};
    double y{0.0};
    double z{0.0};

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr Vec3 operator+(const Vec3& r) const { return {x + r.x, y + r.y, z + r.z}; }
    constexpr Vec3 operator-(const Vec3& r) const { return {x - r.x, y - r.y, z - r.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    friend constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

    Vec3& operator+=(const Vec3& r) { x += r.x; y += r.y; z += r.z; return *this; }
    Vec3& operator-=(const Vec3& r) { x -= r.x; y -= r.y; z -= r.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    constexpr bool operator==(const Vec3&) const = default;

    constexpr double dot(const Vec3& r) const { return x * r.x + y * r.y + z * r.z; }
    constexpr Vec3 cross(const Vec3& r) const {
        return {y * r.z - z * r.y, z * r.x - x * r.z, x * r.y - y * r.x};
    }
    constexpr double squared_norm() const { return dot(*this); }
    double norm() const { return std::sqrt(squared_norm()); }

    bool is_finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

    /// Unit vector in the same direction. A zero (or non-finite) vector throws.
    Vec3 normalized() const {
        const double n = norm();
        if (!(n > 0.0) || !std::isfinite(n)) {
            throw std::domain_error("cannot normalize a zero-length vector");
        }
        return *this / n;
    }

    double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
    double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

/// Unit vector of v, or nullopt when v has zero length.
inline std::optional<Vec3> try_unit(const Vec3& v) {
    const double n = v.norm();
    if (!(n > 0.0)) return std::nullopt;
    return v / n;
}

inline std::string to_string(const Vec3& v) {
    return "(" + std::to_string(v.x) + ", " + std::to_string(v.y) + ", " + std::to_string(v.z) + ")";
}

struct Segment {
    Vec3 a;
    Vec3 b;
    constexpr bool operator==(const Segment&) const = default;
};

/// Closest point of s to p. A degenerate segment returns s.a.
inline Vec3 nearest_point_on_segment(const Segment& s, const Vec3& p) {
    const Vec3 ab = s.b - s.a;
    const double len2 = ab.squared_norm();
    if (len2 == 0.0) return s.a;
    const double t = std::clamp((p - s.a).dot(ab) / len2, 0.0, 1.0);
    return s.a + ab * t;
}

inline double distance_to_segment(const Segment& s, const Vec3& p) {
    return distance(nearest_point_on_segment(s, p), p);
}

// ---------------------------------------------------------------------------
// Primitives
// ---------------------------------------------------------------------------

struct AxisAlignedBox {
    Vec3 min;
    Vec3 max;

    bool contains(const Vec3& p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
               p.z <= max.z;
    }
    Vec3 center() const { return (min + max) * 0.5; }
    Vec3 extent() const { return max - min; }
    bool operator==(const AxisAlignedBox&) const = default;
};

struct VerticalCylinder {
    double cx{0.0};
    double cy{0.0};
    double radius{1.0};
    double z_min{0.0};
    double z_max{1.0};
    bool operator==(const VerticalCylinder&) const = default;
};

struct Sphere {
    Vec3 center;
    double radius{1.0};
    bool operator==(const Sphere&) const = default;
};

using Primitive = std::variant<AxisAlignedBox, VerticalCylinder, Sphere>;

inline AxisAlignedBox make_box(const Vec3& min, const Vec3& max) {
    if (!min.is_finite() || !max.is_finite() || min.x > max.x || min.y > max.y || min.z > max.z) {
        throw std::invalid_argument("box requires finite min <= max componentwise");
    }
    return {min, max};
}

inline VerticalCylinder make_cylinder(double cx, double cy, double radius, double z_min, double z_max) {
    if (!(radius > 0.0) || !(z_min <= z_max) || !std::isfinite(cx) || !std::isfinite(cy) ||
        !std::isfinite(radius) || !std::isfinite(z_min) || !std::isfinite(z_max)) {
        throw std::invalid_argument("cylinder requires radius > 0 and z_min <= z_max");
    }
    return {cx, cy, radius, z_min, z_max};
}

inline Sphere make_sphere(const Vec3& center, double radius) {
    if (!(radius > 0.0) || !center.is_finite() || !std::isfinite(radius)) {
        throw std::invalid_argument("sphere requires radius > 0");
    }
    return {center, radius};
}

/// Tight axis-aligned bounds of a primitive.
inline AxisAlignedBox bounds_of(const Primitive& prim) {
    return std::visit(
        [](const auto& p) -> AxisAlignedBox {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, AxisAlignedBox>) {
                return p;
            } else if constexpr (std::is_same_v<T, VerticalCylinder>) {
                return {{p.cx - p.radius, p.cy - p.radius, p.z_min},
                        {p.cx + p.radius, p.cy + p.radius, p.z_max}};
            } else {
                const Vec3 r{p.radius, p.radius, p.radius};
                return {p.center - r, p.center + r};
            }
        },
        prim);
}

namespace detail {

inline Vec3 nearest_on_box(const AxisAlignedBox& b, const Vec3& p) {
    if (!b.contains(p)) {
        return {std::clamp(p.x, b.min.x, b.max.x), std::clamp(p.y, b.min.y, b.max.y),
                std::clamp(p.z, b.min.z, b.max.z)};
    }
    // Interior: push out through the closest face. Ties resolve to the first
    // face in the order -x, +x, -y, +y, -z, +z.
    Vec3 best = p;
    double best_d = std::numeric_limits<double>::infinity();
    for (int axis = 0; axis < 3; ++axis) {
        const double to_min = p[axis] - b.min[axis];
        const double to_max = b.max[axis] - p[axis];
        if (to_min < best_d) {
            best_d = to_min;
            best = p;
            best[axis] = b.min[axis];
        }
        if (to_max < best_d) {
            best_d = to_max;
            best = p;
            best[axis] = b.max[axis];
        }
    }
    return best;
}

inline Vec3 nearest_on_cylinder(const VerticalCylinder& c, const Vec3& p) {
    const double qx = p.x - c.cx;
    const double qy = p.y - c.cy;
    const double rxy = std::hypot(qx, qy);
    // Radial unit vector; the axis itself maps to +x.
    const double ux = rxy > 0.0 ? qx / rxy : 1.0;
    const double uy = rxy > 0.0 ? qy / rxy : 0.0;

    const bool inside = rxy <= c.radius && p.z >= c.z_min && p.z <= c.z_max;
    if (!inside) {
        const double r = std::min(rxy, c.radius);
        return {c.cx + ux * r, c.cy + uy * r, std::clamp(p.z, c.z_min, c.z_max)};
    }
    const Vec3 side{c.cx + ux * c.radius, c.cy + uy * c.radius, p.z};
    const Vec3 bottom{p.x, p.y, c.z_min};
    const Vec3 top{p.x, p.y, c.z_max};
    const double d_side = c.radius - rxy;
    const double d_bottom = p.z - c.z_min;
    const double d_top = c.z_max - p.z;
    if (d_side <= d_bottom && d_side <= d_top) return side;
    return d_bottom <= d_top ? bottom : top;
}

inline Vec3 nearest_on_sphere(const Sphere& s, const Vec3& p) {
    const Vec3 d = p - s.center;
    const double n = d.norm();
    const Vec3 u = n > 0.0 ? d / n : Vec3{1.0, 0.0, 0.0};
    return s.center + u * s.radius;
}

inline bool inside(const Primitive& prim, const Vec3& p) {
    return std::visit(
        [&](const auto& q) -> bool {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, AxisAlignedBox>) {
                return q.contains(p);
            } else if constexpr (std::is_same_v<T, VerticalCylinder>) {
                return std::hypot(p.x - q.cx, p.y - q.cy) <= q.radius && p.z >= q.z_min &&
                       p.z <= q.z_max;
            } else {
                return distance(p, q.center) <= q.radius;
            }
        },
        prim);
}

// Entry/exit parameters of the ray with the primitive; returns the smallest
// root in (0, max_t] or nullopt.
inline std::optional<double> pick_root(double t0, double t1, double max_t) {
    if (t0 > 0.0 && t0 <= max_t) return t0;
    if (t1 > 0.0 && t1 <= max_t) return t1;
    return std::nullopt;
}

inline std::optional<double> ray_box(const AxisAlignedBox& b, const Vec3& o, const Vec3& d, double max_t) {
    double t_near = -std::numeric_limits<double>::infinity();
    double t_far = std::numeric_limits<double>::infinity();
    for (int axis = 0; axis < 3; ++axis) {
        if (d[axis] == 0.0) {
            if (o[axis] < b.min[axis] || o[axis] > b.max[axis]) return std::nullopt;
            continue;
        }
        double t0 = (b.min[axis] - o[axis]) / d[axis];
        double t1 = (b.max[axis] - o[axis]) / d[axis];
        if (t0 > t1) std::swap(t0, t1);
        t_near = std::max(t_near, t0);
        t_far = std::min(t_far, t1);
        if (t_near > t_far) return std::nullopt;
    }
    return pick_root(t_near, t_far, max_t);
}

// Quadratic a t^2 + b t + c = 0 with a > 0; tangency (zero discriminant,
// including rounding just below zero) counts as a double root.
inline std::optional<std::pair<double, double>> solve_quadratic(double a, double b, double c) {
    double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) {
        if (disc < -1e-12 * std::max(b * b, 1.0)) return std::nullopt;
        disc = 0.0;
    }
    const double s = std::sqrt(disc);
    // Numerically stable root pair.
    const double q = -0.5 * (b + (b >= 0.0 ? s : -s));
    double t0 = q / a;
    double t1 = q != 0.0 ? c / q : t0;
    if (t0 > t1) std::swap(t0, t1);
    return std::pair{t0, t1};
}

inline std::optional<double> ray_sphere(const Sphere& s, const Vec3& o, const Vec3& d, double max_t) {
    const Vec3 m = o - s.center;
    const auto roots = solve_quadratic(1.0, 2.0 * m.dot(d), m.squared_norm() - s.radius * s.radius);
    if (!roots) return std::nullopt;
    return pick_root(roots->first, roots->second, max_t);
}

inline std::optional<double> ray_cylinder(const VerticalCylinder& c, const Vec3& o, const Vec3& d, double max_t) {
    std::optional<double> best;
    auto consider = [&](double t) {
        if (t > 0.0 && t <= max_t && (!best || t < *best)) best = t;
    };
    const double mx = o.x - c.cx;
    const double my = o.y - c.cy;
    const double a = d.x * d.x + d.y * d.y;
    if (a > 0.0) {
        if (auto roots = solve_quadratic(a, 2.0 * (mx * d.x + my * d.y), mx * mx + my * my - c.radius * c.radius)) {
            for (double t : {roots->first, roots->second}) {
                const double z = o.z + t * d.z;
                if (z >= c.z_min - kSurfaceTol && z <= c.z_max + kSurfaceTol) consider(t);
            }
        }
    }
    if (d.z != 0.0) {
        for (double zc : {c.z_min, c.z_max}) {
            const double t = (zc - o.z) / d.z;
            const double px = mx + t * d.x;
            const double py = my + t * d.y;
            if (px * px + py * py <= c.radius * c.radius) consider(t);
        }
    }
    return best;
}

}  // namespace detail

/// Nearest point on the primitive's surface. Interior points map to the
/// closest surface point so a repulsion direction always exists.
inline Vec3 nearest_point_on_primitive(const Primitive& prim, const Vec3& p) {
    return std::visit(
        [&](const auto& q) -> Vec3 {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, AxisAlignedBox>) {
                return detail::nearest_on_box(q, p);
            } else if constexpr (std::is_same_v<T, VerticalCylinder>) {
                return detail::nearest_on_cylinder(q, p);
            } else {
                return detail::nearest_on_sphere(q, p);
            }
        },
        prim);
}

/// Distance from p to the primitive; zero for points inside it.
inline double distance_to_primitive(const Primitive& prim, const Vec3& p) {
    if (detail::inside(prim, p)) return 0.0;
    return distance(nearest_point_on_primitive(prim, p), p);
}

inline bool is_unit(const Vec3& dir) { return std::abs(dir.norm() - 1.0) <= 1e-9; }

/// Smallest t in (0, max_range] where origin + t*dir touches a primitive.
/// Throws std::invalid_argument for a non-unit direction or non-positive range.
inline std::optional<double> raycast(const Vec3& origin, const Vec3& dir, double max_range,
                                     std::span<const Primitive> primitives) {
    if (!is_unit(dir)) throw std::invalid_argument("raycast direction must be unit length");
    if (!(max_range > 0.0)) throw std::invalid_argument("raycast range must be positive");
    std::optional<double> best;
    for (const auto& prim : primitives) {
        const double limit = best ? *best : max_range;
        const auto hit = std::visit(
            [&](const auto& q) -> std::optional<double> {
                using T = std::decay_t<decltype(q)>;
                if constexpr (std::is_same_v<T, AxisAlignedBox>) {
                    return detail::ray_box(q, origin, dir, limit);
                } else if constexpr (std::is_same_v<T, VerticalCylinder>) {
                    return detail::ray_cylinder(q, origin, dir, limit);
                } else {
                    return detail::ray_sphere(q, origin, dir, limit);
                }
            },
            prim);
        if (hit && (!best || *hit < *best)) best = hit;
    }
    return best;
}

}  // namespace goflock
