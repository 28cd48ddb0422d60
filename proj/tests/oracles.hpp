#pragma once
/// Brute-force reference implementations used by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <utility>
#include <vector>

#include "goflock/geometry.hpp"
#include "goflock/mapping.hpp"

namespace goflock::test_support {

/// Plain Dijkstra over non-occupied voxels with 26-connectivity.
inline std::optional<double> dijkstra(const OccupancyGrid& g, const VoxelIndex& s, const VoxelIndex& t) {
    std::vector<double> dist(g.size(), std::numeric_limits<double>::infinity());
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[g.linear(s)] = 0.0;
    pq.push({0.0, g.linear(s)});
    while (!pq.empty()) {
        const auto [d, i] = pq.top();
        pq.pop();
        if (d > dist[i]) continue;
        if (i == g.linear(t)) return d;
        const VoxelIndex v = g.unlinear(i);
        for (int dx = -1; dx <= 1; ++dx) {
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dz = -1; dz <= 1; ++dz) {
                    if (!dx && !dy && !dz) continue;
                    const VoxelIndex w{v[0] + dx, v[1] + dy, v[2] + dz};
                    if (!g.in_range(w) || g.occupied(w)) continue;
                    const double nd = d + g.resolution() * std::sqrt(double(dx * dx + dy * dy + dz * dz));
                    if (nd < dist[g.linear(w)]) {
                        dist[g.linear(w)] = nd;
                        pq.push({nd, g.linear(w)});
                    }
                }
            }
        }
    }
    return std::nullopt;
}

/// Minimiser of |s(t) - q| by dense sampling refined with ternary search.
inline Vec3 dense_segment_nearest(const Segment& s, const Vec3& q, int samples = 2000) {
    auto at = [&](double t) { return s.a + (s.b - s.a) * t; };
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= samples; ++k) {
        const double d = distance(at(double(k) / samples), q);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    double lo = std::max(0.0, (best - 1.0) / samples), hi = std::min(1.0, (best + 1.0) / samples);
    for (int it = 0; it < 200; ++it) {
        const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
        if (distance(at(m1), q) <= distance(at(m2), q)) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    return at(0.5 * (lo + hi));
}

}  // namespace goflock::test_support
