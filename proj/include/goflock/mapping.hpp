#pragma once
/**
 * @file mapping.hpp
 * @brief Per-agent local occupancy grid built from depth images.
 *
 * The grid is a fixed-size window of cubic voxels whose origin is kept on a
 * global lattice (multiples of the resolution) so re-centring is an integer
 * shift. Cells are tri-state. An occupied cell reverts to free only after it
 * has been observed free in two consecutive depth images; any hit in between
 * resets that count.
 *
 * Linear cell index is (ix * ny + iy) * nz + iz, so comparing linear indices
 * is the same as comparing (ix, iy, iz) lexicographically.
 */

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "goflock/geometry.hpp"
#include "goflock/world.hpp"

namespace goflock {

enum class Cell : std::uint8_t { unknown = 0, free = 1, occupied = 2 };

using VoxelIndex = std::array<int, 3>;

class OccupancyGrid {
public:
    OccupancyGrid() = default;

    OccupancyGrid(const Vec3& origin, double resolution, int nx, int ny, int nz)
        : origin_(origin), resolution_(resolution), nx_(nx), ny_(ny), nz_(nz) {
        if (!(resolution > 0.0)) throw std::invalid_argument("grid resolution must be positive");
        if (nx <= 0 || ny <= 0 || nz <= 0) throw std::invalid_argument("grid dimensions must be positive");
        cells_.assign(size(), Cell::unknown);
        free_count_.assign(size(), 0);
    }

    /// Window of the given metric extent centred (to the nearest voxel) on `center`.
    static OccupancyGrid window(const Vec3& center, double resolution, const Vec3& extent) {
        const int nx = static_cast<int>(std::lround(extent.x / resolution));
        const int ny = static_cast<int>(std::lround(extent.y / resolution));
        const int nz = static_cast<int>(std::lround(extent.z / resolution));
        OccupancyGrid g(aligned_origin(center, resolution, nx, ny, nz), resolution, nx, ny, nz);
        return g;
    }

    static Vec3 aligned_origin(const Vec3& center, double res, int nx, int ny, int nz) {
        return {std::floor(center.x / res - nx / 2.0 + 0.5) * res, std::floor(center.y / res - ny / 2.0 + 0.5) * res,
                std::floor(center.z / res - nz / 2.0 + 0.5) * res};
    }

    const Vec3& origin() const { return origin_; }
    double resolution() const { return resolution_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int nz() const { return nz_; }
    std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_ * nz_; }
    bool inflated() const { return inflated_; }
    void set_inflated(bool v) { inflated_ = v; }

    AxisAlignedBox bounds() const {
        return {origin_, origin_ + Vec3{nx_ * resolution_, ny_ * resolution_, nz_ * resolution_}};
    }

    bool in_range(int ix, int iy, int iz) const {
        return ix >= 0 && iy >= 0 && iz >= 0 && ix < nx_ && iy < ny_ && iz < nz_;
    }
    bool in_range(const VoxelIndex& v) const { return in_range(v[0], v[1], v[2]); }

    std::size_t linear(int ix, int iy, int iz) const {
        return (static_cast<std::size_t>(ix) * ny_ + iy) * nz_ + iz;
    }
    std::size_t linear(const VoxelIndex& v) const { return linear(v[0], v[1], v[2]); }

    VoxelIndex unlinear(std::size_t i) const {
        const int iz = static_cast<int>(i % nz_);
        const int iy = static_cast<int>((i / nz_) % ny_);
        const int ix = static_cast<int>(i / (static_cast<std::size_t>(nz_) * ny_));
        return {ix, iy, iz};
    }

    /// Voxel containing p (unchecked; may be outside the window).
    VoxelIndex voxel_of(const Vec3& p) const {
        return {static_cast<int>(std::floor((p.x - origin_.x) / resolution_)),
                static_cast<int>(std::floor((p.y - origin_.y) / resolution_)),
                static_cast<int>(std::floor((p.z - origin_.z) / resolution_))};
    }

    bool contains(const Vec3& p) const { return in_range(voxel_of(p)); }

    Vec3 center(const VoxelIndex& v) const {
        return origin_ + Vec3{(v[0] + 0.5) * resolution_, (v[1] + 0.5) * resolution_, (v[2] + 0.5) * resolution_};
    }

    Cell at(const VoxelIndex& v) const { return cells_[linear(v)]; }
    Cell at(std::size_t i) const { return cells_[i]; }
    void set(const VoxelIndex& v, Cell c) {
        cells_[linear(v)] = c;
        free_count_[linear(v)] = 0;
    }

    bool occupied(const VoxelIndex& v) const { return in_range(v) && cells_[linear(v)] == Cell::occupied; }

    std::size_t count(Cell c) const {
        std::size_t n = 0;
        for (auto x : cells_) n += (x == c);
        return n;
    }

    /// Linear indices of occupied cells, ascending.
    std::vector<std::size_t> occupied_cells() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            if (cells_[i] == Cell::occupied) out.push_back(i);
        }
        return out;
    }

    /// Slide the window so it is centred on `center`. Cells that stay inside
    /// keep their state; newly exposed cells are unknown.
    void recenter(const Vec3& center) {
        const Vec3 new_origin = aligned_origin(center, resolution_, nx_, ny_, nz_);
        const int sx = static_cast<int>(std::lround((new_origin.x - origin_.x) / resolution_));
        const int sy = static_cast<int>(std::lround((new_origin.y - origin_.y) / resolution_));
        const int sz = static_cast<int>(std::lround((new_origin.z - origin_.z) / resolution_));
        if (sx == 0 && sy == 0 && sz == 0) return;
        std::vector<Cell> cells(size(), Cell::unknown);
        std::vector<std::uint8_t> counts(size(), 0);
        for (int ix = 0; ix < nx_; ++ix) {
            const int ox = ix + sx;
            if (ox < 0 || ox >= nx_) continue;
            for (int iy = 0; iy < ny_; ++iy) {
                const int oy = iy + sy;
                if (oy < 0 || oy >= ny_) continue;
                for (int iz = 0; iz < nz_; ++iz) {
                    const int oz = iz + sz;
                    if (oz < 0 || oz >= nz_) continue;
                    cells[linear(ix, iy, iz)] = cells_[linear(ox, oy, oz)];
                    counts[linear(ix, iy, iz)] = free_count_[linear(ox, oy, oz)];
                }
            }
        }
        cells_ = std::move(cells);
        free_count_ = std::move(counts);
        origin_ = new_origin;
    }

    bool operator==(const OccupancyGrid& o) const {
        return origin_ == o.origin_ && resolution_ == o.resolution_ && nx_ == o.nx_ && ny_ == o.ny_ &&
               nz_ == o.nz_ && inflated_ == o.inflated_ && cells_ == o.cells_;
    }

    // Free-observation bookkeeping used by integrate_depth.
    std::uint8_t& free_count(std::size_t i) { return free_count_[i]; }
    Cell& cell_ref(std::size_t i) { return cells_[i]; }

private:
    Vec3 origin_{};
    double resolution_{0.25};
    int nx_{0}, ny_{0}, nz_{0};
    bool inflated_{false};
    std::vector<Cell> cells_;
    std::vector<std::uint8_t> free_count_;
};

/// Voxels crossed by the segment a->b, in order, clipped to the grid window.
/// `visit(index)` returns false to stop early. A visitor taking
/// `(std::size_t linear, const VoxelIndex&)` also receives the linear index.
/// Uses Amanatides-Woo stepping.
template <typename Visit>
void traverse_voxels(const OccupancyGrid& grid, const Vec3& a, const Vec3& b, Visit&& visit) {
    constexpr bool wants_linear = std::is_invocable_v<Visit&, std::size_t, const VoxelIndex&>;
    auto call = [&](std::size_t li, const VoxelIndex& v) {
        if constexpr (wants_linear) {
            return visit(li, v);
        } else {
            return visit(v);
        }
    };
    const double res = grid.resolution();
    const Vec3 d = b - a;
    const double len = d.norm();
    VoxelIndex v = grid.voxel_of(a);
    const VoxelIndex last = grid.voxel_of(b);
    if (!grid.in_range(v)) return;
    std::size_t li = grid.linear(v);
    if (len == 0.0) {
        call(li, v);
        return;
    }
    const std::size_t last_li = grid.in_range(last) ? grid.linear(last) : std::numeric_limits<std::size_t>::max();
    const int lim[3] = {grid.nx(), grid.ny(), grid.nz()};
    const std::ptrdiff_t stride[3] = {static_cast<std::ptrdiff_t>(grid.ny()) * grid.nz(), grid.nz(), 1};
    int step[3];
    double t_max[3];
    double t_delta[3];
    for (int k = 0; k < 3; ++k) {
        if (d[k] > 0) {
            step[k] = 1;
            const double boundary = grid.origin()[k] + (v[k] + 1) * res;
            t_max[k] = (boundary - a[k]) / d[k];
            t_delta[k] = res / d[k];
        } else if (d[k] < 0) {
            step[k] = -1;
            const double boundary = grid.origin()[k] + v[k] * res;
            t_max[k] = (boundary - a[k]) / d[k];
            t_delta[k] = -res / d[k];
        } else {
            step[k] = 0;
            t_max[k] = std::numeric_limits<double>::infinity();
            t_delta[k] = std::numeric_limits<double>::infinity();
        }
    }
    while (true) {
        if (!call(li, v)) return;
        if (li == last_li) return;
        int axis = 0;
        if (t_max[1] < t_max[axis]) axis = 1;
        if (t_max[2] < t_max[axis]) axis = 2;
        if (t_max[axis] > 1.0) return;
        v[axis] += step[axis];
        if (v[axis] < 0 || v[axis] >= lim[axis]) return;
        li = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(li) + step[axis] * stride[axis]);
        t_max[axis] += t_delta[axis];
    }
}

/// Carve one depth image into the grid in place.
///
/// Each finite-depth pixel marks the voxel holding its hit point occupied and
/// the voxels before it free; no-return pixels mark their whole in-range ray
/// free. A voxel is counted at most once per image and hits win over free
/// observations inside the same image.
inline void integrate_depth(OccupancyGrid& grid, const DepthImage& img) {
    const Vec3 origin = img.pose.position;
    if (!grid.contains(origin)) throw std::invalid_argument("depth image pose lies outside the grid window");
    CameraIntrinsics in{img.width, img.height, img.hfov, img.max_range};

    // 0 = untouched, 1 = hit this image, 2 = observed free this image
    std::vector<std::uint8_t> mark(grid.size(), 0);
    std::vector<Vec3> dirs(img.depths.size());
    for (int v = 0; v < img.height; ++v) {
        for (int u = 0; u < img.width; ++u) {
            const std::size_t k = static_cast<std::size_t>(v) * img.width + u;
            dirs[k] = pixel_ray(img.pose, in, u, v);
            const double depth = img.depths[k];
            if (!std::isfinite(depth)) continue;
            // Nudge past the surface so the hit lands in the obstacle's voxel.
            const VoxelIndex hv = grid.voxel_of(origin + dirs[k] * (depth + 1e-6));
            if (!grid.in_range(hv)) continue;
            const std::size_t li = grid.linear(hv);
            mark[li] = 1;
            grid.cell_ref(li) = Cell::occupied;
            grid.free_count(li) = 0;
        }
    }
    for (std::size_t k = 0; k < img.depths.size(); ++k) {
        const double depth = img.depths[k];
        const bool hit = std::isfinite(depth);
        const double reach = hit ? depth : img.max_range;
        const Vec3 end = origin + dirs[k] * reach;
        const VoxelIndex hv = grid.voxel_of(origin + dirs[k] * (reach + 1e-6));
        const std::size_t hli =
            hit && grid.in_range(hv) ? grid.linear(hv) : std::numeric_limits<std::size_t>::max();
        traverse_voxels(grid, origin, end, [&](std::size_t li, const VoxelIndex&) {
            if (li == hli) return false;
            if (mark[li] != 0) return true;
            mark[li] = 2;
            Cell& c = grid.cell_ref(li);
            if (c == Cell::occupied) {
                if (++grid.free_count(li) >= 2) {
                    c = Cell::free;
                    grid.free_count(li) = 0;
                }
            } else {
                c = Cell::free;
            }
            return true;
        });
    }
}

/// Value-returning form of integrate_depth.
inline OccupancyGrid integrated(OccupancyGrid grid, const DepthImage& img) {
    integrate_depth(grid, img);
    return grid;
}

/// Voxel offsets whose centres lie within `delta` of the origin voxel's centre.
inline std::vector<VoxelIndex> ball_offsets(double delta, double resolution) {
    std::vector<VoxelIndex> out;
    const int r = static_cast<int>(std::floor(delta / resolution + 1e-9));
    const double lim = delta / resolution + 1e-9;
    for (int dx = -r; dx <= r; ++dx) {
        for (int dy = -r; dy <= r; ++dy) {
            for (int dz = -r; dz <= r; ++dz) {
                if (std::sqrt(double(dx * dx + dy * dy + dz * dz)) <= lim) out.push_back({dx, dy, dz});
            }
        }
    }
    return out;
}

/// Write the inflation of `in` into `out` (resized as needed): a voxel is
/// occupied iff its centre lies within `delta` of an occupied voxel centre.
/// Cells not reached keep their input state.
inline void inflate_into(const OccupancyGrid& in, double delta, OccupancyGrid& out) {
    if (!(delta >= 0.0)) throw std::invalid_argument("inflation margin must be non-negative");
    if (in.inflated()) throw std::logic_error("grid is already inflated");
    out = in;
    out.set_inflated(true);
    if (delta == 0.0) return;
    const auto offsets = ball_offsets(delta, in.resolution());
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (in.at(i) != Cell::occupied) continue;
        const VoxelIndex v = in.unlinear(i);
        for (const auto& o : offsets) {
            const VoxelIndex w{v[0] + o[0], v[1] + o[1], v[2] + o[2]};
            if (out.in_range(w)) out.cell_ref(out.linear(w)) = Cell::occupied;
        }
    }
}

inline OccupancyGrid inflate(const OccupancyGrid& grid, double delta) {
    OccupancyGrid out;
    inflate_into(grid, delta, out);
    return out;
}

/// Centre of the occupied voxel nearest to p within max_radius. Ties go to
/// the lexicographically smallest voxel index.
inline std::optional<Vec3> nearest_occupied(const OccupancyGrid& grid, const Vec3& p, double max_radius) {
    const double res = grid.resolution();
    const VoxelIndex c = grid.voxel_of(p);
    const int r = static_cast<int>(std::ceil(max_radius / res)) + 1;
    const double r2 = max_radius * max_radius;
    std::optional<Vec3> best;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int ix = std::max(0, c[0] - r); ix <= std::min(grid.nx() - 1, c[0] + r); ++ix) {
        for (int iy = std::max(0, c[1] - r); iy <= std::min(grid.ny() - 1, c[1] + r); ++iy) {
            for (int iz = std::max(0, c[2] - r); iz <= std::min(grid.nz() - 1, c[2] + r); ++iz) {
                if (grid.at(grid.linear(ix, iy, iz)) != Cell::occupied) continue;
                const Vec3 q = grid.center({ix, iy, iz});
                const double d2 = (q - p).squared_norm();
                // Scan order is lexicographic, so strict < keeps the smallest index on ties.
                if (d2 <= r2 && d2 < best_d2) {
                    best_d2 = d2;
                    best = q;
                }
            }
        }
    }
    return best;
}

/// Plain-text dump, one "x y z state" line per known voxel centre.
inline void write_voxel_list(std::ostream& os, const OccupancyGrid& grid, bool include_free = false) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Cell c = grid.at(i);
        if (c == Cell::unknown || (c == Cell::free && !include_free)) continue;
        const Vec3 p = grid.center(grid.unlinear(i));
        os << p.x << ' ' << p.y << ' ' << p.z << ' ' << (c == Cell::occupied ? "occupied" : "free") << '\n';
    }
}

}  // namespace goflock
