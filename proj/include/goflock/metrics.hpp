#pragma once
/**
 * @file metrics.hpp
 * @brief Flock metrics and batch aggregation.
 *
 *   D(t)  mean distance of agents from their centroid
 *   C(t)  mean cosine between each velocity and the flock's mean velocity
 *   AV    centroid displacement from t=0 to T divided by T, where T is the
 *         last sample at which every agent is still at least 3 m from the goal
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "goflock/geometry.hpp"
#include "goflock/sim.hpp"

namespace goflock {

/// Speeds below this are treated as zero when computing C(t) [m/s].
inline constexpr double kSpeedEpsilon = 1e-6;

inline Vec3 centroid(std::span<const Vec3> pts) {
    Vec3 c{};
    for (const auto& p : pts) c += p;
    return pts.empty() ? c : c / static_cast<double>(pts.size());
}

inline double dispersion(std::span<const Vec3> positions) {
    if (positions.empty()) throw std::invalid_argument("dispersion needs at least one agent");
    const Vec3 c = centroid(positions);
    double s = 0.0;
    for (const auto& p : positions) s += distance(p, c);
    return s / static_cast<double>(positions.size());
}

/// nullopt when the mean velocity is (near) zero. Agents with near-zero speed
/// are skipped; the average runs over the remaining agents.
inline std::optional<double> cosine_similarity(std::span<const Vec3> velocities) {
    if (velocities.empty()) throw std::invalid_argument("cosine_similarity needs at least one agent");
    const Vec3 mean = centroid(velocities);
    const double mean_n = mean.norm();
    if (mean_n < kSpeedEpsilon) return std::nullopt;
    double s = 0.0;
    int used = 0;
    for (const auto& v : velocities) {
        const double n = v.norm();
        if (n < kSpeedEpsilon) continue;
        s += v.dot(mean) / (n * mean_n);
        ++used;
    }
    if (used == 0) return std::nullopt;
    return s / used;
}

struct AverageSpeed {
    double value{0.0};
    double time{0.0};       // T
    bool reached{false};    // false: some agent never came within 3 m, T = end of run
};

inline AverageSpeed average_speed(const RunRecord& rec, double arrival_distance = 3.0) {
    AverageSpeed out;
    if (rec.frames.size() < 2) return out;
    std::size_t last = 0;
    out.reached = false;
    for (std::size_t k = 0; k < rec.frames.size(); ++k) {
        const auto& pos = rec.frames[k].positions;
        const bool all_far = std::all_of(pos.begin(), pos.end(),
                                         [&](const Vec3& p) { return distance(p, rec.goal) >= arrival_distance; });
        if (all_far) {
            last = k;
        } else {
            out.reached = true;
            break;
        }
    }
    if (!out.reached) last = rec.frames.size() - 1;
    out.time = rec.frames[last].t - rec.frames.front().t;
    if (out.time <= 0.0) return out;
    const Vec3 c0 = centroid(rec.frames.front().positions);
    const Vec3 c1 = centroid(rec.frames[last].positions);
    out.value = distance(c0, c1) / out.time;
    return out;
}

struct MetricSeries {
    std::vector<double> dispersion;
    std::vector<std::optional<double>> cosine;
    AverageSpeed av;
    double min_interagent{std::numeric_limits<double>::infinity()};
    double min_obstacle{std::numeric_limits<double>::infinity()};
    Outcome outcome{Outcome::timeout};

    double mean_dispersion() const {
        if (dispersion.empty()) return 0.0;
        double s = 0.0;
        for (double d : dispersion) s += d;
        return s / static_cast<double>(dispersion.size());
    }
    /// Mean over defined samples; nullopt when none are defined.
    std::optional<double> mean_cosine() const {
        double s = 0.0;
        int n = 0;
        for (const auto& c : cosine) {
            if (c) {
                s += *c;
                ++n;
            }
        }
        if (n == 0) return std::nullopt;
        return s / n;
    }
};

inline MetricSeries evaluate(const RunRecord& rec) {
    MetricSeries m;
    m.dispersion.reserve(rec.frames.size());
    m.cosine.reserve(rec.frames.size());
    for (const auto& f : rec.frames) {
        m.dispersion.push_back(dispersion(f.positions));
        m.cosine.push_back(cosine_similarity(f.velocities));
        m.min_interagent = std::min(m.min_interagent, f.min_interagent);
        m.min_obstacle = std::min(m.min_obstacle, f.min_obstacle);
    }
    m.av = average_speed(rec);
    m.outcome = rec.outcome;
    return m;
}

struct MeanStd {
    double mean{0.0};
    double std{0.0};
};

/// Mean and sample standard deviation (n - 1); a single value has std 0.
inline MeanStd mean_std(std::span<const double> xs) {
    MeanStd r;
    if (xs.empty()) return r;
    double s = 0.0;
    for (double x : xs) s += x;
    r.mean = s / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - r.mean) * (x - r.mean);
        r.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return r;
}

struct BatchSummary {
    int runs{0};
    double success_rate{0.0};
    MeanStd dispersion;
    MeanStd cosine;
    MeanStd av;
    /// Means over successful runs (all runs when none succeeded).
    double min_interagent_mean{0.0};
    double min_obstacle_mean{0.0};
};

/// Per-run temporal means first, then mean/std across runs. Sums are taken
/// in sorted order so permuting the batch cannot change the result.
inline BatchSummary summarize(std::span<const MetricSeries> batch) {
    if (batch.empty()) throw std::invalid_argument("summarize needs at least one run");
    BatchSummary out;
    out.runs = static_cast<int>(batch.size());
    std::vector<double> d, c, av, mi_ok, mo_ok, mi_all, mo_all;
    int ok = 0;
    for (const auto& m : batch) {
        d.push_back(m.mean_dispersion());
        if (auto mc = m.mean_cosine()) c.push_back(*mc);
        av.push_back(m.av.value);
        mi_all.push_back(m.min_interagent);
        mo_all.push_back(m.min_obstacle);
        if (m.outcome == Outcome::success) {
            ++ok;
            mi_ok.push_back(m.min_interagent);
            mo_ok.push_back(m.min_obstacle);
        }
    }
    for (auto* v : {&d, &c, &av, &mi_ok, &mo_ok, &mi_all, &mo_all}) std::sort(v->begin(), v->end());
    out.success_rate = static_cast<double>(ok) / static_cast<double>(batch.size());
    out.dispersion = mean_std(d);
    out.cosine = mean_std(c);
    out.av = mean_std(av);
    out.min_interagent_mean = mean_std(ok > 0 ? mi_ok : mi_all).mean;
    out.min_obstacle_mean = mean_std(ok > 0 ? mo_ok : mo_all).mean;
    return out;
}

/// C(t) averaged over runs as a function of flock progress past an obstacle.
///
/// Each frame is binned by the signed offset of the flock centroid from
/// `anchor` along `axis`; the profile is the mean of all defined C samples
/// that fall in each bin. The trough is the lowest bin mean within
/// `half_width` of the anchor. Aligning runs on progress rather than time
/// keeps passages that happen at different times from smearing each other.
class ProgressProfile {
public:
    ProgressProfile(const Vec3& anchor, const Vec3& axis, double half_width, double bin = 0.5)
        : anchor_(anchor), axis_(axis.normalized()), half_width_(half_width), bin_(bin) {
        if (!(half_width > 0) || !(bin > 0)) throw std::invalid_argument("profile width and bin must be positive");
        bins_ = static_cast<int>(std::ceil(half_width / bin));
        sum_.assign(static_cast<std::size_t>(2 * bins_), 0.0);
        count_.assign(static_cast<std::size_t>(2 * bins_), 0);
    }

    void add(const RunRecord& rec, const MetricSeries& m) {
        for (std::size_t k = 0; k < rec.frames.size() && k < m.cosine.size(); ++k) {
            if (!m.cosine[k]) continue;
            const double s = (centroid(rec.frames[k].positions) - anchor_).dot(axis_);
            const int b = static_cast<int>(std::floor(s / bin_)) + bins_;
            if (b < 0 || b >= 2 * bins_) continue;
            sum_[static_cast<std::size_t>(b)] += *m.cosine[k];
            ++count_[static_cast<std::size_t>(b)];
        }
    }

    /// Fold in another profile with the same geometry.
    void merge(const ProgressProfile& o) {
        if (o.bins_ != bins_ || o.bin_ != bin_) throw std::invalid_argument("profile geometry mismatch");
        for (std::size_t i = 0; i < sum_.size(); ++i) {
            sum_[i] += o.sum_[i];
            count_[i] += o.count_[i];
        }
    }

    /// (bin centre offset, mean C) for every non-empty bin.
    std::vector<std::pair<double, double>> curve() const {
        std::vector<std::pair<double, double>> out;
        for (int b = 0; b < 2 * bins_; ++b) {
            const auto i = static_cast<std::size_t>(b);
            if (count_[i] > 0) out.emplace_back((b - bins_ + 0.5) * bin_, sum_[i] / count_[i]);
        }
        return out;
    }

    /// Lowest bin mean; nullopt when no sample fell inside the window.
    std::optional<double> trough() const {
        std::optional<double> best;
        for (const auto& [s, c] : curve()) {
            if (!best || c < *best) best = c;
        }
        return best;
    }

private:
    Vec3 anchor_;
    Vec3 axis_;
    double half_width_;
    double bin_;
    int bins_{0};
    std::vector<double> sum_;
    std::vector<long> count_;
};

}  // namespace goflock
