#include "voyagecast/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <unordered_map>

#include "voyagecast/core_model.hpp"
#include "voyagecast/csv.hpp"
#include "voyagecast/parallel.hpp"

namespace voyagecast::cluster {

double distance(GeoPoint a, GeoPoint b) { return std::hypot(a.lon - b.lon, a.lat - b.lat); }

namespace {

struct Cell {
    std::int64_t x;
    std::int64_t y;
    friend auto operator<=>(const Cell&, const Cell&) = default;
};

struct CellHash {
    std::size_t operator()(const Cell& c) const {
        return std::hash<std::int64_t>{}(c.x * 0x9e3779b97f4a7c15LL ^ c.y);
    }
};

/// Buckets points by bandwidth-sized cells for radius queries.
class GridIndex {
public:
    GridIndex(std::span<const GeoPoint> points, double cell) : points_(points), cell_(cell) {
        for (std::size_t i = 0; i < points.size(); ++i) buckets_[cell_of(points[i])].push_back(i);
    }

    [[nodiscard]] Cell cell_of(GeoPoint p) const {
        return {static_cast<std::int64_t>(std::floor(p.lon / cell_)), static_cast<std::int64_t>(std::floor(p.lat / cell_))};
    }

    /// Sum and count of points within `radius` (<= cell size) of `center`.
    void window(GeoPoint center, double radius, double& sum_lon, double& sum_lat, std::size_t& count) const {
        sum_lon = 0.0;
        sum_lat = 0.0;
        count = 0;
        const Cell c = cell_of(center);
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                const auto it = buckets_.find({c.x + dx, c.y + dy});
                if (it == buckets_.end()) continue;
                for (std::size_t i : it->second) {
                    if (distance(points_[i], center) <= radius) {
                        sum_lon += points_[i].lon;
                        sum_lat += points_[i].lat;
                        ++count;
                    }
                }
            }
        }
    }

    [[nodiscard]] std::vector<Cell> occupied() const {
        std::vector<Cell> cells;
        cells.reserve(buckets_.size());
        for (const auto& [cell, members] : buckets_) cells.push_back(cell);
        std::sort(cells.begin(), cells.end());
        return cells;
    }

private:
    std::span<const GeoPoint> points_;
    double cell_;
    std::unordered_map<Cell, std::vector<std::size_t>, CellHash> buckets_;
};

struct Mode {
    GeoPoint center;
    std::size_t support = 0;
};

}  // namespace

ClusterModel mean_shift(std::span<const GeoPoint> points, double bandwidth, std::optional<double> tolerance,
                        int max_iterations) {
    if (points.empty()) throw Error("mean_shift: no points");
    if (!(bandwidth > 0.0)) throw Error("mean_shift: bandwidth must be > 0");
    const double tol = tolerance.value_or(1e-4 * bandwidth);

    const GridIndex index(points, bandwidth);
    const std::vector<Cell> seeds = index.occupied();
    std::vector<Mode> modes(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t s) {
        GeoPoint x{(static_cast<double>(seeds[s].x) + 0.5) * bandwidth, (static_cast<double>(seeds[s].y) + 0.5) * bandwidth};
        std::size_t count = 0;
        for (int iter = 0; iter < max_iterations; ++iter) {
            double sum_lon = 0.0;
            double sum_lat = 0.0;
            index.window(x, bandwidth, sum_lon, sum_lat, count);
            if (count == 0) break;
            const GeoPoint next{sum_lon / static_cast<double>(count), sum_lat / static_cast<double>(count)};
            const double shift = distance(next, x);
            x = next;
            if (shift < tol) break;
        }
        double unused_lon = 0.0;
        double unused_lat = 0.0;
        index.window(x, bandwidth, unused_lon, unused_lat, count);
        modes[s] = {x, count};
    });

    std::erase_if(modes, [](const Mode& m) { return m.support == 0; });
    std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
        if (a.support != b.support) return a.support > b.support;
        if (a.center.lon != b.center.lon) return a.center.lon < b.center.lon;
        return a.center.lat < b.center.lat;
    });

    ClusterModel model;
    model.bandwidth = bandwidth;
    for (const Mode& m : modes) {
        const bool absorbed = std::any_of(model.centers.begin(), model.centers.end(),
                                          [&](GeoPoint kept) { return distance(kept, m.center) < bandwidth; });
        if (absorbed) continue;
        model.centers.push_back(m.center);
        model.support.push_back(m.support);
    }
    return model;
}

std::optional<int> assign_cluster(const ClusterModel& model, GeoPoint point) {
    std::optional<int> best;
    double best_distance = 0.0;
    for (std::size_t i = 0; i < model.centers.size(); ++i) {
        const double d = distance(model.centers[i], point);
        if (d <= model.bandwidth && (!best || d < best_distance)) {
            best = static_cast<int>(i);
            best_distance = d;
        }
    }
    return best;
}

void write_clusters(std::ostream& out, const ClusterModel& model) {
    out << "CLUSTER_ID,LON,LAT,SUPPORT\n";
    for (std::size_t i = 0; i < model.centers.size(); ++i) {
        out << i << ',' << csv::format_double(model.centers[i].lon) << ',' << csv::format_double(model.centers[i].lat)
            << ',' << model.support[i] << '\n';
    }
}

}  // namespace voyagecast::cluster
