#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace voyagecast::cluster {

struct GeoPoint {
    double lon = 0.0;
    double lat = 0.0;

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Planar distance in degrees.
double distance(GeoPoint a, GeoPoint b);

struct ClusterModel {
    std::vector<GeoPoint> centers;
    std::vector<std::size_t> support;  // points within bandwidth of each center
    double bandwidth = 0.05;
};

inline constexpr double kDefaultBandwidth = 0.05;
inline constexpr int kDefaultMaxIterations = 300;

/// Flat-kernel mean shift seeded from the centres of occupied bandwidth-sized
/// grid cells. Modes closer than the bandwidth are merged, keeping the one
/// with more points in its window (ties: lower lon, then lat). Centers come
/// out in that keep order. `tolerance` defaults to 1e-4 * bandwidth.
ClusterModel mean_shift(std::span<const GeoPoint> points, double bandwidth = kDefaultBandwidth,
                        std::optional<double> tolerance = std::nullopt, int max_iterations = kDefaultMaxIterations);

/// Nearest center within the bandwidth (ties: lower index), or none.
std::optional<int> assign_cluster(const ClusterModel& model, GeoPoint point);

/// `CLUSTER_ID,LON,LAT,SUPPORT`.
void write_clusters(std::ostream& out, const ClusterModel& model);

}  // namespace voyagecast::cluster
