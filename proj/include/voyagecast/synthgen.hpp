#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "voyagecast/core_model.hpp"
#include "voyagecast/ingest.hpp"

namespace voyagecast::synth {

inline constexpr double kMinPortSeparation = 0.5;  // degrees
inline constexpr int kPlacementAttempts = 10'000;

struct Box {
    double lon_min = 14.0;
    double lon_max = 16.5;
    double lat_min = 35.0;
    double lat_max = 37.5;
};

struct World {
    std::vector<Port> ports;  // code = index, names PORT_000...
    std::uint64_t seed = 0;

    [[nodiscard]] PortRegistry registry() const;
};

/// Rejection sampling inside `box`; throws "box too small" when a port
/// cannot be placed within kPlacementAttempts draws.
World generate_world(int n_ports, const Box& box, std::uint64_t seed);

/// Compass bearing from a to b in degrees [0, 360), planar.
double bearing(const Port& a, const Port& b);
/// Smallest absolute difference between two bearings, in [0, 180].
double bearing_gap(double a, double b);

struct TripParams {
    double noise = 0.05;            // speed noise fraction
    int report_interval = 300;      // seconds
    double course_jitter = 1.0;     // degrees, uniform +-
    double position_jitter = 0.01;  // degrees, radius bound
    double draught_probability = 0.4;
    int ship_type = 70;
    double draught = 8.0;
    std::int64_t departure_time = 1'520'000'000;
};

/// Straight line from origin to dest. Each report advances at
/// base_speed*(1+u), u ~ U[-noise, noise]; one knot is taken as 1/60 degree
/// per hour. The final record sits on the destination at the arrival time.
Trip generate_trip(const World& world, const std::string& ship_id, int origin, int dest, double base_speed,
                   const TripParams& params, std::uint64_t seed, const std::string& trip_id = {});

struct Lane {
    int origin = 0;
    int dest = 0;
};

struct CorpusParams {
    TripParams trip{};
    double favored_probability = 0.8;
    int lanes_per_port = 2;
    int max_lanes = 12;
    double min_lane_separation = 10.0;  // degrees
    double late_rate = 0.0;             // per eligible record
    double disorder_rate = 0.0;         // per eligible record
};

/// Routes ships may sail. From each origin, only destinations whose bearing
/// is at least `min_lane_separation` away from every other port are used,
/// so (departure, course) identifies the destination. At most `max_lanes`
/// are kept so every lane is well represented in a desk-sized corpus.
std::vector<Lane> route_lanes(const World& world, const CorpusParams& params, std::uint64_t seed);

struct CorpusStats {
    std::size_t trips = 0;
    std::size_t records = 0;
    std::size_t missing_draught = 0;
    std::size_t injected_late = 0;
    std::size_t injected_out_of_order = 0;
};

struct Corpus {
    std::vector<AisRecord> records;  // file order
    CorpusStats stats;
};

/// Each ship draws a type, a cruise speed and two favored lanes; every trip
/// takes a favored lane with probability favored_probability, otherwise any
/// lane. Faults, when enabled, are extra rows inserted after a regular
/// record: a copy stamped after arrival, or one stamped before its
/// predecessor. They never touch first or last records or adjacent slots.
Corpus generate_corpus(const World& world, int n_ships, int trips_per_ship, const CorpusParams& params,
                       std::uint64_t seed);

/// Writes `ais.csv` and `ports.csv` into `dir`.
void write_corpus(const World& world, const Corpus& corpus, const std::filesystem::path& dir);

}  // namespace voyagecast::synth
