#include "voyagecast/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "voyagecast/rng.hpp"

namespace voyagecast::synth {

namespace {

constexpr double kDegreesPerKnotHour = 1.0 / 60.0;

/// Nearest double to x rounded at `decimals` places.
double round_to(double x, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(x * scale) / scale;
}

std::string numbered(const char* prefix, int n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%03d", prefix, n);
    return buf;
}

double wrap_degrees(double d) {
    d = std::fmod(d, 360.0);
    if (d < 0.0) d += 360.0;
    return d;
}

}  // namespace

PortRegistry World::registry() const {
    std::vector<PortRegistry::Entry> entries;
    entries.reserve(ports.size());
    for (const auto& p : ports) entries.push_back({p.name, p.lon, p.lat});
    return PortRegistry(std::move(entries));
}

World generate_world(int n_ports, const Box& box, std::uint64_t seed) {
    if (n_ports < 2) throw Error("generate_world: need at least 2 ports, got " + std::to_string(n_ports));
    if (!(box.lon_max > box.lon_min) || !(box.lat_max > box.lat_min)) throw Error("generate_world: empty box");
    World world;
    world.seed = seed;
    Rng rng(seed);
    for (int i = 0; i < n_ports; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
            const double lon = round_to(rng.uniform(box.lon_min, box.lon_max), 2);
            const double lat = round_to(rng.uniform(box.lat_min, box.lat_max), 2);
            placed = std::all_of(world.ports.begin(), world.ports.end(), [&](const Port& p) {
                return std::hypot(p.lon - lon, p.lat - lat) >= kMinPortSeparation;
            });
            if (placed) world.ports.push_back(Port{numbered("PORT_", i), i, lon, lat});
        }
        if (!placed) throw Error("box too small");
    }
    return world;
}

double bearing(const Port& a, const Port& b) {
    return wrap_degrees(std::atan2(b.lon - a.lon, b.lat - a.lat) * 180.0 / std::numbers::pi);
}

double bearing_gap(double a, double b) {
    const double d = std::fabs(wrap_degrees(a - b));
    return std::min(d, 360.0 - d);
}

Trip generate_trip(const World& world, const std::string& ship_id, int origin, int dest, double base_speed,
                   const TripParams& params, std::uint64_t seed, const std::string& trip_id) {
    const auto n = static_cast<int>(world.ports.size());
    if (origin < 0 || origin >= n || dest < 0 || dest >= n) throw Error("generate_trip: port index out of range");
    if (origin == dest) throw Error("generate_trip: origin equals destination");
    if (!(base_speed > 0.0)) throw Error("generate_trip: base speed must be > 0");
    if (params.report_interval <= 0) throw Error("generate_trip: report interval must be > 0");

    const Port& from = world.ports[static_cast<std::size_t>(origin)];
    const Port& to = world.ports[static_cast<std::size_t>(dest)];
    const double total = std::hypot(to.lon - from.lon, to.lat - from.lat);
    const double course = bearing(from, to);
    Rng rng(seed);

    Trip trip;
    trip.trip_id = trip_id.empty() ? ship_id + "-" + std::to_string(seed % 1'000'000) : trip_id;
    trip.arrival_port = to.name;

    auto make = [&](double travelled, double speed, std::int64_t ts) {
        const double f = travelled / total;
        const double r = params.position_jitter * rng.uniform();
        const double theta = 2.0 * std::numbers::pi * rng.uniform();
        AisRecord rec;
        rec.ship_id = ship_id;
        rec.ship_type = params.ship_type;
        rec.speed = round_to(speed, 1);
        rec.lon = round_to(from.lon + f * (to.lon - from.lon) + r * std::cos(theta), 4);
        rec.lat = round_to(from.lat + f * (to.lat - from.lat) + r * std::sin(theta), 4);
        rec.course = round_to(wrap_degrees(course + rng.uniform(-params.course_jitter, params.course_jitter)), 1);
        if (rec.course >= 360.0) rec.course -= 360.0;
        rec.heading = rec.course;
        rec.timestamp = ts;
        rec.departure_port = from.name;
        if (rng.bernoulli(params.draught_probability)) rec.reported_draught = params.draught;
        rec.arrival_port = to.name;
        rec.trip_id = trip.trip_id;
        return rec;
    };

    double travelled = 0.0;
    std::int64_t ts = params.departure_time;
    const double hours_per_report = params.report_interval / 3600.0;
    while (true) {
        const double speed = base_speed * (1.0 + rng.uniform(-params.noise, params.noise));
        const double step = speed * kDegreesPerKnotHour * hours_per_report;
        if (travelled + step >= total) {
            // Arrive part-way through this interval.
            const double seconds = (total - travelled) / (speed * kDegreesPerKnotHour) * 3600.0;
            trip.records.push_back(make(travelled, speed, ts));
            ts += std::max<std::int64_t>(1, std::llround(seconds));
            trip.records.push_back(make(total, speed, ts));
            break;
        }
        trip.records.push_back(make(travelled, speed, ts));
        travelled += step;
        ts += params.report_interval;
    }
    trip.arrival_time = ts;
    for (auto& r : trip.records) r.arrival_time = ts;
    return trip;
}

std::vector<Lane> route_lanes(const World& world, const CorpusParams& params, std::uint64_t seed) {
    if (params.max_lanes < 2 || params.lanes_per_port < 1) throw Error("route_lanes: need max_lanes >= 2 and lanes_per_port >= 1");
    Rng rng(splitmix64(seed ^ 0x4c414e45ULL));
    std::vector<Lane> lanes;
    const auto n = static_cast<int>(world.ports.size());
    for (int o = 0; o < n; ++o) {
        std::vector<int> eligible;
        for (int d = 0; d < n; ++d) {
            if (d == o) continue;
            const double b = bearing(world.ports[o], world.ports[d]);
            bool distinct = true;
            for (int other = 0; other < n && distinct; ++other) {
                if (other == o || other == d) continue;
                distinct = bearing_gap(b, bearing(world.ports[o], world.ports[other])) >= params.min_lane_separation;
            }
            if (distinct) eligible.push_back(d);
        }
        rng.shuffle(std::span<int>(eligible));
        const auto keep = std::min<std::size_t>(eligible.size(), static_cast<std::size_t>(params.lanes_per_port));
        for (std::size_t i = 0; i < keep; ++i) lanes.push_back({o, eligible[i]});
    }
    rng.shuffle(std::span<Lane>(lanes));
    if (lanes.size() > static_cast<std::size_t>(params.max_lanes)) lanes.resize(static_cast<std::size_t>(params.max_lanes));
    std::sort(lanes.begin(), lanes.end(),
              [](const Lane& a, const Lane& b) { return a.origin != b.origin ? a.origin < b.origin : a.dest < b.dest; });
    if (lanes.size() < 2) throw Error("world has fewer than 2 usable lanes; try another seed or more ports");
    return lanes;
}

Corpus generate_corpus(const World& world, int n_ships, int trips_per_ship, const CorpusParams& params,
                       std::uint64_t seed) {
    if (world.ports.size() < 2) throw Error("generate_corpus: world needs at least 2 ports");
    if (n_ships <= 0 || trips_per_ship <= 0) throw Error("generate_corpus: ship and trip counts must be > 0");
    const std::vector<Lane> lanes = route_lanes(world, params, seed);
    static constexpr int kShipTypes[] = {60, 70, 80, 90};
    static constexpr double kTypeSpeed[] = {16.0, 14.0, 12.0, 10.0};
    constexpr std::int64_t kEpochStart = 1'519'862'400;  // 2018-03-01 00:00 UTC
    constexpr std::int64_t kSpan = 60LL * 86'400;

    Corpus corpus;
    Rng rng(seed);
    for (int s = 0; s < n_ships; ++s) {
        const std::string ship_id = numbered("SHIP_", s);
        const auto type = static_cast<std::size_t>(rng.below(4));
        const double base_speed = kTypeSpeed[type] * rng.uniform(0.98, 1.02);
        const double draught = round_to(rng.uniform(4.0, 12.0), 1);
        const auto fav_a = static_cast<std::size_t>(rng.below(lanes.size()));
        auto fav_b = static_cast<std::size_t>(rng.below(lanes.size() - 1));
        if (fav_b >= fav_a) ++fav_b;

        for (int t = 0; t < trips_per_ship; ++t) {
            std::size_t lane;
            if (rng.bernoulli(params.favored_probability)) {
                lane = rng.bernoulli(0.5) ? fav_a : fav_b;
            } else {
                lane = static_cast<std::size_t>(rng.below(lanes.size()));
            }
            TripParams tp = params.trip;
            tp.ship_type = kShipTypes[type];
            tp.draught = draught;
            tp.departure_time = kEpochStart + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(kSpan)));
            const std::uint64_t trip_seed = splitmix64(seed ^ (static_cast<std::uint64_t>(s) << 20) ^ static_cast<std::uint64_t>(t));
            Trip trip = generate_trip(world, ship_id, lanes[lane].origin, lanes[lane].dest, base_speed, tp, trip_seed,
                                      ship_id + "-T" + numbered("", t));
            ++corpus.stats.trips;

            const std::size_t last = trip.records.size() - 1;
            bool previous_faulty = false;
            for (std::size_t k = 0; k <= last; ++k) {
                const AisRecord& rec = trip.records[k];
                corpus.records.push_back(rec);
                const bool eligible = k > 0 && k + 1 < last && !previous_faulty;
                previous_faulty = false;
                if (!eligible) continue;
                if (params.late_rate > 0.0 && rng.bernoulli(params.late_rate)) {
                    AisRecord late = rec;
                    late.timestamp = trip.arrival_time + tp.report_interval * static_cast<std::int64_t>(1 + rng.below(6));
                    corpus.records.push_back(std::move(late));
                    ++corpus.stats.injected_late;
                    previous_faulty = true;
                } else if (params.disorder_rate > 0.0 && rng.bernoulli(params.disorder_rate)) {
                    AisRecord stale = rec;
                    stale.timestamp = rec.timestamp - tp.report_interval / 2 - 1;
                    corpus.records.push_back(std::move(stale));
                    ++corpus.stats.injected_out_of_order;
                    previous_faulty = true;
                }
            }
        }
    }
    corpus.stats.records = corpus.records.size();
    corpus.stats.missing_draught = static_cast<std::size_t>(std::count_if(
        corpus.records.begin(), corpus.records.end(), [](const AisRecord& r) { return !r.reported_draught; }));
    return corpus;
}

void write_corpus(const World& world, const Corpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "ais.csv", std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + (dir / "ais.csv").string());
        write_csv(out, corpus.records);
        if (!out) throw Error("cannot write " + (dir / "ais.csv").string());
    }
    std::ofstream out(dir / "ports.csv", std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + (dir / "ports.csv").string());
    write_port_registry(out, world.registry());
    if (!out) throw Error("cannot write " + (dir / "ports.csv").string());
}

}  // namespace voyagecast::synth
