#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "voyagecast/ingest.hpp"
#include "voyagecast/pipeline.hpp"
#include "voyagecast/synthgen.hpp"

using namespace voyagecast;
using namespace voyagecast::synth;

TEST_CASE("worlds honour separation and seeds") {
    const World two = generate_world(2, Box{}, 1);
    REQUIRE(two.ports.size() == 2);
    CHECK(std::hypot(two.ports[0].lon - two.ports[1].lon, two.ports[0].lat - two.ports[1].lat) >= 0.5);
    CHECK(two.ports[0].name == "PORT_000");

    const World a = generate_world(10, Box{0, 10, 30, 40}, 9);
    const World b = generate_world(10, Box{0, 10, 30, 40}, 9);
    CHECK(a.ports == b.ports);
    for (std::size_t i = 0; i < a.ports.size(); ++i) {
        CHECK(a.ports[i].lon >= 0.0);
        CHECK(a.ports[i].lon <= 10.0);
        for (std::size_t j = i + 1; j < a.ports.size(); ++j) {
            CHECK(std::hypot(a.ports[i].lon - a.ports[j].lon, a.ports[i].lat - a.ports[j].lat) >= 0.5);
        }
    }
    CHECK(a.registry().size() == 10);
    CHECK_THROWS_WITH_AS(generate_world(50, Box{0, 1, 0, 1}, 1), "box too small", Error);
    CHECK_THROWS_AS(generate_world(1, Box{}, 1), Error);
}

TEST_CASE("noise-free trip is linear in time") {
    const World w = generate_world(4, Box{}, 2);
    TripParams p;
    p.noise = 0.0;
    p.course_jitter = 0.0;
    p.position_jitter = 0.0;
    const Trip t = generate_trip(w, "S", 0, 1, 12.0, p, 5, "S-T0");
    REQUIRE(t.records.size() >= 3);
    const std::size_t last = t.records.size() - 1;
    for (std::size_t k = 0; k + 1 < last; ++k) {
        CHECK(duration_target(t.records[k]) - duration_target(t.records[k + 1]) == doctest::Approx(5.0));
    }
    CHECK(t.records.back().timestamp == t.arrival_time);
    for (const auto& r : t.records) {
        CHECK(r.trip_id == "S-T0");
        CHECK(r.arrival_port == w.ports[1].name);
        CHECK(r.arrival_time == t.arrival_time);
        CHECK(r.heading == r.course);
    }
    const double expected = oracle::compass(w.ports[1].lon - w.ports[0].lon, w.ports[1].lat - w.ports[0].lat);
    CHECK(oracle::angle_between(t.records[0].course, expected) <= 0.051);
}

TEST_CASE("jittered trip endpoints and determinism") {
    const World w = generate_world(4, Box{}, 2);
    TripParams p;
    p.noise = 0.1;
    const Trip t = generate_trip(w, "S", 2, 3, 14.0, p, 8, "S-T1");
    const auto& from = w.ports[2];
    const auto& to = w.ports[3];
    CHECK(std::hypot(t.records.front().lon - from.lon, t.records.front().lat - from.lat) <= 0.01 + 1e-4);
    CHECK(std::hypot(t.records.back().lon - to.lon, t.records.back().lat - to.lat) <= 0.02);
    const Trip again = generate_trip(w, "S", 2, 3, 14.0, p, 8, "S-T1");
    CHECK(again.records == t.records);
    for (const auto& r : t.records) {
        CHECK(r.speed >= 14.0 * 0.9 - 0.05);
        CHECK(r.speed <= 14.0 * 1.1 + 0.05);
    }
    CHECK_THROWS_AS(generate_trip(w, "S", 2, 3, 0.0, p, 8), Error);
    CHECK_THROWS_AS(generate_trip(w, "S", 2, 2, 10.0, p, 8), Error);
}

TEST_CASE("corpus counts, closed world and clean pass") {
    const World w = generate_world(10, Box{}, 4);
    const Corpus c = generate_corpus(w, 10, 5, CorpusParams{}, 4);
    std::set<std::string> trips;
    const auto reg = w.registry();
    for (const auto& r : c.records) {
        trips.insert(r.trip_id);
        CHECK(reg.encode(*r.arrival_port) >= 0);
    }
    CHECK(trips.size() == 50);
    CHECK(c.stats.trips == 50);
    const auto cleaned = clean(c.records);
    CHECK(cleaned.report.dropped() == 0);
    CHECK(cleaned.report.draught_filled == c.stats.missing_draught);
    const double missing = static_cast<double>(c.stats.missing_draught) / static_cast<double>(c.stats.records);
    CHECK(missing == doctest::Approx(0.6).epsilon(0.05));
}

TEST_CASE("injected faults match the clean report") {
    const World w = generate_world(8, Box{}, 5);
    CorpusParams p;
    p.late_rate = 0.03;
    p.disorder_rate = 0.03;
    const Corpus c = generate_corpus(w, 6, 4, p, 5);
    CHECK(c.stats.injected_late > 0);
    CHECK(c.stats.injected_out_of_order > 0);
    const auto cleaned = clean(c.records);
    CHECK(cleaned.report.dropped_after_arrival == c.stats.injected_late);
    CHECK(cleaned.report.dropped_out_of_order == c.stats.injected_out_of_order);
    CHECK(cleaned.report.draught_filled == c.stats.missing_draught);
    CHECK(cleaned.records.size() == c.records.size() - c.stats.injected_late - c.stats.injected_out_of_order);
}

TEST_CASE("departure plus bearing recovers the destination") {
    const World w = generate_world(10, Box{}, 7);
    const Corpus c = generate_corpus(w, 20, 5, CorpusParams{}, 7);
    std::size_t hits = 0;
    for (const auto& r : c.records) {
        const Port* origin = nullptr;
        for (const auto& p : w.ports) {
            if (p.name == r.departure_port) origin = &p;
        }
        REQUIRE(origin != nullptr);
        const Port* best = nullptr;
        double best_gap = 1e9;
        for (const auto& p : w.ports) {
            if (&p == origin) continue;
            const double gap = oracle::angle_between(r.course, oracle::compass(p.lon - origin->lon, p.lat - origin->lat));
            if (gap < best_gap) {
                best_gap = gap;
                best = &p;
            }
        }
        hits += best->name == *r.arrival_port;
    }
    CHECK(static_cast<double>(hits) / static_cast<double>(c.records.size()) >= 0.99);
}

TEST_CASE("lanes are distinct by bearing") {
    const World w = generate_world(10, Box{}, 7);
    const CorpusParams p;
    const auto lanes = route_lanes(w, p, 7);
    CHECK(lanes.size() >= 2);
    CHECK(lanes.size() <= static_cast<std::size_t>(p.max_lanes));
    for (const auto& l : lanes) CHECK(l.origin != l.dest);
}
