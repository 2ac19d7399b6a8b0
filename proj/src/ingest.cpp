#include "voyagecast/ingest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <unordered_map>

#include "voyagecast/csv.hpp"
#include "voyagecast/rng.hpp"

namespace voyagecast {

namespace {

constexpr std::size_t kColumnCount = 13;

double require_double(const std::string& text, const char* column) {
    const auto v = csv::parse_double(text);
    if (!v) throw Error(std::string(column) + " not numeric");
    return *v;
}

std::int64_t require_int(const std::string& text, const char* column) {
    const auto v = csv::parse_int(text);
    if (!v) throw Error(std::string(column) + " not an integer");
    return *v;
}

void require_range(double value, double lo, double hi, const char* column) {
    if (value < lo || value > hi) throw Error(std::string(column) + " out of range");
}

std::string optional_text(const std::optional<double>& v) { return v ? csv::format_double(*v) : ""; }

}  // namespace

AisRecord parse_record(std::string_view line) {
    const auto f = csv::split_line(line);
    if (f.size() != kColumnCount) {
        throw Error("expected " + std::to_string(kColumnCount) + " fields, got " + std::to_string(f.size()));
    }
    AisRecord r;
    r.ship_id = f[0];
    if (r.ship_id.empty()) throw Error("SHIP_ID empty");
    r.ship_type = static_cast<int>(require_int(f[1], "SHIPTYPE"));
    r.speed = require_double(f[2], "SPEED");
    if (r.speed < 0) throw Error("SPEED negative");
    r.lon = require_double(f[3], "LON");
    require_range(r.lon, -180.0, 180.0, "LON");
    r.lat = require_double(f[4], "LAT");
    require_range(r.lat, -90.0, 90.0, "LAT");
    r.course = require_double(f[5], "COURSE");
    r.heading = require_double(f[6], "HEADING");
    r.timestamp = require_int(f[7], "TIMESTAMP");
    if (r.timestamp <= 0) throw Error("TIMESTAMP not positive");
    r.departure_port = f[8];
    if (!f[9].empty()) r.reported_draught = require_double(f[9], "REPORTED_DRAUGHT");
    if (!f[10].empty()) r.arrival_time = require_int(f[10], "ARRIVAL_TIME");
    if (!f[11].empty()) r.arrival_port = f[11];
    r.trip_id = f[12];
    return r;
}

ParseResult parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw Error("missing header");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kAisHeader) {
        throw Error("missing header: expected " + std::string(kAisHeader));
    }
    ParseResult result;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        try {
            result.records.push_back(parse_record(line));
        } catch (const Error& e) {
            result.errors.push_back({line_no, e.what()});
        }
    }
    return result;
}

ParseResult load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return parse_csv(in);
}

std::string format_record(const AisRecord& r) {
    return csv::join({r.ship_id, std::to_string(r.ship_type), csv::format_double(r.speed),
                      csv::format_double(r.lon), csv::format_double(r.lat), csv::format_double(r.course),
                      csv::format_double(r.heading), std::to_string(r.timestamp), r.departure_port,
                      optional_text(r.reported_draught), r.arrival_time ? std::to_string(*r.arrival_time) : "",
                      r.arrival_port.value_or(""), r.trip_id});
}

void write_csv(std::ostream& out, const std::vector<AisRecord>& records) {
    out << kAisHeader << '\n';
    for (const auto& r : records) out << format_record(r) << '\n';
}

double round_coordinate(double degrees) { return std::round(degrees * 100.0) / 100.0; }

AisRecord clean_tuple(AisRecord record) {
    if (!record.reported_draught) record.reported_draught = 0.0;
    record.lon = round_coordinate(record.lon);
    record.lat = round_coordinate(record.lat);
    return record;
}

CleanResult clean(std::vector<AisRecord> records) {
    CleanResult result;
    result.records.reserve(records.size());
    std::unordered_map<std::string, std::int64_t> last_accepted;
    for (auto& r : records) {
        // Counted over every input row, dropped ones included.
        if (!r.reported_draught) ++result.report.draught_filled;
        if (r.arrival_time && r.timestamp > *r.arrival_time) {
            ++result.report.dropped_after_arrival;
            continue;
        }
        const std::string& key = r.trip_id.empty() ? r.ship_id : r.trip_id;
        const auto it = last_accepted.find(key);
        if (it != last_accepted.end() && r.timestamp < it->second) {
            ++result.report.dropped_out_of_order;
            continue;
        }
        last_accepted[key] = r.timestamp;
        result.records.push_back(clean_tuple(std::move(r)));
    }
    return result;
}

std::vector<Trip> segment_trips(const std::vector<AisRecord>& records) {
    std::vector<Trip> trips;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& r : records) {
        if (r.trip_id.empty()) {
            throw Error("record of ship " + r.ship_id + " at " + std::to_string(r.timestamp) + " has no TRIP_ID");
        }
        if (!r.arrival_port || !r.arrival_time) {
            throw Error("trip " + r.trip_id + ": record without arrival label");
        }
        auto [it, inserted] = index.emplace(r.trip_id, trips.size());
        if (inserted) {
            trips.push_back(Trip{r.trip_id, {}, *r.arrival_port, *r.arrival_time});
        }
        Trip& trip = trips[it->second];
        if (trip.arrival_port != *r.arrival_port || trip.arrival_time != *r.arrival_time) {
            throw Error("trip " + r.trip_id + ": inconsistent arrival labels");
        }
        trip.records.push_back(r);
    }
    for (auto& trip : trips) {
        std::stable_sort(trip.records.begin(), trip.records.end(),
                         [](const AisRecord& a, const AisRecord& b) { return a.timestamp < b.timestamp; });
    }
    return trips;
}

SplitTargets split_targets(std::size_t n) {
    SplitTargets t;
    t.train = (n * 70) / 100;
    t.test = (n * 15 + 99) / 100;
    t.test = std::min(t.test, n - t.train);
    t.validation = n - t.train - t.test;
    return t;
}

TripSplit split_by_trip(const std::vector<Trip>& trips, std::uint64_t seed) {
    if (trips.size() < 3) {
        throw Error("split_by_trip: need at least 3 trips, got " + std::to_string(trips.size()));
    }
    // Ships in order of first appearance, each with its trips.
    std::vector<std::vector<std::size_t>> ships;
    std::unordered_map<std::string, std::size_t> ship_index;
    for (std::size_t i = 0; i < trips.size(); ++i) {
        auto [it, inserted] = ship_index.emplace(trips[i].ship_id(), ships.size());
        if (inserted) ships.emplace_back();
        ships[it->second].push_back(i);
    }
    std::vector<std::size_t> order(ships.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));

    const SplitTargets targets = split_targets(trips.size());
    const std::array<std::int64_t, 3> target = {static_cast<std::int64_t>(targets.train),
                                                static_cast<std::int64_t>(targets.test),
                                                static_cast<std::int64_t>(targets.validation)};
    std::array<std::int64_t, 3> filled = {0, 0, 0};
    TripSplit split;
    std::array<std::vector<std::string>*, 3> buckets = {&split.train, &split.test, &split.validation};
    for (const std::size_t s : order) {
        std::size_t best = 0;
        for (std::size_t b = 1; b < 3; ++b) {
            if (target[b] - filled[b] > target[best] - filled[best]) best = b;
        }
        for (const std::size_t t : ships[s]) buckets[best]->push_back(trips[t].trip_id);
        filled[best] += static_cast<std::int64_t>(ships[s].size());
    }
    return split;
}

}  // namespace voyagecast
