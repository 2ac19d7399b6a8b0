#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "voyagecast/core_model.hpp"

namespace voyagecast {

inline constexpr std::string_view kAisHeader =
    "SHIP_ID,SHIPTYPE,SPEED,LON,LAT,COURSE,HEADING,TIMESTAMP,DEPARTURE_PORT_NAME,REPORTED_DRAUGHT,"
    "ARRIVAL_TIME,ARRIVAL_PORT,TRIP_ID";

struct RowError {
    std::size_t line = 0;
    std::string reason;
};

struct ParseResult {
    std::vector<AisRecord> records;
    std::vector<RowError> errors;
};

/// Parses one data line of the canonical AIS CSV; throws Error with the
/// reason (e.g. "LAT not numeric") on malformed input.
AisRecord parse_record(std::string_view line);

/// Throws Error if the header line is missing or wrong. Malformed rows are
/// collected in `errors`, never dropped silently.
ParseResult parse_csv(std::istream& in);
ParseResult load_csv(const std::string& path);

std::string format_record(const AisRecord& record);
void write_csv(std::ostream& out, const std::vector<AisRecord>& records);

/// Half away from zero.
double round_coordinate(double degrees);

struct CleanReport {
    std::size_t draught_filled = 0;
    std::size_t dropped_after_arrival = 0;
    std::size_t dropped_out_of_order = 0;

    [[nodiscard]] std::size_t dropped() const { return dropped_after_arrival + dropped_out_of_order; }
    friend bool operator==(const CleanReport&, const CleanReport&) = default;
};

struct CleanResult {
    std::vector<AisRecord> records;
    CleanReport report;
};

/// Fills missing draught with 0, drops records stamped after their arrival
/// time, drops records stamped before the previously accepted record of the
/// same trip (file order), and rounds lon/lat to two decimals. Records
/// without a trip id are grouped by ship id for the ordering rule.
CleanResult clean(std::vector<AisRecord> records);

/// The subset of `clean` that needs no trip context: draught fill and
/// coordinate rounding.
AisRecord clean_tuple(AisRecord record);

struct Trip {
    std::string trip_id;
    std::vector<AisRecord> records;
    std::string arrival_port;
    std::int64_t arrival_time = 0;

    [[nodiscard]] const std::string& ship_id() const { return records.front().ship_id; }
};

/// One trip per distinct trip id, in order of first appearance; records are
/// stably sorted by timestamp.
std::vector<Trip> segment_trips(const std::vector<AisRecord>& records);

struct TripSplit {
    std::vector<std::string> train;
    std::vector<std::string> test;
    std::vector<std::string> validation;
};

struct SplitTargets {
    std::size_t train = 0;
    std::size_t test = 0;
    std::size_t validation = 0;
};

/// floor(0.70 N) / ceil(0.15 N) / remainder.
SplitTargets split_targets(std::size_t n_trips);

/// Assigns whole ships to splits so no ship appears in two of them. Ships are
/// shuffled under `seed`, then each goes to the split furthest below its trip
/// target (ties: train, test, validation). With one trip per ship the counts
/// hit the targets exactly; otherwise they are off by less than the largest
/// per-ship trip count.
TripSplit split_by_trip(const std::vector<Trip>& trips, std::uint64_t seed);

}  // namespace voyagecast
