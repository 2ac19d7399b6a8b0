#include "voyagecast/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "voyagecast/csv.hpp"
#include "voyagecast/parallel.hpp"

namespace voyagecast {

double duration_target(const AisRecord& record) {
    if (!record.arrival_time) throw Error("duration_target: record has no arrival time");
    return static_cast<double>(*record.arrival_time - record.timestamp) / 60.0;
}

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    const std::int64_t q = a / b;
    return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

struct CivilDate {
    std::int64_t year;
    int month;
    int day;
};

// Days since 1970-01-01 to proleptic Gregorian date (H. Hinnant's algorithm).
CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = floor_div(z, 146097);
    const std::int64_t doe = z - era * 146097;
    const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const std::int64_t mp = (5 * doy + 2) / 153;
    const int day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    const int month = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
    return {yoe + era * 400 + (month <= 2 ? 1 : 0), month, day};
}

bool is_leap(std::int64_t y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int day_of_year(const CivilDate& d) {
    static constexpr int cumulative[] = {0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334};
    return cumulative[d.month - 1] + d.day + (d.month > 2 && is_leap(d.year) ? 1 : 0);
}

// ISO weekday (1 = Monday) of 1 January, given day-of-year and weekday of some date in that year.
int jan1_weekday(int doy, int iso_weekday) {
    return static_cast<int>(((iso_weekday - 1 - (doy - 1)) % 7 + 7) % 7) + 1;
}

int iso_weeks_in_year(std::int64_t year, int jan1) {
    return (jan1 == 4 || (is_leap(year) && jan1 == 3)) ? 53 : 52;
}

}  // namespace

TimeFeatures time_features(std::int64_t timestamp) {
    const std::int64_t days = floor_div(timestamp, 86400);
    const std::int64_t seconds = timestamp - days * 86400;
    TimeFeatures t;
    t.hour_of_day = static_cast<int>(seconds / 3600);
    t.day_of_week = static_cast<int>(((days + 3) % 7 + 7) % 7);  // 1970-01-01 was a Thursday

    const CivilDate date = civil_from_days(days);
    const int doy = day_of_year(date);
    const int iso_weekday = t.day_of_week + 1;
    int week = (doy - iso_weekday + 10) / 7;
    if (week < 1) {
        const std::int64_t prev = date.year - 1;
        const int prev_len = is_leap(prev) ? 366 : 365;
        week = iso_weeks_in_year(prev, jan1_weekday(doy + prev_len, iso_weekday));
    } else if (week > iso_weeks_in_year(date.year, jan1_weekday(doy, iso_weekday))) {
        week = 1;
    }
    t.week_of_year = week;
    return t;
}

RegFeatures build_reg_features(const AisRecord& record, int destination_code, const PortRegistry& registry) {
    if (!registry.contains(destination_code)) {
        throw Error("build_reg_features: port code " + std::to_string(destination_code) + " not in registry");
    }
    const ClassFeatures base = class_features(record, registry);
    const Port& dest = registry.port(destination_code);
    const TimeFeatures t = time_features(record.timestamp);
    RegFeatures out{};
    std::copy(base.begin(), base.end(), out.begin());
    out[8] = static_cast<double>(destination_code);
    out[9] = dest.lon;
    out[10] = dest.lat;
    out[11] = t.hour_of_day;
    out[12] = t.day_of_week;
    out[13] = t.week_of_year;
    return out;
}

Prediction predict_tuple(const ModelBundle& bundle, const AisRecord& raw) {
    if (!bundle.fitted()) throw Error("predict_tuple: bundle is not fitted");
    const AisRecord record = clean_tuple(raw);
    const ClassFeatures features = class_features(record, bundle.registry());
    const int port = bundle.ensemble.predict(features).label;
    const RegFeatures reg = build_reg_features(record, port, bundle.registry());
    Prediction p;
    p.port_name = bundle.registry().decode(port);
    p.time_delta = neural::predict_duration(bundle.network, bundle.scaler, reg);
    p.eta = record.timestamp + std::llround(p.time_delta * 60.0);
    return p;
}

std::vector<Prediction> predict_batch(const ModelBundle& bundle, const std::vector<AisRecord>& records) {
    std::vector<Prediction> out(records.size());
    parallel_for(records.size(), [&](std::size_t i) { out[i] = predict_tuple(bundle, records[i]); });
    return out;
}

std::string format_prediction(const Prediction& p) {
    return csv::escape(p.port_name) + ',' + std::to_string(p.eta) + ',' + csv::format_fixed(p.time_delta, 2);
}

double Metrics::within(double minutes) const {
    for (const auto& [t, fraction] : eta_within) {
        if (t == minutes) return fraction;
    }
    throw Error("metrics: no eta_within bucket for " + csv::format_double(minutes) + " minutes");
}

Metrics compute_metrics(const std::vector<AisRecord>& records, const std::vector<Prediction>& predictions,
                        const std::vector<double>& thresholds) {
    if (records.empty()) throw Error("evaluate: no records");
    if (records.size() != predictions.size()) throw Error("evaluate: prediction count mismatch");
    Metrics m;
    m.count = records.size();
    std::vector<std::size_t> hits(thresholds.size(), 0);
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!r.arrival_port || !r.arrival_time) {
            throw Error("evaluate: record of ship " + r.ship_id + " has no arrival labels");
        }
        if (predictions[i].port_name == *r.arrival_port) ++m.port_hits;
        const double error = std::abs(static_cast<double>(predictions[i].eta - *r.arrival_time)) / 60.0;
        abs_sum += error;
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
            if (error <= thresholds[t]) ++hits[t];
        }
    }
    const auto n = static_cast<double>(m.count);
    m.port_accuracy = static_cast<double>(m.port_hits) / n;
    m.eta_mae = abs_sum / n;
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
        m.eta_within.emplace_back(thresholds[t], static_cast<double>(hits[t]) / n);
    }
    return m;
}

Metrics evaluate(const ModelBundle& bundle, const std::vector<AisRecord>& records,
                 std::vector<Prediction>* predictions) {
    if (records.empty()) throw Error("evaluate: no records");
    auto preds = predict_batch(bundle, records);
    Metrics m = compute_metrics(records, preds);
    if (predictions) *predictions = std::move(preds);
    return m;
}

void write_metrics_csv(std::ostream& out, const Metrics& m) {
    out << "metric,value\n";
    out << "count," << m.count << '\n';
    out << "port_accuracy," << csv::format_double(m.port_accuracy) << '\n';
    out << "eta_mae_minutes," << csv::format_double(m.eta_mae) << '\n';
    for (const auto& [t, fraction] : m.eta_within) {
        out << "eta_within_" << csv::format_double(t) << "," << csv::format_double(fraction) << '\n';
    }
}

void write_metrics_report(std::ostream& out, const Metrics& m) {
    out << "tuples evaluated     : " << m.count << '\n';
    out << "port accuracy        : " << csv::format_fixed(100.0 * m.port_accuracy, 2) << " %\n";
    out << "ETA MAE              : " << csv::format_fixed(m.eta_mae, 2) << " min\n";
    for (const auto& [t, fraction] : m.eta_within) {
        std::string label = "ETA within " + csv::format_double(t) + " min";
        label.resize(21, ' ');
        out << label << ": " << csv::format_fixed(100.0 * fraction, 2) << " %\n";
    }
}

ServeStats serve(const ModelBundle& bundle, std::istream& in, std::ostream& out, std::ostream& err) {
    ServeStats stats;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line == kAisHeader) continue;
        try {
            if (line.empty()) throw Error("empty line");
            const Prediction p = predict_tuple(bundle, parse_record(line));
            out << format_prediction(p) << '\n' << std::flush;
            ++stats.answered;
        } catch (const Error& e) {
            err << "ERROR," << line_no << ',' << csv::escape(e.what()) << '\n' << std::flush;
            ++stats.rejected;
        }
    }
    return stats;
}

TrainingTables build_tables(const std::vector<AisRecord>& records, const PortRegistry& registry) {
    TrainingTables t;
    for (const auto& r : records) {
        if (!r.arrival_port) throw Error("training record of ship " + r.ship_id + " lacks ARRIVAL_PORT");
        const int dest = registry.encode(*r.arrival_port);
        if (dest < 0) throw Error("arrival port '" + *r.arrival_port + "' is not in the port registry");
        t.class_x.append_row(class_features(r, registry));
        t.labels.push_back(dest);
        t.reg_x.append_row(build_reg_features(r, dest, registry));
        t.durations.push_back(duration_target(r));
    }
    return t;
}

namespace {

std::vector<AisRecord> records_of(const std::vector<Trip>& trips, const std::vector<std::string>& ids) {
    const std::unordered_set<std::string> wanted(ids.begin(), ids.end());
    std::vector<AisRecord> out;
    for (const auto& trip : trips) {
        if (!wanted.contains(trip.trip_id)) continue;
        out.insert(out.end(), trip.records.begin(), trip.records.end());
    }
    return out;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

TrainOutcome train_bundle(const std::vector<AisRecord>& cleaned, const PortRegistry& registry,
                          const TrainOptions& options) {
    if (registry.empty()) throw Error("train: empty port registry");
    const auto trips = segment_trips(cleaned);
    TrainOutcome outcome;
    outcome.split = split_by_trip(trips, options.seed);
    outcome.train_records = records_of(trips, outcome.split.train);
    outcome.test_records = records_of(trips, outcome.split.test);
    outcome.validation_records = records_of(trips, outcome.split.validation);
    if (outcome.test_records.empty() || outcome.validation_records.empty()) {
        throw Error("train: too few trips for non-empty test and validation splits");
    }

    const TrainingTables train = build_tables(outcome.train_records, registry);
    const TrainingTables test = build_tables(outcome.test_records, registry);

    auto start = std::chrono::steady_clock::now();
    ensemble::EnsembleConfig config = options.ensemble;
    if (options.grid_search) {
        ensemble::ParamGrid grid = options.grid;
        for (auto& p : grid.random_forest) p.config.seed = options.seed;
        for (auto& p : grid.extra_trees) p.config.seed = options.seed;
        outcome.grid =
            ensemble::grid_search(grid, train.class_x, train.labels, test.class_x, test.labels, registry.size());
        config = outcome.grid->best;
    }
    config.set_seed(options.seed);
    outcome.bundle.ensemble = ensemble::fit_voting_ensemble(train.class_x, train.labels, config, registry);
    outcome.ensemble_seconds = seconds_since(start);

    start = std::chrono::steady_clock::now();
    outcome.bundle.scaler = neural::fit_scaler(train.reg_x);
    neural::TrainConfig nn = options.network;
    nn.seed = options.seed;
    const auto fitted = neural::fit(neural::init_network(options.architecture, options.seed),
                                    neural::apply_scaler(outcome.bundle.scaler, train.reg_x), train.durations,
                                    neural::apply_scaler(outcome.bundle.scaler, test.reg_x), test.durations, nn);
    outcome.bundle.network = fitted.network;
    outcome.network_train_loss = fitted.train_loss;
    outcome.network_validation_loss = fitted.validation_loss;
    outcome.network_best_epoch = fitted.best_epoch;
    outcome.network_seconds = seconds_since(start);

    outcome.validation_metrics = evaluate(outcome.bundle, outcome.validation_records);
    return outcome;
}

}  // namespace voyagecast
