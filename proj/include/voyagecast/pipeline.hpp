#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "voyagecast/core_model.hpp"
#include "voyagecast/ensemble.hpp"
#include "voyagecast/ingest.hpp"
#include "voyagecast/neural.hpp"

namespace voyagecast {

/// (arrival_time - timestamp) / 60.
double duration_target(const AisRecord& record);

struct TimeFeatures {
    int hour_of_day = 0;
    int day_of_week = 0;   // 0 = Monday
    int week_of_year = 1;  // ISO 8601

    friend bool operator==(const TimeFeatures&, const TimeFeatures&) = default;
};

TimeFeatures time_features(std::int64_t timestamp);

RegFeatures build_reg_features(const AisRecord& record, int destination_code, const PortRegistry& registry);

inline constexpr const char* kBundleVersion = "v1";

struct ModelBundle {
    std::string version = kBundleVersion;
    ensemble::VotingEnsemble ensemble;
    neural::Network network;
    neural::Scaler scaler;

    [[nodiscard]] const PortRegistry& registry() const { return ensemble.registry; }
    [[nodiscard]] bool fitted() const {
        return !registry().empty() && !network.layers.empty() && scaler.fitted() && !ensemble.random_forest.trees.empty();
    }
};

/// Cleans the tuple (draught fill, rounding), predicts the destination with
/// the ensemble, then the remaining minutes with the network fed the
/// predicted port. eta = timestamp + round(60 * delta).
Prediction predict_tuple(const ModelBundle& bundle, const AisRecord& record);

/// Same results as calling predict_tuple on each record in turn.
std::vector<Prediction> predict_batch(const ModelBundle& bundle, const std::vector<AisRecord>& records);

/// `PORT,ETA_EPOCH_SECONDS,DELTA_MINUTES` with two decimals on the delta.
std::string format_prediction(const Prediction& p);

inline const std::vector<double> kEtaThresholds = {5.0, 10.0, 20.0, 60.0};

struct Metrics {
    std::size_t count = 0;
    std::size_t port_hits = 0;
    double port_accuracy = 0.0;
    double eta_mae = 0.0;  // minutes
    std::vector<std::pair<double, double>> eta_within;  // (minutes, fraction)

    [[nodiscard]] double within(double minutes) const;
};

/// Scores predictions against the arrival labels of `records`.
Metrics compute_metrics(const std::vector<AisRecord>& records, const std::vector<Prediction>& predictions,
                        const std::vector<double>& thresholds = kEtaThresholds);

Metrics evaluate(const ModelBundle& bundle, const std::vector<AisRecord>& records,
                 std::vector<Prediction>* predictions = nullptr);

void write_metrics_csv(std::ostream& out, const Metrics& m);
void write_metrics_report(std::ostream& out, const Metrics& m);

/// Writes `VERSION` and `model.json` into `dir`.
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir);
/// Throws Error naming the offending field on version mismatch or corruption.
ModelBundle load_bundle(const std::filesystem::path& dir);

struct ServeStats {
    std::size_t answered = 0;
    std::size_t rejected = 0;
};

/// Line protocol: each canonical CSV data line in, one prediction line out
/// (flushed). Bad lines produce `ERROR,<line_no>,<reason>` on `err` and
/// processing continues. A header line is skipped.
ServeStats serve(const ModelBundle& bundle, std::istream& in, std::ostream& out, std::ostream& err);

/// Feature tables for the two learners.
struct TrainingTables {
    Matrix class_x;
    std::vector<int> labels;
    Matrix reg_x;  // built with the true destination
    std::vector<double> durations;
};

TrainingTables build_tables(const std::vector<AisRecord>& records, const PortRegistry& registry);

struct TrainOptions {
    std::uint64_t seed = 7;
    bool grid_search = true;
    ensemble::ParamGrid grid = ensemble::default_grid();
    ensemble::EnsembleConfig ensemble{};
    neural::TrainConfig network{};
    std::vector<int> architecture = neural::kDefaultArchitecture;
};

struct TrainOutcome {
    ModelBundle bundle;
    TripSplit split;
    std::vector<AisRecord> train_records;
    std::vector<AisRecord> test_records;
    std::vector<AisRecord> validation_records;
    std::optional<ensemble::GridResult> grid;
    std::vector<double> network_train_loss;
    std::vector<double> network_validation_loss;
    int network_best_epoch = 0;
    Metrics validation_metrics;
    double ensemble_seconds = 0.0;
    double network_seconds = 0.0;
};

/// Segments cleaned records into trips, splits 70/15/15 by ship, tunes and
/// fits the ensemble and the network on the train split (model selection and
/// early stopping use the test split), and scores the validation split.
TrainOutcome train_bundle(const std::vector<AisRecord>& cleaned, const PortRegistry& registry,
                          const TrainOptions& options);

}  // namespace voyagecast
