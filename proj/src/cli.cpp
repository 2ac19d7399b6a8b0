#include "voyagecast/cli.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "voyagecast/cluster.hpp"
#include "voyagecast/csv.hpp"
#include "voyagecast/ingest.hpp"
#include "voyagecast/parallel.hpp"
#include "voyagecast/pipeline.hpp"
#include "voyagecast/rng.hpp"
#include "voyagecast/synthgen.hpp"

namespace voyagecast::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("sha256: digest init failed");
    }
    char buffer[1 << 16];
    while (in) {
        in.read(buffer, sizeof buffer);
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buffer, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_DigestFinal_ex(ctx, digest, &length);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < length; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
    return hex.str();
}

namespace {

class Stopwatch {
public:
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

/// One manifest per run, written beside the outputs.
class Manifest {
public:
    Manifest(std::string subcommand, const std::vector<std::string>& args) {
        doc_["subcommand"] = std::move(subcommand);
        doc_["argv"] = args;
        doc_["flags"] = json::object();
        doc_["seeds"] = json::object();
        doc_["rng"] = Rng::kName;
        doc_["threads"] = thread_count();
        doc_["inputs"] = json::array();
        doc_["artifacts"] = json::array();
        doc_["timings_seconds"] = json::object();
    }

    template <typename T>
    void flag(const std::string& name, const T& value) { doc_["flags"][name] = value; }
    void seed(const std::string& name, std::uint64_t value) { doc_["seeds"][name] = value; }
    void input(const fs::path& path) {
        doc_["inputs"].push_back({{"path", path.string()}, {"sha256", sha256_file(path)}});
    }
    void artifact(const fs::path& path) {
        doc_["artifacts"].push_back({{"path", path.string()}, {"sha256", sha256_file(path)}});
    }
    void timing(const std::string& name, double seconds) { doc_["timings_seconds"][name] = seconds; }
    json& extra() { return doc_; }

    void write(const fs::path& path) const {
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << doc_.dump(2) << '\n';
        if (!out) throw Error("cannot write " + path.string());
    }

private:
    json doc_;
};

template <typename Fn>
void write_file(const fs::path& path, Fn&& body) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    body(out);
    if (!out) throw Error("cannot write " + path.string());
}

std::vector<AisRecord> load_records(const fs::path& path, std::ostream& err) {
    if (!fs::exists(path)) throw Error("cannot open " + path.string());
    ParseResult parsed = load_csv(path.string());
    for (const auto& e : parsed.errors) err << "warning: " << path.string() << ":" << e.line << ": " << e.reason << '\n';
    return std::move(parsed.records);
}

void report_clean(const CleanReport& r, std::ostream& out) {
    out << "cleaned: " << r.draught_filled << " draught filled, " << r.dropped_after_arrival
        << " dropped after arrival, " << r.dropped_out_of_order << " dropped out of order\n";
}

void write_predictions(std::ostream& out, const std::vector<Prediction>& predictions) {
    out << "PREDICTED_PORT,ETA_EPOCH_SECONDS,DELTA_MINUTES\n";
    for (const auto& p : predictions) out << format_prediction(p) << '\n';
}

struct SynthFlags {
    int ports = 10;
    int ships = 30;
    int trips_per_ship = 10;
    std::uint64_t seed = 7;
    std::string out;
    int interval = 300;
    double noise = 0.05;
    double late_rate = 0.0;
    double disorder_rate = 0.0;
};

int cmd_synth(const SynthFlags& f, const std::vector<std::string>& args, std::ostream& out) {
    Stopwatch clock;
    Manifest manifest("synth", args);
    const synth::World world = synth::generate_world(f.ports, synth::Box{}, f.seed);
    synth::CorpusParams params;
    params.trip.report_interval = f.interval;
    params.trip.noise = f.noise;
    params.late_rate = f.late_rate;
    params.disorder_rate = f.disorder_rate;
    const synth::Corpus corpus = synth::generate_corpus(world, f.ships, f.trips_per_ship, params, f.seed);
    const fs::path dir(f.out);
    synth::write_corpus(world, corpus, dir);
    manifest.timing("generate", clock.lap());

    manifest.flag("ports", f.ports);
    manifest.flag("ships", f.ships);
    manifest.flag("trips_per_ship", f.trips_per_ship);
    manifest.flag("interval", f.interval);
    manifest.flag("noise", f.noise);
    manifest.flag("late_rate", f.late_rate);
    manifest.flag("disorder_rate", f.disorder_rate);
    manifest.flag("out", f.out);
    manifest.seed("seed", f.seed);
    manifest.artifact(dir / "ais.csv");
    manifest.artifact(dir / "ports.csv");
    manifest.extra()["corpus"] = {{"trips", corpus.stats.trips},
                                  {"records", corpus.stats.records},
                                  {"missing_draught", corpus.stats.missing_draught},
                                  {"injected_late", corpus.stats.injected_late},
                                  {"injected_out_of_order", corpus.stats.injected_out_of_order}};
    manifest.write(dir / "synth.manifest.json");
    out << "wrote " << corpus.stats.records << " records (" << corpus.stats.trips << " trips) to "
        << (dir / "ais.csv").string() << '\n';
    return kExitOk;
}

struct TrainFlags {
    std::string data;
    std::string ports;
    std::string out;
    std::uint64_t seed = 7;
    bool skip_grid_search = false;
    std::string grid;
    int max_epochs = 200;
    int patience = 10;
};

int cmd_train(const TrainFlags& f, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Stopwatch clock;
    Manifest manifest("train", args);
    const PortRegistry registry = load_port_registry(f.ports);
    auto raw = load_records(f.data, err);
    const CleanResult cleaned = clean(std::move(raw));
    report_clean(cleaned.report, out);
    manifest.timing("load", clock.lap());

    TrainOptions options;
    options.seed = f.seed;
    options.grid_search = !f.skip_grid_search;
    if (!f.grid.empty()) {
        std::ifstream grid_in(f.grid);
        if (!grid_in) throw Error("cannot open " + f.grid);
        options.grid = ensemble::parse_grid(grid_in, f.seed);
    }
    options.network.max_epochs = f.max_epochs;
    options.network.patience = f.patience;
    const TrainOutcome outcome = train_bundle(cleaned.records, registry, options);
    manifest.timing("train", clock.lap());
    manifest.timing("ensemble", outcome.ensemble_seconds);
    manifest.timing("network", outcome.network_seconds);

    const fs::path dir(f.out);
    save_bundle(outcome.bundle, dir);
    write_file(dir / "split.csv", [&](std::ostream& s) {
        s << "TRIP_ID,SPLIT\n";
        for (const auto& id : outcome.split.train) s << csv::escape(id) << ",train\n";
        for (const auto& id : outcome.split.test) s << csv::escape(id) << ",test\n";
        for (const auto& id : outcome.split.validation) s << csv::escape(id) << ",validation\n";
    });
    write_file(dir / "validation.csv", [&](std::ostream& s) { write_csv(s, outcome.validation_records); });
    write_file(dir / "metrics.csv", [&](std::ostream& s) { write_metrics_csv(s, outcome.validation_metrics); });
    write_file(dir / "network_loss.csv", [&](std::ostream& s) {
        s << "epoch,train_loss,validation_loss\n";
        for (std::size_t e = 0; e < outcome.network_train_loss.size(); ++e) {
            s << e << ',' << csv::format_double(outcome.network_train_loss[e]) << ','
              << csv::format_double(outcome.network_validation_loss[e]) << '\n';
        }
    });
    if (outcome.grid) {
        write_file(dir / "grid_scores.csv", [&](std::ostream& s) { ensemble::write_score_table(s, outcome.grid->table); });
    }
    manifest.timing("write", clock.lap());

    manifest.flag("data", f.data);
    manifest.flag("ports", f.ports);
    manifest.flag("out", f.out);
    manifest.flag("skip_grid_search", f.skip_grid_search);
    manifest.flag("grid", f.grid);
    manifest.flag("max_epochs", f.max_epochs);
    manifest.flag("patience", f.patience);
    manifest.seed("seed", f.seed);
    manifest.input(f.data);
    manifest.input(f.ports);
    if (!f.grid.empty()) manifest.input(f.grid);
    for (const char* name : {"VERSION", "model.json", "split.csv", "validation.csv", "metrics.csv", "network_loss.csv"}) {
        manifest.artifact(dir / name);
    }
    if (outcome.grid) manifest.artifact(dir / "grid_scores.csv");
    manifest.extra()["split"] = {{"train", outcome.split.train.size()},
                                 {"test", outcome.split.test.size()},
                                 {"validation", outcome.split.validation.size()}};
    manifest.extra()["network_best_epoch"] = outcome.network_best_epoch;
    manifest.write(dir / "train.manifest.json");

    out << "split (trips): train " << outcome.split.train.size() << ", test " << outcome.split.test.size()
        << ", validation " << outcome.split.validation.size() << '\n';
    out << "validation metrics:\n";
    write_metrics_report(out, outcome.validation_metrics);
    return kExitOk;
}

struct EvaluateFlags {
    std::string bundle;
    std::string data;
    std::string out;
};

int cmd_evaluate(const EvaluateFlags& f, const std::vector<std::string>& args, std::ostream& out,
                 std::ostream& err) {
    Stopwatch clock;
    Manifest manifest("evaluate", args);
    const ModelBundle bundle = load_bundle(f.bundle);
    auto raw = load_records(f.data, err);
    const CleanResult cleaned = clean(std::move(raw));
    if (cleaned.records.empty()) throw Error("no usable records in " + f.data);
    for (const auto& r : cleaned.records) {
        if (!r.arrival_port || !r.arrival_time) throw Error(f.data + ": unlabeled record (ship " + r.ship_id + ")");
    }
    manifest.timing("load", clock.lap());
    std::vector<Prediction> predictions;
    const Metrics metrics = evaluate(bundle, cleaned.records, &predictions);
    manifest.timing("predict", clock.lap());

    const fs::path dir(f.out);
    write_file(dir / "predictions.csv", [&](std::ostream& s) { write_predictions(s, predictions); });
    write_file(dir / "metrics.csv", [&](std::ostream& s) { write_metrics_csv(s, metrics); });
    write_file(dir / "report.txt", [&](std::ostream& s) { write_metrics_report(s, metrics); });

    manifest.flag("bundle", f.bundle);
    manifest.flag("data", f.data);
    manifest.flag("out", f.out);
    manifest.input(fs::path(f.bundle) / "VERSION");
    manifest.input(fs::path(f.bundle) / "model.json");
    manifest.input(f.data);
    for (const char* name : {"predictions.csv", "metrics.csv", "report.txt"}) manifest.artifact(dir / name);
    manifest.write(dir / "evaluate.manifest.json");

    write_metrics_report(out, metrics);
    return kExitOk;
}

struct ServeFlags {
    std::string bundle;
    std::string manifest;
};

int cmd_serve(const ServeFlags& f, const std::vector<std::string>& args, std::istream& in, std::ostream& out,
              std::ostream& err) {
    Stopwatch clock;
    Manifest manifest("serve", args);
    const ModelBundle bundle = load_bundle(f.bundle);
    const ServeStats stats = serve(bundle, in, out, err);
    if (!f.manifest.empty()) {
        manifest.flag("bundle", f.bundle);
        manifest.flag("manifest", f.manifest);
        manifest.input(fs::path(f.bundle) / "VERSION");
        manifest.input(fs::path(f.bundle) / "model.json");
        manifest.timing("serve", clock.lap());
        manifest.extra()["answered"] = stats.answered;
        manifest.extra()["rejected"] = stats.rejected;
        manifest.write(f.manifest);
    }
    return kExitOk;
}

struct ClusterFlags {
    std::string data;
    std::string out;
    double bandwidth = cluster::kDefaultBandwidth;
    int max_iterations = cluster::kDefaultMaxIterations;
};

int cmd_cluster(const ClusterFlags& f, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Stopwatch clock;
    Manifest manifest("cluster", args);
    auto raw = load_records(f.data, err);
    const CleanResult cleaned = clean(std::move(raw));
    if (cleaned.records.empty()) throw Error("no usable records in " + f.data);
    std::vector<cluster::GeoPoint> points;
    points.reserve(cleaned.records.size());
    for (const auto& r : cleaned.records) points.push_back({r.lon, r.lat});
    const auto model = cluster::mean_shift(points, f.bandwidth, std::nullopt, f.max_iterations);
    manifest.timing("mean_shift", clock.lap());
    write_file(f.out, [&](std::ostream& s) { cluster::write_clusters(s, model); });

    manifest.flag("data", f.data);
    manifest.flag("out", f.out);
    manifest.flag("bandwidth", f.bandwidth);
    manifest.flag("max_iterations", f.max_iterations);
    manifest.input(f.data);
    manifest.artifact(f.out);
    manifest.write(f.out + ".manifest.json");
    out << model.centers.size() << " clusters from " << points.size() << " positions\n";
    return kExitOk;
}

int cmd_replay(const std::string& manifest_path, std::istream& in, std::ostream& out, std::ostream& err) {
    std::ifstream file(manifest_path);
    if (!file) throw Error("cannot open " + manifest_path);
    json doc;
    try {
        doc = json::parse(file);
    } catch (const json::exception& e) {
        throw Error("manifest " + manifest_path + ": " + e.what());
    }
    if (!doc.contains("argv") || !doc["argv"].is_array()) throw Error("manifest " + manifest_path + ": missing field 'argv'");
    for (const auto& input : doc.value("inputs", json::array())) {
        const auto path = input.at("path").get<std::string>();
        if (sha256_file(path) != input.at("sha256").get<std::string>()) {
            throw Error("input changed since the manifest was written: " + path);
        }
    }
    const auto argv = doc["argv"].get<std::vector<std::string>>();
    if (!argv.empty() && argv.front() == "replay") throw Error("manifest " + manifest_path + ": refusing nested replay");
    return run(argv, in, out, err);
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Vessel destination and arrival-time prediction from AIS tuples", "voyagecast"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "voyagecast 1.0");

    SynthFlags synth_flags;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic AIS corpus and port registry");
    synth_cmd->add_option("--ports", synth_flags.ports, "Number of ports")->check(CLI::Range(2, 1000));
    synth_cmd->add_option("--ships", synth_flags.ships, "Number of ships")->check(CLI::Range(1, 100000));
    synth_cmd->add_option("--trips-per-ship", synth_flags.trips_per_ship, "Trips per ship")->check(CLI::Range(1, 10000));
    synth_cmd->add_option("--seed", synth_flags.seed, "Generator seed");
    synth_cmd->add_option("--out", synth_flags.out, "Output directory")->required();
    synth_cmd->add_option("--interval", synth_flags.interval, "Report interval in seconds")->check(CLI::Range(1, 86400));
    synth_cmd->add_option("--noise", synth_flags.noise, "Speed noise fraction")->check(CLI::Range(0.0, 0.9));
    synth_cmd->add_option("--late-rate", synth_flags.late_rate, "Injected late-timestamp rate")->check(CLI::Range(0.0, 1.0));
    synth_cmd->add_option("--disorder-rate", synth_flags.disorder_rate, "Injected out-of-order rate")
        ->check(CLI::Range(0.0, 1.0));

    TrainFlags train_flags;
    auto* train_cmd = app.add_subcommand("train", "Fit the ensemble and the network and save a model bundle");
    train_cmd->add_option("--data", train_flags.data, "Labeled AIS CSV")->required();
    train_cmd->add_option("--ports", train_flags.ports, "Port registry CSV")->required();
    train_cmd->add_option("--out", train_flags.out, "Bundle directory")->required();
    train_cmd->add_option("--seed", train_flags.seed, "Split, forest and network seed");
    train_cmd->add_flag("--skip-grid-search", train_flags.skip_grid_search, "Use default hyperparameters");
    train_cmd->add_option("--grid", train_flags.grid, "Grid file (key=v1,v2 lines)");
    train_cmd->add_option("--max-epochs", train_flags.max_epochs, "Network epoch cap")->check(CLI::Range(1, 100000));
    train_cmd->add_option("--patience", train_flags.patience, "Early-stopping patience")->check(CLI::Range(1, 100000));

    EvaluateFlags eval_flags;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a bundle on labeled data");
    eval_cmd->add_option("--bundle", eval_flags.bundle, "Bundle directory")->required();
    eval_cmd->add_option("--data", eval_flags.data, "Labeled AIS CSV")->required();
    eval_cmd->add_option("--out", eval_flags.out, "Report directory")->required();

    ServeFlags serve_flags;
    auto* serve_cmd = app.add_subcommand("serve", "Predict one line per input tuple on stdin");
    serve_cmd->add_option("--bundle", serve_flags.bundle, "Bundle directory")->required();
    serve_cmd->add_option("--manifest", serve_flags.manifest, "Write a run manifest here");

    ClusterFlags cluster_flags;
    auto* cluster_cmd = app.add_subcommand("cluster", "Mean-shift clustering of reported positions");
    cluster_cmd->add_option("--data", cluster_flags.data, "AIS CSV")->required();
    cluster_cmd->add_option("--out", cluster_flags.out, "Cluster CSV")->required();
    cluster_cmd->add_option("--bandwidth", cluster_flags.bandwidth, "Bandwidth in degrees")
        ->check(CLI::PositiveNumber);
    cluster_cmd->add_option("--max-iterations", cluster_flags.max_iterations, "Iteration cap per seed")
        ->check(CLI::Range(1, 1000000));

    std::string replay_manifest;
    auto* replay_cmd = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
    replay_cmd->add_option("--manifest", replay_manifest, "Manifest file")->required();

    std::vector<std::string> argv_storage;
    argv_storage.reserve(args.size() + 1);
    argv_storage.emplace_back("voyagecast");
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_storage) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::CallForVersion& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        if (*synth_cmd) return cmd_synth(synth_flags, args, out);
        if (*train_cmd) return cmd_train(train_flags, args, out, err);
        if (*eval_cmd) return cmd_evaluate(eval_flags, args, out, err);
        if (*serve_cmd) return cmd_serve(serve_flags, args, in, out, err);
        if (*cluster_cmd) return cmd_cluster(cluster_flags, args, out, err);
        if (*replay_cmd) return cmd_replay(replay_manifest, in, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace voyagecast::cli
