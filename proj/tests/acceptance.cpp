// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "voyagecast/cluster.hpp"
#include "voyagecast/ensemble.hpp"
#include "voyagecast/ingest.hpp"
#include "voyagecast/neural.hpp"
#include "voyagecast/pipeline.hpp"
#include "voyagecast/rng.hpp"
#include "voyagecast/synthgen.hpp"
#include "voyagecast/trees.hpp"

namespace fs = std::filesystem;
using namespace voyagecast;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

std::string fmt(double v, int decimals = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<AisRecord> strip_labels(std::vector<AisRecord> records) {
    for (auto& r : records) {
        r.arrival_time.reset();
        r.arrival_port.reset();
        r.trip_id.clear();
    }
    return records;
}

/// The 10-port, 30x10 corpus trained once with the full pipeline.
struct MainRun {
    synth::World world;
    TrainOutcome outcome;
    double total_seconds = 0.0;
};

const MainRun& main_run() {
    static const MainRun run = [] {
        MainRun r;
        r.world = synth::generate_world(10, synth::Box{}, 7);
        const auto corpus = synth::generate_corpus(r.world, 30, 10, synth::CorpusParams{}, 7);
        const auto t0 = std::chrono::steady_clock::now();
        const auto cleaned = clean(corpus.records);
        TrainOptions options;
        options.seed = 7;
        r.outcome = train_bundle(cleaned.records, r.world.registry(), options);
        r.total_seconds = seconds_since(t0);
        return r;
    }();
    return run;
}

Verdict c1_port_accuracy() {
    const auto& run = main_run();
    const auto& out = run.outcome;
    const auto& registry = out.bundle.registry();
    const double ensemble_acc = out.validation_metrics.port_accuracy;
    bool pass = ensemble_acc >= 0.95;
    std::string detail = "ensemble " + fmt(ensemble_acc);
    for (auto member : ensemble::kMembers) {
        std::size_t hits = 0;
        for (const auto& r : out.validation_records) {
            const auto f = class_features(r, registry);
            hits += out.bundle.ensemble.member_predict(member, f) == registry.encode(*r.arrival_port);
        }
        const double acc = static_cast<double>(hits) / static_cast<double>(out.validation_records.size());
        pass = pass && acc >= 0.85;
        detail += std::string(", ") + ensemble::member_name(member) + " " + fmt(acc);
    }
    pass = pass && out.ensemble_seconds <= 180.0;
    detail += ", ensemble fit " + fmt(out.ensemble_seconds, 1) + " s";
    return {pass, detail};
}

Verdict c2_eta() {
    const auto& out = main_run().outcome;
    double total = 0.0;
    const auto trips = segment_trips(out.validation_records);
    for (const auto& t : trips) total += static_cast<double>(t.arrival_time - t.records.front().timestamp) / 60.0;
    const double mean_duration = total / static_cast<double>(trips.size());
    const double mae = out.validation_metrics.eta_mae;
    const double w20 = out.validation_metrics.within(20.0);
    const bool pass = mae <= 0.15 * mean_duration && w20 >= 0.80 && out.network_seconds <= 180.0;
    return {pass, "MAE " + fmt(mae, 2) + " min vs mean trip " + fmt(mean_duration, 1) + " min (ratio " +
                      fmt(mae / mean_duration) + "), within20 " + fmt(w20) + ", network fit " +
                      fmt(out.network_seconds, 1) + " s"};
}

Verdict c3_gradients() {
    Rng rng(31);
    const double h = 1e-5;
    double worst = 0.0;
    int nets = 0;
    for (int trial = 0; trial < 24; ++trial, ++nets) {
        const int in = 2 + static_cast<int>(rng.below(4));
        const int hidden = 2 + static_cast<int>(rng.below(5));
        const int batch = 1 + static_cast<int>(rng.below(4));
        const std::vector<int> sizes = trial % 2 == 0 ? std::vector<int>{in, hidden, 1}
                                                      : std::vector<int>{in, hidden, hidden, 1};
        const auto net = neural::init_network(sizes, 500 + static_cast<std::uint64_t>(trial));
        Eigen::MatrixXd x(in, batch);
        Eigen::MatrixXd y(1, batch);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
        for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.normal();
        Rng unused(0);
        const auto cache = neural::forward_batch(net, x, neural::Mode::train, 0.0, unused);
        const auto g = neural::backward(net, cache, y);
        auto loss = [&](const neural::Network& n) {
            Rng r(0);
            return neural::mse(neural::forward_batch(n, x, neural::Mode::infer, 0.0, r).output, y);
        };
        auto rel = [](double a, double b) { return std::fabs(a - b) / std::max(1e-8, std::fabs(a) + std::fabs(b)); };
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            for (Eigen::Index i = 0; i < net.layers[l].weights.size(); ++i) {
                auto plus = net;
                auto minus = net;
                plus.layers[l].weights.data()[i] += h;
                minus.layers[l].weights.data()[i] -= h;
                worst = std::max(worst, rel(g.weights[l].data()[i], (loss(plus) - loss(minus)) / (2 * h)));
            }
            for (Eigen::Index i = 0; i < net.layers[l].biases.size(); ++i) {
                auto plus = net;
                auto minus = net;
                plus.layers[l].biases(i) += h;
                minus.layers[l].biases(i) -= h;
                worst = std::max(worst, rel(g.biases[l](i), (loss(plus) - loss(minus)) / (2 * h)));
            }
        }
    }
    return {worst < 1e-4, std::to_string(nets) + " nets, worst relative error " + sci(worst)};
}

Verdict c4_rmsprop() {
    auto net = neural::init_network(std::vector<int>{1, 1}, 1);
    net.layers[0].weights.setZero();
    net.layers[0].biases.setZero();
    auto state = neural::RmsPropState::zeros_like(net);
    neural::Gradients g;
    g.weights = {Eigen::MatrixXd::Zero(1, 1)};
    g.biases = {Eigen::VectorXd::Ones(1)};
    neural::rmsprop_step(net, g, state, neural::TrainConfig{});
    // Hand-computed: cache = 0.1 * 1^2; step = 0.001 / (sqrt(0.1) + 1e-8).
    const double cache = state.biases[0](0);
    const double step = -net.layers[0].biases(0);
    const double expected_step = 0.001 / (std::sqrt(0.1) + 1e-8);
    const bool pass = std::fabs(cache - 0.1) < 1e-9 && std::fabs(step - expected_step) < 1e-9 &&
                      std::fabs(step - 0.00316228) < 1e-8;
    return {pass, "cache " + std::to_string(cache) + ", step " + fmt(step, 10)};
}

Verdict c5_split_oracle() {
    Rng rng(555);
    int mismatches = 0;
    int nodes = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = static_cast<std::size_t>(2 + rng.below(49));
        const auto d = static_cast<std::size_t>(1 + rng.below(4));
        const int k = static_cast<int>(2 + rng.below(3));
        Matrix x(n, d);
        std::vector<int> y(n);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t f = 0; f < d; ++f) {
                x(r, f) = trial % 2 == 0 ? static_cast<double>(rng.below(6)) * 0.25 : rng.uniform(-3.0, 3.0);
            }
            y[r] = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
        }
        const auto tree = trees::fit_tree(x, y, trees::TreeConfig{}, k);
        std::vector<std::vector<std::size_t>> at(tree.nodes.size());
        at[0].resize(n);
        std::iota(at[0].begin(), at[0].end(), std::size_t{0});
        for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
            const auto& node = tree.nodes[i];
            if (node.is_leaf()) continue;
            ++nodes;
            const auto expected = oracle::best_gini_split(x, y, at[i], k);
            if (!expected || expected->feature != node.feature || expected->threshold != node.threshold) ++mismatches;
            for (auto r : at[i]) {
                const bool left = x(r, static_cast<std::size_t>(node.feature)) <= node.threshold;
                at[static_cast<std::size_t>(left ? node.left : node.right)].push_back(r);
            }
        }
    }
    return {mismatches == 0, "100 datasets, " + std::to_string(nodes) + " internal nodes, " +
                                 std::to_string(mismatches) + " mismatches"};
}

Verdict c6_unbounded_tree() {
    Rng rng(66);
    const std::size_t n = 400;
    Matrix x(n, 3);
    std::vector<int> y(n);
    std::map<std::vector<double>, int> seen;
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<double> row;
        for (std::size_t f = 0; f < 3; ++f) {
            x(r, f) = static_cast<double>(rng.below(10));
            row.push_back(x(r, f));
        }
        // Label-consistent: duplicates of a feature vector share its first label.
        auto [it, inserted] = seen.emplace(row, static_cast<int>(rng.below(4)));
        y[r] = it->second;
    }
    const auto tree = trees::fit_tree(x, y, trees::TreeConfig{}, 4);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < n; ++r) hits += trees::argmax(trees::predict_distribution(tree, x.row(r))) == y[r];
    return {hits == n, std::to_string(hits) + "/" + std::to_string(n) + " training rows correct, " +
                           std::to_string(tree.nodes.size()) + " nodes"};
}

Verdict c7_boosting_traces() {
    Rng rng(77);
    const std::size_t n = 150;
    Matrix x(n, 2);
    std::vector<int> y(n);
    for (std::size_t r = 0; r < n; ++r) {
        y[r] = static_cast<int>(r % 3);
        x(r, 0) = rng.normal(y[r] == 1 ? 1.5 : 0.0, 0.8);
        x(r, 1) = rng.normal(y[r] == 2 ? 1.5 : 0.0, 0.8);
    }
    const auto gbdt = trees::fit_gbdt(x, y, 50, 3, 0.1);
    const auto xgb = trees::fit_xgb(x, y, 50, 3, 0.1, 1.0, 0.0);
    double worst = -1e300;
    for (const auto* trace : {&gbdt.train_loss, &xgb.train_loss}) {
        for (std::size_t i = 1; i < trace->size(); ++i) worst = std::max(worst, (*trace)[i] - (*trace)[i - 1]);
    }
    const bool pass = gbdt.train_loss.size() == 51 && xgb.train_loss.size() == 51 && worst <= 1e-9;
    return {pass, "largest per-round change " + sci(worst) + "; gbdt " + fmt(gbdt.train_loss.front()) +
                      " -> " + fmt(gbdt.train_loss.back()) + ", xgb " + fmt(xgb.train_loss.front()) + " -> " +
                      fmt(xgb.train_loss.back())};
}

Verdict c8_hard_vote() {
    Rng rng(88);
    int mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<int> votes(1 + rng.below(9));
        for (int& v : votes) v = static_cast<int>(rng.below(6));
        if (ensemble::hard_vote(votes) != oracle::majority(votes)) ++mismatches;
    }
    return {mismatches == 0, "1000 vote vectors, " + std::to_string(mismatches) + " mismatches"};
}

Verdict c9_mean_shift() {
    const double bw = cluster::kDefaultBandwidth;
    const std::vector<cluster::GeoPoint> means = {{14.0, 35.0}, {14.5, 35.0}, {14.0, 35.5}, {14.5, 35.5}, {14.25, 36.0}};
    Rng rng(99);
    std::vector<cluster::GeoPoint> pts;
    std::vector<cluster::GeoPoint> blob_means;
    for (const auto& m : means) {
        double sx = 0.0;
        double sy = 0.0;
        for (int i = 0; i < 200; ++i) {
            pts.push_back({rng.normal(m.lon, bw / 4), rng.normal(m.lat, bw / 4)});
            sx += pts.back().lon;
            sy += pts.back().lat;
        }
        blob_means.push_back({sx / 200, sy / 200});
    }
    const auto model = cluster::mean_shift(pts, bw);
    double worst = 0.0;
    for (const auto& m : blob_means) {
        double nearest = 1e9;
        for (const auto& c : model.centers) nearest = std::min(nearest, cluster::distance(c, m));
        worst = std::max(worst, nearest);
    }
    const bool pass = model.centers.size() == 5 && worst <= bw / 2;
    return {pass, std::to_string(model.centers.size()) + " centers, worst offset " + fmt(worst, 5) + " deg (limit " +
                      fmt(bw / 2, 3) + ")"};
}

Verdict c10_serve_vs_batch() {
    const auto& out = main_run().outcome;
    const auto records = strip_labels(out.validation_records);
    const auto batch = predict_batch(out.bundle, records);
    std::ostringstream text;
    write_csv(text, records);
    std::istringstream in(text.str());
    std::ostringstream served;
    std::ostringstream err;
    const auto stats = serve(out.bundle, in, served, err);
    std::istringstream lines(served.str());
    std::string line;
    std::size_t matched = 0;
    for (const auto& p : batch) {
        if (!std::getline(lines, line) || line != format_prediction(p)) break;
        ++matched;
    }
    const bool extra = static_cast<bool>(std::getline(lines, line));
    const bool pass = matched == batch.size() && !extra && stats.rejected == 0 && err.str().empty();
    return {pass, std::to_string(matched) + "/" + std::to_string(batch.size()) + " lines identical"};
}

Verdict c11_ingest() {
    std::string failures;
    auto expect = [&](bool ok, const char* what) {
        if (!ok) failures += std::string(failures.empty() ? "" : "; ") + what;
    };
    const std::string header(kAisHeader);
    std::istringstream in(header + "\n" +
                          "S1,70,12.0,14.006,35.994,90,90,1000,P0,,4000,P1,T1\n"   // draught missing, rounding
                          "S1,70,12.0,14.5,36.0,90,90,1600,P0,7.5,4000,P1,T1\n"
                          "S1,70,12.0,14.5,36.0,90,90,1200,P0,7.5,4000,P1,T1\n"    // before previous
                          "S1,70,12.0,14.5,36.0,90,90,4060,P0,7.5,4000,P1,T1\n"    // after arrival
                          "S1,70,12.0,-14.556,-35.444,90,90,4000,P0,7.5,4000,P1,T1\n");
    const auto parsed = parse_csv(in);
    expect(parsed.errors.empty() && parsed.records.size() == 5, "parse");
    const auto cleaned = clean(parsed.records);
    expect(cleaned.records.size() == 3, "kept count");
    if (cleaned.records.size() == 3) {
        expect(cleaned.records[0].reported_draught == 0.0, "draught fill");
        expect(cleaned.records[0].lon == 14.01 && cleaned.records[0].lat == 35.99, "rounding");
        expect(cleaned.records[2].lon == -14.56 && cleaned.records[2].lat == -35.44, "negative rounding");
        expect(cleaned.records[1].timestamp == 1600 && cleaned.records[2].timestamp == 4000, "order kept");
    }
    expect(cleaned.report.draught_filled == 1 && cleaned.report.dropped_after_arrival == 1 &&
               cleaned.report.dropped_out_of_order == 1,
           "report counts");

    // 100 one-trip ships hit 70/15/15 exactly; multi-trip ships never leak.
    std::vector<Trip> single;
    for (int i = 0; i < 100; ++i) {
        Trip t;
        t.trip_id = "X" + std::to_string(i) + "-0";
        AisRecord r;
        r.ship_id = "X" + std::to_string(i);
        r.trip_id = t.trip_id;
        t.records.push_back(r);
        single.push_back(t);
    }
    const auto s1 = split_by_trip(single, 3);
    expect(s1.train.size() == 70 && s1.test.size() == 15 && s1.validation.size() == 15, "exact 70/15/15");

    const auto world = synth::generate_world(6, synth::Box{}, 12);
    const auto corpus = synth::generate_corpus(world, 40, 3, synth::CorpusParams{}, 12);
    const auto trips = segment_trips(clean(corpus.records).records);
    const auto s2 = split_by_trip(trips, 12);
    std::map<std::string, std::string> trip_ship;
    for (const auto& t : trips) trip_ship[t.trip_id] = t.ship_id();
    std::map<std::string, std::set<int>> ship_parts;
    std::size_t assigned = 0;
    int part = 0;
    for (const auto* ids : {&s2.train, &s2.test, &s2.validation}) {
        for (const auto& id : *ids) ship_parts[trip_ship.at(id)].insert(part);
        assigned += ids->size();
        ++part;
    }
    bool leak = false;
    for (const auto& [ship, parts] : ship_parts) leak = leak || parts.size() != 1;
    expect(!leak, "ship leakage");
    expect(assigned == trips.size(), "partition");

    const std::string detail = failures.empty() ? "fill, rounding, drops, split " + std::to_string(s2.train.size()) +
                                                      "/" + std::to_string(s2.test.size()) + "/" +
                                                      std::to_string(s2.validation.size()) + " with no leakage"
                                                : failures;
    return {failures.empty(), detail};
}

Verdict c12_determinism() {
    const fs::path root = fs::current_path() / "acceptance_scratch";
    fs::remove_all(root);
    fs::create_directories(root);
    const std::string cli = VOYAGECAST_CLI_PATH;
    auto sh = [&](const std::string& args) {
        const std::string cmd = cli + " " + args + " > " + (root / "log.txt").string() + " 2>&1";
        return std::system(cmd.c_str());
    };
    const fs::path data = root / "data";
    if (sh("synth --ports 5 --ships 8 --trips-per-ship 3 --seed 21 --out " + data.string()) != 0) {
        return {false, "synth failed: " + slurp(root / "log.txt")};
    }
    for (const char* name : {"a", "b"}) {
        if (sh("train --data " + (data / "ais.csv").string() + " --ports " + (data / "ports.csv").string() +
               " --out " + (root / name).string() + " --seed 5 --skip-grid-search --max-epochs 10") != 0) {
            return {false, "train failed: " + slurp(root / "log.txt")};
        }
    }
    std::string differing;
    for (const char* file : {"VERSION", "model.json", "split.csv", "validation.csv", "metrics.csv", "network_loss.csv"}) {
        if (slurp(root / "a" / file) != slurp(root / "b" / file)) differing += std::string(" ") + file;
    }

    // Round trip: an in-memory bundle and its reloaded copy predict the same bits.
    const auto world = synth::generate_world(5, synth::Box{}, 21);
    const auto corpus = synth::generate_corpus(world, 8, 3, synth::CorpusParams{}, 21);
    TrainOptions options;
    options.seed = 5;
    options.grid_search = false;
    options.network.max_epochs = 10;
    const auto outcome = train_bundle(clean(corpus.records).records, world.registry(), options);
    save_bundle(outcome.bundle, root / "memory");
    const auto loaded = load_bundle(root / "memory");
    const auto before = predict_batch(outcome.bundle, outcome.validation_records);
    const auto after = predict_batch(loaded, outcome.validation_records);
    std::size_t identical = 0;
    for (std::size_t i = 0; i < before.size(); ++i) {
        identical += before[i].port_name == after[i].port_name && before[i].eta == after[i].eta &&
                     std::bit_cast<std::uint64_t>(before[i].time_delta) == std::bit_cast<std::uint64_t>(after[i].time_delta);
    }
    const bool pass = differing.empty() && identical == before.size() && !before.empty();
    return {pass, (differing.empty() ? std::string("bundles byte-identical") : "differ:" + differing) + ", " +
                      std::to_string(identical) + "/" + std::to_string(before.size()) +
                      " reloaded predictions bit-identical"};
}

Verdict c13_scaler() {
    const auto& out = main_run().outcome;
    const auto tables = build_tables(out.train_records, out.bundle.registry());
    const auto& scaler = out.bundle.scaler;
    double lo = 1e300;
    double hi = -1e300;
    double worst = 0.0;
    for (std::size_t r = 0; r < tables.reg_x.rows(); ++r) {
        const auto row = tables.reg_x.row(r);
        const auto scaled = neural::apply_scaler(scaler, row);
        const auto back = neural::invert_scaler(scaler, scaled);
        for (std::size_t f = 0; f < scaled.size(); ++f) {
            lo = std::min(lo, scaled[f]);
            hi = std::max(hi, scaled[f]);
            worst = std::max(worst, std::fabs(back[f] - row[f]));
        }
    }
    const bool pass = lo >= 0.0 && hi <= 1.0 && worst < 1e-12;
    return {pass, std::to_string(tables.reg_x.rows()) + " training rows scaled into [" + fmt(lo) + ", " + fmt(hi) +
                      "], worst round-trip error " + sci(worst)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"C1  port accuracy (ensemble >= 0.95, members >= 0.85)", c1_port_accuracy},
        {"C2  ETA (MAE <= 15% of mean trip, within 20 min >= 0.80)", c2_eta},
        {"C3  backward matches central differences", c3_gradients},
        {"C4  RMSProp single step", c4_rmsprop},
        {"C5  fit_tree splits equal brute force", c5_split_oracle},
        {"C6  unbounded tree fits training data", c6_unbounded_tree},
        {"C7  boosting loss traces non-increasing", c7_boosting_traces},
        {"C8  hard_vote equals brute-force majority", c8_hard_vote},
        {"C9  mean shift recovers 5 blobs", c9_mean_shift},
        {"C10 serve equals batch line for line", c10_serve_vs_batch},
        {"C11 ingest golden rules and leak-free split", c11_ingest},
        {"C12 deterministic training and bundle round trip", c12_determinism},
        {"C13 scaled training features in [0,1], exact inverse", c13_scaler},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += !v.pass;
        std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << name << " -- " << v.detail << " (" << fmt(seconds_since(t0), 1)
                  << " s)" << std::endl;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
