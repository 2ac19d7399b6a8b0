#include "voyagecast/tree_io.hpp"

#include "voyagecast/core_model.hpp"

namespace voyagecast::trees {

using nlohmann::json;

namespace {

const char* task_name(Task t) { return t == Task::classification ? "classification" : "regression"; }

Task task_from(const std::string& s) {
    if (s == "classification") return Task::classification;
    if (s == "regression") return Task::regression;
    throw Error("unknown task '" + s + "'");
}

void write_boosted(json& j, const BoostedModel& m) {
    j["n_classes"] = m.n_classes;
    j["classes"] = m.classes;
    j["initial_scores"] = m.initial_scores;
    j["learning_rate"] = m.learning_rate;
    j["max_depth"] = m.max_depth;
    j["rounds"] = m.rounds;
    j["trees"] = m.trees;
    j["train_loss"] = m.train_loss;
}

void read_boosted(const json& j, BoostedModel& m) {
    j.at("n_classes").get_to(m.n_classes);
    j.at("classes").get_to(m.classes);
    j.at("initial_scores").get_to(m.initial_scores);
    j.at("learning_rate").get_to(m.learning_rate);
    j.at("max_depth").get_to(m.max_depth);
    j.at("rounds").get_to(m.rounds);
    j.at("trees").get_to(m.trees);
    j.at("train_loss").get_to(m.train_loss);
    if (m.classes.size() != m.initial_scores.size() || m.classes.empty() ||
        m.trees.size() != m.classes.size() * static_cast<std::size_t>(m.rounds)) {
        throw Error("boosted model: inconsistent class/tree counts");
    }
}

}  // namespace

void to_json(json& j, const TreeConfig& c) {
    j = json{{"task", task_name(c.task)},
             {"max_depth", c.max_depth ? json(*c.max_depth) : json(nullptr)},
             {"min_samples_split", c.min_samples_split},
             {"features_per_split", c.features_per_split ? json(*c.features_per_split) : json(nullptr)},
             {"threshold_mode", c.threshold_mode == ThresholdMode::best ? "best" : "random"},
             {"bootstrap", c.bootstrap},
             {"seed", c.seed}};
}

void from_json(const json& j, TreeConfig& c) {
    c.task = task_from(j.at("task").get<std::string>());
    const auto& depth = j.at("max_depth");
    c.max_depth = depth.is_null() ? std::nullopt : std::optional<int>(depth.get<int>());
    j.at("min_samples_split").get_to(c.min_samples_split);
    const auto& fps = j.at("features_per_split");
    c.features_per_split = fps.is_null() ? std::nullopt : std::optional<int>(fps.get<int>());
    const auto mode = j.at("threshold_mode").get<std::string>();
    if (mode != "best" && mode != "random") throw Error("unknown threshold_mode '" + mode + "'");
    c.threshold_mode = mode == "best" ? ThresholdMode::best : ThresholdMode::random;
    j.at("bootstrap").get_to(c.bootstrap);
    j.at("seed").get_to(c.seed);
}

void to_json(json& j, const Tree& t) {
    json nodes = json::array();
    for (const auto& n : t.nodes) {
        if (n.is_leaf()) {
            nodes.push_back(json{{"value", n.value}});
        } else {
            nodes.push_back(json{{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
        }
    }
    j = json{{"task", task_name(t.task)}, {"n_features", t.n_features}, {"n_outputs", t.n_outputs}, {"nodes", nodes}};
}

void from_json(const json& j, Tree& t) {
    t.task = task_from(j.at("task").get<std::string>());
    j.at("n_features").get_to(t.n_features);
    j.at("n_outputs").get_to(t.n_outputs);
    t.nodes.clear();
    for (const auto& jn : j.at("nodes")) {
        TreeNode n;
        if (jn.contains("value")) {
            jn.at("value").get_to(n.value);
        } else {
            jn.at("feature").get_to(n.feature);
            jn.at("threshold").get_to(n.threshold);
            jn.at("left").get_to(n.left);
            jn.at("right").get_to(n.right);
        }
        t.nodes.push_back(std::move(n));
    }
    const int count = static_cast<int>(t.nodes.size());
    if (count == 0) throw Error("tree: no nodes");
    for (const auto& n : t.nodes) {
        if (n.is_leaf()) {
            if (n.value.empty()) throw Error("tree: leaf without value");
        } else if (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count || n.feature >= t.n_features) {
            throw Error("tree: node reference out of range");
        }
    }
}

void to_json(json& j, const ForestModel& m) {
    j = json{{"config", m.config}, {"n_classes", m.n_classes}, {"trees", m.trees}};
}

void from_json(const json& j, ForestModel& m) {
    j.at("config").get_to(m.config);
    j.at("n_classes").get_to(m.n_classes);
    j.at("trees").get_to(m.trees);
    if (m.trees.empty()) throw Error("forest: no trees");
}

void to_json(json& j, const GbdtModel& m) {
    j = json::object();
    write_boosted(j, m);
}

void from_json(const json& j, GbdtModel& m) { read_boosted(j, m); }

void to_json(json& j, const XgbModel& m) {
    j = json::object();
    write_boosted(j, m);
    j["lambda"] = m.lambda;
    j["gamma"] = m.gamma;
}

void from_json(const json& j, XgbModel& m) {
    read_boosted(j, m);
    j.at("lambda").get_to(m.lambda);
    j.at("gamma").get_to(m.gamma);
}

void to_json(json& j, const BoostConfig& c) {
    j = json{{"rounds", c.rounds},
             {"max_depth", c.max_depth},
             {"learning_rate", c.learning_rate},
             {"lambda", c.lambda},
             {"gamma", c.gamma}};
}

void from_json(const json& j, BoostConfig& c) {
    j.at("rounds").get_to(c.rounds);
    j.at("max_depth").get_to(c.max_depth);
    j.at("learning_rate").get_to(c.learning_rate);
    j.at("lambda").get_to(c.lambda);
    j.at("gamma").get_to(c.gamma);
}

}  // namespace voyagecast::trees
