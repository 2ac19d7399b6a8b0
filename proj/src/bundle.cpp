#include <fstream>
#include <sstream>

#include <json.hpp>

#include "voyagecast/pipeline.hpp"
#include "voyagecast/tree_io.hpp"

namespace voyagecast {

using nlohmann::json;

namespace {

constexpr const char* kVersionFile = "VERSION";
constexpr const char* kModelFile = "model.json";

json layer_to_json(const neural::Layer& layer) {
    std::vector<double> weights;
    weights.reserve(static_cast<std::size_t>(layer.weights.size()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) weights.push_back(layer.weights(r, c));
    }
    return json{{"rows", layer.weights.rows()},
                {"cols", layer.weights.cols()},
                {"weights", weights},
                {"biases", std::vector<double>(layer.biases.data(), layer.biases.data() + layer.biases.size())},
                {"activation", layer.activation == neural::Activation::linear ? "linear" : "leaky_relu"}};
}

neural::Layer layer_from_json(const json& j) {
    neural::Layer layer;
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto weights = j.at("weights").get<std::vector<double>>();
    const auto biases = j.at("biases").get<std::vector<double>>();
    if (rows <= 0 || cols <= 0 || weights.size() != static_cast<std::size_t>(rows * cols) ||
        biases.size() != static_cast<std::size_t>(rows)) {
        throw Error("field 'network.layers': shape mismatch");
    }
    layer.weights.resize(rows, cols);
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) layer.weights(r, c) = weights[i++];
    }
    layer.biases = Eigen::Map<const Eigen::VectorXd>(biases.data(), rows);
    const auto activation = j.at("activation").get<std::string>();
    if (activation == "linear") {
        layer.activation = neural::Activation::linear;
    } else if (activation == "leaky_relu") {
        layer.activation = neural::Activation::leaky_relu;
    } else {
        throw Error("field 'network.layers.activation': unknown value '" + activation + "'");
    }
    return layer;
}

json registry_to_json(const PortRegistry& registry) {
    json ports = json::array();
    for (const auto& p : registry.ports()) ports.push_back(json{{"name", p.name}, {"lon", p.lon}, {"lat", p.lat}});
    return ports;
}

PortRegistry registry_from_json(const json& j) {
    std::vector<PortRegistry::Entry> entries;
    for (const auto& p : j) entries.push_back({p.at("name").get<std::string>(), p.at("lon").get<double>(), p.at("lat").get<double>()});
    return PortRegistry(std::move(entries));
}

json bundle_to_json(const ModelBundle& b) {
    json layers = json::array();
    for (const auto& layer : b.network.layers) layers.push_back(layer_to_json(layer));
    const auto& class_names = class_feature_names();
    const auto& reg_names = reg_feature_names();
    return json{
        {"format_version", b.version},
        {"feature_order",
         {{"classification", std::vector<std::string>(class_names.begin(), class_names.end())},
          {"regression", std::vector<std::string>(reg_names.begin(), reg_names.end())}}},
        {"registry", registry_to_json(b.registry())},
        {"ensemble",
         {{"random_forest", b.ensemble.random_forest},
          {"gbdt", b.ensemble.gbdt},
          {"xgb", b.ensemble.xgb},
          {"extra_trees", b.ensemble.extra_trees}}},
        {"network", {{"layers", layers}}},
        {"scaler", {{"min", b.scaler.min}, {"max", b.scaler.max}}},
    };
}

// Looks up `key`, naming the full field path when it is missing or malformed.
template <typename Fn>
auto field(const json& parent, const std::string& key, const std::string& path, Fn&& read) {
    if (!parent.contains(key)) throw Error("corrupt bundle: missing field '" + path + "'");
    try {
        return read(parent.at(key));
    } catch (const Error& e) {
        throw Error("corrupt bundle: field '" + path + "': " + e.what());
    } catch (const json::exception& e) {
        throw Error("corrupt bundle: field '" + path + "': " + e.what());
    }
}

ModelBundle bundle_from_json(const json& j) {
    ModelBundle b;
    b.version = field(j, "format_version", "format_version", [](const json& v) { return v.get<std::string>(); });
    if (b.version != kBundleVersion) {
        throw Error("bundle version mismatch in field 'format_version': expected " + std::string(kBundleVersion) +
                    ", found " + b.version);
    }
    field(j, "feature_order", "feature_order", [](const json& v) {
        const auto cls = v.at("classification").get<std::vector<std::string>>();
        const auto reg = v.at("regression").get<std::vector<std::string>>();
        const auto& cn = class_feature_names();
        const auto& rn = reg_feature_names();
        if (cls != std::vector<std::string>(cn.begin(), cn.end()) || reg != std::vector<std::string>(rn.begin(), rn.end())) {
            throw Error("feature order differs from this build");
        }
        return 0;
    });
    b.ensemble.registry = field(j, "registry", "registry", [](const json& v) { return registry_from_json(v); });
    const json& members = field(j, "ensemble", "ensemble", [](const json& v) -> const json& { return v; });
    b.ensemble.random_forest = field(members, "random_forest", "ensemble.random_forest",
                                     [](const json& v) { return v.get<trees::ForestModel>(); });
    b.ensemble.gbdt = field(members, "gbdt", "ensemble.gbdt", [](const json& v) { return v.get<trees::GbdtModel>(); });
    b.ensemble.xgb = field(members, "xgb", "ensemble.xgb", [](const json& v) { return v.get<trees::XgbModel>(); });
    b.ensemble.extra_trees = field(members, "extra_trees", "ensemble.extra_trees",
                                   [](const json& v) { return v.get<trees::ForestModel>(); });
    b.network = field(j, "network", "network.layers", [](const json& v) {
        neural::Network net;
        for (const auto& layer : v.at("layers")) net.layers.push_back(layer_from_json(layer));
        if (net.layers.empty()) throw Error("no layers");
        for (std::size_t l = 1; l < net.layers.size(); ++l) {
            if (net.layers[l].weights.cols() != net.layers[l - 1].weights.rows()) throw Error("layer sizes do not chain");
        }
        if (net.input_size() != static_cast<int>(kRegFeatureCount) || net.output_size() != 1) {
            throw Error("network shape does not match the feature schema");
        }
        return net;
    });
    b.scaler = field(j, "scaler", "scaler", [](const json& v) {
        neural::Scaler s;
        v.at("min").get_to(s.min);
        v.at("max").get_to(s.max);
        if (s.min.size() != kRegFeatureCount || s.max.size() != kRegFeatureCount) throw Error("wrong feature count");
        return s;
    });
    return b;
}

}  // namespace

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir) {
    if (!bundle.fitted()) throw Error("save_bundle: bundle is not fitted");
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / kModelFile, std::ios::binary | std::ios::trunc);
        out << bundle_to_json(bundle).dump(1) << '\n';
        if (!out) throw Error("cannot write " + (dir / kModelFile).string());
    }
    std::ofstream version(dir / kVersionFile, std::ios::binary | std::ios::trunc);
    version << bundle.version << '\n';
    if (!version) throw Error("cannot write " + (dir / kVersionFile).string());
}

ModelBundle load_bundle(const std::filesystem::path& dir) {
    std::ifstream version_in(dir / kVersionFile);
    if (!version_in) throw Error("cannot open " + (dir / kVersionFile).string());
    std::string version;
    std::getline(version_in, version);
    if (version != kBundleVersion) {
        throw Error("bundle version mismatch in " + (dir / kVersionFile).string() + ": expected " +
                    std::string(kBundleVersion) + ", found '" + version + "'");
    }
    std::ifstream in(dir / kModelFile, std::ios::binary);
    if (!in) throw Error("cannot open " + (dir / kModelFile).string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    json j;
    try {
        j = json::parse(buffer.str());
    } catch (const json::exception& e) {
        throw Error("corrupt bundle: " + (dir / kModelFile).string() + ": " + e.what());
    }
    ModelBundle b = bundle_from_json(j);
    if (!b.fitted()) throw Error("corrupt bundle: incomplete model");
    return b;
}

}  // namespace voyagecast
