#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bundle_fixture.hpp"
#include "voyagecast/pipeline.hpp"

using namespace voyagecast;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("voyagecast_bundle_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

}  // namespace

TEST_CASE("bundle round trip predicts identically") {
    const auto& run = fixture::small_run();
    const auto dir = scratch("roundtrip");
    save_bundle(run.outcome.bundle, dir);
    CHECK(slurp(dir / "VERSION") == "v1\n");
    const ModelBundle loaded = load_bundle(dir);
    CHECK(loaded.version == "v1");
    CHECK(loaded.ensemble == run.outcome.bundle.ensemble);
    CHECK(loaded.network == run.outcome.bundle.network);
    CHECK(loaded.scaler == run.outcome.bundle.scaler);
    std::size_t n = 0;
    for (const auto& r : run.outcome.validation_records) {
        if (++n > 100) break;
        CHECK(predict_tuple(loaded, r) == predict_tuple(run.outcome.bundle, r));
    }

    const auto again = scratch("roundtrip_again");
    save_bundle(loaded, again);
    CHECK(slurp(again / "model.json") == slurp(dir / "model.json"));
    fs::remove_all(dir);
    fs::remove_all(again);
}

TEST_CASE("bundle loading rejects damage") {
    const auto& run = fixture::small_run();
    const auto dir = scratch("damage");
    save_bundle(run.outcome.bundle, dir);
    const std::string model = slurp(dir / "model.json");

    spit(dir / "model.json", model.substr(0, model.size() / 2));
    CHECK_THROWS_WITH_AS(load_bundle(dir), doctest::Contains("corrupt bundle"), Error);

    auto doc = nlohmann::json::parse(model);
    doc.erase("scaler");
    spit(dir / "model.json", doc.dump());
    CHECK_THROWS_WITH_AS(load_bundle(dir), doctest::Contains("scaler"), Error);

    doc = nlohmann::json::parse(model);
    doc["network"]["layers"][0]["weights"].erase(0);
    spit(dir / "model.json", doc.dump());
    CHECK_THROWS_WITH_AS(load_bundle(dir), doctest::Contains("network"), Error);

    doc = nlohmann::json::parse(model);
    doc["format_version"] = "v0";
    spit(dir / "model.json", doc.dump());
    CHECK_THROWS_WITH_AS(load_bundle(dir), doctest::Contains("format_version"), Error);

    spit(dir / "model.json", model);
    spit(dir / "VERSION", "v2\n");
    CHECK_THROWS_WITH_AS(load_bundle(dir), doctest::Contains("version mismatch"), Error);

    CHECK_THROWS_AS(load_bundle(dir / "missing"), Error);
    CHECK_THROWS_AS(save_bundle(ModelBundle{}, dir / "unfitted"), Error);
    fs::remove_all(dir);
}
