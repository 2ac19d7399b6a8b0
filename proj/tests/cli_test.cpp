#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "voyagecast/cli.hpp"
#include "voyagecast/ingest.hpp"

namespace fs = std::filesystem;
using voyagecast::cli::run;

namespace {

struct Output {
    int code = 0;
    std::string out;
    std::string err;
};

Output call(const std::vector<std::string>& args, const std::string& input = {}) {
    std::istringstream in(input);
    std::ostringstream out;
    std::ostringstream err;
    const int code = run(args, in, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::current_path() / "cli_scratch" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

/// A small corpus plus a bundle trained on it, produced once.
const fs::path& trained() {
    static const fs::path root = [] {
        const fs::path dir = scratch("trained");
        REQUIRE(call({"synth", "--ports", "4", "--ships", "6", "--trips-per-ship", "3", "--seed", "11", "--out",
                      (dir / "data").string()})
                    .code == 0);
        const auto r = call({"train", "--data", (dir / "data" / "ais.csv").string(), "--ports",
                             (dir / "data" / "ports.csv").string(), "--out", (dir / "bundle").string(),
                             "--skip-grid-search", "--max-epochs", "5"});
        REQUIRE_MESSAGE(r.code == 0, r.err);
        return dir;
    }();
    return root;
}

}  // namespace

TEST_CASE("synth writes a corpus and is reproducible") {
    const fs::path a = scratch("synth_a");
    const fs::path b = scratch("synth_b");
    for (const auto& dir : {a, b}) {
        const auto r = call({"synth", "--ports", "5", "--ships", "3", "--trips-per-ship", "2", "--seed", "4", "--out",
                             dir.string(), "--late-rate", "0.02"});
        REQUIRE(r.code == 0);
    }
    CHECK(fs::exists(a / "synth.manifest.json"));
    CHECK(slurp(a / "ais.csv") == slurp(b / "ais.csv"));
    CHECK(slurp(a / "ports.csv") == slurp(b / "ports.csv"));
    std::ifstream csv(a / "ais.csv");
    const auto parsed = voyagecast::parse_csv(csv);
    CHECK(parsed.errors.empty());
    CHECK(!parsed.records.empty());
}

TEST_CASE("usage errors exit with 2") {
    CHECK(call({"synth", "--ports", "1", "--out", "x"}).code == voyagecast::cli::kExitUsage);
    CHECK(call({"train", "--data", "a.csv"}).code == voyagecast::cli::kExitUsage);
    CHECK(call({"frobnicate"}).code == voyagecast::cli::kExitUsage);
    CHECK(call({}).code == voyagecast::cli::kExitUsage);
    CHECK(call({"--help"}).code == voyagecast::cli::kExitOk);
}

TEST_CASE("train produces a bundle and side files") {
    const fs::path& dir = trained();
    for (const char* name : {"VERSION", "model.json", "split.csv", "validation.csv", "metrics.csv", "network_loss.csv",
                             "train.manifest.json"}) {
        CHECK_MESSAGE(fs::exists(dir / "bundle" / name), name);
    }
    CHECK(slurp(dir / "bundle" / "VERSION") == "v1\n");
}

TEST_CASE("evaluate reports every threshold and rejects bad data") {
    const fs::path& dir = trained();
    const fs::path out = scratch("evaluate");
    const auto r = call({"evaluate", "--bundle", (dir / "bundle").string(), "--data",
                         (dir / "bundle" / "validation.csv").string(), "--out", out.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const std::string report = slurp(out / "report.txt");
    for (const char* label : {"within 5 min", "within 10 min", "within 20 min", "within 60 min", "port accuracy"}) {
        CHECK_MESSAGE(report.find(label) != std::string::npos, label);
    }
    CHECK(slurp(out / "predictions.csv").rfind("PREDICTED_PORT,ETA_EPOCH_SECONDS,DELTA_MINUTES\n", 0) == 0);

    {
        std::ofstream empty(out / "empty.csv");
        empty << voyagecast::kAisHeader << '\n';
    }
    const auto e = call({"evaluate", "--bundle", (dir / "bundle").string(), "--data", (out / "empty.csv").string(),
                         "--out", out.string()});
    CHECK(e.code == voyagecast::cli::kExitRuntime);
    CHECK(e.err.find("error:") != std::string::npos);

    {
        std::ofstream unlabeled(out / "unlabeled.csv");
        unlabeled << voyagecast::kAisHeader << '\n';
        unlabeled << "S1,70,12.0,15.0,36.0,90.0,90.0,1520000000,PORT_000,,,,\n";
    }
    const auto u = call({"evaluate", "--bundle", (dir / "bundle").string(), "--data",
                         (out / "unlabeled.csv").string(), "--out", out.string()});
    CHECK(u.code == voyagecast::cli::kExitRuntime);
    CHECK(u.err.find("unlabeled") != std::string::npos);
}

TEST_CASE("serve answers per line and fails on a bad bundle") {
    const fs::path& dir = trained();
    const std::string line = "S1,70,12.0,15.0,36.0,90.0,90.0,1520000000,PORT_000,,,,\n";
    const auto ok = call({"serve", "--bundle", (dir / "bundle").string()}, line + "garbage\n" + line);
    CHECK(ok.code == 0);
    CHECK(std::count(ok.out.begin(), ok.out.end(), '\n') == 2);
    CHECK(ok.err.rfind("ERROR,2,", 0) == 0);

    CHECK(call({"serve", "--bundle", (dir / "bundle").string()}, "").code == 0);
    CHECK(call({"serve", "--bundle", (fs::current_path() / "no_such_bundle").string()}, line).code ==
          voyagecast::cli::kExitRuntime);
}

TEST_CASE("cluster writes centers") {
    const fs::path& dir = trained();
    const fs::path out = scratch("cluster") / "clusters.csv";
    const auto r = call({"cluster", "--data", (dir / "data" / "ais.csv").string(), "--out", out.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(fs::exists(out));
    CHECK(fs::exists(out.string() + ".manifest.json"));
}

TEST_CASE("replay reproduces a run and checks its inputs") {
    const fs::path dir = scratch("replay");
    REQUIRE(call({"synth", "--ports", "3", "--ships", "2", "--trips-per-ship", "1", "--seed", "2", "--out",
                  (dir / "d").string()})
                .code == 0);
    const std::string before = slurp(dir / "d" / "ais.csv");
    fs::remove(dir / "d" / "ais.csv");
    REQUIRE(call({"replay", "--manifest", (dir / "d" / "synth.manifest.json").string()}).code == 0);
    CHECK(slurp(dir / "d" / "ais.csv") == before);

    const auto c = call({"cluster", "--data", (dir / "d" / "ais.csv").string(), "--out", (dir / "c.csv").string()});
    REQUIRE(c.code == 0);
    {
        std::ofstream tamper(dir / "d" / "ais.csv", std::ios::app);
        tamper << "S9,70,12.0,15.0,36.0,90.0,90.0,1520000000,PORT_000,,,,\n";
    }
    const auto r = call({"replay", "--manifest", (dir / "c.csv.manifest.json").string()});
    CHECK(r.code == voyagecast::cli::kExitRuntime);
    CHECK(r.err.find("input changed") != std::string::npos);
}

#ifdef VOYAGECAST_CLI_PATH
TEST_CASE("the installed binary reports its version") {
    const std::string cmd = std::string(VOYAGECAST_CLI_PATH) + " --version > cli_version.txt";
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(slurp("cli_version.txt").find("voyagecast") != std::string::npos);
}
#endif
