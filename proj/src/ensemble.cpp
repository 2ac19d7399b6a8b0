#include "voyagecast/ensemble.hpp"

#include <algorithm>
#include <functional>
#include <istream>
#include <map>
#include <ostream>

#include "voyagecast/csv.hpp"
#include "voyagecast/parallel.hpp"

namespace voyagecast::ensemble {

int hard_vote(std::span<const int> votes) {
    if (votes.empty()) throw Error("hard_vote: empty vote list");
    std::map<int, int> tally;
    for (int v : votes) ++tally[v];
    int best = tally.begin()->first;
    int best_count = 0;
    // std::map iterates labels ascending, so the first maximum is the lowest.
    for (const auto& [label, count] : tally) {
        if (count > best_count) {
            best = label;
            best_count = count;
        }
    }
    return best;
}

const char* member_name(Member m) {
    switch (m) {
        case Member::random_forest: return "random_forest";
        case Member::gbdt: return "gbdt";
        case Member::xgb: return "xgb";
        case Member::extra_trees: return "extra_trees";
    }
    return "?";
}

void EnsembleConfig::set_seed(std::uint64_t seed) {
    random_forest.config.seed = seed;
    extra_trees.config.seed = seed;
}

int VotingEnsemble::member_predict(Member m, std::span<const double> x) const {
    switch (m) {
        case Member::random_forest: return trees::predict_class(random_forest, x).label;
        case Member::gbdt: return trees::predict_class(gbdt, x).label;
        case Member::xgb: return trees::predict_class(xgb, x).label;
        case Member::extra_trees: return trees::predict_class(extra_trees, x).label;
    }
    throw Error("unknown ensemble member");
}

Vote VotingEnsemble::predict(std::span<const double> x) const {
    Vote v;
    for (std::size_t i = 0; i < kMembers.size(); ++i) v.members[i] = member_predict(kMembers[i], x);
    v.label = hard_vote(v.members);
    return v;
}

VotingEnsemble fit_voting_ensemble(const Matrix& x, std::span<const int> labels, const EnsembleConfig& config,
                                   PortRegistry registry) {
    if (registry.empty()) throw Error("fit_voting_ensemble: empty port registry");
    std::vector<int> distinct(labels.begin(), labels.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) throw Error("fit_voting_ensemble: need at least 2 classes");
    if (distinct.front() < 0 || distinct.back() >= registry.size()) {
        throw Error("fit_voting_ensemble: label outside the port registry");
    }
    const int k = registry.size();
    VotingEnsemble e;
    e.registry = std::move(registry);
    e.random_forest = trees::fit_random_forest(x, labels, config.random_forest.n_trees, config.random_forest.config, k);
    e.gbdt = trees::fit_gbdt(x, labels, config.gbdt.rounds, config.gbdt.max_depth, config.gbdt.learning_rate, k);
    e.xgb = trees::fit_xgb(x, labels, config.xgb.rounds, config.xgb.max_depth, config.xgb.learning_rate,
                           config.xgb.lambda, config.xgb.gamma, k);
    e.extra_trees = trees::fit_extra_trees(x, labels, config.extra_trees.n_trees, config.extra_trees.config, k);
    return e;
}

ParamGrid default_grid(std::uint64_t seed) {
    ParamGrid grid;
    for (int n : {50, 100, 200}) {
        grid.random_forest.push_back({n, trees::random_forest_defaults(seed)});
        grid.extra_trees.push_back({n, trees::extra_trees_defaults(seed)});
    }
    for (int depth : {3, 5}) {
        for (double eta : {0.05, 0.1}) {
            for (int rounds : {50, 100}) {
                trees::BoostConfig c;
                c.max_depth = depth;
                c.learning_rate = eta;
                c.rounds = rounds;
                grid.gbdt.push_back(c);
                grid.xgb.push_back(c);
            }
        }
    }
    return grid;
}

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> values_of(const std::map<std::string, std::vector<std::string>>& kv, const std::string& key,
                                   const std::string& fallback) {
    const auto it = kv.find(key);
    return it == kv.end() ? std::vector<std::string>{fallback} : it->second;
}

int to_int(const std::string& key, const std::string& text) {
    const auto v = csv::parse_int(text);
    if (!v) throw Error("grid: " + key + " value '" + text + "' is not an integer");
    return static_cast<int>(*v);
}

double to_double(const std::string& key, const std::string& text) {
    const auto v = csv::parse_double(text);
    if (!v) throw Error("grid: " + key + " value '" + text + "' is not numeric");
    return *v;
}

std::optional<int> to_depth(const std::string& key, const std::string& text) {
    if (text == "none") return std::nullopt;
    return to_int(key, text);
}

std::vector<ForestParams> forest_grid(const std::map<std::string, std::vector<std::string>>& kv,
                                      const std::string& prefix, const trees::TreeConfig& base) {
    std::vector<ForestParams> out;
    for (const auto& t : values_of(kv, prefix + ".trees", "100")) {
        for (const auto& d : values_of(kv, prefix + ".max_depth", "none")) {
            ForestParams p{to_int(prefix + ".trees", t), base};
            p.config.max_depth = to_depth(prefix + ".max_depth", d);
            out.push_back(p);
        }
    }
    return out;
}

std::vector<trees::BoostConfig> boost_grid(const std::map<std::string, std::vector<std::string>>& kv,
                                           const std::string& prefix, bool second_order) {
    std::vector<trees::BoostConfig> out;
    const auto lambdas = second_order ? values_of(kv, prefix + ".lambda", "1") : std::vector<std::string>{"1"};
    const auto gammas = second_order ? values_of(kv, prefix + ".gamma", "0") : std::vector<std::string>{"0"};
    for (const auto& depth : values_of(kv, prefix + ".depth", "3")) {
        for (const auto& eta : values_of(kv, prefix + ".eta", "0.1")) {
            for (const auto& rounds : values_of(kv, prefix + ".rounds", "100")) {
                for (const auto& lambda : lambdas) {
                    for (const auto& gamma : gammas) {
                        trees::BoostConfig c;
                        c.max_depth = to_int(prefix + ".depth", depth);
                        c.learning_rate = to_double(prefix + ".eta", eta);
                        c.rounds = to_int(prefix + ".rounds", rounds);
                        c.lambda = to_double(prefix + ".lambda", lambda);
                        c.gamma = to_double(prefix + ".gamma", gamma);
                        out.push_back(c);
                    }
                }
            }
        }
    }
    return out;
}

}  // namespace

ParamGrid parse_grid(std::istream& in, std::uint64_t seed) {
    static const std::vector<std::string> known = {"rf.trees",   "rf.max_depth", "ert.trees",  "ert.max_depth",
                                                   "gbdt.depth", "gbdt.eta",     "gbdt.rounds", "xgb.depth",
                                                   "xgb.eta",    "xgb.rounds",   "xgb.lambda", "xgb.gamma"};
    std::map<std::string, std::vector<std::string>> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error("grid: line " + std::to_string(line_no) + " lacks '='");
        const std::string key = trim(line.substr(0, eq));
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw Error("grid: unknown key '" + key + "'");
        }
        std::vector<std::string> values;
        for (auto& v : csv::split_line(line.substr(eq + 1))) {
            v = trim(v);
            if (!v.empty()) values.push_back(v);
        }
        if (values.empty()) throw Error("empty grid for key '" + key + "'");
        kv[key] = std::move(values);
    }
    ParamGrid grid;
    grid.random_forest = forest_grid(kv, "rf", trees::random_forest_defaults(seed));
    grid.gbdt = boost_grid(kv, "gbdt", false);
    grid.xgb = boost_grid(kv, "xgb", true);
    grid.extra_trees = forest_grid(kv, "ert", trees::extra_trees_defaults(seed));
    return grid;
}

std::string describe(const ForestParams& p) {
    return "trees=" + std::to_string(p.n_trees) +
           ";max_depth=" + (p.config.max_depth ? std::to_string(*p.config.max_depth) : std::string("none"));
}

std::string describe(const trees::BoostConfig& c, bool second_order) {
    std::string s = "depth=" + std::to_string(c.max_depth) + ";eta=" + csv::format_double(c.learning_rate) +
                    ";rounds=" + std::to_string(c.rounds);
    if (second_order) s += ";lambda=" + csv::format_double(c.lambda) + ";gamma=" + csv::format_double(c.gamma);
    return s;
}

GridResult grid_search(const ParamGrid& grid, const Matrix& train_x, std::span<const int> train_y,
                       const Matrix& validation_x, std::span<const int> validation_y, int n_classes) {
    if (grid.random_forest.empty() || grid.gbdt.empty() || grid.xgb.empty() || grid.extra_trees.empty()) {
        throw Error("grid_search: empty grid");
    }
    if (validation_x.rows() == 0 || validation_x.rows() != validation_y.size()) {
        throw Error("grid_search: empty or inconsistent validation set");
    }

    std::vector<Member> members;
    std::vector<std::size_t> indices;
    std::vector<std::string> descriptions;
    auto add = [&](Member m, std::size_t count, const std::function<std::string(std::size_t)>& describe_fn) {
        for (std::size_t i = 0; i < count; ++i) {
            members.push_back(m);
            indices.push_back(i);
            descriptions.push_back(describe_fn(i));
        }
    };
    add(Member::random_forest, grid.random_forest.size(), [&](std::size_t i) { return describe(grid.random_forest[i]); });
    add(Member::gbdt, grid.gbdt.size(), [&](std::size_t i) { return describe(grid.gbdt[i], false); });
    add(Member::xgb, grid.xgb.size(), [&](std::size_t i) { return describe(grid.xgb[i], true); });
    add(Member::extra_trees, grid.extra_trees.size(), [&](std::size_t i) { return describe(grid.extra_trees[i]); });

    auto accuracy_of = [&](const auto& predict) {
        std::size_t hits = 0;
        for (std::size_t r = 0; r < validation_x.rows(); ++r) {
            if (predict(validation_x.row(r)) == validation_y[r]) ++hits;
        }
        return static_cast<double>(hits) / static_cast<double>(validation_x.rows());
    };

    std::vector<double> scores(members.size(), 0.0);
    parallel_for(members.size(), [&](std::size_t t) {
        const std::size_t i = indices[t];
        switch (members[t]) {
            case Member::random_forest: {
                const auto& p = grid.random_forest[i];
                const auto m = trees::fit_random_forest(train_x, train_y, p.n_trees, p.config, n_classes);
                scores[t] = accuracy_of([&](auto x) { return trees::predict_class(m, x).label; });
                break;
            }
            case Member::gbdt: {
                const auto& c = grid.gbdt[i];
                const auto m = trees::fit_gbdt(train_x, train_y, c.rounds, c.max_depth, c.learning_rate, n_classes);
                scores[t] = accuracy_of([&](auto x) { return trees::predict_class(m, x).label; });
                break;
            }
            case Member::xgb: {
                const auto& c = grid.xgb[i];
                const auto m = trees::fit_xgb(train_x, train_y, c.rounds, c.max_depth, c.learning_rate, c.lambda,
                                              c.gamma, n_classes);
                scores[t] = accuracy_of([&](auto x) { return trees::predict_class(m, x).label; });
                break;
            }
            case Member::extra_trees: {
                const auto& p = grid.extra_trees[i];
                const auto m = trees::fit_extra_trees(train_x, train_y, p.n_trees, p.config, n_classes);
                scores[t] = accuracy_of([&](auto x) { return trees::predict_class(m, x).label; });
                break;
            }
        }
    });

    GridResult result;
    std::array<std::optional<std::size_t>, 4> best{};
    for (std::size_t t = 0; t < members.size(); ++t) {
        result.table.push_back({member_name(members[t]), descriptions[t], scores[t]});
        auto& b = best[static_cast<std::size_t>(members[t])];
        if (!b || scores[t] > scores[*b]) b = t;
    }
    result.best.random_forest = grid.random_forest[indices[*best[0]]];
    result.best.gbdt = grid.gbdt[indices[*best[1]]];
    result.best.xgb = grid.xgb[indices[*best[2]]];
    result.best.extra_trees = grid.extra_trees[indices[*best[3]]];
    return result;
}

void write_score_table(std::ostream& out, const std::vector<ScoreRow>& table) {
    out << "model,config,accuracy\n";
    for (const auto& row : table) {
        out << row.model << ',' << csv::escape(row.config) << ',' << csv::format_double(row.accuracy) << '\n';
    }
}

}  // namespace voyagecast::ensemble
