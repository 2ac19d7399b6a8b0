#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "voyagecast/core_model.hpp"
#include "voyagecast/matrix.hpp"
#include "voyagecast/trees.hpp"

namespace voyagecast::ensemble {

/// Most frequent label; ties go to the lowest label among the tied.
int hard_vote(std::span<const int> votes);

struct ForestParams {
    int n_trees = 100;
    trees::TreeConfig config;

    friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

enum class Member { random_forest, gbdt, xgb, extra_trees };
inline constexpr std::array<Member, 4> kMembers = {Member::random_forest, Member::gbdt, Member::xgb,
                                                   Member::extra_trees};
const char* member_name(Member m);

struct EnsembleConfig {
    ForestParams random_forest{100, trees::random_forest_defaults()};
    trees::BoostConfig gbdt{};
    trees::BoostConfig xgb{};
    ForestParams extra_trees{100, trees::extra_trees_defaults()};

    /// Re-seeds both forests; boosting is deterministic without a seed.
    void set_seed(std::uint64_t seed);
    friend bool operator==(const EnsembleConfig&, const EnsembleConfig&) = default;
};

struct Vote {
    int label = 0;
    std::array<int, 4> members{};  // indexed like kMembers
};

/// The four base classifiers trained on the same features and label coding.
struct VotingEnsemble {
    trees::ForestModel random_forest;
    trees::GbdtModel gbdt;
    trees::XgbModel xgb;
    trees::ForestModel extra_trees;
    PortRegistry registry;

    [[nodiscard]] Vote predict(std::span<const double> x) const;
    [[nodiscard]] int member_predict(Member m, std::span<const double> x) const;
    friend bool operator==(const VotingEnsemble&, const VotingEnsemble&) = default;
};

/// Labels are registry codes. Needs at least two distinct labels.
VotingEnsemble fit_voting_ensemble(const Matrix& x, std::span<const int> labels, const EnsembleConfig& config,
                                   PortRegistry registry);

struct ParamGrid {
    std::vector<ForestParams> random_forest;
    std::vector<trees::BoostConfig> gbdt;
    std::vector<trees::BoostConfig> xgb;
    std::vector<ForestParams> extra_trees;
};

/// Forests: trees in {50,100,200}. Boosting: depth {3,5} x eta {0.05,0.1} x rounds {50,100}.
ParamGrid default_grid(std::uint64_t seed = 0);

/// Reads `key=v1,v2,...` lines ('#' starts a comment). Keys: rf.trees,
/// rf.max_depth, ert.trees, ert.max_depth, gbdt.{depth,eta,rounds},
/// xgb.{depth,eta,rounds,lambda,gamma}. Omitted keys take the default single
/// value; `none` means unbounded depth. The product is enumerated with the
/// keys in the order listed here.
ParamGrid parse_grid(std::istream& in, std::uint64_t seed = 0);

std::string describe(const ForestParams& p);
std::string describe(const trees::BoostConfig& c, bool second_order);

struct ScoreRow {
    std::string model;
    std::string config;
    double accuracy = 0.0;
};

struct GridResult {
    EnsembleConfig best;
    std::vector<ScoreRow> table;
};

/// Scores every candidate by validation accuracy and keeps, per model, the
/// first candidate with the highest score.
GridResult grid_search(const ParamGrid& grid, const Matrix& train_x, std::span<const int> train_y,
                       const Matrix& validation_x, std::span<const int> validation_y, int n_classes);

/// CSV `model,config,accuracy`.
void write_score_table(std::ostream& out, const std::vector<ScoreRow>& table);

}  // namespace voyagecast::ensemble
