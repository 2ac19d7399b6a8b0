#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "voyagecast/matrix.hpp"

namespace voyagecast::trees {

enum class Task { classification, regression };
enum class ThresholdMode { best, random };

struct TreeConfig {
    Task task = Task::classification;
    std::optional<int> max_depth;           // unbounded when empty
    int min_samples_split = 2;
    std::optional<int> features_per_split;  // all features when empty (forests default to floor(sqrt(d)))
    ThresholdMode threshold_mode = ThresholdMode::best;
    bool bootstrap = false;
    std::uint64_t seed = 0;

    friend bool operator==(const TreeConfig&, const TreeConfig&) = default;
};

/// Internal nodes route x to `left` when x[feature] <= threshold. Leaves hold
/// raw class counts (classification) or a single value (regression and
/// second-order boosting).
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> value;

    [[nodiscard]] bool is_leaf() const { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
    Task task = Task::classification;
    int n_features = 0;
    int n_outputs = 1;  // class count for classification
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    [[nodiscard]] const TreeNode& leaf_for(std::span<const double> x) const;
    [[nodiscard]] int depth() const;
    friend bool operator==(const Tree&, const Tree&) = default;
};

/// Weighted Gini impurity of a class histogram: 1 - sum p_k^2.
double gini(std::span<const double> counts);

/// Classification tree minimising child Gini impurity. `n_classes` of 0 means
/// max(label) + 1. `rows` selects (and may repeat) training rows; empty means
/// every row once.
Tree fit_tree(const Matrix& x, std::span<const int> labels, const TreeConfig& config, int n_classes = 0,
              std::span<const std::size_t> rows = {});

/// Regression tree minimising child sum of squared errors.
Tree fit_tree(const Matrix& x, std::span<const double> targets, const TreeConfig& config,
              std::span<const std::size_t> rows = {});

/// Second-order tree on per-row gradient/hessian pairs: leaf weight
/// -G/(H+lambda), split gain 1/2[GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)] - gamma,
/// splits with gain <= 0 rejected.
Tree fit_second_order_tree(const Matrix& x, std::span<const double> gradients, std::span<const double> hessians,
                           int max_depth, double lambda, double gamma);

/// Normalised leaf histogram.
std::vector<double> predict_distribution(const Tree& tree, std::span<const double> x);
double predict_value(const Tree& tree, std::span<const double> x);

/// Lowest index wins ties.
int argmax(std::span<const double> scores);

struct ClassPrediction {
    int label = 0;
    std::vector<double> scores;
};

struct ForestModel {
    std::vector<Tree> trees;
    TreeConfig config;
    int n_classes = 0;

    friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

/// Bootstrap sample per tree (when config.bootstrap), features_per_split
/// defaulting to floor(sqrt(d)), tree i seeded with config.seed + i.
ForestModel fit_random_forest(const Matrix& x, std::span<const int> labels, int n_trees, TreeConfig config,
                              int n_classes = 0);

/// Random forest with bootstrap off and random thresholds.
ForestModel fit_extra_trees(const Matrix& x, std::span<const int> labels, int n_trees, TreeConfig config,
                            int n_classes = 0);

TreeConfig random_forest_defaults(std::uint64_t seed = 0);
TreeConfig extra_trees_defaults(std::uint64_t seed = 0);

/// Shared state of both boosted classifiers. Scores live only for the classes
/// present in the training labels; `trees` is round-major with one tree per
/// present class per round.
struct BoostedModel {
    int n_classes = 0;
    std::vector<int> classes;
    std::vector<double> initial_scores;
    double learning_rate = 0.1;
    int max_depth = 3;
    int rounds = 0;
    std::vector<Tree> trees;
    std::vector<double> train_loss;  // mean cross-entropy before round 1, then after each round

    [[nodiscard]] std::vector<double> raw_scores(std::span<const double> x) const;
    friend bool operator==(const BoostedModel&, const BoostedModel&) = default;
};

struct GbdtModel : BoostedModel {
    friend bool operator==(const GbdtModel&, const GbdtModel&) = default;
};

struct XgbModel : BoostedModel {
    double lambda = 1.0;
    double gamma = 0.0;
    friend bool operator==(const XgbModel&, const XgbModel&) = default;
};

struct BoostConfig {
    int rounds = 100;
    int max_depth = 3;
    double learning_rate = 0.1;
    double lambda = 1.0;  // second-order only
    double gamma = 0.0;   // second-order only

    friend bool operator==(const BoostConfig&, const BoostConfig&) = default;
};

/// Multiclass gradient boosting: per round one variance tree per class on
/// one_hot(y) - softmax(scores), scores += eta * tree output, starting from
/// log class priors. Throws "degenerate classification" on a single class.
GbdtModel fit_gbdt(const Matrix& x, std::span<const int> labels, int rounds, int max_depth, double learning_rate,
                   int n_classes = 0);

/// Second-order boosting on softmax cross-entropy (g = p - y, h = p(1-p)).
XgbModel fit_xgb(const Matrix& x, std::span<const int> labels, int rounds, int max_depth, double learning_rate,
                 double lambda, double gamma, int n_classes = 0);

/// Forest: mean of leaf distributions. Boosted: softmax of scores. Score
/// vectors always span n_classes entries.
ClassPrediction predict_class(const ForestModel& model, std::span<const double> x);
ClassPrediction predict_class(const BoostedModel& model, std::span<const double> x);

std::vector<double> softmax(std::span<const double> scores);

/// Mean softmax cross-entropy of a boosted model on (x, labels).
double cross_entropy(const BoostedModel& model, const Matrix& x, std::span<const int> labels);

}  // namespace voyagecast::trees
