#include "voyagecast/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "voyagecast/core_model.hpp"
#include "voyagecast/parallel.hpp"
#include "voyagecast/rng.hpp"

namespace voyagecast::trees {

namespace {

using Index = std::uint32_t;

/// Feature columns of the training sample plus, per feature, the sample
/// positions ordered by (value, position).
struct Presorted {
    std::vector<std::vector<double>> columns;
    std::vector<std::vector<Index>> sorted;

    Presorted(const Matrix& x, std::span<const std::size_t> rows) {
        const std::size_t m = rows.empty() ? x.rows() : rows.size();
        columns.assign(x.cols(), std::vector<double>(m));
        for (std::size_t pos = 0; pos < m; ++pos) {
            const std::size_t r = rows.empty() ? pos : rows[pos];
            for (std::size_t f = 0; f < x.cols(); ++f) columns[f][pos] = x(r, f);
        }
        sorted.resize(x.cols());
        for (std::size_t f = 0; f < x.cols(); ++f) {
            auto& order = sorted[f];
            order.resize(m);
            std::iota(order.begin(), order.end(), Index{0});
            const auto& col = columns[f];
            std::sort(order.begin(), order.end(), [&col](Index a, Index b) {
                return col[a] < col[b] || (col[a] == col[b] && a < b);
            });
        }
    }

    [[nodiscard]] std::size_t samples() const { return columns.empty() ? 0 : columns.front().size(); }
};

// Exact comparison of sum(cL^2)/nL + sum(cR^2)/nR via cross-multiplication.
struct Fraction {
    __int128 num = 0;
    __int128 den = 1;

    friend bool operator<(const Fraction& a, const Fraction& b) { return a.num * b.den < b.num * a.den; }
    friend bool operator==(const Fraction& a, const Fraction& b) { return a.num * b.den == b.num * a.den; }
};

class GiniCriterion {
public:
    using Score = Fraction;

    GiniCriterion(std::vector<int> labels, int n_classes) : labels_(std::move(labels)), k_(n_classes) {}

    void begin_node(std::span<const Index> node) {
        total_.assign(static_cast<std::size_t>(k_), 0);
        for (Index p : node) ++total_[static_cast<std::size_t>(labels_[p])];
        n_ = static_cast<std::int64_t>(node.size());
    }

    [[nodiscard]] bool pure() const {
        return std::any_of(total_.begin(), total_.end(), [this](std::int64_t c) { return c == n_; });
    }

    [[nodiscard]] std::vector<double> leaf() const { return {total_.begin(), total_.end()}; }

    void reset_scan() {
        left_.assign(total_.size(), 0);
        nl_ = 0;
        sq_left_ = 0;
        sq_right_ = 0;
        for (std::int64_t c : total_) sq_right_ += static_cast<__int128>(c) * c;
    }

    void move_left(Index p) {
        const auto k = static_cast<std::size_t>(labels_[p]);
        const std::int64_t right = total_[k] - left_[k];
        sq_right_ -= 2 * right - 1;
        sq_left_ += 2 * left_[k] + 1;
        ++left_[k];
        ++nl_;
    }

    [[nodiscard]] bool valid() const { return nl_ > 0 && nl_ < n_; }

    [[nodiscard]] Score score() const {
        const std::int64_t nr = n_ - nl_;
        return {sq_left_ * nr + sq_right_ * nl_, static_cast<__int128>(nl_) * nr};
    }

private:
    std::vector<int> labels_;
    int k_;
    std::vector<std::int64_t> total_;
    std::vector<std::int64_t> left_;
    std::int64_t n_ = 0;
    std::int64_t nl_ = 0;
    __int128 sq_left_ = 0;
    __int128 sq_right_ = 0;
};

class VarianceCriterion {
public:
    using Score = double;

    explicit VarianceCriterion(std::vector<double> targets) : targets_(std::move(targets)) {}

    void begin_node(std::span<const Index> node) {
        sum_ = 0.0;
        lo_ = hi_ = targets_[node.front()];
        for (Index p : node) {
            sum_ += targets_[p];
            lo_ = std::min(lo_, targets_[p]);
            hi_ = std::max(hi_, targets_[p]);
        }
        n_ = static_cast<std::int64_t>(node.size());
    }

    [[nodiscard]] bool pure() const { return lo_ == hi_; }
    [[nodiscard]] std::vector<double> leaf() const { return {sum_ / static_cast<double>(n_)}; }

    void reset_scan() {
        sl_ = 0.0;
        nl_ = 0;
    }

    void move_left(Index p) {
        sl_ += targets_[p];
        ++nl_;
    }

    [[nodiscard]] bool valid() const { return nl_ > 0 && nl_ < n_; }

    // Maximising SL^2/nL + SR^2/nR minimises the children's squared error.
    [[nodiscard]] Score score() const {
        const double sr = sum_ - sl_;
        return sl_ * sl_ / static_cast<double>(nl_) + sr * sr / static_cast<double>(n_ - nl_);
    }

private:
    std::vector<double> targets_;
    double sum_ = 0.0;
    double lo_ = 0.0;
    double hi_ = 0.0;
    std::int64_t n_ = 0;
    double sl_ = 0.0;
    std::int64_t nl_ = 0;
};

class SecondOrderCriterion {
public:
    using Score = double;

    SecondOrderCriterion(std::vector<double> g, std::vector<double> h, double lambda, double gamma)
        : g_(std::move(g)), h_(std::move(h)), lambda_(lambda), gamma_(gamma) {}

    void begin_node(std::span<const Index> node) {
        gsum_ = 0.0;
        hsum_ = 0.0;
        for (Index p : node) {
            gsum_ += g_[p];
            hsum_ += h_[p];
        }
        n_ = static_cast<std::int64_t>(node.size());
    }

    [[nodiscard]] bool pure() const { return false; }
    [[nodiscard]] std::vector<double> leaf() const { return {-gsum_ / (hsum_ + lambda_)}; }

    void reset_scan() {
        gl_ = 0.0;
        hl_ = 0.0;
        nl_ = 0;
    }

    void move_left(Index p) {
        gl_ += g_[p];
        hl_ += h_[p];
        ++nl_;
    }

    [[nodiscard]] bool valid() const { return nl_ > 0 && nl_ < n_ && score() > 0.0; }

    [[nodiscard]] Score score() const {
        const double gr = gsum_ - gl_;
        const double hr = hsum_ - hl_;
        return 0.5 * (gl_ * gl_ / (hl_ + lambda_) + gr * gr / (hr + lambda_) -
                      gsum_ * gsum_ / (hsum_ + lambda_)) -
               gamma_;
    }

private:
    std::vector<double> g_;
    std::vector<double> h_;
    double lambda_;
    double gamma_;
    double gsum_ = 0.0;
    double hsum_ = 0.0;
    std::int64_t n_ = 0;
    double gl_ = 0.0;
    double hl_ = 0.0;
    std::int64_t nl_ = 0;
};

struct BuildSettings {
    Task task = Task::classification;
    std::optional<int> max_depth;
    int min_samples_split = 2;
    int features_per_split = 0;
    ThresholdMode mode = ThresholdMode::best;
    int n_outputs = 1;
};

double midpoint(double a, double b) {
    const double m = (a + b) / 2.0;
    return m < b ? m : a;
}

template <typename Criterion>
class TreeBuilder {
public:
    TreeBuilder(const Presorted& data, Criterion criterion, BuildSettings settings, Rng& rng)
        : columns_(data.columns),
          sorted_(data.sorted),
          criterion_(std::move(criterion)),
          settings_(settings),
          rng_(rng),
          goes_left_(data.samples()),
          scratch_(data.samples()) {}

    Tree build() {
        Tree tree;
        tree.task = settings_.task;
        tree.n_features = static_cast<int>(sorted_.size());
        tree.n_outputs = settings_.n_outputs;
        tree.nodes.emplace_back();

        struct Work {
            int node;
            std::size_t begin;
            std::size_t end;
            int depth;
        };
        std::vector<Work> stack{{0, 0, sorted_.front().size(), 0}};
        while (!stack.empty()) {
            const Work w = stack.back();
            stack.pop_back();
            const std::span<const Index> node(sorted_.front().data() + w.begin, w.end - w.begin);
            criterion_.begin_node(node);

            const bool depth_reached = settings_.max_depth && w.depth >= *settings_.max_depth;
            const bool too_small = static_cast<int>(node.size()) < settings_.min_samples_split;
            std::optional<Split> split;
            if (!depth_reached && !too_small && !criterion_.pure()) {
                split = find_split(w.begin, w.end);
            }
            if (!split) {
                tree.nodes[static_cast<std::size_t>(w.node)].value = criterion_.leaf();
                continue;
            }
            const std::size_t mid = partition(w.begin, w.end, *split);
            const int left = static_cast<int>(tree.nodes.size());
            TreeNode& parent = tree.nodes[static_cast<std::size_t>(w.node)];
            parent.feature = split->feature;
            parent.threshold = split->threshold;
            parent.left = left;
            parent.right = left + 1;
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            stack.push_back({left + 1, mid, w.end, w.depth + 1});
            stack.push_back({left, w.begin, mid, w.depth + 1});
        }
        return tree;
    }

private:
    using Score = typename Criterion::Score;

    struct Split {
        Score score;
        int feature;
        double threshold;
    };

    static bool better(const Split& candidate, const std::optional<Split>& best) {
        if (!best) return true;
        if (best->score < candidate.score) return true;
        if (!(candidate.score == best->score)) return false;
        if (candidate.feature != best->feature) return candidate.feature < best->feature;
        return candidate.threshold < best->threshold;
    }

    std::vector<int> candidate_features() {
        const int d = static_cast<int>(sorted_.size());
        std::vector<int> features(static_cast<std::size_t>(d));
        std::iota(features.begin(), features.end(), 0);
        if (settings_.features_per_split < d) {
            rng_.shuffle(std::span<int>(features));
        }
        return features;
    }

    std::optional<Split> find_split(std::size_t begin, std::size_t end) {
        std::optional<Split> best;
        int evaluated = 0;
        for (const int f : candidate_features()) {
            const auto& col = columns_[static_cast<std::size_t>(f)];
            const std::span<const Index> order(sorted_[static_cast<std::size_t>(f)].data() + begin, end - begin);
            const double lo = col[order.front()];
            const double hi = col[order.back()];
            if (lo == hi) continue;  // constant in this node: no gain, not counted

            criterion_.reset_scan();
            if (settings_.mode == ThresholdMode::best) {
                for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                    criterion_.move_left(order[i]);
                    const double v = col[order[i]];
                    const double next = col[order[i + 1]];
                    if (v < next && criterion_.valid()) {
                        Split s{criterion_.score(), f, midpoint(v, next)};
                        if (better(s, best)) best = s;
                    }
                }
            } else {
                double threshold = lo + rng_.uniform_open() * (hi - lo);
                if (!(threshold < hi)) threshold = lo;
                for (std::size_t i = 0; i < order.size() && col[order[i]] <= threshold; ++i) {
                    criterion_.move_left(order[i]);
                }
                if (criterion_.valid()) {
                    Split s{criterion_.score(), f, threshold};
                    if (better(s, best)) best = s;
                }
            }
            if (++evaluated >= settings_.features_per_split) break;
        }
        return best;
    }

    // Stable partition of every feature's order so each child keeps sorted runs.
    std::size_t partition(std::size_t begin, std::size_t end, const Split& split) {
        const auto& col = columns_[static_cast<std::size_t>(split.feature)];
        for (std::size_t i = begin; i < end; ++i) {
            const Index p = sorted_.front()[i];
            goes_left_[p] = col[p] <= split.threshold ? 1 : 0;
        }
        std::size_t mid = begin;
        for (auto& order : sorted_) {
            std::size_t write = begin;
            std::size_t spill = 0;
            for (std::size_t i = begin; i < end; ++i) {
                const Index p = order[i];
                if (goes_left_[p]) {
                    order[write++] = p;
                } else {
                    scratch_[spill++] = p;
                }
            }
            std::copy_n(scratch_.begin(), spill, order.begin() + static_cast<std::ptrdiff_t>(write));
            mid = write;
        }
        return mid;
    }

    const std::vector<std::vector<double>>& columns_;
    std::vector<std::vector<Index>> sorted_;
    Criterion criterion_;
    BuildSettings settings_;
    Rng& rng_;
    std::vector<std::uint8_t> goes_left_;
    std::vector<Index> scratch_;
};

void check_inputs(const Matrix& x, std::size_t n_targets, std::span<const std::size_t> rows) {
    if (x.rows() == 0 || x.cols() == 0) throw Error("fit_tree: empty input");
    if (n_targets != x.rows()) {
        throw Error("fit_tree: " + std::to_string(x.rows()) + " rows but " + std::to_string(n_targets) + " targets");
    }
    for (std::size_t r : rows) {
        if (r >= x.rows()) throw Error("fit_tree: sample row out of range");
    }
}

BuildSettings settings_from(const TreeConfig& config, std::size_t n_features) {
    const int d = static_cast<int>(n_features);
    const int k = config.features_per_split.value_or(d);
    if (k < 1 || k > d) {
        throw Error("features_per_split must be in [1, " + std::to_string(d) + "], got " + std::to_string(k));
    }
    if (config.min_samples_split < 2) throw Error("min_samples_split must be >= 2");
    if (config.max_depth && *config.max_depth < 0) throw Error("max_depth must be >= 0");
    return {config.task, config.max_depth, config.min_samples_split, k, config.threshold_mode, 1};
}

int infer_classes(std::span<const int> labels, int n_classes) {
    int max_label = -1;
    for (int y : labels) {
        if (y < 0) throw Error("class labels must be non-negative");
        max_label = std::max(max_label, y);
    }
    if (n_classes == 0) return max_label + 1;
    if (max_label >= n_classes) throw Error("class label exceeds n_classes");
    return n_classes;
}

std::vector<int> gather(std::span<const int> labels, std::span<const std::size_t> rows) {
    if (rows.empty()) return {labels.begin(), labels.end()};
    std::vector<int> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = labels[rows[i]];
    return out;
}

std::vector<double> gather(std::span<const double> values, std::span<const std::size_t> rows) {
    if (rows.empty()) return {values.begin(), values.end()};
    std::vector<double> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = values[rows[i]];
    return out;
}

Tree fit_classification(const Presorted& data, std::vector<int> labels, int n_classes, const TreeConfig& config,
                        std::size_t n_features) {
    BuildSettings settings = settings_from(config, n_features);
    settings.task = Task::classification;
    settings.n_outputs = n_classes;
    Rng rng(config.seed);
    TreeBuilder builder(data, GiniCriterion(std::move(labels), n_classes), settings, rng);
    return builder.build();
}

Tree fit_regression(const Presorted& data, std::vector<double> targets, const TreeConfig& config,
                    std::size_t n_features) {
    BuildSettings settings = settings_from(config, n_features);
    settings.task = Task::regression;
    Rng rng(config.seed);
    TreeBuilder builder(data, VarianceCriterion(std::move(targets)), settings, rng);
    return builder.build();
}

}  // namespace

const TreeNode& Tree::leaf_for(std::span<const double> x) const {
    const TreeNode* node = &nodes.front();
    while (!node->is_leaf()) {
        const double v = x[static_cast<std::size_t>(node->feature)];
        node = &nodes[static_cast<std::size_t>(v <= node->threshold ? node->left : node->right)];
    }
    return *node;
}

int Tree::depth() const {
    std::vector<int> depth(nodes.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        deepest = std::max(deepest, depth[i]);
        if (!nodes[i].is_leaf()) {
            depth[static_cast<std::size_t>(nodes[i].left)] = depth[i] + 1;
            depth[static_cast<std::size_t>(nodes[i].right)] = depth[i] + 1;
        }
    }
    return deepest;
}

double gini(std::span<const double> counts) {
    const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (n <= 0.0) return 0.0;
    double sum_sq = 0.0;
    for (double c : counts) sum_sq += (c / n) * (c / n);
    return 1.0 - sum_sq;
}

Tree fit_tree(const Matrix& x, std::span<const int> labels, const TreeConfig& config, int n_classes,
              std::span<const std::size_t> rows) {
    check_inputs(x, labels.size(), rows);
    if (config.task != Task::classification) throw Error("fit_tree: integer labels need a classification config");
    const int k = infer_classes(labels, n_classes);
    const Presorted data(x, rows);
    return fit_classification(data, gather(labels, rows), k, config, x.cols());
}

Tree fit_tree(const Matrix& x, std::span<const double> targets, const TreeConfig& config,
              std::span<const std::size_t> rows) {
    check_inputs(x, targets.size(), rows);
    if (config.task != Task::regression) throw Error("fit_tree: real targets need a regression config");
    const Presorted data(x, rows);
    return fit_regression(data, gather(targets, rows), config, x.cols());
}

namespace {

Tree fit_second_order(const Presorted& data, std::vector<double> g, std::vector<double> h, int max_depth,
                      double lambda, double gamma) {
    BuildSettings settings;
    settings.task = Task::regression;
    settings.max_depth = max_depth;
    settings.features_per_split = static_cast<int>(data.columns.size());
    Rng unused(0);
    TreeBuilder builder(data, SecondOrderCriterion(std::move(g), std::move(h), lambda, gamma), settings, unused);
    return builder.build();
}

}  // namespace

Tree fit_second_order_tree(const Matrix& x, std::span<const double> gradients, std::span<const double> hessians,
                           int max_depth, double lambda, double gamma) {
    check_inputs(x, gradients.size(), {});
    if (hessians.size() != gradients.size()) throw Error("fit_second_order_tree: gradient/hessian size mismatch");
    if (lambda < 0) throw Error("lambda must be >= 0");
    const Presorted data(x, {});
    return fit_second_order(data, {gradients.begin(), gradients.end()}, {hessians.begin(), hessians.end()},
                            max_depth, lambda, gamma);
}

std::vector<double> predict_distribution(const Tree& tree, std::span<const double> x) {
    const auto& counts = tree.leaf_for(x).value;
    const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
    std::vector<double> dist(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k) dist[k] = counts[k] / n;
    return dist;
}

double predict_value(const Tree& tree, std::span<const double> x) { return tree.leaf_for(x).value.front(); }

int argmax(std::span<const double> scores) {
    int best = 0;
    for (std::size_t k = 1; k < scores.size(); ++k) {
        if (scores[k] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
    }
    return best;
}

TreeConfig random_forest_defaults(std::uint64_t seed) {
    TreeConfig c;
    c.bootstrap = true;
    c.seed = seed;
    return c;
}

TreeConfig extra_trees_defaults(std::uint64_t seed) {
    TreeConfig c;
    c.threshold_mode = ThresholdMode::random;
    c.seed = seed;
    return c;
}

ForestModel fit_random_forest(const Matrix& x, std::span<const int> labels, int n_trees, TreeConfig config,
                              int n_classes) {
    if (n_trees < 1) throw Error("n_trees must be >= 1");
    check_inputs(x, labels.size(), {});
    config.task = Task::classification;
    if (!config.features_per_split) {
        config.features_per_split = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(x.cols()))));
    }
    ForestModel model;
    model.config = config;
    model.n_classes = infer_classes(labels, n_classes);
    model.trees.resize(static_cast<std::size_t>(n_trees));

    // Without bootstrap every tree sees the same rows, so sort them once.
    std::optional<Presorted> shared;
    if (!config.bootstrap) shared.emplace(x, std::span<const std::size_t>{});

    parallel_for(model.trees.size(), [&](std::size_t i) {
        TreeConfig tree_config = config;
        tree_config.seed = config.seed + i;
        if (shared) {
            model.trees[i] = fit_classification(*shared, gather(labels, {}), model.n_classes, tree_config, x.cols());
            return;
        }
        Rng sampler(splitmix64(tree_config.seed));
        std::vector<std::size_t> rows(x.rows());
        for (auto& r : rows) r = static_cast<std::size_t>(sampler.below(x.rows()));
        const Presorted data(x, rows);
        model.trees[i] = fit_classification(data, gather(labels, rows), model.n_classes, tree_config, x.cols());
    });
    return model;
}

ForestModel fit_extra_trees(const Matrix& x, std::span<const int> labels, int n_trees, TreeConfig config,
                            int n_classes) {
    config.bootstrap = false;
    config.threshold_mode = ThresholdMode::random;
    return fit_random_forest(x, labels, n_trees, config, n_classes);
}

ClassPrediction predict_class(const ForestModel& model, std::span<const double> x) {
    ClassPrediction out;
    out.scores.assign(static_cast<std::size_t>(model.n_classes), 0.0);
    for (const auto& tree : model.trees) {
        const auto& counts = tree.leaf_for(x).value;
        const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
        for (std::size_t k = 0; k < counts.size(); ++k) out.scores[k] += counts[k] / n;
    }
    for (auto& s : out.scores) s /= static_cast<double>(model.trees.size());
    out.label = argmax(out.scores);
    return out;
}

std::vector<double> softmax(std::span<const double> scores) {
    std::vector<double> p(scores.size());
    if (scores.empty()) return p;
    const double peak = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        p[k] = std::exp(scores[k] - peak);
        total += p[k];
    }
    for (auto& v : p) v /= total;
    return p;
}

std::vector<double> BoostedModel::raw_scores(std::span<const double> x) const {
    std::vector<double> scores = initial_scores;
    const std::size_t k = classes.size();
    for (std::size_t t = 0; t < trees.size(); ++t) {
        scores[t % k] += learning_rate * predict_value(trees[t], x);
    }
    return scores;
}

ClassPrediction predict_class(const BoostedModel& model, std::span<const double> x) {
    const auto p = softmax(model.raw_scores(x));
    ClassPrediction out;
    out.scores.assign(static_cast<std::size_t>(model.n_classes), 0.0);
    for (std::size_t k = 0; k < model.classes.size(); ++k) {
        out.scores[static_cast<std::size_t>(model.classes[k])] = p[k];
    }
    out.label = argmax(out.scores);
    return out;
}

namespace {

struct BoostSetup {
    std::vector<int> classes;
    std::vector<int> slot;  // training row -> index into classes
    std::vector<double> initial_scores;
    int n_classes = 0;
};

BoostSetup prepare_boosting(const Matrix& x, std::span<const int> labels, int rounds, int max_depth,
                            double learning_rate, int n_classes) {
    check_inputs(x, labels.size(), {});
    if (rounds < 0) throw Error("rounds must be >= 0");
    if (max_depth < 0) throw Error("max_depth must be >= 0");
    if (!(learning_rate > 0)) throw Error("learning rate must be > 0");
    BoostSetup s;
    s.n_classes = infer_classes(labels, n_classes);
    std::vector<std::size_t> counts(static_cast<std::size_t>(s.n_classes), 0);
    for (int y : labels) ++counts[static_cast<std::size_t>(y)];
    std::vector<int> class_slot(counts.size(), -1);
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] == 0) continue;
        class_slot[k] = static_cast<int>(s.classes.size());
        s.classes.push_back(static_cast<int>(k));
        s.initial_scores.push_back(std::log(static_cast<double>(counts[k]) / static_cast<double>(labels.size())));
    }
    if (s.classes.size() < 2) throw Error("degenerate classification: training labels hold a single class");
    s.slot.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) s.slot[i] = class_slot[static_cast<std::size_t>(labels[i])];
    return s;
}

double mean_cross_entropy(const std::vector<double>& scores, const std::vector<int>& slot, std::size_t k) {
    double loss = 0.0;
    for (std::size_t i = 0; i < slot.size(); ++i) {
        const std::span<const double> row(scores.data() + i * k, k);
        const double peak = *std::max_element(row.begin(), row.end());
        double total = 0.0;
        for (double s : row) total += std::exp(s - peak);
        loss += std::log(total) + peak - row[static_cast<std::size_t>(slot[i])];
    }
    return loss / static_cast<double>(slot.size());
}

enum class Boosting { first_order, second_order };

template <typename Model>
Model boost(const Matrix& x, std::span<const int> labels, int rounds, int max_depth, double learning_rate,
            double lambda, double gamma, int n_classes, Boosting kind) {
    BoostSetup setup = prepare_boosting(x, labels, rounds, max_depth, learning_rate, n_classes);
    Model model;
    model.n_classes = setup.n_classes;
    model.classes = setup.classes;
    model.initial_scores = setup.initial_scores;
    model.learning_rate = learning_rate;
    model.max_depth = max_depth;
    model.rounds = rounds;

    const std::size_t n = x.rows();
    const std::size_t k = setup.classes.size();
    std::vector<double> scores(n * k);
    for (std::size_t i = 0; i < n; ++i) {
        std::copy(setup.initial_scores.begin(), setup.initial_scores.end(), scores.begin() + static_cast<std::ptrdiff_t>(i * k));
    }
    model.train_loss.push_back(mean_cross_entropy(scores, setup.slot, k));

    const Presorted data(x, {});
    TreeConfig regression;
    regression.task = Task::regression;
    regression.max_depth = max_depth;

    std::vector<double> prob(n * k);
    std::vector<Tree> round_trees(k);
    for (int r = 0; r < rounds; ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto p = softmax(std::span<const double>(scores.data() + i * k, k));
            std::copy(p.begin(), p.end(), prob.begin() + static_cast<std::ptrdiff_t>(i * k));
        }
        parallel_for(k, [&](std::size_t c) {
            if (kind == Boosting::first_order) {
                std::vector<double> residual(n);
                for (std::size_t i = 0; i < n; ++i) {
                    const double target = static_cast<std::size_t>(setup.slot[i]) == c ? 1.0 : 0.0;
                    residual[i] = target - prob[i * k + c];
                }
                round_trees[c] = fit_regression(data, std::move(residual), regression, x.cols());
            } else {
                std::vector<double> g(n);
                std::vector<double> h(n);
                for (std::size_t i = 0; i < n; ++i) {
                    const double p = prob[i * k + c];
                    const double target = static_cast<std::size_t>(setup.slot[i]) == c ? 1.0 : 0.0;
                    g[i] = p - target;
                    h[i] = std::max(p * (1.0 - p), 1e-16);
                }
                round_trees[c] = fit_second_order(data, std::move(g), std::move(h), max_depth, lambda, gamma);
            }
        });
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t i = 0; i < n; ++i) {
                scores[i * k + c] += learning_rate * predict_value(round_trees[c], x.row(i));
            }
            model.trees.push_back(std::move(round_trees[c]));
        }
        model.train_loss.push_back(mean_cross_entropy(scores, setup.slot, k));
    }
    return model;
}

}  // namespace

GbdtModel fit_gbdt(const Matrix& x, std::span<const int> labels, int rounds, int max_depth, double learning_rate,
                   int n_classes) {
    return boost<GbdtModel>(x, labels, rounds, max_depth, learning_rate, 0.0, 0.0, n_classes, Boosting::first_order);
}

XgbModel fit_xgb(const Matrix& x, std::span<const int> labels, int rounds, int max_depth, double learning_rate,
                 double lambda, double gamma, int n_classes) {
    if (lambda < 0) throw Error("lambda must be >= 0");
    auto model =
        boost<XgbModel>(x, labels, rounds, max_depth, learning_rate, lambda, gamma, n_classes, Boosting::second_order);
    model.lambda = lambda;
    model.gamma = gamma;
    return model;
}

double cross_entropy(const BoostedModel& model, const Matrix& x, std::span<const int> labels) {
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto p = predict_class(model, x.row(i)).scores;
        loss -= std::log(p[static_cast<std::size_t>(labels[i])]);
    }
    return loss / static_cast<double>(x.rows());
}

}  // namespace voyagecast::trees
