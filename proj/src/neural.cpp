#include "voyagecast/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace voyagecast::neural {

double leaky_relu(double z) { return z > 0.0 ? z : kLeakySlope * z; }

double leaky_relu_derivative(double z) { return z > 0.0 ? 1.0 : kLeakySlope; }

Network init_network(std::span<const int> layer_sizes, std::uint64_t seed) {
    if (layer_sizes.size() < 2) throw Error("init_network: need at least input and output sizes");
    for (int s : layer_sizes) {
        if (s <= 0) throw Error("init_network: layer sizes must be positive, got " + std::to_string(s));
    }
    Rng rng(seed);
    Network net;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const int fan_in = layer_sizes[l];
        const int fan_out = layer_sizes[l + 1];
        const double stddev = std::sqrt(2.0 / fan_in);
        Layer layer;
        layer.weights.resize(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r) {
            for (int c = 0; c < fan_in; ++c) layer.weights(r, c) = rng.normal(0.0, stddev);
        }
        layer.biases = Eigen::VectorXd::Zero(fan_out);
        layer.activation = l + 2 == layer_sizes.size() ? Activation::linear : Activation::leaky_relu;
        net.layers.push_back(std::move(layer));
    }
    return net;
}

ForwardCache forward_batch(const Network& net, const Eigen::MatrixXd& x, Mode mode, double dropout_rate, Rng& rng) {
    if (x.rows() != net.input_size()) {
        throw Error("forward: expected " + std::to_string(net.input_size()) + " inputs, got " +
                    std::to_string(x.rows()));
    }
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw Error("forward: dropout rate must be in [0, 1)");
    const bool drop = mode == Mode::train && dropout_rate > 0.0;
    const double keep_scale = 1.0 / (1.0 - dropout_rate);

    ForwardCache cache;
    Eigen::MatrixXd a = x;
    for (const auto& layer : net.layers) {
        cache.inputs.push_back(a);
        Eigen::MatrixXd z = layer.weights * a;
        z.colwise() += layer.biases;
        cache.pre_activation.push_back(z);
        if (layer.activation == Activation::linear) {
            a = std::move(z);
            cache.dropout_scale.emplace_back();
            continue;
        }
        a = z.unaryExpr([](double v) { return leaky_relu(v); });
        if (drop) {
            Eigen::MatrixXd scale(a.rows(), a.cols());
            // Column-major fill order keeps the mask stream independent of Eigen internals.
            for (Eigen::Index c = 0; c < scale.cols(); ++c) {
                for (Eigen::Index r = 0; r < scale.rows(); ++r) {
                    scale(r, c) = rng.uniform() < dropout_rate ? 0.0 : keep_scale;
                }
            }
            a = a.cwiseProduct(scale);
            cache.dropout_scale.push_back(std::move(scale));
        } else {
            cache.dropout_scale.emplace_back();
        }
    }
    cache.output = std::move(a);
    return cache;
}

ForwardResult forward(const Network& net, std::span<const double> x, Mode mode, double dropout_rate,
                      std::uint64_t seed) {
    Eigen::MatrixXd column(static_cast<Eigen::Index>(x.size()), 1);
    for (std::size_t i = 0; i < x.size(); ++i) column(static_cast<Eigen::Index>(i), 0) = x[i];
    Rng rng(seed);
    ForwardResult result;
    result.cache = forward_batch(net, column, mode, dropout_rate, rng);
    result.output = result.cache.output.col(0);
    return result;
}

double infer(const Network& net, std::span<const double> x) {
    if (static_cast<int>(x.size()) != net.input_size()) {
        throw Error("infer: expected " + std::to_string(net.input_size()) + " inputs, got " +
                    std::to_string(x.size()));
    }
    Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    for (const auto& layer : net.layers) {
        Eigen::VectorXd z = layer.weights * a + layer.biases;
        if (layer.activation == Activation::leaky_relu) z = z.unaryExpr([](double v) { return leaky_relu(v); });
        a = std::move(z);
    }
    return a(0);
}

Gradients backward(const Network& net, const ForwardCache& cache, const Eigen::MatrixXd& targets) {
    const auto m = static_cast<double>(targets.cols());
    const std::size_t n_layers = net.layers.size();
    Gradients grads;
    grads.weights.resize(n_layers);
    grads.biases.resize(n_layers);

    // dL/dz of the (linear) output layer.
    Eigen::MatrixXd delta = (cache.output - targets) * (2.0 / m);
    for (std::size_t l = n_layers; l-- > 0;) {
        const Layer& layer = net.layers[l];
        if (layer.activation == Activation::leaky_relu) {
            // delta currently holds dL/da; undo dropout, then the activation.
            if (cache.dropout_scale[l].size() != 0) delta = delta.cwiseProduct(cache.dropout_scale[l]);
            delta = delta.cwiseProduct(
                cache.pre_activation[l].unaryExpr([](double v) { return leaky_relu_derivative(v); }));
        }
        grads.weights[l] = delta * cache.inputs[l].transpose();
        grads.biases[l] = delta.rowwise().sum();
        if (l > 0) delta = layer.weights.transpose() * delta;
    }
    return grads;
}

double mse(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets) {
    return (predictions - targets).squaredNorm() / static_cast<double>(targets.size());
}

RmsPropState RmsPropState::zeros_like(const Network& net) {
    RmsPropState s;
    for (const auto& layer : net.layers) {
        s.weights.push_back(Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
        s.biases.push_back(Eigen::VectorXd::Zero(layer.biases.size()));
    }
    return s;
}

namespace {

template <typename Param, typename Grad, typename Cache>
void rmsprop_update(Param& param, const Grad& grad, Cache& cache, const TrainConfig& c) {
    cache = c.rho * cache.array() + (1.0 - c.rho) * grad.array().square();
    param.array() -= c.learning_rate * grad.array() / (cache.array().sqrt() + c.epsilon);
}

}  // namespace

void rmsprop_step(Network& net, const Gradients& grads, RmsPropState& state, const TrainConfig& config) {
    if (grads.weights.size() != net.layers.size() || state.weights.size() != net.layers.size()) {
        throw Error("rmsprop_step: layer count mismatch");
    }
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        rmsprop_update(net.layers[l].weights, grads.weights[l], state.weights[l], config);
        rmsprop_update(net.layers[l].biases, grads.biases[l], state.biases[l], config);
    }
}

namespace {

Eigen::MatrixXd columns_of(const Matrix& x, std::span<const std::size_t> rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(x.cols()), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t j = 0; j < rows.size(); ++j) {
        for (std::size_t f = 0; f < x.cols(); ++f) {
            out(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(j)) = x(rows[j], f);
        }
    }
    return out;
}

Eigen::MatrixXd targets_of(std::span<const double> y, std::span<const std::size_t> rows) {
    Eigen::MatrixXd out(1, static_cast<Eigen::Index>(rows.size()));
    for (std::size_t j = 0; j < rows.size(); ++j) out(0, static_cast<Eigen::Index>(j)) = y[rows[j]];
    return out;
}

}  // namespace

FitResult fit(Network net, const Matrix& train_x, std::span<const double> train_y, const Matrix& validation_x,
              std::span<const double> validation_y, const TrainConfig& config) {
    if (train_x.rows() == 0 || train_x.rows() != train_y.size()) throw Error("fit: empty or inconsistent training set");
    if (validation_x.rows() == 0 || validation_x.rows() != validation_y.size()) {
        throw Error("fit: early stopping needs a non-empty validation set");
    }
    if (!(config.learning_rate > 0)) throw Error("fit: learning rate must be > 0");
    if (config.batch_size < 1) throw Error("fit: batch size must be >= 1");

    std::vector<std::size_t> all_validation(validation_x.rows());
    std::iota(all_validation.begin(), all_validation.end(), 0);
    const Eigen::MatrixXd val_x = columns_of(validation_x, all_validation);
    const Eigen::MatrixXd val_y = targets_of(validation_y, all_validation);

    Rng rng(config.seed);
    RmsPropState state = RmsPropState::zeros_like(net);
    std::vector<std::size_t> order(train_x.rows());
    std::iota(order.begin(), order.end(), 0);

    FitResult result;
    result.network = net;
    double best = std::numeric_limits<double>::infinity();
    int waited = 0;
    const auto batch = static_cast<std::size_t>(config.batch_size);
    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::span<const std::size_t> rows(order.data() + start, std::min(batch, order.size() - start));
            const Eigen::MatrixXd xb = columns_of(train_x, rows);
            const Eigen::MatrixXd yb = targets_of(train_y, rows);
            const ForwardCache cache = forward_batch(net, xb, Mode::train, config.dropout_rate, rng);
            loss_sum += mse(cache.output, yb) * static_cast<double>(rows.size());
            rmsprop_step(net, backward(net, cache, yb), state, config);
        }
        result.train_loss.push_back(loss_sum / static_cast<double>(order.size()));

        Rng unused(0);
        const double val_loss = mse(forward_batch(net, val_x, Mode::infer, 0.0, unused).output, val_y);
        result.validation_loss.push_back(val_loss);
        if (val_loss < best - config.min_improvement) {
            best = val_loss;
            result.network = net;
            result.best_epoch = epoch;
            waited = 0;
        } else if (++waited >= config.patience) {
            break;
        }
    }
    return result;
}

Scaler fit_scaler(const Matrix& x) {
    if (x.rows() == 0) throw Error("fit_scaler: no rows");
    Scaler s;
    s.min.assign(x.cols(), std::numeric_limits<double>::infinity());
    s.max.assign(x.cols(), -std::numeric_limits<double>::infinity());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t f = 0; f < x.cols(); ++f) {
            s.min[f] = std::min(s.min[f], x(r, f));
            s.max[f] = std::max(s.max[f], x(r, f));
        }
    }
    return s;
}

std::vector<double> apply_scaler(const Scaler& scaler, std::span<const double> x) {
    if (!scaler.fitted()) throw Error("apply_scaler: scaler not fitted");
    if (x.size() != scaler.min.size()) throw Error("apply_scaler: feature count mismatch");
    std::vector<double> out(x.size());
    for (std::size_t f = 0; f < x.size(); ++f) {
        const double range = scaler.max[f] - scaler.min[f];
        out[f] = range > 0.0 ? (x[f] - scaler.min[f]) / range : 0.0;
    }
    return out;
}

std::vector<double> invert_scaler(const Scaler& scaler, std::span<const double> scaled) {
    if (!scaler.fitted()) throw Error("invert_scaler: scaler not fitted");
    if (scaled.size() != scaler.min.size()) throw Error("invert_scaler: feature count mismatch");
    std::vector<double> out(scaled.size());
    for (std::size_t f = 0; f < scaled.size(); ++f) {
        out[f] = scaled[f] * (scaler.max[f] - scaler.min[f]) + scaler.min[f];
    }
    return out;
}

Matrix apply_scaler(const Scaler& scaler, const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto scaled = apply_scaler(scaler, x.row(r));
        std::copy(scaled.begin(), scaled.end(), out.row(r).begin());
    }
    return out;
}

double predict_duration(const Network& net, const Scaler& scaler, const RegFeatures& features) {
    const auto scaled = apply_scaler(scaler, features);
    return std::max(0.0, infer(net, scaled));
}

}  // namespace voyagecast::neural
