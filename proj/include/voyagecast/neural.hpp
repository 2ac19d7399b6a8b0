#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "voyagecast/core_model.hpp"
#include "voyagecast/matrix.hpp"
#include "voyagecast/rng.hpp"

namespace voyagecast::neural {

inline constexpr double kLeakySlope = 0.3;

enum class Activation { leaky_relu, linear };

double leaky_relu(double z);
/// Slope alpha at z <= 0.
double leaky_relu_derivative(double z);

struct Layer {
    Eigen::MatrixXd weights;  // out x in
    Eigen::VectorXd biases;
    Activation activation = Activation::leaky_relu;

    friend bool operator==(const Layer& a, const Layer& b) {
        return a.activation == b.activation && a.weights == b.weights && a.biases == b.biases;
    }
};

struct Network {
    std::vector<Layer> layers;

    [[nodiscard]] int input_size() const { return static_cast<int>(layers.front().weights.cols()); }
    [[nodiscard]] int output_size() const { return static_cast<int>(layers.back().weights.rows()); }
    friend bool operator==(const Network&, const Network&) = default;
};

inline const std::vector<int> kDefaultArchitecture = {static_cast<int>(kRegFeatureCount), 200, 200, 1};

/// He-normal weights N(0, sqrt(2/fan_in)), zero biases; LeakyReLU on every
/// layer but the last, which is linear.
Network init_network(std::span<const int> layer_sizes, std::uint64_t seed);

enum class Mode { train, infer };

/// Values cached by forward for backward. Samples are columns.
struct ForwardCache {
    std::vector<Eigen::MatrixXd> inputs;       // input of each layer
    std::vector<Eigen::MatrixXd> pre_activation;
    std::vector<Eigen::MatrixXd> dropout_scale;  // hidden layers in train mode: 0 or 1/(1-p)
    Eigen::MatrixXd output;
};

/// Batch forward over the columns of `x`. In train mode each hidden unit is
/// zeroed with probability `dropout_rate` and survivors scaled by 1/(1-p);
/// infer mode applies neither.
ForwardCache forward_batch(const Network& net, const Eigen::MatrixXd& x, Mode mode, double dropout_rate, Rng& rng);

struct ForwardResult {
    Eigen::VectorXd output;
    ForwardCache cache;
};

ForwardResult forward(const Network& net, std::span<const double> x, Mode mode, double dropout_rate,
                      std::uint64_t seed);

/// Single-sample inference through matrix-vector products only, so a sample
/// gives the same bits whether it is predicted alone or inside a batch loop.
double infer(const Network& net, std::span<const double> x);

struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
};

/// Gradients of L = (1/m) sum (y_hat - y)^2 over the m cached samples.
Gradients backward(const Network& net, const ForwardCache& cache, const Eigen::MatrixXd& targets);

double mse(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets);

struct TrainConfig {
    double learning_rate = 0.001;
    double rho = 0.9;
    double epsilon = 1e-8;
    int batch_size = 128;
    double dropout_rate = 0.2;
    int max_epochs = 200;
    int patience = 10;
    double min_improvement = 1e-7;
    std::uint64_t seed = 0;
};

struct RmsPropState {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    static RmsPropState zeros_like(const Network& net);
};

/// cache <- rho*cache + (1-rho)*g^2; param <- param - lr*g/(sqrt(cache)+eps).
void rmsprop_step(Network& net, const Gradients& grads, RmsPropState& state, const TrainConfig& config);

struct FitResult {
    Network network;  // weights of the best validation epoch
    std::vector<double> train_loss;
    std::vector<double> validation_loss;
    int best_epoch = 0;  // 0-based index into validation_loss
};

/// Mini-batch RMSProp with early stopping on validation MSE. Rows of the
/// matrices are samples and must already be scaled.
FitResult fit(Network net, const Matrix& train_x, std::span<const double> train_y, const Matrix& validation_x,
              std::span<const double> validation_y, const TrainConfig& config);

/// Per-feature min-max scaling fitted on training rows.
struct Scaler {
    std::vector<double> min;
    std::vector<double> max;

    [[nodiscard]] bool fitted() const { return !min.empty(); }
    friend bool operator==(const Scaler&, const Scaler&) = default;
};

Scaler fit_scaler(const Matrix& x);
/// (x - min)/(max - min); 0 for constant features; no clipping.
std::vector<double> apply_scaler(const Scaler& scaler, std::span<const double> x);
std::vector<double> invert_scaler(const Scaler& scaler, std::span<const double> scaled);
Matrix apply_scaler(const Scaler& scaler, const Matrix& x);

/// Remaining minutes, clamped at 0.
double predict_duration(const Network& net, const Scaler& scaler, const RegFeatures& features);

}  // namespace voyagecast::neural
