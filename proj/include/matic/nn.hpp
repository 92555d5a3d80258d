#pragma once

#include <span>
#include <string>
#include <vector>

#include "matic/rng.hpp"

namespace matic::nn {

enum class Activation { sigmoid, relu, afu_sigmoid, linear };
enum class Loss { mse, cross_entropy };

const char* to_string(Activation a);
const char* to_string(Loss l);
Activation activation_from_string(const std::string& s);
Loss loss_from_string(const std::string& s);

double sigmoid(double x);

// Piecewise-linear logistic approximation: interpolates the logistic on
// `segments` uniform knots over [-8, 8] and clamps to {0, 1} outside.
// Monotone non-decreasing, symmetric about (0, 0.5).
double afu_sigmoid(double x, int segments);
double afu_sigmoid_slope(double x, int segments);

struct Layer {
    int in = 0;
    int out = 0;
    Activation act = Activation::sigmoid;
    int afu_segments = 16;
    std::vector<double> w; // row-major, out x in
    std::vector<double> b; // out
};

struct Mlp {
    std::vector<Layer> layers;

    int input_width() const { return layers.empty() ? 0 : layers.front().in; }
    int output_width() const { return layers.empty() ? 0 : layers.back().out; }
    std::vector<int> topology() const;
    std::size_t weight_count() const;
};

// hidden/output activation applied uniformly to hidden layers; output layer
// gets `output_act` (linear when training with cross-entropy).
Mlp make_mlp(const std::vector<int>& topology, Activation hidden_act,
             Activation output_act, int afu_segments = 16);

// Glorot-style uniform init in [-r, r], r = sqrt(6 / (fan_in + fan_out)).
// Biases start at zero.
void init_weights(Mlp& net, Rng rng);

struct ForwardCache {
    // activations[0] is the input; activations[L] the network output
    std::vector<std::vector<double>> activations;
    std::vector<std::vector<double>> preacts; // per layer
};

std::vector<double> forward(const Mlp& net, std::span<const double> x, ForwardCache* cache = nullptr);

struct Gradients {
    std::vector<std::vector<double>> w; // shape-congruent with layers
    std::vector<std::vector<double>> b;

    static Gradients zeros_like(const Mlp& net);
    void add_scaled(const Gradients& other, double scale);
};

// Loss of a single sample. For cross_entropy the network output must be the
// final linear preactivation; softmax is applied here.
double loss_value(std::span<const double> output, std::span<const double> target, Loss loss);

std::vector<double> softmax(std::span<const double> logits);

// Exact analytic gradients of the sample loss w.r.t. every weight and bias.
Gradients backward(const Mlp& net, const ForwardCache& cache,
                   std::span<const double> target, Loss loss);

void sgd_step(Mlp& net, const Gradients& g, double alpha);

// Checkpoint: structured text, hexfloat weights, bit-exact round trip.
void save_checkpoint(const Mlp& net, const std::string& path);
Mlp load_checkpoint(const std::string& path);

} // namespace matic::nn
