#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "matic/nn.hpp"

namespace matic::bench {

enum class Metric { classification, mse };

const char* to_string(Metric m);

struct Dataset {
    int n_features = 0;
    int n_outputs = 0;
    Metric metric = Metric::mse;
    std::vector<double> x; // row-major, n x n_features, normalized
    std::vector<double> y; // row-major, n x n_outputs, normalized

    // affine normalization metadata: raw = lo + value * (hi - lo)
    std::vector<double> feat_lo, feat_hi;
    std::vector<double> targ_lo, targ_hi;

    int n() const { return n_features ? int(x.size() / std::size_t(n_features)) : 0; }
    std::span<const double> features(int i) const {
        return {x.data() + std::size_t(i) * n_features, std::size_t(n_features)};
    }
    std::span<const double> targets(int i) const {
        return {y.data() + std::size_t(i) * n_outputs, std::size_t(n_outputs)};
    }
    double raw_target(int i, int k) const {
        return targ_lo[std::size_t(k)] +
               targets(i)[std::size_t(k)] * (targ_hi[std::size_t(k)] - targ_lo[std::size_t(k)]);
    }
};

struct TrainTestSplit {
    Dataset train;
    Dataset test;
};

// Disjoint, exhaustive head/tail split. Generators shuffle before splitting.
TrainTestSplit split_dataset(const Dataset& ds, int n_train);

struct BenchmarkSpec {
    std::string name;            // mnist | facedet | inversek2j | bscholes
    std::vector<int> topology;   // e.g. 100-32-10
    Metric metric = Metric::mse;
    nn::Loss loss = nn::Loss::mse;
    int train_samples = 0;
    int test_samples = 0;
    double alpha = 0.5;          // per-sample step size that works at desk scale
    int pretrain_epochs = 30;
    int epochs = 20;
    // radix point for a 16-bit weight word; regression nets need headroom
    // for the large sigmoid weights a 2-input task trains into
    int frac_bits = 14;
};

BenchmarkSpec benchmark_spec(const std::string& name);
std::vector<std::string> benchmark_names();

// Build the net shape a benchmark uses (sigmoid hidden everywhere; linear
// output for cross-entropy training, sigmoid otherwise).
nn::Mlp make_benchmark_net(const BenchmarkSpec& spec);

// --- dataset generators -------------------------------------------------

// Two-link planar arm, unit link lengths.
std::pair<double, double> forward_kinematics(double theta1, double theta2);

// (x, y) -> (theta1, theta2) pairs on a single-solution branch:
// theta1 in [0, pi/2], theta2 in [0.2, pi - 0.2].
Dataset gen_inversek2j(int n, std::uint64_t seed);

// European call price, continuous dividend yield.
double bs_call_price(double spot, double strike, double rate, double dividend,
                     double volatility, double maturity);

// 6 inputs (spot, strike, rate, volatility, maturity, dividend) -> price.
Dataset gen_bscholes(int n, std::uint64_t seed);

// IDX-format MNIST from `dir` (train-images-idx3-ubyte etc.), bilinear
// downsample 28x28 -> 10x10. Throws DataMissingError with a diagnostic if
// the files are absent or corrupt.
Dataset load_mnist(const std::string& dir, int limit = 0);

// Hermetic stand-in with the same interface: 10 digit-like seeded prototype
// classes with jitter and noise, 10x10.
Dataset synth_digits(int n, std::uint64_t seed);

// 20x20 face-vs-clutter patterns, binary target, 400 features.
Dataset gen_facedet(int n, std::uint64_t seed);

// 19x19 PGM face corpus laid out as <dir>/face/*.pgm and
// <dir>/non-face/*.pgm (a train/ prefix is also accepted), resampled to
// 20x20. Throws DataMissingError when absent.
Dataset load_cbcl(const std::string& dir);

// Dispatch on spec name; mnist/facedet use the synthetic generators unless
// a corpus path is supplied.
TrainTestSplit make_benchmark_data(const BenchmarkSpec& spec, std::uint64_t seed,
                                   const std::string& mnist_dir = "",
                                   const std::string& cbcl_dir = "");

// --- metrics -------------------------------------------------------------

// classification: argmax mismatch rate (0.5 threshold for 1-output nets);
// mse: mean squared difference over all output elements, normalized scale.
double metric_error(std::span<const double> outputs, std::span<const double> targets,
                    int n, int dim, Metric kind);

// Forward every sample through the net and score with ds.metric.
double evaluate(const nn::Mlp& net, const Dataset& ds);

// Average error-increase over a voltage grid relative to the nominal error.
// Classification: mean(error - nominal) in percentage points. MSE: mean of
// (error - nominal) / nominal. Throws on an empty grid.
double aei(std::span<const double> errors_by_voltage, double nominal_error, Metric kind);

// --- topology knee utility -------------------------------------------------

struct TopoConfig {
    double alpha = 0.5;
    int epochs = 30;
    std::uint64_t seed = 1;
};

struct TopoPoint {
    std::vector<int> topology;
    std::size_t params = 0;
    double test_error = 0.0;
};

struct TopoCurve {
    std::vector<TopoPoint> points; // sorted by params
    std::size_t knee_index = 0;    // max distance to the endpoint chord
};

TopoCurve topology_sweep(const BenchmarkSpec& spec, const TrainTestSplit& data,
                         const std::vector<std::vector<int>>& candidates,
                         const TopoConfig& cfg);

// Chord-distance knee finder on (params, error) curves, exposed for tests.
std::size_t knee_index(std::span<const double> xs, std::span<const double> ys);

// Text cache of a dataset; load(save(d)) == d bit-exactly.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

} // namespace matic::bench
