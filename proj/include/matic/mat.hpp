#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "matic/bench.hpp"
#include "matic/nn.hpp"
#include "matic/qformat.hpp"
#include "matic/sram.hpp"

namespace matic::mat {

struct WordLoc {
    int bank = 0;
    int word = 0;
};

enum class MapPolicy { round_robin, single_bank };

// Bijection from weight coordinates onto SRAM words, one weight per word.
// The default policy stripes each layer's weights round-robin across the
// banks the way the systolic ring time-multiplexes wide layers, packing
// words sequentially within a bank.
struct WeightMapping {
    sram::BankGeometry geom;
    qf::QFormat fmt;
    std::vector<std::vector<WordLoc>> weight_loc; // [layer][row*in + col]
    std::vector<std::vector<WordLoc>> bias_loc;   // [layer][row]; empty if unmapped
    std::vector<std::vector<std::uint8_t>> word_used; // [bank][word]

    bool is_mapped(int bank, int word) const {
        return word_used[std::size_t(bank)][std::size_t(word)] != 0;
    }
    std::size_t mapped_words() const;
};

WeightMapping build_mapping(const nn::Mlp& net, const sram::BankGeometry& geom,
                            qf::QFormat fmt, MapPolicy policy = MapPolicy::round_robin,
                            bool map_biases = false);

struct TrainConfig {
    double alpha = 0.5;
    int epochs = 20;          // adaptive (or tail) epochs
    int pretrain_epochs = 30; // float epochs before masking kicks in
    nn::Loss loss = nn::Loss::mse;
    qf::QFormat fmt;
    std::uint64_t seed = 1;
    bool bias_masking = false;
    int minibatch = 1;
    bool quantize = true;
    bool from_scratch = false; // run the masked loop from epoch 0
    // Preserved-error convention in the update w <- m - alpha*grad + eps.
    // false (default): eps = w - m, so the float master accumulates plain
    // gradient steps and stuck bits act through the deployed view only; the
    // master is clamped to the format range. true: eps is the fractional
    // quantization error w - dequantize(Q(w)), which also drags the master
    // toward the fault pattern each step and destabilizes weights whose
    // stuck bits conflict with their gradient direction.
    bool literal_eps = false;
};

// Float master weights plus the deployed (quantized, masked) view the
// forward/backward passes see. eps holds the fractional quantization error
// per weight, fed back by the update rule.
struct ShadowWeights {
    nn::Mlp master;
    nn::Mlp deployed;
    std::vector<std::vector<double>> eps_w;
    std::vector<std::vector<double>> eps_b;
};

// m = dequantize(apply_masks(Q(w))) for every mapped weight; biases included
// only when bias_masking. With quantize disabled the deployed view aliases
// the master values and eps is zero.
void refresh_deployed(ShadowWeights& shadow, const WeightMapping& mapping,
                      const sram::CompiledMasks& masks, bool quantize, bool bias_masking);

ShadowWeights make_shadow(nn::Mlp master, const WeightMapping& mapping,
                          const sram::CompiledMasks& masks, const TrainConfig& cfg);

// Deployed view of a float net, exactly as a voltage-scaled chip would read
// it back.
nn::Mlp inject_mask_all(const nn::Mlp& net, const WeightMapping& mapping,
                        const sram::CompiledMasks& masks, bool bias_masking = false);

// One augmented update: forward/backward through the deployed view, then per
// weight w <- m - alpha * dJ/dm + eps_q, then refresh. Returns the sample
// loss. Throws DivergenceError on non-finite loss.
double mat_step(ShadowWeights& shadow, std::span<const double> x, std::span<const double> target,
                const TrainConfig& cfg, const WeightMapping& mapping,
                const sram::CompiledMasks& masks);

enum class TrainMode { naive, adaptive };

struct EpochStat {
    int epoch = 0;
    double train_error = 0.0;
    double test_error = 0.0;
};

struct TrainResult {
    nn::Mlp net; // float master weights
    std::vector<EpochStat> history;
    double fault_rate = 0.0;
    double voltage = 0.9;
};

// naive: plain float SGD for pretrain_epochs + epochs (deployment corrupts
// it later). adaptive: float pretraining, then the masked loop; with
// from_scratch the masked loop runs for the whole budget.
TrainResult train(nn::Mlp net, const bench::Dataset& train_set, const bench::Dataset& test_set,
                  const TrainConfig& cfg, TrainMode mode, const WeightMapping& mapping,
                  const sram::FaultMap* fault_map);

// Error of the masked, quantized view of `net` on `ds`.
double evaluate_deployed(const nn::Mlp& net, const WeightMapping& mapping,
                         const sram::CompiledMasks& masks, const bench::Dataset& ds,
                         bool bias_masking = false, bool quantize = true);

} // namespace matic::mat
