#include "matic/mat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "matic/errors.hpp"

namespace matic::mat {

std::size_t WeightMapping::mapped_words() const {
    std::size_t n = 0;
    for (const auto& bank : word_used)
        n += std::size_t(std::count(bank.begin(), bank.end(), std::uint8_t(1)));
    return n;
}

WeightMapping build_mapping(const nn::Mlp& net, const sram::BankGeometry& geom,
                            qf::QFormat fmt, MapPolicy policy, bool map_biases) {
    if (!fmt.valid() || fmt.word_bits != geom.word_bits)
        throw std::invalid_argument("build_mapping: format does not match word width");

    std::size_t need = net.weight_count();
    if (map_biases)
        for (const auto& l : net.layers) need += l.b.size();
    if (need > std::size_t(geom.total_cells() / geom.word_bits))
        throw std::invalid_argument("build_mapping: capacity exceeded");

    WeightMapping m;
    m.geom = geom;
    m.fmt = fmt;
    m.word_used.assign(std::size_t(geom.n_banks),
                       std::vector<std::uint8_t>(std::size_t(geom.words_per_bank), 0));
    std::vector<int> next_free(std::size_t(geom.n_banks), 0);

    auto place = [&](int bank) -> WordLoc {
        if (next_free[std::size_t(bank)] >= geom.words_per_bank)
            throw std::invalid_argument("build_mapping: capacity exceeded in bank " +
                                        std::to_string(bank));
        WordLoc loc{bank, next_free[std::size_t(bank)]++};
        m.word_used[std::size_t(loc.bank)][std::size_t(loc.word)] = 1;
        return loc;
    };

    for (const auto& l : net.layers) {
        std::vector<WordLoc> locs(l.w.size());
        for (std::size_t i = 0; i < l.w.size(); ++i) {
            int bank = policy == MapPolicy::single_bank ? 0 : int(i % std::size_t(geom.n_banks));
            locs[i] = place(bank);
        }
        m.weight_loc.push_back(std::move(locs));
    }
    if (map_biases) {
        for (const auto& l : net.layers) {
            std::vector<WordLoc> locs(l.b.size());
            for (std::size_t i = 0; i < l.b.size(); ++i) {
                int bank = policy == MapPolicy::single_bank ? 0 : int(i % std::size_t(geom.n_banks));
                locs[i] = place(bank);
            }
            m.bias_loc.push_back(std::move(locs));
        }
    }
    return m;
}

namespace {

// value -> quantize -> stuck bits -> value, plus the fractional error the
// update rule preserves
inline void mask_one(double w, qf::QFormat fmt, const qf::MaskPair& mp,
                     double& deployed, double& eps) {
    qf::QuantResult qr = qf::quantize(w, fmt);
    eps = qr.eps_q;
    qf::QWord masked = qf::apply_masks(qr.qword, mp.b_or, mp.b_and);
    deployed = qf::dequantize(masked);
}

} // namespace

void refresh_deployed(ShadowWeights& shadow, const WeightMapping& mapping,
                      const sram::CompiledMasks& masks, bool quantize, bool bias_masking) {
    for (std::size_t li = 0; li < shadow.master.layers.size(); ++li) {
        auto& ml = shadow.master.layers[li];
        auto& dl = shadow.deployed.layers[li];
        auto& eps = shadow.eps_w[li];
        if (!quantize) {
            dl.w = ml.w;
            std::fill(eps.begin(), eps.end(), 0.0);
        } else {
            const auto& locs = mapping.weight_loc[li];
            std::int64_t n = std::int64_t(ml.w.size());
#pragma omp parallel for schedule(static) if (n >= 8192)
            for (std::int64_t i = 0; i < n; ++i) {
                const WordLoc& loc = locs[std::size_t(i)];
                mask_one(ml.w[std::size_t(i)], mapping.fmt, masks.at(loc.bank, loc.word),
                         dl.w[std::size_t(i)], eps[std::size_t(i)]);
            }
        }
        auto& beps = shadow.eps_b[li];
        if (quantize && bias_masking && !mapping.bias_loc.empty()) {
            const auto& locs = mapping.bias_loc[li];
            for (std::size_t i = 0; i < ml.b.size(); ++i)
                mask_one(ml.b[i], mapping.fmt, masks.at(locs[i].bank, locs[i].word),
                         dl.b[i], beps[i]);
        } else {
            dl.b = ml.b;
            std::fill(beps.begin(), beps.end(), 0.0);
        }
    }
}

ShadowWeights make_shadow(nn::Mlp master, const WeightMapping& mapping,
                          const sram::CompiledMasks& masks, const TrainConfig& cfg) {
    ShadowWeights s;
    s.deployed = master;
    s.master = std::move(master);
    for (const auto& l : s.master.layers) {
        s.eps_w.emplace_back(l.w.size(), 0.0);
        s.eps_b.emplace_back(l.b.size(), 0.0);
    }
    refresh_deployed(s, mapping, masks, cfg.quantize, cfg.bias_masking);
    return s;
}

nn::Mlp inject_mask_all(const nn::Mlp& net, const WeightMapping& mapping,
                        const sram::CompiledMasks& masks, bool bias_masking) {
    TrainConfig cfg;
    cfg.fmt = mapping.fmt;
    cfg.bias_masking = bias_masking;
    ShadowWeights s = make_shadow(net, mapping, masks, cfg);
    return std::move(s.deployed);
}

namespace {

void update_master(ShadowWeights& shadow, const nn::Gradients& g, const TrainConfig& cfg) {
    double lo = cfg.fmt.min_value(), hi = cfg.fmt.max_value();
    for (std::size_t li = 0; li < shadow.master.layers.size(); ++li) {
        auto& ml = shadow.master.layers[li];
        const auto& dl = shadow.deployed.layers[li];
        const auto& gw = g.w[li];
        const auto& eps = shadow.eps_w[li];
        std::int64_t n = std::int64_t(ml.w.size());
#pragma omp parallel for schedule(static) if (n >= 8192)
        for (std::int64_t i = 0; i < n; ++i) {
            std::size_t k = std::size_t(i);
            double nw;
            if (!cfg.quantize) {
                nw = dl.w[k] - cfg.alpha * gw[k];
            } else if (cfg.literal_eps) {
                nw = dl.w[k] - cfg.alpha * gw[k] + eps[k];
            } else {
                // eps = w - m: the master keeps its own accumulated value
                nw = std::clamp(ml.w[k] - cfg.alpha * gw[k], lo, hi);
            }
            ml.w[k] = nw;
        }
        const auto& gb = g.b[li];
        const auto& beps = shadow.eps_b[li];
        for (std::size_t i = 0; i < ml.b.size(); ++i) {
            if (!cfg.quantize) {
                ml.b[i] = dl.b[i] - cfg.alpha * gb[i];
            } else if (cfg.literal_eps && cfg.bias_masking) {
                ml.b[i] = dl.b[i] - cfg.alpha * gb[i] + beps[i];
            } else if (cfg.bias_masking) {
                ml.b[i] = std::clamp(ml.b[i] - cfg.alpha * gb[i], lo, hi);
            } else {
                ml.b[i] = ml.b[i] - cfg.alpha * gb[i];
            }
        }
    }
}

} // namespace

double mat_step(ShadowWeights& shadow, std::span<const double> x, std::span<const double> target,
                const TrainConfig& cfg, const WeightMapping& mapping,
                const sram::CompiledMasks& masks) {
    nn::ForwardCache cache;
    auto out = nn::forward(shadow.deployed, x, &cache);
    double J = nn::loss_value(out, target, cfg.loss);
    if (!std::isfinite(J))
        throw DivergenceError("mat_step: non-finite loss; training diverged");
    nn::Gradients g = nn::backward(shadow.deployed, cache, target, cfg.loss);
    update_master(shadow, g, cfg);
    refresh_deployed(shadow, mapping, masks, cfg.quantize, cfg.bias_masking);
    return J;
}

namespace {

void sgd_epoch(nn::Mlp& net, const bench::Dataset& ds, const std::vector<int>& order,
               double alpha, nn::Loss loss, int minibatch) {
    nn::Gradients acc = nn::Gradients::zeros_like(net);
    int in_batch = 0;
    for (int idx : order) {
        nn::ForwardCache cache;
        auto out = nn::forward(net, ds.features(idx), &cache);
        double J = nn::loss_value(out, ds.targets(idx), loss);
        if (!std::isfinite(J))
            throw DivergenceError("train: non-finite loss; training diverged");
        nn::Gradients g = nn::backward(net, cache, ds.targets(idx), loss);
        if (minibatch <= 1) {
            nn::sgd_step(net, g, alpha);
        } else {
            acc.add_scaled(g, 1.0 / minibatch);
            if (++in_batch == minibatch) {
                nn::sgd_step(net, acc, alpha);
                acc = nn::Gradients::zeros_like(net);
                in_batch = 0;
            }
        }
    }
    if (in_batch > 0) nn::sgd_step(net, acc, alpha);
}

void mat_epoch(ShadowWeights& shadow, const bench::Dataset& ds, const std::vector<int>& order,
               const TrainConfig& cfg, const WeightMapping& mapping,
               const sram::CompiledMasks& masks) {
    if (cfg.minibatch <= 1) {
        for (int idx : order)
            mat_step(shadow, ds.features(idx), ds.targets(idx), cfg, mapping, masks);
        return;
    }
    nn::Gradients acc = nn::Gradients::zeros_like(shadow.deployed);
    int in_batch = 0;
    for (int idx : order) {
        nn::ForwardCache cache;
        auto out = nn::forward(shadow.deployed, ds.features(idx), &cache);
        double J = nn::loss_value(out, ds.targets(idx), cfg.loss);
        if (!std::isfinite(J))
            throw DivergenceError("train: non-finite loss; training diverged");
        nn::Gradients g = nn::backward(shadow.deployed, cache, ds.targets(idx), cfg.loss);
        acc.add_scaled(g, 1.0 / cfg.minibatch);
        if (++in_batch == cfg.minibatch) {
            update_master(shadow, acc, cfg);
            refresh_deployed(shadow, mapping, masks, cfg.quantize, cfg.bias_masking);
            acc = nn::Gradients::zeros_like(shadow.deployed);
            in_batch = 0;
        }
    }
    if (in_batch > 0) {
        update_master(shadow, acc, cfg);
        refresh_deployed(shadow, mapping, masks, cfg.quantize, cfg.bias_masking);
    }
}

std::vector<int> shuffled_order(int n, Rng& rng) {
    std::vector<int> order(static_cast<std::size_t>(n), 0);
    std::iota(order.begin(), order.end(), 0);
    for (int i = n - 1; i > 0; --i) {
        int j = int(rng.uniform_index(std::uint64_t(i) + 1));
        std::swap(order[std::size_t(i)], order[std::size_t(j)]);
    }
    return order;
}

} // namespace

TrainResult train(nn::Mlp net, const bench::Dataset& train_set, const bench::Dataset& test_set,
                  const TrainConfig& cfg, TrainMode mode, const WeightMapping& mapping,
                  const sram::FaultMap* fault_map) {
    if (train_set.n() == 0) throw std::invalid_argument("train: empty dataset");
    if (cfg.alpha <= 0.0 || cfg.epochs < 1) throw std::invalid_argument("train: bad config");

    TrainResult result;
    Rng shuffle_rng = Rng(cfg.seed).derive("shuffle");

    int total_epochs = cfg.pretrain_epochs + cfg.epochs;
    if (mode == TrainMode::naive) {
        for (int e = 0; e < total_epochs; ++e) {
            auto order = shuffled_order(train_set.n(), shuffle_rng);
            sgd_epoch(net, train_set, order, cfg.alpha, cfg.loss, cfg.minibatch);
            result.history.push_back(EpochStat{e, bench::evaluate(net, train_set),
                                               bench::evaluate(net, test_set)});
        }
        result.net = std::move(net);
        return result;
    }

    sram::CompiledMasks masks = fault_map ? sram::compile_all(*fault_map)
                                          : sram::CompiledMasks::identity(mapping.geom);
    if (fault_map) {
        result.voltage = fault_map->voltage;
        result.fault_rate = double(fault_map->entries.size()) / double(mapping.geom.total_cells());
    }

    int float_epochs = cfg.from_scratch ? 0 : cfg.pretrain_epochs;
    int masked_epochs = total_epochs - float_epochs;
    int epoch = 0;
    for (int e = 0; e < float_epochs; ++e, ++epoch) {
        auto order = shuffled_order(train_set.n(), shuffle_rng);
        sgd_epoch(net, train_set, order, cfg.alpha, cfg.loss, cfg.minibatch);
        result.history.push_back(EpochStat{epoch, bench::evaluate(net, train_set),
                                           bench::evaluate(net, test_set)});
    }

    ShadowWeights shadow = make_shadow(std::move(net), mapping, masks, cfg);
    for (int e = 0; e < masked_epochs; ++e, ++epoch) {
        auto order = shuffled_order(train_set.n(), shuffle_rng);
        mat_epoch(shadow, train_set, order, cfg, mapping, masks);
        result.history.push_back(EpochStat{epoch, bench::evaluate(shadow.deployed, train_set),
                                           bench::evaluate(shadow.deployed, test_set)});
    }
    result.net = std::move(shadow.master);
    return result;
}

double evaluate_deployed(const nn::Mlp& net, const WeightMapping& mapping,
                         const sram::CompiledMasks& masks, const bench::Dataset& ds,
                         bool bias_masking, bool quantize) {
    if (!quantize) return bench::evaluate(net, ds);
    nn::Mlp deployed = inject_mask_all(net, mapping, masks, bias_masking);
    return bench::evaluate(deployed, ds);
}

} // namespace matic::mat
