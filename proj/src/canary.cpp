#include "matic/canary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace matic::canary {

TempSchedule TempSchedule::staircase(double lo_c, double hi_c, double step_c) {
    TempSchedule s;
    for (double t = lo_c; t <= hi_c + 1e-9; t += step_c)
        s.steps.push_back(Step{1.0, t});
    return s;
}

CanaryConfig select_canaries(const sram::SramPopulation& pop, const sram::FaultMap& target_map,
                             int k_per_bank, const mat::WeightMapping* mapping,
                             bool avoid_weight_msbs, double v0, double dv) {
    CanaryConfig cfg;
    cfg.k_per_bank = k_per_bank;
    cfg.v0 = v0;
    cfg.dv = dv;
    cfg.target_voltage = target_map.voltage;
    double t_profile = target_map.temperature;

    for (const auto& bank : pop.banks) {
        struct Cand {
            double vmin;
            int word, bit;
        };
        std::vector<Cand> cands;
        int lsb_limit = bank.word_bits / 4; // LSB quarter of a mapped word
        for (int w = 0; w < bank.n_words; ++w) {
            bool mapped = mapping && mapping->is_mapped(bank.bank_id, w);
            for (int b = 0; b < bank.word_bits; ++b) {
                if (mapped && avoid_weight_msbs && b >= lsb_limit) continue;
                std::size_t c = bank.cell_index(w, b);
                double vm = pop.vmin_at(bank, c, t_profile);
                if (vm < target_map.voltage) cands.push_back(Cand{vm, w, b});
            }
        }
        if (int(cands.size()) < k_per_bank)
            throw std::runtime_error("select_canaries: fewer than k eligible cells in bank " +
                                     std::to_string(bank.bank_id));
        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            if (a.vmin != b.vmin) return a.vmin > b.vmin;
            if (a.word != b.word) return a.word < b.word;
            return a.bit < b.bit;
        });
        for (int i = 0; i < k_per_bank; ++i) {
            const Cand& c = cands[std::size_t(i)];
            std::size_t idx = bank.cell_index(c.word, c.bit);
            cfg.cells.push_back(CanaryCell{bank.bank_id, c.word, c.bit,
                                           std::uint8_t(1 - bank.preferred[idx])});
        }
    }
    return cfg;
}

void write_golden(const CanaryConfig& cfg, sram::SramPopulation& pop) {
    for (const auto& c : cfg.cells) {
        sram::SramBank& bank = pop.banks[std::size_t(c.bank)];
        bank.stored[bank.cell_index(c.word, c.bit)] = c.golden;
    }
}

bool check_states(const CanaryConfig& cfg, sram::SramPopulation& pop, double voltage,
                  double temp_c) {
    bool any_failed = false;
    for (const auto& c : cfg.cells) {
        std::uint32_t bits = sram::simulate_read(pop, c.bank, c.word, voltage, temp_c);
        if (((bits >> c.bit) & 1u) != c.golden) any_failed = true;
    }
    return any_failed;
}

void restore_states(const CanaryConfig& cfg, sram::SramPopulation& pop, double voltage,
                    double temp_c) {
    write_golden(cfg, pop);
    for (const auto& c : cfg.cells) {
        const sram::SramBank& bank = pop.banks[std::size_t(c.bank)];
        std::size_t idx = bank.cell_index(c.word, c.bit);
        if (c.golden != bank.preferred[idx] && voltage < pop.vmin_at(bank, idx, temp_c))
            throw std::runtime_error(
                "restore_states: canary re-flips at the restore voltage; dv too coarse");
    }
}

void control_step(ControllerState& st, const CanaryConfig& cfg, sram::SramPopulation& pop,
                  double temp_c) {
    if (st.settled) return;
    double try_v = st.v - cfg.dv;
    ++st.steps_taken;
    if (try_v <= 0.0) {
        st.settled = true;
        st.last_failed = false;
        return;
    }
    bool failed = check_states(cfg, pop, try_v, temp_c);
    if (failed) {
        restore_states(cfg, pop, st.v, temp_c);
        st.settled = true;
        st.last_failed = true;
    } else {
        st.v = try_v;
    }
}

void descend(ControllerState& st, const CanaryConfig& cfg, sram::SramPopulation& pop,
             double temp_c) {
    int limit = int(std::ceil(cfg.v0 / cfg.dv)) + 1;
    st.settled = false;
    st.steps_taken = 0;
    while (!st.settled && st.steps_taken < limit)
        control_step(st, cfg, pop, temp_c);
    if (!st.settled)
        throw std::runtime_error("descend: controller failed to terminate");
}

VoltageTrace run_simulation(sram::SramPopulation& pop, const CanaryConfig& cfg,
                            const TempSchedule& schedule, const nn::Mlp& net,
                            const mat::WeightMapping& mapping, const sram::FaultMap& target_map,
                            const bench::Dataset& eval_set) {
    VoltageTrace trace;
    if (schedule.steps.empty()) return trace;

    // re-ascent headroom: enough dv steps to out-climb the worst per-step
    // vmin swing the schedule can produce
    double max_swing = 0.0;
    for (std::size_t i = 1; i < schedule.steps.size(); ++i)
        max_swing = std::max(max_swing, std::abs(schedule.steps[i].temp_c -
                                                  schedule.steps[i - 1].temp_c));
    int ascent_steps = int(std::ceil(pop.temp_coeff * max_swing / cfg.dv)) + 1;

    // stored weight image: trained masked patterns plus canary golden bits
    sram::CompiledMasks write_masks = sram::compile_all(target_map);
    for (const auto& c : cfg.cells) {
        qf::MaskPair& m = write_masks.per_bank[std::size_t(c.bank)][std::size_t(c.word)];
        if (c.golden)
            m.b_or |= 1u << c.bit;
        else
            m.b_and &= ~(1u << c.bit);
    }

    write_golden(cfg, pop);
    ControllerState st;
    st.v = cfg.v0;
    for (std::size_t i = 0; i < schedule.steps.size(); ++i) {
        double temp = schedule.steps[i].temp_c;
        if (i > 0) st.v = std::min(st.v + ascent_steps * cfg.dv, cfg.v0);
        restore_states(cfg, pop, st.v, temp);
        descend(st, cfg, pop, temp);

        // realized fault pattern at the settled point, on a scratch copy so
        // the probe does not disturb the deployed weights
        sram::SramPopulation scratch = pop;
        sram::FaultMap realized = sram::profile(scratch, st.v, temp);
        sram::CompiledMasks read_masks = sram::compile_all(realized);

        sram::CompiledMasks effective = sram::CompiledMasks::identity(pop.geom);
        for (int b = 0; b < pop.geom.n_banks; ++b)
            for (int w = 0; w < pop.geom.words_per_bank; ++w)
                effective.per_bank[std::size_t(b)][std::size_t(w)] =
                    sram::compose_masks(write_masks.at(b, w), read_masks.at(b, w));

        TraceRow row;
        row.step = int(i);
        row.temp_c = temp;
        row.voltage = st.v;
        row.any_failed = st.last_failed;
        row.restored = st.last_failed;
        row.app_error = mat::evaluate_deployed(net, mapping, effective, eval_set);
        trace.rows.push_back(row);
        trace.realized.push_back(std::move(realized));
    }
    return trace;
}

} // namespace matic::canary
