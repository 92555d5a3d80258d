#pragma once

#include <cstdint>
#include <vector>

#include "matic/bench.hpp"
#include "matic/mat.hpp"
#include "matic/sram.hpp"

namespace matic::canary {

struct CanaryCell {
    int bank = 0;
    int word = 0;
    int bit = 0;
    std::uint8_t golden = 0; // the cell's non-preferred state
};

struct CanaryConfig {
    std::vector<CanaryCell> cells;
    double v0 = 0.9;           // safe initial voltage
    double dv = 0.010;         // controller step
    int k_per_bank = 8;
    double target_voltage = 0.5; // fault pattern the network was trained for
};

struct TempSchedule {
    struct Step {
        double duration = 1.0;
        double temp_c = sram::kRefTempC;
    };
    std::vector<Step> steps;

    // -15 -> 90 C in 15 C increments, the chamber sweep shape
    static TempSchedule staircase(double lo_c, double hi_c, double step_c);
};

struct TraceRow {
    int step = 0;
    double temp_c = 0.0;
    double voltage = 0.0;   // settled SRAM voltage
    bool any_failed = false; // descent terminated by a canary flip
    bool restored = false;   // canaries rewritten this step
    double app_error = 0.0;
};

struct VoltageTrace {
    std::vector<TraceRow> rows;
    std::vector<sram::FaultMap> realized; // per settled point, same order
};

// Per bank: the k cells with the highest vmin strictly below the target
// voltage (the last survivors above the trained-for fault pattern),
// tie-broken by address. Cells whose word holds weight MSBs are skipped
// when avoid_weight_msbs is set (default), so a flipped canary can only
// perturb weight LSBs. Throws if a bank has fewer than k eligible cells.
CanaryConfig select_canaries(const sram::SramPopulation& pop, const sram::FaultMap& target_map,
                             int k_per_bank, const mat::WeightMapping* mapping = nullptr,
                             bool avoid_weight_msbs = true, double v0 = 0.9, double dv = 0.010);

// Write every canary's golden value (used at deployment and on restore).
void write_golden(const CanaryConfig& cfg, sram::SramPopulation& pop);

// Simulated read of each canary at (V, T); true iff any disagrees with its
// golden value. Reads are destructive like any SRAM read.
bool check_states(const CanaryConfig& cfg, sram::SramPopulation& pop, double voltage,
                  double temp_c);

// Rewrite golden values; throws if a canary would immediately re-flip at the
// restore voltage (signals dv too coarse).
void restore_states(const CanaryConfig& cfg, sram::SramPopulation& pop, double voltage,
                    double temp_c);

struct ControllerState {
    double v = 0.9;
    bool settled = false;
    bool last_failed = false;
    int steps_taken = 0;
};

// One body of the control loop: try v - dv; on canary failure revert to v,
// restore and settle; otherwise commit the step.
void control_step(ControllerState& st, const CanaryConfig& cfg, sram::SramPopulation& pop,
                  double temp_c);

// Full descent from st.v; terminates in at most ceil(v0/dv) steps.
void descend(ControllerState& st, const CanaryConfig& cfg, sram::SramPopulation& pop,
             double temp_c);

// Closed-loop run over a temperature schedule. At each step the controller
// wakes, re-ascends by enough dv multiples to cover the worst-case
// temperature swing (the printed loop only descends), descends to the canary
// boundary, then the deployed network is evaluated. The stored weight image
// is the trained masked pattern (plus canary golden bits), so a trained-for
// fault that happens not to fire at the settled point reads back the same
// bit; only realized read disturbance composes on top.
VoltageTrace run_simulation(sram::SramPopulation& pop, const CanaryConfig& cfg,
                            const TempSchedule& schedule, const nn::Mlp& net,
                            const mat::WeightMapping& mapping, const sram::FaultMap& target_map,
                            const bench::Dataset& eval_set);

} // namespace matic::canary
