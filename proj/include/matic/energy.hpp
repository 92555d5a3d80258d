#pragma once

#include <string>
#include <vector>

namespace matic::energy {

struct EnergyKnot {
    double voltage = 0.0;   // V
    double logic_pj = 0.0;  // pJ per cycle
    double sram_pj = 0.0;   // pJ per cycle
    double fmax_mhz = 0.0;
};

// Measured energy-per-cycle curve, voltages strictly increasing. The default
// table pins the published operating points; values between knots are
// interpolation, flagged as such in CSV output.
struct EnergyTable {
    std::vector<EnergyKnot> knots;

    static EnergyTable measured_default();

    double span_lo() const { return knots.front().voltage; }
    double span_hi() const { return knots.back().voltage; }
};

EnergyTable load_energy_table(const std::string& path);
void save_energy_table(const EnergyTable& t, const std::string& path);

enum class Rail { logic, sram, sum };

// Monotone piecewise-linear interpolation, exact at knots. Throws on V
// outside the table span.
double energy_at(const EnergyTable& t, Rail rail, double voltage);
double frequency_at(const EnergyTable& t, double voltage);

// argmin of interpolated energy over [floor_v, span_hi], 1 mV grid, ties to
// the lower voltage.
double find_mep(const EnergyTable& t, Rail rail, double floor_v);

enum class Scenario { high_perf, en_opt_split, en_opt_joint };

const char* to_string(Scenario s);

struct ScenarioConstraints {
    double sram_floor = 0.44;      // lowest voltage the trained fault pattern allows
    double logic_floor = 0.44;     // logic timing floor
    double periphery_floor = 0.65; // SRAM periphery timing limit at full speed
    double nominal = 0.9;
};

struct ScenarioResult {
    Scenario scenario = Scenario::high_perf;
    double logic_v = 0.0, sram_v = 0.0;
    double frequency_mhz = 0.0;
    double logic_pj = 0.0, sram_pj = 0.0, total_pj = 0.0;
    double base_logic_v = 0.0, base_sram_v = 0.0;
    double base_total_pj = 0.0;
    double reduction = 0.0; // base_total / total
};

// HighPerf: frequency pins logic at nominal; scaled SRAM stops at the
// periphery floor while the baseline SRAM is stuck at nominal. EnOpt_split:
// each rail at its own minimum-energy point. EnOpt_joint: one shared rail at
// the summed-curve MEP; the baseline cannot scale either rail.
ScenarioResult scenario_eval(const EnergyTable& t, Scenario s, const ScenarioConstraints& c);

std::vector<ScenarioResult> eval_all_scenarios(const EnergyTable& t, const ScenarioConstraints& c);

// ops/cycle defaults to 8 (one MAC issue per PE per cycle across 8 PEs).
double efficiency_gops_per_watt(double frequency_mhz, double power_mw, double ops_per_cycle = 8.0);
double efficiency_gops_per_watt(const ScenarioResult& r, double ops_per_cycle = 8.0);

} // namespace matic::energy
