#include "matic/energy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace matic::energy {

EnergyTable EnergyTable::measured_default() {
    // Published operating points: logic 30.58 pJ @ 0.9 V and 12.73 pJ @ 0.55 V; SRAM
    // 36.50 @ 0.9, 18.37 @ 0.65, 7.86 @ 0.55, 7.24 @ 0.50; 250 MHz @ 0.9 V,
    // 17.8 MHz @ 0.55 V. The 0.44 V row extends the curves below the SRAM
    // minimum-energy point (leakage-per-cycle dominates as frequency drops)
    // and is interpolation-grade, not measured.
    EnergyTable t;
    t.knots = {
        {0.44, 16.00, 9.00, 4.0},
        {0.50, 14.22, 7.24, 11.5},
        {0.55, 12.73, 7.86, 17.8},
        {0.65, 17.83, 18.37, 84.1},
        {0.90, 30.58, 36.50, 250.0},
    };
    return t;
}

namespace {

void validate(const EnergyTable& t) {
    if (t.knots.size() < 2) throw std::invalid_argument("energy table needs >= 2 knots");
    for (std::size_t i = 0; i < t.knots.size(); ++i) {
        const auto& k = t.knots[i];
        if (k.logic_pj <= 0.0 || k.sram_pj <= 0.0)
            throw std::invalid_argument("energy table: energies must be positive");
        if (i > 0 && k.voltage <= t.knots[i - 1].voltage)
            throw std::invalid_argument("energy table: voltages must be strictly increasing");
    }
}

double knot_value(const EnergyKnot& k, Rail rail) {
    switch (rail) {
        case Rail::logic: return k.logic_pj;
        case Rail::sram: return k.sram_pj;
        case Rail::sum: return k.logic_pj + k.sram_pj;
    }
    return 0.0;
}

double interp(const EnergyTable& t, double v, double (*pick)(const EnergyKnot&, Rail), Rail rail) {
    validate(t);
    if (v < t.span_lo() - 1e-12 || v > t.span_hi() + 1e-12)
        throw std::out_of_range("energy table: voltage outside table span");
    v = std::clamp(v, t.span_lo(), t.span_hi());
    for (std::size_t i = 1; i < t.knots.size(); ++i) {
        if (v <= t.knots[i].voltage) {
            const auto& a = t.knots[i - 1];
            const auto& b = t.knots[i];
            double f = (v - a.voltage) / (b.voltage - a.voltage);
            return pick(a, rail) + f * (pick(b, rail) - pick(a, rail));
        }
    }
    return pick(t.knots.back(), rail);
}

} // namespace

double energy_at(const EnergyTable& t, Rail rail, double voltage) {
    return interp(t, voltage, knot_value, rail);
}

double frequency_at(const EnergyTable& t, double voltage) {
    return interp(t, voltage, [](const EnergyKnot& k, Rail) { return k.fmax_mhz; }, Rail::logic);
}

double find_mep(const EnergyTable& t, Rail rail, double floor_v) {
    validate(t);
    if (floor_v < t.span_lo() - 1e-12 || floor_v > t.span_hi() + 1e-12)
        throw std::out_of_range("find_mep: floor outside table span");
    floor_v = std::clamp(floor_v, t.span_lo(), t.span_hi());
    // 1 mV grid anchored at the table top so the floor itself is a candidate
    double best_v = floor_v;
    double best_e = energy_at(t, rail, floor_v);
    long steps = std::lround((t.span_hi() - floor_v) / 0.001);
    for (long i = 1; i <= steps; ++i) {
        double v = std::min(floor_v + double(i) * 0.001, t.span_hi());
        double e = energy_at(t, rail, v);
        if (e < best_e - 1e-15) {
            best_e = e;
            best_v = v;
        }
    }
    return best_v;
}

const char* to_string(Scenario s) {
    switch (s) {
        case Scenario::high_perf: return "HighPerf";
        case Scenario::en_opt_split: return "EnOpt_split";
        case Scenario::en_opt_joint: return "EnOpt_joint";
    }
    return "?";
}

ScenarioResult scenario_eval(const EnergyTable& t, Scenario s, const ScenarioConstraints& c) {
    validate(t);
    if (c.sram_floor < t.span_lo() || c.logic_floor < t.span_lo() || c.nominal > t.span_hi())
        throw std::invalid_argument("scenario_eval: infeasible constraints");
    ScenarioResult r;
    r.scenario = s;
    switch (s) {
        case Scenario::high_perf:
            // full frequency pins logic at nominal on both sides; MATIC lets
            // SRAM scale down to its periphery timing floor
            r.logic_v = c.nominal;
            r.sram_v = std::max(c.periphery_floor, c.sram_floor);
            r.base_logic_v = c.nominal;
            r.base_sram_v = c.nominal;
            break;
        case Scenario::en_opt_split:
            r.logic_v = find_mep(t, Rail::logic, c.logic_floor);
            r.sram_v = find_mep(t, Rail::sram, c.sram_floor);
            r.base_logic_v = r.logic_v;
            r.base_sram_v = c.nominal;
            break;
        case Scenario::en_opt_joint: {
            double v = find_mep(t, Rail::sum, std::max(c.logic_floor, c.sram_floor));
            r.logic_v = v;
            r.sram_v = v;
            // shared rail: baseline SRAM stability margin pins the whole domain
            r.base_logic_v = c.nominal;
            r.base_sram_v = c.nominal;
            break;
        }
    }
    r.frequency_mhz = frequency_at(t, r.logic_v);
    r.logic_pj = energy_at(t, Rail::logic, r.logic_v);
    r.sram_pj = energy_at(t, Rail::sram, r.sram_v);
    r.total_pj = r.logic_pj + r.sram_pj;
    r.base_total_pj = energy_at(t, Rail::logic, r.base_logic_v) +
                      energy_at(t, Rail::sram, r.base_sram_v);
    r.reduction = r.base_total_pj / r.total_pj;
    return r;
}

std::vector<ScenarioResult> eval_all_scenarios(const EnergyTable& t, const ScenarioConstraints& c) {
    return {scenario_eval(t, Scenario::high_perf, c),
            scenario_eval(t, Scenario::en_opt_split, c),
            scenario_eval(t, Scenario::en_opt_joint, c)};
}

double efficiency_gops_per_watt(double frequency_mhz, double power_mw, double ops_per_cycle) {
    if (power_mw <= 0.0) throw std::invalid_argument("efficiency: power must be positive");
    if (ops_per_cycle <= 0.0) throw std::invalid_argument("efficiency: ops_per_cycle must be positive");
    double ops_per_s = frequency_mhz * 1e6 * ops_per_cycle;
    return ops_per_s / (power_mw * 1e-3) / 1e9;
}

double efficiency_gops_per_watt(const ScenarioResult& r, double ops_per_cycle) {
    double power_mw = r.total_pj * 1e-12 * r.frequency_mhz * 1e6 * 1e3;
    return efficiency_gops_per_watt(r.frequency_mhz, power_mw, ops_per_cycle);
}

EnergyTable load_energy_table(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_energy_table: cannot open " + path);
    EnergyTable t;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        EnergyKnot k;
        if (!(ss >> k.voltage >> k.logic_pj >> k.sram_pj >> k.fmax_mhz))
            throw std::runtime_error("load_energy_table: bad row: " + line);
        t.knots.push_back(k);
    }
    validate(t);
    return t;
}

void save_energy_table(const EnergyTable& t, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_energy_table: cannot open " + path);
    f << "# voltage_V logic_pJ sram_pJ fmax_MHz\n";
    char buf[160];
    for (const auto& k : t.knots) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g\n", k.voltage, k.logic_pj,
                      k.sram_pj, k.fmax_mhz);
        f << buf;
    }
}

} // namespace matic::energy
