#pragma once

#include <string>
#include <vector>

#include "matic/bench.hpp"
#include "matic/canary.hpp"
#include "matic/config.hpp"
#include "matic/energy.hpp"
#include "matic/mat.hpp"
#include "matic/sram.hpp"

namespace matic::experiment {

// Orchestration behind the CLI subcommands. Every function writes its CSV /
// text artifacts under cfg.out_dir and also returns the result so tests can
// assert on it directly. Given the same config and seed the written files
// are byte-identical, regardless of thread count.

std::string fault_map_path(const config::ExperimentConfig& cfg, double voltage);

// One fault-map file per voltage grid point; returns the paths.
std::vector<std::string> cmd_profile(const config::ExperimentConfig& cfg);

struct TrainOutput {
    mat::TrainResult result;
    std::string checkpoint_path;
    std::string history_path;
};

// mode naive|adaptive; fault_map_file empty means no injected faults.
TrainOutput cmd_train(const config::ExperimentConfig& cfg, const std::string& fault_map_file,
                      const std::string& mode);

struct SweepRow {
    std::string benchmark;
    double voltage = 0.0;
    double fault_rate = 0.0;
    double naive_error = 0.0;
    double adaptive_error = 0.0;
    double energy_pj = 0.0;

    bool operator<(const SweepRow& o) const {
        return benchmark != o.benchmark ? benchmark < o.benchmark : voltage < o.voltage;
    }
};

struct SweepSummary {
    std::string benchmark;
    bench::Metric metric = bench::Metric::mse;
    double nominal_error = 0.0;
    double naive_aei = 0.0;
    double adaptive_aei = 0.0;
    double ratio = 0.0; // naive_aei / adaptive_aei
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SweepSummary> summaries;
    std::string csv_path;
};

// profile -> train naive + adaptive -> evaluate deployed -> join with the
// energy table, for every benchmark in the config ("all" runs the full
// Table-1 style grid).
SweepResult cmd_sweep(const config::ExperimentConfig& cfg);

struct CanaryOutput {
    canary::VoltageTrace trace;
    sram::FaultMap target_map;
    canary::CanaryConfig canaries;
    std::string csv_path;
};

CanaryOutput cmd_canary(const config::ExperimentConfig& cfg);

struct EnergyOutput {
    std::vector<energy::ScenarioResult> scenarios;
    double nominal_gops_w = 0.0; // published nominal operating point
    double scaled_gops_w = 0.0;  // published voltage-scaled operating point
    std::string csv_path;
};

EnergyOutput cmd_energy(const config::ExperimentConfig& cfg);

struct TopoOutput {
    bench::TopoCurve curve;
    std::string csv_path;
};

TopoOutput cmd_topo(const config::ExperimentConfig& cfg,
                    const std::vector<int>& hidden_widths = {2, 4, 8, 16, 32, 64});

} // namespace matic::experiment
