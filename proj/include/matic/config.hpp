#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "matic/bench.hpp"
#include "matic/energy.hpp"
#include "matic/mat.hpp"
#include "matic/qformat.hpp"
#include "matic/sram.hpp"

namespace matic::config {

// Flat key=value config text ("sram.mu = 0.45"), '#' comments. CLI flags
// override file values.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_config_text(const std::string& text);
KeyValues parse_config_file(const std::string& path);

struct ExperimentConfig {
    std::string benchmark = "mnist";
    std::string mnist_dir; // empty: synthetic digits
    std::string cbcl_dir;  // empty: synthetic face patterns
    int word_bits = 16;
    int frac_bits = -1; // -1: per-benchmark default

    sram::BankGeometry geom{8, 576, 16};
    std::string sram_dist = "calibrated"; // calibrated | normal
    double sram_mu = 0.45;
    double sram_sigma = 0.025;
    double temp_coeff = 0.0003;
    double temperature = sram::kRefTempC;

    std::vector<double> voltage_grid{0.46, 0.48, 0.50, 0.53};

    // training knobs; zero means "use the benchmark default"
    double alpha = 0.0;
    int epochs = 0;
    int pretrain_epochs = 0;
    int minibatch = 1;
    bool bias_masking = false;
    bool from_scratch = false;
    bool literal_eps = false;

    double canary_v0 = 0.9;
    double canary_dv = 0.010;
    int canary_k_per_bank = 8;
    double canary_target_voltage = 0.50;
    double sched_lo_c = -15.0;
    double sched_hi_c = 90.0;
    double sched_step_c = 15.0;

    std::string energy_table_path; // empty: built-in default
    energy::ScenarioConstraints constraints;
    double ops_per_cycle = 8.0;

    std::uint64_t seed = 1;
    std::string out_dir = "out";
    int jobs = 0; // 0: library default
    std::string mode = "adaptive"; // naive | adaptive

    sram::VminDistribution distribution() const;
    energy::EnergyTable energy_table() const;
    qf::QFormat format_for(const bench::BenchmarkSpec& spec) const;
    mat::TrainConfig train_config(const bench::BenchmarkSpec& spec) const;
};

ExperimentConfig make_experiment_config(const KeyValues& kv);

// Canonical text form; also what the hash covers.
std::string serialize(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

std::vector<double> parse_voltage_list(const std::string& s);

} // namespace matic::config
