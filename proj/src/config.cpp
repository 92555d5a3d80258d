#include "matic/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "matic/errors.hpp"
#include "matic/rng.hpp"

namespace matic::config {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_double(const KeyValues& kv, const std::string& key, double dflt) {
    auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    try {
        std::size_t pos = 0;
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError("config: bad number for " + key + ": '" + it->second + "'");
    }
}

long to_long(const KeyValues& kv, const std::string& key, long dflt) {
    auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    try {
        std::size_t pos = 0;
        long v = std::stol(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError("config: bad integer for " + key + ": '" + it->second + "'");
    }
}

bool to_bool(const KeyValues& kv, const std::string& key, bool dflt) {
    auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("config: bad bool for " + key + ": '" + it->second + "'");
}

std::string to_str(const KeyValues& kv, const std::string& key, const std::string& dflt) {
    auto it = kv.find(key);
    return it == kv.end() ? dflt : it->second;
}

} // namespace

KeyValues parse_config_text(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + " is not key = value");
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (key.empty()) throw ConfigError("config: empty key on line " + std::to_string(lineno));
        kv[key] = val;
    }
    return kv;
}

KeyValues parse_config_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

std::vector<double> parse_voltage_list(const std::string& s) {
    std::vector<double> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (...) {
            throw ConfigError("config: bad voltage '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError("config: empty voltage grid");
    std::sort(out.begin(), out.end());
    return out;
}

ExperimentConfig make_experiment_config(const KeyValues& kv) {
    ExperimentConfig c;
    c.benchmark = to_str(kv, "bench.name", c.benchmark);
    c.mnist_dir = to_str(kv, "bench.mnist_dir", c.mnist_dir);
    c.cbcl_dir = to_str(kv, "bench.cbcl_dir", c.cbcl_dir);
    c.word_bits = int(to_long(kv, "qformat.word_bits", c.word_bits));
    c.frac_bits = int(to_long(kv, "qformat.frac_bits", c.frac_bits));

    c.geom.n_banks = int(to_long(kv, "sram.banks", c.geom.n_banks));
    c.geom.words_per_bank = int(to_long(kv, "sram.words_per_bank", c.geom.words_per_bank));
    c.geom.word_bits = int(to_long(kv, "sram.word_bits", c.geom.word_bits));
    c.sram_dist = to_str(kv, "sram.dist", c.sram_dist);
    c.sram_mu = to_double(kv, "sram.mu", c.sram_mu);
    c.sram_sigma = to_double(kv, "sram.sigma", c.sram_sigma);
    c.temp_coeff = to_double(kv, "sram.temp_coeff", c.temp_coeff);
    c.temperature = to_double(kv, "sram.temperature", c.temperature);

    if (auto it = kv.find("sweep.voltages"); it != kv.end())
        c.voltage_grid = parse_voltage_list(it->second);

    c.alpha = to_double(kv, "train.alpha", c.alpha);
    c.epochs = int(to_long(kv, "train.epochs", c.epochs));
    c.pretrain_epochs = int(to_long(kv, "train.pretrain_epochs", c.pretrain_epochs));
    c.minibatch = int(to_long(kv, "train.minibatch", c.minibatch));
    c.bias_masking = to_bool(kv, "train.bias_masking", c.bias_masking);
    c.from_scratch = to_bool(kv, "train.from_scratch", c.from_scratch);
    c.literal_eps = to_bool(kv, "train.literal_eps", c.literal_eps);

    c.canary_v0 = to_double(kv, "canary.v0", c.canary_v0);
    c.canary_dv = to_double(kv, "canary.dv", c.canary_dv);
    c.canary_k_per_bank = int(to_long(kv, "canary.k_per_bank", c.canary_k_per_bank));
    c.canary_target_voltage = to_double(kv, "canary.target_voltage", c.canary_target_voltage);
    c.sched_lo_c = to_double(kv, "canary.sched_lo_c", c.sched_lo_c);
    c.sched_hi_c = to_double(kv, "canary.sched_hi_c", c.sched_hi_c);
    c.sched_step_c = to_double(kv, "canary.sched_step_c", c.sched_step_c);

    c.energy_table_path = to_str(kv, "energy.table", c.energy_table_path);
    c.constraints.sram_floor = to_double(kv, "energy.sram_floor", c.constraints.sram_floor);
    c.constraints.logic_floor = to_double(kv, "energy.logic_floor", c.constraints.logic_floor);
    c.constraints.periphery_floor =
        to_double(kv, "energy.periphery_floor", c.constraints.periphery_floor);
    c.constraints.nominal = to_double(kv, "energy.nominal", c.constraints.nominal);
    c.ops_per_cycle = to_double(kv, "energy.ops_per_cycle", c.ops_per_cycle);

    c.seed = std::uint64_t(to_long(kv, "seed", long(c.seed)));
    c.out_dir = to_str(kv, "out", c.out_dir);
    c.jobs = int(to_long(kv, "jobs", c.jobs));
    c.mode = to_str(kv, "mode", c.mode);

    // validation
    if (c.word_bits != c.geom.word_bits)
        throw ConfigError("config: qformat.word_bits must equal sram.word_bits");
    if (!(qf::QFormat{c.word_bits, c.frac_bits >= 0 ? c.frac_bits : 0}.valid()))
        throw ConfigError("config: invalid qformat");
    if (c.sram_dist != "calibrated" && c.sram_dist != "normal")
        throw ConfigError("config: sram.dist must be calibrated or normal");
    if (c.sram_dist == "normal" && c.sram_sigma <= 0.0)
        throw ConfigError("config: sram.sigma must be positive");
    if (c.mode != "naive" && c.mode != "adaptive")
        throw ConfigError("config: mode must be naive or adaptive");
    bench::benchmark_spec(c.benchmark); // throws on unknown name
    energy::EnergyTable table = c.energy_table();
    for (double v : c.voltage_grid)
        if (v < table.span_lo() || v > table.span_hi())
            throw ConfigError("config: voltage grid point outside energy table span");
    return c;
}

sram::VminDistribution ExperimentConfig::distribution() const {
    if (sram_dist == "normal") return sram::VminDistribution::truncated_normal(sram_mu, sram_sigma);
    return sram::VminDistribution::calibrated_default();
}

energy::EnergyTable ExperimentConfig::energy_table() const {
    if (energy_table_path.empty()) return energy::EnergyTable::measured_default();
    return energy::load_energy_table(energy_table_path);
}

qf::QFormat ExperimentConfig::format_for(const bench::BenchmarkSpec& spec) const {
    qf::QFormat fmt{word_bits, frac_bits >= 0 ? frac_bits : spec.frac_bits};
    if (!fmt.valid()) throw ConfigError("config: invalid qformat");
    return fmt;
}

mat::TrainConfig ExperimentConfig::train_config(const bench::BenchmarkSpec& spec) const {
    mat::TrainConfig tc;
    tc.alpha = alpha > 0.0 ? alpha : spec.alpha;
    tc.epochs = epochs > 0 ? epochs : spec.epochs;
    tc.pretrain_epochs = pretrain_epochs > 0 ? pretrain_epochs : spec.pretrain_epochs;
    tc.loss = spec.loss;
    tc.fmt = format_for(spec);
    tc.seed = seed;
    tc.bias_masking = bias_masking;
    tc.minibatch = minibatch;
    tc.quantize = true;
    tc.from_scratch = from_scratch;
    tc.literal_eps = literal_eps;
    return tc;
}

std::string serialize(const ExperimentConfig& c) {
    std::ostringstream s;
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    s << "bench.name = " << c.benchmark << '\n';
    s << "bench.mnist_dir = " << c.mnist_dir << '\n';
    s << "bench.cbcl_dir = " << c.cbcl_dir << '\n';
    s << "qformat.word_bits = " << c.word_bits << '\n';
    s << "qformat.frac_bits = " << c.frac_bits << '\n';
    s << "sram.banks = " << c.geom.n_banks << '\n';
    s << "sram.words_per_bank = " << c.geom.words_per_bank << '\n';
    s << "sram.word_bits = " << c.geom.word_bits << '\n';
    s << "sram.dist = " << c.sram_dist << '\n';
    s << "sram.mu = " << num(c.sram_mu) << '\n';
    s << "sram.sigma = " << num(c.sram_sigma) << '\n';
    s << "sram.temp_coeff = " << num(c.temp_coeff) << '\n';
    s << "sram.temperature = " << num(c.temperature) << '\n';
    s << "sweep.voltages =";
    for (std::size_t i = 0; i < c.voltage_grid.size(); ++i)
        s << (i ? "," : " ") << num(c.voltage_grid[i]);
    s << '\n';
    s << "train.alpha = " << num(c.alpha) << '\n';
    s << "train.epochs = " << c.epochs << '\n';
    s << "train.pretrain_epochs = " << c.pretrain_epochs << '\n';
    s << "train.minibatch = " << c.minibatch << '\n';
    s << "train.bias_masking = " << (c.bias_masking ? "true" : "false") << '\n';
    s << "train.from_scratch = " << (c.from_scratch ? "true" : "false") << '\n';
    s << "train.literal_eps = " << (c.literal_eps ? "true" : "false") << '\n';
    s << "canary.v0 = " << num(c.canary_v0) << '\n';
    s << "canary.dv = " << num(c.canary_dv) << '\n';
    s << "canary.k_per_bank = " << c.canary_k_per_bank << '\n';
    s << "canary.target_voltage = " << num(c.canary_target_voltage) << '\n';
    s << "canary.sched_lo_c = " << num(c.sched_lo_c) << '\n';
    s << "canary.sched_hi_c = " << num(c.sched_hi_c) << '\n';
    s << "canary.sched_step_c = " << num(c.sched_step_c) << '\n';
    s << "energy.table = " << c.energy_table_path << '\n';
    s << "energy.sram_floor = " << num(c.constraints.sram_floor) << '\n';
    s << "energy.logic_floor = " << num(c.constraints.logic_floor) << '\n';
    s << "energy.periphery_floor = " << num(c.constraints.periphery_floor) << '\n';
    s << "energy.nominal = " << num(c.constraints.nominal) << '\n';
    s << "energy.ops_per_cycle = " << num(c.ops_per_cycle) << '\n';
    s << "seed = " << c.seed << '\n';
    s << "mode = " << c.mode << '\n';
    // out_dir and jobs do not affect results and stay out of the hash
    return s.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    std::string text = serialize(cfg);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace matic::config
