#include "matic/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "matic/errors.hpp"

namespace matic::experiment {

namespace fs = std::filesystem;

namespace {

std::string fmt_num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::ofstream open_csv(const config::ExperimentConfig& cfg, const std::string& path,
                       const std::string& header) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file " + path);
    char meta[96];
    std::snprintf(meta, sizeof meta, "# config_hash=%016llx seed=%llu\n",
                  (unsigned long long)config::config_hash(cfg), (unsigned long long)cfg.seed);
    f << meta << header << '\n';
    return f;
}

sram::SramPopulation make_population(const config::ExperimentConfig& cfg) {
    return sram::sample_population(cfg.geom, cfg.distribution(), cfg.temp_coeff,
                                   Rng(cfg.seed).derive("population").state());
}

nn::Mlp make_initialized_net(const config::ExperimentConfig& cfg, const bench::BenchmarkSpec& spec) {
    nn::Mlp net = bench::make_benchmark_net(spec);
    nn::init_weights(net, Rng(cfg.seed).derive("init").derive(spec.name));
    return net;
}

} // namespace

std::string fault_map_path(const config::ExperimentConfig& cfg, double voltage) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "faultmap_V%.3f_T%.1f.txt", voltage, cfg.temperature);
    return (fs::path(cfg.out_dir) / buf).string();
}

std::vector<std::string> cmd_profile(const config::ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    sram::SramPopulation pop = make_population(cfg);
    std::vector<std::string> paths;
    for (double v : cfg.voltage_grid) {
        sram::SramPopulation scratch = pop;
        sram::FaultMap map = sram::profile(scratch, v, cfg.temperature);
        std::string path = fault_map_path(cfg, v);
        sram::save_fault_map(map, path);
        paths.push_back(path);
    }
    return paths;
}

TrainOutput cmd_train(const config::ExperimentConfig& cfg, const std::string& fault_map_file,
                      const std::string& mode) {
    if (mode != "naive" && mode != "adaptive")
        throw ConfigError("cmd_train: mode must be naive or adaptive");
    fs::create_directories(cfg.out_dir);
    bench::BenchmarkSpec spec = bench::benchmark_spec(cfg.benchmark);
    bench::TrainTestSplit data = bench::make_benchmark_data(spec, cfg.seed, cfg.mnist_dir, cfg.cbcl_dir);
    nn::Mlp net = make_initialized_net(cfg, spec);
    mat::WeightMapping mapping = mat::build_mapping(net, cfg.geom, cfg.format_for(spec));
    mat::TrainConfig tc = cfg.train_config(spec);

    sram::FaultMap map;
    bool have_map = !fault_map_file.empty();
    if (have_map) map = sram::load_fault_map(fault_map_file);

    mat::TrainMode tm = mode == "naive" ? mat::TrainMode::naive : mat::TrainMode::adaptive;
    TrainOutput out;
    out.result = mat::train(std::move(net), data.train, data.test, tc, tm, mapping,
                            have_map ? &map : nullptr);

    out.checkpoint_path = (fs::path(cfg.out_dir) / (cfg.benchmark + "_" + mode + "_checkpoint.txt")).string();
    nn::save_checkpoint(out.result.net, out.checkpoint_path);

    out.history_path = (fs::path(cfg.out_dir) / (cfg.benchmark + "_" + mode + "_history.csv")).string();
    auto f = open_csv(cfg, out.history_path, "epoch,train_error,test_error,fault_rate,voltage");
    for (const auto& e : out.result.history)
        f << e.epoch << ',' << fmt_num(e.train_error) << ',' << fmt_num(e.test_error) << ','
          << fmt_num(out.result.fault_rate) << ',' << fmt_num(out.result.voltage) << '\n';
    return out;
}

SweepResult cmd_sweep(const config::ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    std::vector<std::string> names =
        cfg.benchmark == "all" ? bench::benchmark_names() : std::vector<std::string>{cfg.benchmark};

    sram::SramPopulation pop = make_population(cfg);
    energy::EnergyTable table = cfg.energy_table();
    double logic_mep = energy::find_mep(table, energy::Rail::logic, cfg.constraints.logic_floor);

    std::vector<sram::FaultMap> maps(cfg.voltage_grid.size());
    for (std::size_t i = 0; i < cfg.voltage_grid.size(); ++i) {
        sram::SramPopulation scratch = pop;
        maps[i] = sram::profile(scratch, cfg.voltage_grid[i], cfg.temperature);
    }

    SweepResult result;
    for (const auto& name : names) {
        bench::BenchmarkSpec spec = bench::benchmark_spec(name);
        bench::TrainTestSplit data = bench::make_benchmark_data(spec, cfg.seed, cfg.mnist_dir, cfg.cbcl_dir);
        nn::Mlp net0 = make_initialized_net(cfg, spec);
        mat::WeightMapping mapping = mat::build_mapping(net0, cfg.geom, cfg.format_for(spec));
        mat::TrainConfig tc = cfg.train_config(spec);

        mat::TrainResult naive =
            mat::train(net0, data.train, data.test, tc, mat::TrainMode::naive, mapping, nullptr);
        sram::CompiledMasks identity = sram::CompiledMasks::identity(cfg.geom);
        double nominal = mat::evaluate_deployed(naive.net, mapping, identity, data.test,
                                                cfg.bias_masking);

        std::size_t nv = cfg.voltage_grid.size();
        std::vector<double> naive_err(nv), adaptive_err(nv), frate(nv);
        std::int64_t nvi = std::int64_t(nv);
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t i = 0; i < nvi; ++i) {
            sram::CompiledMasks masks = sram::compile_all(maps[std::size_t(i)]);
            mat::TrainResult adaptive = mat::train(net0, data.train, data.test, tc,
                                                   mat::TrainMode::adaptive, mapping,
                                                   &maps[std::size_t(i)]);
            naive_err[std::size_t(i)] = mat::evaluate_deployed(naive.net, mapping, masks,
                                                               data.test, cfg.bias_masking);
            adaptive_err[std::size_t(i)] = mat::evaluate_deployed(adaptive.net, mapping, masks,
                                                                  data.test, cfg.bias_masking);
            frate[std::size_t(i)] = double(maps[std::size_t(i)].entries.size()) /
                                    double(cfg.geom.total_cells());
        }

        for (std::size_t i = 0; i < nv; ++i) {
            SweepRow row;
            row.benchmark = name;
            row.voltage = cfg.voltage_grid[i];
            row.fault_rate = frate[i];
            row.naive_error = naive_err[i];
            row.adaptive_error = adaptive_err[i];
            row.energy_pj = energy::energy_at(table, energy::Rail::logic, logic_mep) +
                            energy::energy_at(table, energy::Rail::sram, cfg.voltage_grid[i]);
            result.rows.push_back(row);
        }

        SweepSummary sum;
        sum.benchmark = name;
        sum.metric = spec.metric;
        sum.nominal_error = nominal;
        sum.naive_aei = bench::aei(naive_err, nominal, spec.metric);
        sum.adaptive_aei = bench::aei(adaptive_err, nominal, spec.metric);
        sum.ratio = sum.adaptive_aei > 0.0 ? sum.naive_aei / sum.adaptive_aei
                                           : std::numeric_limits<double>::infinity();
        result.summaries.push_back(sum);
    }

    std::sort(result.rows.begin(), result.rows.end());
    std::sort(result.summaries.begin(), result.summaries.end(),
              [](const SweepSummary& a, const SweepSummary& b) { return a.benchmark < b.benchmark; });

    result.csv_path = (fs::path(cfg.out_dir) / "sweep.csv").string();
    auto f = open_csv(cfg, result.csv_path,
                      "benchmark,voltage,fault_rate,naive_error,adaptive_error,energy_pJ_per_cycle");
    f << "# energy column: logic at its MEP + SRAM at the row voltage\n";
    for (const auto& r : result.rows)
        f << r.benchmark << ',' << fmt_num(r.voltage) << ',' << fmt_num(r.fault_rate) << ','
          << fmt_num(r.naive_error) << ',' << fmt_num(r.adaptive_error) << ','
          << fmt_num(r.energy_pj) << '\n';
    f << "# AEI: mean error increase over the grid vs nominal; classification in"
         " percentage points, MSE relative to nominal\n";
    f << "# benchmark,nominal_error,naive_aei,adaptive_aei,ratio\n";
    for (const auto& s : result.summaries)
        f << "# AEI " << s.benchmark << ',' << fmt_num(s.nominal_error) << ','
          << fmt_num(s.naive_aei) << ',' << fmt_num(s.adaptive_aei) << ',' << fmt_num(s.ratio)
          << '\n';
    return result;
}

CanaryOutput cmd_canary(const config::ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    CanaryOutput out;
    sram::SramPopulation pop = make_population(cfg);
    {
        sram::SramPopulation scratch = pop;
        out.target_map = sram::profile(scratch, cfg.canary_target_voltage, cfg.temperature);
    }

    bench::BenchmarkSpec spec = bench::benchmark_spec(cfg.benchmark);
    bench::TrainTestSplit data = bench::make_benchmark_data(spec, cfg.seed, cfg.mnist_dir, cfg.cbcl_dir);
    nn::Mlp net0 = make_initialized_net(cfg, spec);
    mat::WeightMapping mapping = mat::build_mapping(net0, cfg.geom, cfg.format_for(spec));
    mat::TrainConfig tc = cfg.train_config(spec);
    mat::TrainResult trained = mat::train(std::move(net0), data.train, data.test, tc,
                                          mat::TrainMode::adaptive, mapping, &out.target_map);

    out.canaries = canary::select_canaries(pop, out.target_map, cfg.canary_k_per_bank, &mapping,
                                           true, cfg.canary_v0, cfg.canary_dv);
    canary::TempSchedule schedule =
        canary::TempSchedule::staircase(cfg.sched_lo_c, cfg.sched_hi_c, cfg.sched_step_c);
    out.trace = canary::run_simulation(pop, out.canaries, schedule, trained.net, mapping,
                                       out.target_map, data.test);

    out.csv_path = (fs::path(cfg.out_dir) / "canary_trace.csv").string();
    auto f = open_csv(cfg, out.csv_path,
                      "step,temperature_C,sram_voltage_V,any_failed,restored,app_error");
    for (const auto& r : out.trace.rows)
        f << r.step << ',' << fmt_num(r.temp_c) << ',' << fmt_num(r.voltage) << ','
          << (r.any_failed ? 1 : 0) << ',' << (r.restored ? 1 : 0) << ','
          << fmt_num(r.app_error) << '\n';
    return out;
}

EnergyOutput cmd_energy(const config::ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    EnergyOutput out;
    energy::EnergyTable table = cfg.energy_table();
    out.scenarios = energy::eval_all_scenarios(table, cfg.constraints);
    // published nominal and scaled operating points: 250 MHz / 16.8 mW nominal,
    // 17.8 MHz / 0.37 mW voltage-scaled
    out.nominal_gops_w = energy::efficiency_gops_per_watt(250.0, 16.8, cfg.ops_per_cycle);
    out.scaled_gops_w = energy::efficiency_gops_per_watt(17.8, 0.37, cfg.ops_per_cycle);

    out.csv_path = (fs::path(cfg.out_dir) / "energy_scenarios.csv").string();
    auto f = open_csv(cfg, out.csv_path,
                      "scenario,logic_V,sram_V,frequency_MHz,total_pJ,logic_pJ,sram_pJ,"
                      "base_logic_V,base_sram_V,base_total_pJ,reduction,gops_per_watt");
    f << "# values between table knots are linear interpolation\n";
    for (const auto& s : out.scenarios)
        f << energy::to_string(s.scenario) << ',' << fmt_num(s.logic_v) << ','
          << fmt_num(s.sram_v) << ',' << fmt_num(s.frequency_mhz) << ',' << fmt_num(s.total_pj)
          << ',' << fmt_num(s.logic_pj) << ',' << fmt_num(s.sram_pj) << ','
          << fmt_num(s.base_logic_v) << ',' << fmt_num(s.base_sram_v) << ','
          << fmt_num(s.base_total_pj) << ',' << fmt_num(s.reduction) << ','
          << fmt_num(energy::efficiency_gops_per_watt(s, cfg.ops_per_cycle)) << '\n';
    f << "# efficiency at the published operating points\n";
    f << "# nominal_gops_per_watt," << fmt_num(out.nominal_gops_w) << '\n';
    f << "# scaled_gops_per_watt," << fmt_num(out.scaled_gops_w) << '\n';
    return out;
}

TopoOutput cmd_topo(const config::ExperimentConfig& cfg, const std::vector<int>& hidden_widths) {
    fs::create_directories(cfg.out_dir);
    bench::BenchmarkSpec spec = bench::benchmark_spec(cfg.benchmark);
    bench::TrainTestSplit data = bench::make_benchmark_data(spec, cfg.seed, cfg.mnist_dir, cfg.cbcl_dir);
    std::vector<std::vector<int>> candidates;
    for (int h : hidden_widths)
        candidates.push_back({spec.topology.front(), h, spec.topology.back()});
    bench::TopoConfig tc;
    tc.alpha = cfg.alpha > 0.0 ? cfg.alpha : spec.alpha;
    tc.epochs = cfg.epochs > 0 ? cfg.epochs : 15;
    tc.seed = cfg.seed;

    TopoOutput out;
    out.curve = bench::topology_sweep(spec, data, candidates, tc);
    out.csv_path = (fs::path(cfg.out_dir) / ("topo_" + cfg.benchmark + ".csv")).string();
    auto f = open_csv(cfg, out.csv_path, "hidden,params,test_error,knee");
    for (std::size_t i = 0; i < out.curve.points.size(); ++i) {
        const auto& p = out.curve.points[i];
        f << p.topology[1] << ',' << p.params << ',' << fmt_num(p.test_error) << ','
          << (i == out.curve.knee_index ? 1 : 0) << '\n';
    }
    return out;
}

} // namespace matic::experiment
