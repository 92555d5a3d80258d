#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "matic/errors.hpp"
#include "matic/experiment.hpp"

using namespace matic;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::string benchmark;
    std::string mode;
    std::string voltage_grid;
    long seed = -1;
    int jobs = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "config file (flat key = value)");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--jobs", o.jobs, "worker threads (0 = library default)");
    cmd->add_option("--voltage-grid", o.voltage_grid, "comma-separated voltages");
    cmd->add_option("--benchmark", o.benchmark, "mnist|facedet|inversek2j|bscholes|all");
    cmd->add_option("--mode", o.mode, "naive|adaptive");
}

config::ExperimentConfig build_config(const CommonOpts& o) {
    config::KeyValues kv;
    if (!o.config_path.empty()) kv = config::parse_config_file(o.config_path);
    if (o.seed >= 0) kv["seed"] = std::to_string(o.seed);
    if (!o.out_dir.empty()) kv["out"] = o.out_dir;
    if (!o.benchmark.empty()) kv["bench.name"] = o.benchmark;
    if (!o.mode.empty()) kv["mode"] = o.mode;
    if (!o.voltage_grid.empty()) kv["sweep.voltages"] = o.voltage_grid;
    if (o.jobs > 0) kv["jobs"] = std::to_string(o.jobs);

    // "all" is a sweep-only alias; validate the rest against a real name
    config::KeyValues check = kv;
    if (check.count("bench.name") && check["bench.name"] == "all") check["bench.name"] = "mnist";
    config::ExperimentConfig cfg = config::make_experiment_config(check);
    if (kv.count("bench.name")) cfg.benchmark = kv["bench.name"];
#ifdef _OPENMP
    if (cfg.jobs > 0) omp_set_num_threads(cfg.jobs);
#endif
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale lab for voltage-overscaled DNN weight memories: fault-aware "
                 "training, in-situ canary voltage control, energy scenarios"};
    app.require_subcommand(1);

    CommonOpts o;
    std::string fault_map_file;

    CLI::App* profile = app.add_subcommand("profile", "write fault-map files per grid voltage");
    add_common(profile, o);
    CLI::App* train = app.add_subcommand("train", "train one benchmark; writes checkpoint + history");
    add_common(train, o);
    train->add_option("--fault-map", fault_map_file, "fault map file for adaptive training");
    CLI::App* sweep = app.add_subcommand("sweep", "profile + train naive/adaptive over the grid");
    add_common(sweep, o);
    CLI::App* canary_cmd = app.add_subcommand("canary", "closed-loop voltage control over a temperature schedule");
    add_common(canary_cmd, o);
    CLI::App* energy_cmd = app.add_subcommand("energy", "operating-scenario energy table");
    add_common(energy_cmd, o);
    CLI::App* topo = app.add_subcommand("topo", "topology-vs-error knee sweep");
    add_common(topo, o);

    CLI11_PARSE(app, argc, argv);

    try {
        config::ExperimentConfig cfg = build_config(o);
        if (profile->parsed()) {
            auto paths = experiment::cmd_profile(cfg);
            for (const auto& p : paths) std::printf("wrote %s\n", p.c_str());
        } else if (train->parsed()) {
            std::string mode = cfg.mode;
            auto out = experiment::cmd_train(cfg, fault_map_file, mode);
            std::printf("final test error %.6g\n", out.result.history.back().test_error);
            std::printf("wrote %s\nwrote %s\n", out.checkpoint_path.c_str(),
                        out.history_path.c_str());
        } else if (sweep->parsed()) {
            auto out = experiment::cmd_sweep(cfg);
            for (const auto& s : out.summaries)
                std::printf("%-12s nominal %.4g  AEI naive %.4g adaptive %.4g  ratio %.3g\n",
                            s.benchmark.c_str(), s.nominal_error, s.naive_aei, s.adaptive_aei,
                            s.ratio);
            std::printf("wrote %s\n", out.csv_path.c_str());
        } else if (canary_cmd->parsed()) {
            auto out = experiment::cmd_canary(cfg);
            for (const auto& r : out.trace.rows)
                std::printf("step %2d  T %6.1f C  V %.3f  app_error %.5g\n", r.step, r.temp_c,
                            r.voltage, r.app_error);
            std::printf("wrote %s\n", out.csv_path.c_str());
        } else if (energy_cmd->parsed()) {
            auto out = experiment::cmd_energy(cfg);
            for (const auto& s : out.scenarios)
                std::printf("%-12s logic %.2f V sram %.2f V  total %6.2f pJ (base %6.2f)  %.2fx\n",
                            energy::to_string(s.scenario), s.logic_v, s.sram_v, s.total_pj,
                            s.base_total_pj, s.reduction);
            std::printf("nominal %.1f GOPS/W, scaled %.1f GOPS/W\n", out.nominal_gops_w,
                        out.scaled_gops_w);
            std::printf("wrote %s\n", out.csv_path.c_str());
        } else if (topo->parsed()) {
            auto out = experiment::cmd_topo(cfg);
            for (std::size_t i = 0; i < out.curve.points.size(); ++i)
                std::printf("hidden %3d  params %6zu  error %.5g%s\n",
                            out.curve.points[i].topology[1], out.curve.points[i].params,
                            out.curve.points[i].test_error,
                            i == out.curve.knee_index ? "  <- knee" : "");
            std::printf("wrote %s\n", out.csv_path.c_str());
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_config_error;
    } catch (const DataMissingError& e) {
        std::fprintf(stderr, "data missing: %s\n", e.what());
        return exit_data_missing;
    } catch (const DivergenceError& e) {
        std::fprintf(stderr, "divergence: %s\n", e.what());
        return exit_divergence;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return exit_ok;
}
