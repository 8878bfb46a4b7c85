// Command-line front end: estimate NAD bases, generate synthetic datasets,
// run training grids with channel ablation, render decision-boundary
// cross-sections, and summarize finished run directories.

#include <cstdlib>
#include <iostream>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "aniso/experiment.hpp"

namespace {

struct CommonOpts {
    std::string config;
    std::string out;
    int seeds = -1;
    int threads = 0;
    bool paper_scale = false;
};

void add_common(CLI::App* sub, CommonOpts& o, bool config_required = true) {
    auto* c = sub->add_option("--config", o.config, "experiment config file");
    if (config_required) c->required();
    sub->add_option("--out", o.out, "output directory (overrides config)");
    sub->add_option("--seeds", o.seeds, "number of seeds (overrides config)");
    sub->add_option("--threads", o.threads, "OpenMP thread count (0 = runtime default)");
    sub->add_flag("--paper-scale", o.paper_scale, "32x32 inputs with 10k train / 10k test samples");
}

aniso::ExperimentConfig load_config(const CommonOpts& o, const std::string& expected_kind) {
    aniso::ExperimentConfig cfg = aniso::ExperimentConfig::parse_file(o.config);
    if (!o.out.empty()) cfg.out = o.out;
    if (o.seeds > 0) cfg.seeds = o.seeds;
    if (o.paper_scale) cfg.apply_paper_scale();
    if (o.threads > 0) {
#ifdef _OPENMP
        omp_set_num_threads(o.threads);
#endif
    }
    if (!expected_kind.empty() && cfg.kind != expected_kind)
        throw aniso::ConfigError("this subcommand expects kind = " + expected_kind + ", config says '" +
                                 cfg.kind + "'");
    cfg.validate();
    return cfg;
}

void print_files(const std::vector<std::string>& files) {
    for (const auto& f : files) std::cout << "wrote " << f << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"anisotool: directional-bias analysis for small vision models"};
    app.require_subcommand(1);

    CommonOpts nads_o, synth_o, grid_o, cs_o;
    std::string report_dir;

    auto* nads = app.add_subcommand("nads", "estimate the NAD basis of a model family at initialization");
    add_common(nads, nads_o);
    auto* synth = app.add_subcommand("synth", "generate a linearly separable dataset along one NAD");
    add_common(synth, synth_o);
    auto* grid = app.add_subcommand("grid", "train over a grid of NAD pairs and report channel ablations");
    add_common(grid, grid_o);
    auto* cs = app.add_subcommand("cross-section", "decision-boundary slice in a NAD-pair plane");
    add_common(cs, cs_o);
    auto* report = app.add_subcommand("report", "summarize a finished run directory");
    report->add_option("dir", report_dir, "run directory containing manifest.txt")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (nads->parsed()) {
            print_files(aniso::run_nads(load_config(nads_o, "nads")));
        } else if (synth->parsed()) {
            print_files(aniso::run_synth(load_config(synth_o, "synth")));
        } else if (grid->parsed()) {
            aniso::ExperimentConfig cfg = load_config(grid_o, "");
            if (cfg.kind != "train-linear-linear" && cfg.kind != "train-cifar-synth")
                throw aniso::ConfigError("grid expects kind = train-linear-linear or train-cifar-synth");
            print_files(aniso::run_grid(cfg));
        } else if (cs->parsed()) {
            print_files(aniso::run_cross_section(load_config(cs_o, "cross-section")));
        } else if (report->parsed()) {
            std::cout << aniso::run_report(report_dir);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
