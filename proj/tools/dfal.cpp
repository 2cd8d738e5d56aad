#include "dfal/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Gradient-discrepancy active learning toolkit"};
    app.require_subcommand(1);

    dfal::CommandOptions opts;
    std::string out;
    std::string results_dir;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config, "Run configuration (JSON)")->required();
        sub->add_option("--out", out, "Output root (overrides $DFAL_OUT_DIR and output.dir)");
    };

    auto* run = app.add_subcommand("run", "Run every (method, seed) active-learning trajectory");
    add_common(run);
    run->add_option("--threads", opts.threads, "Concurrent (method, seed) jobs")->check(CLI::PositiveNumber);

    auto* compare = app.add_subcommand("compare", "Pairwise penalty matrix over stored results");
    compare->add_option("results_dir", results_dir, "Directory searched for results.json")->required();
    compare->add_option("--slice", opts.slice, "all, early, late, dataset:<name> or arch:<name>");
    compare->add_option("--alpha", opts.alpha, "FDR level");
    compare->add_option("--out", out, "Output root (defaults to results_dir)");

    auto* geometry = app.add_subcommand("geometry", "2D projections of single acquisitions from one shared model");
    add_common(geometry);
    auto* shift = app.add_subcommand("shift", "DF scores on in-distribution and shifted evaluation sets");
    add_common(shift);
    auto* contraction = app.add_subcommand("contraction", "Per-epoch DF norm trace");
    add_common(contraction);
    auto* timing = app.add_subcommand("timing", "Acquisition wall time per method");
    add_common(timing);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : dfal::exit_config;
    }
    if (!out.empty())
        opts.out = out;

    if (run->parsed())
        return dfal::cmd_run(opts);
    if (compare->parsed())
        return dfal::cmd_compare(results_dir, opts);
    if (geometry->parsed())
        return dfal::cmd_geometry(opts);
    if (shift->parsed())
        return dfal::cmd_shift(opts);
    if (contraction->parsed())
        return dfal::cmd_contraction(opts);
    if (timing->parsed())
        return dfal::cmd_timing(opts);
    return dfal::exit_config;
}
