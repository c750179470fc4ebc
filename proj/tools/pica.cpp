#include <algorithm>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pica/app.hpp"

namespace {

// Expands "--config <file>" (or "--config=<file>") into flags placed right
// after the subcommand name, ahead of the user's own flags, so explicit flags
// win under the take-last policy.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    for (std::size_t i = 0; i < args.size(); ++i) {
        std::string file;
        std::size_t consumed = 0;
        if (args[i] == "--config" && i + 1 < args.size()) {
            file = args[i + 1];
            consumed = 2;
        } else if (args[i].rfind("--config=", 0) == 0) {
            file = args[i].substr(9);
            consumed = 1;
        } else {
            continue;
        }
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + consumed));
        auto extra = pica::app::config_file_args(file);
        const std::size_t at = args.empty() ? 0 : 1; // after the subcommand
        args.insert(args.begin() + static_cast<std::ptrdiff_t>(std::min(at, args.size())), extra.begin(), extra.end());
        break;
    }
    return args;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pica: attention- and parity-screened black-box adversarial attacks with NSGA-II"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    pica::app::RunConfig run;
    bool no_attention = false;
    bool no_parity = false;
    double pm = -1.0;
    double delta_max = -1.0;
    auto* attack = app.add_subcommand("attack", "Run an attack and write the adversarial example, CSVs and report");
    attack->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    attack->add_option("image", run.image, "Target image (PNG, PPM or PGM)")->required();
    attack->add_option("--oracle", run.oracle, "toy:linear | toy:conv-gap | subprocess:<cmd> | http://host:port")
        ->capture_default_str();
    attack->add_option("--attention", run.attention, "proxy | file:<pgm>")->capture_default_str();
    attack->add_option("--proxy-model", run.proxy_model, "conv-gap model file used as the CAM proxy");
    attack->add_option("--proxy-seed", run.proxy_seed, "Seed of the built-in proxy weights")->capture_default_str();
    attack->add_option("--target-model", run.target_model, "Model file for toy oracles");
    attack->add_option("--model-seed", run.model_seed, "Seed of the built-in toy target")->capture_default_str();
    attack->add_option("--classes", run.classes, "Class count of built-in toy models")->capture_default_str();
    attack->add_flag("--no-attention", no_attention, "Skip attention screening (full image)");
    attack->add_flag("--no-parity", no_parity, "Skip parity refinement");
    attack->add_flag("--odd-parity", run.odd_parity, "Attack the odd (l+w) checkerboard segment");
    attack->add_option("--upsample", run.upsample, "CAM upsampling: bilinear | nearest")->capture_default_str();
    attack->add_option("--delta-max", delta_max, "Cap |x_i| at this value");
    attack->add_flag("--final-from-front", run.final_from_front,
                     "Pick the final example from the last first front instead of the full history");
    attack->add_option("--pop", run.population, "Population size N")->capture_default_str();
    attack->add_option("--budget", run.budget, "Maximum oracle evaluations")->capture_default_str();
    attack->add_option("--eta-c", run.eta_c, "SBX distribution index")->capture_default_str();
    attack->add_option("--eta-m", run.eta_m, "PM distribution index")->capture_default_str();
    attack->add_option("--pc", run.crossover_probability, "Crossover probability")->capture_default_str();
    attack->add_option("--pm", pm, "Mutation probability (default 1/d)");
    attack->add_option("--seed", run.seed, "RNG seed")->capture_default_str();
    attack->add_option("--threads", run.threads, "Concurrent oracle queries (1 = reproducible)")
        ->capture_default_str();
    attack->add_option("--http-in-flight", run.http_in_flight, "Max concurrent HTTP requests")->capture_default_str();
    attack->add_option("-o,--out", run.output_dir, "Output directory")->capture_default_str();
    attack->add_flag("--history", run.write_history, "Also write history.csv");
    attack->add_option("--config", "Flat key = value file; command-line flags win");

    std::string vis_original, vis_pert, vis_mask, vis_out;
    auto* visualize = app.add_subcommand("visualize", "Render a perturbation pattern image");
    visualize->add_option("original", vis_original, "Original image")->required();
    visualize->add_option("perturbation", vis_pert, "Perturbation CSV (l,w,c,value)")->required();
    visualize->add_option("mask", vis_mask, "Mask PGM")->required();
    visualize->add_option("-o,--out", vis_out, "Output image")->required();

    std::string front_report, front_csv, front_plot;
    auto* export_front = app.add_subcommand("export-front", "Export the Pareto front of a report as CSV");
    export_front->add_option("report", front_report, "report.json")->required();
    export_front->add_option("-o,--out", front_csv, "Output CSV")->required();
    export_front->add_option("--plot", front_plot, "Also write 'f2 f1' plot data");

    pica::app::GenAttentionOptions gen;
    bool gen_no_parity = false;
    auto* gen_attention = app.add_subcommand("gen-attention", "Compute a CAM attention map (and mask) with the proxy");
    gen_attention->add_option("image", gen.image, "Target image")->required();
    gen_attention->add_option("-o,--out", gen.output, "Attention map PGM")->required();
    gen_attention->add_option("--mask", gen.mask_output, "Also write the final mask PGM");
    gen_attention->add_option("--proxy-model", gen.proxy_model, "conv-gap model file");
    gen_attention->add_option("--proxy-seed", gen.proxy_seed, "Seed of the built-in proxy")->capture_default_str();
    gen_attention->add_option("--classes", gen.classes, "Class count of the built-in proxy")->capture_default_str();
    gen_attention->add_flag("--no-parity", gen_no_parity, "Mask without parity refinement");
    gen_attention->add_flag("--odd-parity", gen.odd_parity, "Use the odd checkerboard segment");
    gen_attention->add_option("--upsample", gen.upsample, "bilinear | nearest")->capture_default_str();

    std::vector<std::string> args;
    try {
        args = expand_config(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return pica::app::kError;
    }
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : pica::app::kError;
    }

    if (*attack) {
        run.use_attention = !no_attention;
        run.use_parity = !no_parity;
        if (pm >= 0.0) run.mutation_probability = pm;
        if (delta_max >= 0.0) run.delta_max = delta_max;
        return pica::app::cmd_attack(run);
    }
    if (*visualize) return pica::app::cmd_visualize(vis_original, vis_pert, vis_mask, vis_out);
    if (*export_front) return pica::app::cmd_export_front(front_report, front_csv, front_plot);
    gen.use_parity = !gen_no_parity;
    return pica::app::cmd_gen_attention(gen);
}
