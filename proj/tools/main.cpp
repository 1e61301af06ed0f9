#include <cstdio>
#include <fstream>
#include <functional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli_app.hpp"

namespace {

using micam::cli::RunConfig;

/// Fill config fields from a JSON config file for every key the command line
/// did not set explicitly; flags win over the file.
void apply_config_file(CLI::App* cmd, const std::string& path, RunConfig& cfg) {
    std::ifstream in(path);
    if (!in)
        throw micam::cli::UsageError("cannot read config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw micam::cli::UsageError("malformed config file: " + std::string(e.what()));
    }

    const auto unset = [&](const char* flag) {
        const CLI::Option* opt = cmd->get_option_no_throw(flag);
        return opt != nullptr && opt->count() == 0;
    };
    const auto fill = [&](const char* key, const char* flag, auto& field) {
        if (j.contains(key) && unset(flag))
            j.at(key).get_to(field);
    };

    fill("model", "--model", cfg.models);
    fill("inputs", "--input", cfg.inputs);
    fill("layer", "--layer", cfg.layer);
    fill("method", "--method", cfg.method);
    fill("methods", "--methods", cfg.methods);
    fill("output_dir", "--out", cfg.output_dir);
    fill("annotations", "--annotations", cfg.annotations);
    fill("bins", "--bins", cfg.bins);
    fill("theta", "--theta", cfg.theta);
    fill("step", "--step", cfg.step);
    fill("steps", "--steps", cfg.steps);
    fill("class", "--class", cfg.class_index);
    fill("seed", "--seed", cfg.seed);
    fill("workers", "--workers", cfg.workers);
    fill("insertion_order", "--insertion-order", cfg.insertion_order);
    fill("overlay_alpha", "--alpha", cfg.overlay_alpha);
    fill("policy", "--policy", cfg.policy);
    fill("fraction", "--fraction", cfg.fraction);
    fill("fill", "--fill", cfg.fill);
    fill("patch_w", "--patch-w", cfg.patch_w);
    fill("patch_h", "--patch-h", cfg.patch_h);
    fill("depths", "--depths", cfg.depths);
    fill("repeats", "--repeats", cfg.repeats);
}

void add_common_options(CLI::App* cmd, RunConfig& cfg, std::string& config_path) {
    cmd->add_option("--config", config_path, "JSON config file; explicit flags win");
    cmd->add_option("-m,--model", cfg.models,
                    "model file (micam-model JSON); relative paths also resolve "
                    "against $MICAM_MODEL_DIR");
    cmd->add_option("-i,--input", cfg.inputs, "input image(s), PNG or JPEG");
    cmd->add_option("-l,--layer", cfg.layer, "capture layer (default: last conv layer)");
    cmd->add_option("-o,--out", cfg.output_dir, "output directory");
    cmd->add_option("--bins", cfg.bins, "histogram bin count for mutual information")
        ->check(CLI::Range(2, 1 << 16));
    cmd->add_option("--class", cfg.class_index, "class index (-1 = predicted class)");
    cmd->add_option("--seed", cfg.seed, "seed for randomized operations");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gradient-free CNN saliency toolkit: mutual-information CAM "
                 "with score-cam and eigen-cam baselines"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;
    std::function<int(const RunConfig&)> action;

    CLI::App* explain = app.add_subcommand(
        "explain", "Write overlay PNG, saliency CSV and weight CSV for each input");
    add_common_options(explain, cfg, config_path);
    explain->add_option("--method", cfg.method, "mi-cam | score-cam | eigen-cam");
    explain->add_option("--alpha", cfg.overlay_alpha, "overlay blend factor")
        ->check(CLI::Range(0.0, 1.0));
    explain->add_option("--workers", cfg.workers, "images processed concurrently")
        ->check(CLI::PositiveNumber);
    explain->callback([&] { action = micam::cli::run_explain; });

    CLI::App* evaluate = app.add_subcommand(
        "evaluate", "Average drop/increase, deletion/insertion AUC, pointing game, EBPG");
    add_common_options(evaluate, cfg, config_path);
    evaluate->add_option("--method", cfg.method, "mi-cam | score-cam | eigen-cam");
    evaluate->add_option("--annotations", cfg.annotations,
                         "bounding-box JSON file enabling localization metrics");
    evaluate->add_option("--theta", cfg.theta, "mask threshold")->check(CLI::Range(0.0, 1.0));
    evaluate->add_option("--step", cfg.step, "curve step fraction");
    evaluate->add_option("--steps", cfg.steps, "curve step count");
    evaluate->add_option("--insertion-order", cfg.insertion_order,
                         "ascending (least salient first) | descending");
    evaluate->add_option("--workers", cfg.workers, "images processed concurrently")
        ->check(CLI::PositiveNumber);
    evaluate->callback([&] { action = micam::cli::run_evaluate; });

    CLI::App* counterfactual = app.add_subcommand(
        "counterfactual", "Weight divergence between an input and a perturbed variant");
    add_common_options(counterfactual, cfg, config_path);
    counterfactual->add_option("--methods", cfg.methods,
                               "methods to compare (default: all three)");
    counterfactual->add_option("--policy", cfg.policy,
                               "occlude-top-salient | random-patch | constant-fill");
    counterfactual->add_option("--fraction", cfg.fraction,
                               "occluded fraction for occlude-top-salient")
        ->check(CLI::Range(0.0, 1.0));
    counterfactual->add_option("--fill", cfg.fill, "fill intensity for perturbed pixels");
    counterfactual->add_option("--patch-w", cfg.patch_w, "random-patch width");
    counterfactual->add_option("--patch-h", cfg.patch_h, "random-patch height");
    counterfactual->callback([&] { action = micam::cli::run_counterfactual; });

    CLI::App* sanity = app.add_subcommand(
        "sanity", "Cascading weight-randomization check with rank correlations");
    add_common_options(sanity, cfg, config_path);
    sanity->add_option("--method", cfg.method, "mi-cam | score-cam | eigen-cam");
    sanity->add_option("--depths", cfg.depths,
                       "cascade depths, counted from the deepest parameterized layer");
    sanity->callback([&] { action = micam::cli::run_sanity; });

    CLI::App* bench = app.add_subcommand("bench", "Wall-clock timing per method and model");
    add_common_options(bench, cfg, config_path);
    bench->add_option("--methods", cfg.methods, "methods to time (default: all three)");
    bench->add_option("--repeats", cfg.repeats, "runs to average over");
    bench->callback([&] { action = micam::cli::run_bench; });

    try {
        app.parse(argc, argv);
        CLI::App* active = app.get_subcommands().front();
        if (!config_path.empty())
            apply_config_file(active, config_path, cfg);
        return action(cfg);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const micam::cli::UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
