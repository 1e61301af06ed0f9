#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace micam::cli {

/// Configuration error that maps to exit code 1; component failures during a
/// run map to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::vector<std::string> models;   // bench accepts several; other commands use the first
    std::vector<std::string> inputs;
    std::string layer;                 // empty = last convolutional layer
    std::string method = "mi-cam";
    std::vector<std::string> methods;  // counterfactual/bench; empty = all three
    std::string output_dir = "micam_out";
    std::string annotations;           // bounding-box JSON, optional
    int bins = 256;
    double theta = 0.5;
    double step = 0.01;
    int steps = 100;
    int class_index = -1;              // -1 = predicted class
    uint64_t seed = 0;
    int workers = 1;
    std::string insertion_order = "ascending";
    double overlay_alpha = 0.5;
    // counterfactual
    std::string policy = "occlude-top-salient";
    double fraction = 0.5;
    double fill = 0.0;
    int patch_w = 0;
    int patch_h = 0;
    // sanity
    std::vector<int> depths;
    // bench
    int repeats = 10;
};

/// Resolve a model path, falling back to $MICAM_MODEL_DIR for relative paths
/// that do not exist as given.
std::string resolve_model_path(const std::string& path);

int run_explain(const RunConfig& cfg);
int run_evaluate(const RunConfig& cfg);
int run_counterfactual(const RunConfig& cfg);
int run_sanity(const RunConfig& cfg);
int run_bench(const RunConfig& cfg);

}  // namespace micam::cli
