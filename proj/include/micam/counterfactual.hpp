#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "micam/cam.hpp"
#include "micam/image.hpp"
#include "micam/model.hpp"

namespace micam {

enum class PerturbKind {
    OccludeTopSalient,  // overwrite the ceil(fraction * HW) most salient pixels
    RandomPatch,        // overwrite a randomly placed patch_w x patch_h window
    ConstantFill,       // overwrite the whole image
};

struct PerturbPolicy {
    PerturbKind kind = PerturbKind::OccludeTopSalient;
    double fraction = 0.5;  // occlude-top-salient; 0 is the identity limit
    int patch_w = 0;        // random-patch
    int patch_h = 0;
    double fill = 0.0;
    uint64_t seed = 0;
};

/// Elementwise divergence between a weight vector and its counterfactual.
/// relative_l1 normalizes by the original vector's L1 mass and is 0 when that
/// mass is 0.
struct DivergenceReport {
    Eigen::VectorXd per_channel;
    double l1 = 0.0;
    double linf = 0.0;
    double relative_l1 = 0.0;
};

/// Generate a counterfactual input by overwriting the selected pixels with
/// the policy's fill value. occlude-top-salient requires a saliency map; ties
/// in the ranking break row-major first.
Image perturb(const Image& img, const SaliencyMap* s, const PerturbPolicy& policy);

DivergenceReport weight_divergence(const WeightVector& w, const WeightVector& w_cf);

struct CounterfactualResult {
    Method method = Method::MiCam;
    WeightVector original;
    WeightVector counterfactual;
    DivergenceReport divergence;
};

/// For each method: weights on the original and on the perturbed input plus
/// their divergence. occlude-top-salient perturbs by each method's own
/// saliency map; the other policies share one perturbed input across methods.
std::vector<CounterfactualResult> counterfactual_run(const ModelHandle& m, const Image& img,
                                                     const std::string& layer,
                                                     const PerturbPolicy& policy,
                                                     std::span<const Method> methods,
                                                     int class_index = -1, int bins = 256);

}  // namespace micam
