#pragma once

#include <array>
#include <string>

#include <Eigen/Core>

#include "micam/image.hpp"
#include "micam/model.hpp"

namespace micam {

enum class Method { MiCam, ScoreCam, EigenCam };

std::string method_name(Method m);
Method parse_method(const std::string& name);

/// One importance scalar per activation channel. Units depend on the method:
/// bits for mi-cam, softmaxed score deltas for score-cam, unitless singular
/// vector components for eigen-cam.
struct WeightVector {
    Method method = Method::MiCam;
    Eigen::VectorXd weights;

    int size() const { return static_cast<int>(weights.size()); }
};

/// Final heatmap, values in [0, 1] with max 1 unless identically zero.
struct SaliencyMap {
    Plane plane;
    std::string layer;
    Method method = Method::MiCam;
};

/// Mutual information between each upsampled activation channel and the
/// gray-scaled preprocessed input. x must be the image the stack was
/// captured from.
WeightVector mi_weights(const ActivationStack& stack, const Image& x, int bins = 256);

/// Weighted channel sum at native resolution, ReLU, bilinear upsample to
/// (out_w, out_h), min-max normalized to [0, 1]. An identically-zero
/// pre-normalization map stays all-zero.
SaliencyMap combine(const ActivationStack& stack, const WeightVector& w, int out_w, int out_h);

/// Per-channel class scores of the input masked by each normalized upsampled
/// activation channel, softmaxed over channels.
WeightVector score_cam_weights(const ModelHandle& m, const ActivationStack& stack, const Image& x,
                               int class_index);

/// Components of the first right singular vector of the (H'W') x K activation
/// matrix, sign-fixed so the projection's largest-magnitude entry is positive.
WeightVector eigen_cam_weights(const ActivationStack& stack);

/// Projection of the activation matrix onto its first right singular vector:
/// reshape, absolute value, upsample, normalize.
SaliencyMap eigen_cam_map(const ActivationStack& stack, int out_w, int out_h);

/// Jet color for t in [0, 1] as RGB in [0, 255].
std::array<double, 3> jet_color(double t);

/// Apply the jet colormap to s and alpha-blend it over img (alpha = 0 keeps
/// the image, alpha = 1 shows the pure colormap).
Image render_overlay(const Image& img, const SaliencyMap& s, double alpha);

/// One-stop saliency generation at the preprocessed input resolution.
struct Explanation {
    SaliencyMap map;
    WeightVector weights;
    Scores scores;     // forward pass on the original input
    Image input;       // preprocessed input X
    int class_index;   // class used (argmax when requested as -1)
};

/// Runs the forward pass, captures `layer` (last conv layer when empty),
/// computes the method's weights and combines them into a saliency map.
/// class_index selects the class for score-cam (-1 = predicted class);
/// mi-cam and eigen-cam ignore it.
Explanation explain(const ModelHandle& m, const Image& img, const std::string& layer, Method method,
                    int class_index = -1, int bins = 256);

}  // namespace micam
