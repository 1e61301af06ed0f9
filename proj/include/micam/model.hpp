#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "micam/image.hpp"

namespace micam {

/// Network input contract. Pixels are scaled to [0, 1] and then normalized
/// per channel: value = (pixel / 255 - mean[c]) / std[c].
struct InputSpec {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> mean;
    std::vector<double> std;
};

/// Per-class output of a forward pass. `softmaxed` is true when the model
/// declares logit outputs and softmax was applied.
struct Scores {
    Eigen::VectorXd values;
    bool softmaxed = false;
};

/// Output channels of one layer for one input.
struct ActivationStack {
    std::string layer;
    std::vector<Plane> planes;

    int channels() const { return static_cast<int>(planes.size()); }
    int height() const { return planes.empty() ? 0 : static_cast<int>(planes[0].rows()); }
    int width() const { return planes.empty() ? 0 : static_cast<int>(planes[0].cols()); }
};

/// Immutable classifier loaded from the JSON model-exchange format
/// (operator graph plus base64-encoded float32 weight tensors).
///
/// Supported operators: conv2d (optionally depthwise, optional fused ReLU),
/// max_pool, avg_pool, global_avg_pool, flatten, dense (optional fused ReLU).
/// Forward passes and activation capture are pure; weight randomization
/// returns a new handle.
class ModelHandle {
public:
    static ModelHandle load(const std::string& path);
    static ModelHandle from_json_text(const std::string& text);

    const std::string& name() const;
    const InputSpec& input_spec() const;
    int num_classes() const;
    bool logits_output() const;

    std::vector<std::string> layer_names() const;
    std::vector<std::string> conv_layer_names() const;
    /// Layers carrying weight tensors (conv2d and dense), in forward order.
    std::vector<std::string> parameterized_layer_names() const;
    /// Default capture target: the deepest convolutional layer.
    std::string last_conv_layer() const;

    /// Resize to the input spec (bilinear, half-pixel centers) and adapt the
    /// channel count (luma for 3->1, replication for 1->3). The result is the
    /// pre-normalization input the network consumes.
    Image preprocess(const Image& img) const;

    /// Preprocess, normalize and run the full graph.
    Scores forward(const Image& img) const;

    /// Run the graph up to and including `layer`, returning its emitted
    /// output channels (post fused activation).
    ActivationStack capture_activations(const Image& img, const std::string& layer) const;

    /// Run the remainder of the graph on a captured stack. Composing
    /// capture_activations with forward_from reproduces forward.
    Scores forward_from(const std::string& layer, const ActivationStack& stack) const;

    /// New handle with the deepest `from_top` parameterized layers' weight and
    /// bias tensors redrawn from a normal distribution matching each original
    /// tensor's mean and standard deviation. Deterministic given seed.
    ModelHandle randomize_cascade(int from_top, uint64_t seed) const;

    /// Weight tensor of a parameterized layer, weights followed by bias.
    std::vector<double> parameter_tensor(const std::string& layer) const;

private:
    struct Graph;
    std::shared_ptr<const Graph> graph_;
};

}  // namespace micam
