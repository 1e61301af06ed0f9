#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "micam/image.hpp"
#include "micam/model.hpp"

namespace micam::testing {

/// JSON snippets for hand-built models in the micam-model exchange format.
nlohmann::json conv_layer(const std::string& name, int in_ch, int out_ch, int k,
                          const std::vector<float>& weights, const std::vector<float>& bias,
                          bool relu = false, int pad = -1, int stride = 1);
nlohmann::json dense_layer(const std::string& name, int in, int out,
                           const std::vector<float>& weights, const std::vector<float>& bias,
                           bool relu = false);
nlohmann::json model_json(const std::string& name, int h, int w, int c, int classes,
                          const std::string& output, const nlohmann::json& layers);

/// 1-channel model whose single class score is the sum of normalized pixels.
ModelHandle sum_pixels_model(int h, int w);

/// 1-channel model whose single class score is the mean normalized intensity.
ModelHandle mean_intensity_model(int h, int w);

/// Model emitting fixed logits for every input (zero weights, logit biases).
ModelHandle fixed_logit_model(const std::vector<float>& logits, int h = 4, int w = 4);

/// 1-channel model with a single 1x1 identity conv layer named "conv"; its
/// captured activation equals the normalized input.
ModelHandle identity_conv_model(int h, int w);

/// 1-channel 2-conv model for counterfactual and sanity probes: "conv1" is a
/// 1x1 identity, "conv2" has an identity channel and a 3x3 box-blur channel.
ModelHandle probe_model(int h, int w);

/// Deterministic texture image: a bright random-valued patch on a black
/// background, patch anchored at (y0, x0) with the given size.
Image textured_image(int h, int w, int patch_y, int patch_x, int patch_h, int patch_w,
                     uint64_t seed);

/// Black background with bright random speckles spread over the whole image
/// at roughly 25% density.
Image speckled_image(int h, int w, uint64_t seed);

/// Deterministic pseudo-random RGB image.
Image random_image(int h, int w, uint64_t seed);

/// Path of the committed fixture directory.
std::string fixture_dir();

/// Fresh scratch directory under the system temp dir.
std::string make_temp_dir(const std::string& tag);

}  // namespace micam::testing
