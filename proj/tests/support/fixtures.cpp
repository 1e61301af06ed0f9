#include "fixtures.hpp"

#include <atomic>
#include <filesystem>
#include <random>

#include "micam/base64.hpp"

namespace micam::testing {

nlohmann::json conv_layer(const std::string& name, int in_ch, int out_ch, int k,
                          const std::vector<float>& weights, const std::vector<float>& bias,
                          bool relu, int pad, int stride) {
    if (pad < 0)
        pad = k / 2;
    nlohmann::json j{
        {"name", name},
        {"type", "conv2d"},
        {"in_channels", in_ch},
        {"out_channels", out_ch},
        {"kernel", {k, k}},
        {"stride", {stride, stride}},
        {"padding", {pad, pad}},
        {"weights", encode_f32(weights)},
    };
    if (!bias.empty())
        j["bias"] = encode_f32(bias);
    if (relu)
        j["activation"] = "relu";
    return j;
}

nlohmann::json dense_layer(const std::string& name, int in, int out,
                           const std::vector<float>& weights, const std::vector<float>& bias,
                           bool relu) {
    nlohmann::json j{
        {"name", name}, {"type", "dense"}, {"in", in}, {"out", out},
        {"weights", encode_f32(weights)},
    };
    if (!bias.empty())
        j["bias"] = encode_f32(bias);
    if (relu)
        j["activation"] = "relu";
    return j;
}

nlohmann::json model_json(const std::string& name, int h, int w, int c, int classes,
                          const std::string& output, const nlohmann::json& layers) {
    return nlohmann::json{
        {"format", "micam-model"},
        {"version", 1},
        {"name", name},
        {"input", {{"height", h}, {"width", w}, {"channels", c}}},
        {"classes", classes},
        {"output", output},
        {"layers", layers},
    };
}

ModelHandle sum_pixels_model(int h, int w) {
    nlohmann::json layers = nlohmann::json::array();
    layers.push_back({{"name", "flat"}, {"type", "flatten"}});
    layers.push_back(dense_layer("score", h * w, 1, std::vector<float>(h * w, 1.0f), {}));
    return ModelHandle::from_json_text(
        model_json("sum_pixels", h, w, 1, 1, "scores", layers).dump());
}

ModelHandle mean_intensity_model(int h, int w) {
    nlohmann::json layers = nlohmann::json::array();
    layers.push_back({{"name", "gap"}, {"type", "global_avg_pool"}});
    layers.push_back(dense_layer("score", 1, 1, {1.0f}, {}));
    return ModelHandle::from_json_text(
        model_json("mean_intensity", h, w, 1, 1, "scores", layers).dump());
}

ModelHandle fixed_logit_model(const std::vector<float>& logits, int h, int w) {
    const int classes = static_cast<int>(logits.size());
    nlohmann::json layers = nlohmann::json::array();
    layers.push_back({{"name", "gap"}, {"type", "global_avg_pool"}});
    layers.push_back(
        dense_layer("logits", 1, classes, std::vector<float>(classes, 0.0f), logits));
    return ModelHandle::from_json_text(
        model_json("fixed_logits", h, w, 1, classes, "logits", layers).dump());
}

ModelHandle identity_conv_model(int h, int w) {
    nlohmann::json layers = nlohmann::json::array();
    layers.push_back(conv_layer("conv", 1, 1, 1, {1.0f}, {}));
    layers.push_back({{"name", "gap"}, {"type", "global_avg_pool"}});
    layers.push_back(dense_layer("score", 1, 1, {1.0f}, {}));
    return ModelHandle::from_json_text(
        model_json("identity_conv", h, w, 1, 1, "scores", layers).dump());
}

ModelHandle probe_model(int h, int w) {
    nlohmann::json layers = nlohmann::json::array();
    layers.push_back(conv_layer("conv1", 1, 1, 1, {1.0f}, {}));
    // Channel 0: rectified Laplacian, firing only where neighboring pixels
    // differ (texture). Channel 1: box blur, following overall brightness.
    std::vector<float> conv2(2 * 9, -1.0f / 8.0f);
    conv2[4] = 1.0f;
    for (int i = 0; i < 9; ++i)
        conv2[9 + i] = 1.0f / 9.0f;
    layers.push_back(conv_layer("conv2", 1, 2, 3, conv2, {}, /*relu=*/true));
    layers.push_back({{"name", "gap"}, {"type", "global_avg_pool"}});
    layers.push_back(dense_layer("score", 2, 2, {1.0f, 0.0f, 0.0f, 1.0f}, {}));
    return ModelHandle::from_json_text(model_json("probe", h, w, 1, 2, "logits", layers).dump());
}

Image textured_image(int h, int w, int patch_y, int patch_x, int patch_h, int patch_w,
                     uint64_t seed) {
    Image img = Image::constant(h, w, 1, ColorSpace::Gray, 0.0);
    std::mt19937_64 rng(seed);
    for (int y = patch_y; y < patch_y + patch_h; ++y)
        for (int x = patch_x; x < patch_x + patch_w; ++x)
            img.at(y, x, 0) = 128.0 + static_cast<double>(rng() % 128);
    return img;
}

Image speckled_image(int h, int w, uint64_t seed) {
    Image img = Image::constant(h, w, 1, ColorSpace::Gray, 0.0);
    std::mt19937_64 rng(seed);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (rng() % 4 == 0)
                img.at(y, x, 0) = 128.0 + static_cast<double>(rng() % 128);
    return img;
}

Image random_image(int h, int w, uint64_t seed) {
    Image img(h, w, 3, ColorSpace::Rgb);
    std::mt19937_64 rng(seed);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(y, x, c) = static_cast<double>(rng() % 256);
    return img;
}

std::string fixture_dir() {
    return MICAM_FIXTURE_DIR;
}

std::string make_temp_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const auto dir = std::filesystem::temp_directory_path() /
                     ("micam_test_" + tag + "_" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace micam::testing
