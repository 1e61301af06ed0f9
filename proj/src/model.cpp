#include "micam/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "micam/base64.hpp"
#include "micam/mi.hpp"

namespace micam {

namespace {

enum class LayerKind { Conv2d, MaxPool, AvgPool, GlobalAvgPool, Flatten, Dense };

struct Layer {
    LayerKind kind;
    std::string name;
    // conv2d
    int in_ch = 0, out_ch = 0;
    int kh = 0, kw = 0;
    int sh = 1, sw = 1;
    int ph = 0, pw = 0;
    int groups = 1;
    bool relu = false;
    std::vector<double> weights;  // conv: [out][in/groups][kh][kw]; dense: [out][in]
    std::vector<double> bias;     // [out], may be empty
    // pooling
    int pool_k = 0, pool_s = 0;
    // dense
    int in_features = 0, out_features = 0;

    bool parameterized() const { return kind == LayerKind::Conv2d || kind == LayerKind::Dense; }
};

/// Feature state flowing through the graph: channel planes for spatial
/// layers, a single 1 x N plane after flatten/dense.
using Feats = std::vector<Plane>;

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
    const double m = z.maxCoeff();
    Eigen::VectorXd e = (z.array() - m).exp();
    return e / e.sum();
}

}  // namespace

struct ModelHandle::Graph {
    std::string name;
    InputSpec input;
    int classes = 0;
    bool logits = false;
    std::vector<Layer> layers;

    int layer_index(const std::string& layer_name) const {
        for (size_t i = 0; i < layers.size(); ++i)
            if (layers[i].name == layer_name)
                return static_cast<int>(i);
        throw std::invalid_argument("unknown layer: " + layer_name);
    }

    Feats normalize(const Image& img) const {
        Feats feats;
        feats.reserve(static_cast<size_t>(input.channels));
        for (int c = 0; c < input.channels; ++c) {
            Plane p(input.height, input.width);
            for (int y = 0; y < input.height; ++y)
                for (int x = 0; x < input.width; ++x)
                    p(y, x) = (img.at(y, x, c) / 255.0 - input.mean[c]) / input.std[c];
            feats.push_back(std::move(p));
        }
        return feats;
    }

    Feats apply(const Layer& l, const Feats& in) const;
    Feats run_range(Feats feats, size_t first, size_t last) const;
    Scores to_scores(const Feats& feats) const;
};

namespace {

Feats conv2d(const Layer& l, const Feats& in) {
    const int H = static_cast<int>(in[0].rows());
    const int W = static_cast<int>(in[0].cols());
    const int out_h = (H + 2 * l.ph - l.kh) / l.sh + 1;
    const int out_w = (W + 2 * l.pw - l.kw) / l.sw + 1;
    if (static_cast<int>(in.size()) != l.in_ch)
        throw std::runtime_error("conv2d '" + l.name + "': channel mismatch");
    if (out_h < 1 || out_w < 1)
        throw std::runtime_error("conv2d '" + l.name + "': kernel larger than padded input");

    const int ch_per_group = l.in_ch / l.groups;
    const int out_per_group = l.out_ch / l.groups;
    const size_t ksize = static_cast<size_t>(ch_per_group) * l.kh * l.kw;

    Feats out;
    out.reserve(static_cast<size_t>(l.out_ch));
    for (int oc = 0; oc < l.out_ch; ++oc) {
        const int g = oc / out_per_group;
        const double* wbase = l.weights.data() + static_cast<size_t>(oc) * ksize;
        Plane plane(out_h, out_w);
        for (int oy = 0; oy < out_h; ++oy) {
            for (int ox = 0; ox < out_w; ++ox) {
                double acc = l.bias.empty() ? 0.0 : l.bias[static_cast<size_t>(oc)];
                for (int ic = 0; ic < ch_per_group; ++ic) {
                    const Plane& src = in[static_cast<size_t>(g * ch_per_group + ic)];
                    const double* w = wbase + static_cast<size_t>(ic) * l.kh * l.kw;
                    for (int ky = 0; ky < l.kh; ++ky) {
                        const int iy = oy * l.sh + ky - l.ph;
                        if (iy < 0 || iy >= H) continue;
                        for (int kx = 0; kx < l.kw; ++kx) {
                            const int ix = ox * l.sw + kx - l.pw;
                            if (ix < 0 || ix >= W) continue;
                            acc += src(iy, ix) * w[ky * l.kw + kx];
                        }
                    }
                }
                plane(oy, ox) = l.relu ? std::max(acc, 0.0) : acc;
            }
        }
        out.push_back(std::move(plane));
    }
    return out;
}

Feats pool(const Layer& l, const Feats& in, bool take_max) {
    const int H = static_cast<int>(in[0].rows());
    const int W = static_cast<int>(in[0].cols());
    const int out_h = (H - l.pool_k) / l.pool_s + 1;
    const int out_w = (W - l.pool_k) / l.pool_s + 1;
    if (out_h < 1 || out_w < 1)
        throw std::runtime_error("pool '" + l.name + "': window larger than input");

    Feats out;
    out.reserve(in.size());
    for (const Plane& src : in) {
        Plane plane(out_h, out_w);
        for (int oy = 0; oy < out_h; ++oy) {
            for (int ox = 0; ox < out_w; ++ox) {
                double v = take_max ? -std::numeric_limits<double>::infinity() : 0.0;
                for (int ky = 0; ky < l.pool_k; ++ky)
                    for (int kx = 0; kx < l.pool_k; ++kx) {
                        const double s = src(oy * l.pool_s + ky, ox * l.pool_s + kx);
                        if (take_max)
                            v = std::max(v, s);
                        else
                            v += s;
                    }
                plane(oy, ox) = take_max ? v : v / (l.pool_k * l.pool_k);
            }
        }
        out.push_back(std::move(plane));
    }
    return out;
}

Feats global_avg_pool(const Feats& in) {
    Feats out;
    out.reserve(in.size());
    for (const Plane& src : in) {
        Plane plane(1, 1);
        plane(0, 0) = src.mean();
        out.push_back(std::move(plane));
    }
    return out;
}

Feats flatten(const Feats& in) {
    size_t total = 0;
    for (const Plane& p : in)
        total += static_cast<size_t>(p.size());
    Plane flat(1, static_cast<Eigen::Index>(total));
    Eigen::Index pos = 0;
    for (const Plane& p : in)
        for (Eigen::Index i = 0; i < p.size(); ++i)
            flat(0, pos++) = p.data()[i];  // channel-major, each channel row-major
    return {flat};
}

Feats dense(const Layer& l, const Feats& in) {
    Feats flat = in.size() == 1 && in[0].rows() == 1 ? in : flatten(in);
    const Plane& x = flat[0];
    if (static_cast<int>(x.cols()) != l.in_features)
        throw std::runtime_error("dense '" + l.name + "': expected " +
                                 std::to_string(l.in_features) + " inputs, got " +
                                 std::to_string(x.cols()));
    Plane out(1, l.out_features);
    for (int o = 0; o < l.out_features; ++o) {
        double acc = l.bias.empty() ? 0.0 : l.bias[static_cast<size_t>(o)];
        const double* w = l.weights.data() + static_cast<size_t>(o) * l.in_features;
        for (int i = 0; i < l.in_features; ++i)
            acc += w[i] * x(0, i);
        out(0, o) = l.relu ? std::max(acc, 0.0) : acc;
    }
    return {out};
}

}  // namespace

Feats ModelHandle::Graph::apply(const Layer& l, const Feats& in) const {
    switch (l.kind) {
        case LayerKind::Conv2d: return conv2d(l, in);
        case LayerKind::MaxPool: return pool(l, in, true);
        case LayerKind::AvgPool: return pool(l, in, false);
        case LayerKind::GlobalAvgPool: return global_avg_pool(in);
        case LayerKind::Flatten: return flatten(in);
        case LayerKind::Dense: return dense(l, in);
    }
    throw std::logic_error("unreachable layer kind");
}

Feats ModelHandle::Graph::run_range(Feats feats, size_t first, size_t last) const {
    for (size_t i = first; i < last; ++i)
        feats = apply(layers[i], feats);
    return feats;
}

Scores ModelHandle::Graph::to_scores(const Feats& feats) const {
    Feats flat = feats.size() == 1 && feats[0].rows() == 1 ? feats : flatten(feats);
    const Plane& out = flat[0];
    if (static_cast<int>(out.cols()) != classes)
        throw std::runtime_error("graph output length " + std::to_string(out.cols()) +
                                 " does not match declared class count " + std::to_string(classes));
    Scores s;
    s.values = Eigen::Map<const Eigen::VectorXd>(out.data(), out.cols());
    if (logits) {
        s.values = softmax(s.values);
        s.softmaxed = true;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Loading

namespace {

Layer parse_layer(const nlohmann::json& j) {
    Layer l;
    l.name = j.at("name").get<std::string>();
    const std::string type = j.at("type").get<std::string>();

    auto tensor = [&](const char* key) {
        std::vector<float> f = decode_f32(j.at(key).get<std::string>());
        return std::vector<double>(f.begin(), f.end());
    };

    if (type == "conv2d") {
        l.kind = LayerKind::Conv2d;
        l.in_ch = j.at("in_channels").get<int>();
        l.out_ch = j.at("out_channels").get<int>();
        l.kh = j.at("kernel")[0].get<int>();
        l.kw = j.at("kernel")[1].get<int>();
        l.sh = j.value("stride", std::vector<int>{1, 1})[0];
        l.sw = j.value("stride", std::vector<int>{1, 1})[1];
        l.ph = j.value("padding", std::vector<int>{0, 0})[0];
        l.pw = j.value("padding", std::vector<int>{0, 0})[1];
        l.groups = j.value("groups", 1);
        l.relu = j.value("activation", std::string("none")) == "relu";
        if (l.in_ch < 1 || l.out_ch < 1 || l.kh < 1 || l.kw < 1 || l.sh < 1 || l.sw < 1)
            throw std::runtime_error("conv2d '" + l.name + "': invalid geometry");
        if (l.groups < 1 || l.in_ch % l.groups != 0 || l.out_ch % l.groups != 0)
            throw std::runtime_error("conv2d '" + l.name + "': invalid group count");
        l.weights = tensor("weights");
        const size_t expect = static_cast<size_t>(l.out_ch) * (l.in_ch / l.groups) * l.kh * l.kw;
        if (l.weights.size() != expect)
            throw std::runtime_error("conv2d '" + l.name + "': weight tensor size mismatch");
        if (j.contains("bias")) {
            l.bias = tensor("bias");
            if (l.bias.size() != static_cast<size_t>(l.out_ch))
                throw std::runtime_error("conv2d '" + l.name + "': bias size mismatch");
        }
    } else if (type == "max_pool" || type == "avg_pool") {
        l.kind = type == "max_pool" ? LayerKind::MaxPool : LayerKind::AvgPool;
        l.pool_k = j.at("kernel").get<int>();
        l.pool_s = j.value("stride", l.pool_k);
        if (l.pool_k < 1 || l.pool_s < 1)
            throw std::runtime_error("pool '" + l.name + "': invalid geometry");
    } else if (type == "global_avg_pool") {
        l.kind = LayerKind::GlobalAvgPool;
    } else if (type == "flatten") {
        l.kind = LayerKind::Flatten;
    } else if (type == "dense") {
        l.kind = LayerKind::Dense;
        l.in_features = j.at("in").get<int>();
        l.out_features = j.at("out").get<int>();
        if (l.in_features < 1 || l.out_features < 1)
            throw std::runtime_error("dense '" + l.name + "': invalid geometry");
        l.relu = j.value("activation", std::string("none")) == "relu";
        l.weights = tensor("weights");
        if (l.weights.size() != static_cast<size_t>(l.in_features) * l.out_features)
            throw std::runtime_error("dense '" + l.name + "': weight tensor size mismatch");
        if (j.contains("bias")) {
            l.bias = tensor("bias");
            if (l.bias.size() != static_cast<size_t>(l.out_features))
                throw std::runtime_error("dense '" + l.name + "': bias size mismatch");
        }
    } else {
        throw std::runtime_error("unsupported operator: " + type);
    }
    return l;
}

}  // namespace

ModelHandle ModelHandle::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("malformed model file: ") + e.what());
    }

    auto graph = std::make_shared<Graph>();
    try {
        if (j.value("format", std::string()) != "micam-model")
            throw std::runtime_error("missing \"format\": \"micam-model\" marker");
        graph->name = j.value("name", std::string("model"));
        const auto& in = j.at("input");
        graph->input.height = in.at("height").get<int>();
        graph->input.width = in.at("width").get<int>();
        graph->input.channels = in.at("channels").get<int>();
        graph->input.mean = in.value("mean", std::vector<double>(graph->input.channels, 0.0));
        graph->input.std = in.value("std", std::vector<double>(graph->input.channels, 1.0));
        if (graph->input.height < 1 || graph->input.width < 1 || graph->input.channels < 1)
            throw std::runtime_error("input spec dimensions must be >= 1");
        if (static_cast<int>(graph->input.mean.size()) != graph->input.channels ||
            static_cast<int>(graph->input.std.size()) != graph->input.channels)
            throw std::runtime_error("normalization constants must match channel count");
        graph->classes = j.at("classes").get<int>();
        graph->logits = j.value("output", std::string("scores")) == "logits";
        for (const auto& lj : j.at("layers"))
            graph->layers.push_back(parse_layer(lj));
        if (graph->layers.empty())
            throw std::runtime_error("model has no layers");
        std::vector<std::string> seen;
        for (const auto& l : graph->layers) {
            if (std::find(seen.begin(), seen.end(), l.name) != seen.end())
                throw std::runtime_error("duplicate layer name: " + l.name);
            seen.push_back(l.name);
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("malformed model file: ") + e.what());
    }

    ModelHandle handle;
    handle.graph_ = std::move(graph);
    return handle;
}

ModelHandle ModelHandle::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("model file not found: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

// ---------------------------------------------------------------------------
// Introspection

const std::string& ModelHandle::name() const { return graph_->name; }
const InputSpec& ModelHandle::input_spec() const { return graph_->input; }
int ModelHandle::num_classes() const { return graph_->classes; }
bool ModelHandle::logits_output() const { return graph_->logits; }

std::vector<std::string> ModelHandle::layer_names() const {
    std::vector<std::string> names;
    names.reserve(graph_->layers.size());
    for (const auto& l : graph_->layers)
        names.push_back(l.name);
    return names;
}

std::vector<std::string> ModelHandle::conv_layer_names() const {
    std::vector<std::string> names;
    for (const auto& l : graph_->layers)
        if (l.kind == LayerKind::Conv2d)
            names.push_back(l.name);
    return names;
}

std::vector<std::string> ModelHandle::parameterized_layer_names() const {
    std::vector<std::string> names;
    for (const auto& l : graph_->layers)
        if (l.parameterized())
            names.push_back(l.name);
    return names;
}

std::string ModelHandle::last_conv_layer() const {
    const auto names = conv_layer_names();
    if (names.empty())
        throw std::runtime_error("model has no convolutional layers");
    return names.back();
}

std::vector<double> ModelHandle::parameter_tensor(const std::string& layer) const {
    const Layer& l = graph_->layers[static_cast<size_t>(graph_->layer_index(layer))];
    if (!l.parameterized())
        throw std::invalid_argument("layer carries no parameters: " + layer);
    std::vector<double> t = l.weights;
    t.insert(t.end(), l.bias.begin(), l.bias.end());
    return t;
}

// ---------------------------------------------------------------------------
// Execution

Image ModelHandle::preprocess(const Image& img) const {
    const InputSpec& spec = graph_->input;

    // Adapt channel count first so resampling runs on the channels the
    // network consumes.
    Image adapted = img;
    if (img.channels() != spec.channels) {
        if (img.channels() == 3 && spec.channels == 1) {
            const Plane gray = grayscale(img);
            adapted = Image(img.height(), img.width(), 1, ColorSpace::Gray);
            for (int y = 0; y < img.height(); ++y)
                for (int x = 0; x < img.width(); ++x)
                    adapted.at(y, x, 0) = gray(y, x);
        } else if (img.channels() == 1 && spec.channels == 3) {
            adapted = Image(img.height(), img.width(), 3, ColorSpace::Rgb);
            for (int y = 0; y < img.height(); ++y)
                for (int x = 0; x < img.width(); ++x)
                    for (int c = 0; c < 3; ++c)
                        adapted.at(y, x, c) = img.at(y, x, 0);
        } else {
            throw std::invalid_argument("preprocess: cannot adapt " +
                                        std::to_string(img.channels()) + " channels to " +
                                        std::to_string(spec.channels));
        }
    }

    if (adapted.height() == spec.height && adapted.width() == spec.width)
        return adapted;

    Image out(spec.height, spec.width, spec.channels, adapted.color_space());
    for (int c = 0; c < spec.channels; ++c) {
        const Plane resized = upsample(adapted.channel(c), spec.width, spec.height);
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x)
                out.at(y, x, c) = resized(y, x);
    }
    return out;
}

Scores ModelHandle::forward(const Image& img) const {
    const Image x = preprocess(img);
    Feats feats = graph_->normalize(x);
    feats = graph_->run_range(std::move(feats), 0, graph_->layers.size());
    return graph_->to_scores(feats);
}

ActivationStack ModelHandle::capture_activations(const Image& img, const std::string& layer) const {
    const int idx = graph_->layer_index(layer);
    const Image x = preprocess(img);
    Feats feats = graph_->normalize(x);
    feats = graph_->run_range(std::move(feats), 0, static_cast<size_t>(idx) + 1);

    ActivationStack stack;
    stack.layer = layer;
    stack.planes = std::move(feats);
    for (const Plane& p : stack.planes)
        if (!p.allFinite())
            throw std::runtime_error("capture_activations: non-finite activation in " + layer);
    return stack;
}

Scores ModelHandle::forward_from(const std::string& layer, const ActivationStack& stack) const {
    const int idx = graph_->layer_index(layer);
    Feats feats = stack.planes;
    feats = graph_->run_range(std::move(feats), static_cast<size_t>(idx) + 1, graph_->layers.size());
    return graph_->to_scores(feats);
}

// ---------------------------------------------------------------------------
// Cascading randomization

namespace {

/// Deterministic standard-normal stream (Box-Muller over mt19937_64), pinned
/// here rather than std::normal_distribution so that equal seeds give equal
/// weights on every platform and standard library.
class NormalStream {
public:
    explicit NormalStream(uint64_t seed) : rng_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    double uniform() {
        return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    }

    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

void redraw_tensor(std::vector<double>& tensor, NormalStream& stream) {
    if (tensor.empty())
        return;
    double mean = 0.0;
    for (double v : tensor)
        mean += v;
    mean /= static_cast<double>(tensor.size());
    double var = 0.0;
    for (double v : tensor)
        var += (v - mean) * (v - mean);
    const double sigma = std::sqrt(var / static_cast<double>(tensor.size()));
    for (double& v : tensor)
        v = mean + sigma * stream.next();
}

}  // namespace

ModelHandle ModelHandle::randomize_cascade(int from_top, uint64_t seed) const {
    std::vector<size_t> param_indices;
    for (size_t i = 0; i < graph_->layers.size(); ++i)
        if (graph_->layers[i].parameterized())
            param_indices.push_back(i);

    if (from_top < 1 || from_top > static_cast<int>(param_indices.size()))
        throw std::invalid_argument("randomize_cascade: from_top must be in [1, " +
                                    std::to_string(param_indices.size()) + "], got " +
                                    std::to_string(from_top));

    auto graph = std::make_shared<Graph>(*graph_);
    NormalStream stream(seed);
    // Deepest layer first, matching the cascade direction of the check.
    for (int k = 0; k < from_top; ++k) {
        Layer& l = graph->layers[param_indices[param_indices.size() - 1 - static_cast<size_t>(k)]];
        redraw_tensor(l.weights, stream);
        redraw_tensor(l.bias, stream);
    }

    ModelHandle handle;
    handle.graph_ = std::move(graph);
    return handle;
}

}  // namespace micam
