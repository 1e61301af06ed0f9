#include "micam/cam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/SVD>

#include "micam/mi.hpp"

namespace micam {

std::string method_name(Method m) {
    switch (m) {
        case Method::MiCam: return "mi-cam";
        case Method::ScoreCam: return "score-cam";
        case Method::EigenCam: return "eigen-cam";
    }
    throw std::logic_error("unreachable method");
}

Method parse_method(const std::string& name) {
    if (name == "mi-cam") return Method::MiCam;
    if (name == "score-cam") return Method::ScoreCam;
    if (name == "eigen-cam") return Method::EigenCam;
    throw std::invalid_argument("unknown method: " + name +
                                " (expected mi-cam, score-cam or eigen-cam)");
}

WeightVector mi_weights(const ActivationStack& stack, const Image& x, int bins) {
    if (stack.planes.empty())
        throw std::invalid_argument("mi_weights: empty activation stack");

    const Plane gray = grayscale(x);
    const DiscreteVector input_symbols = quantize(gray, bins);

    WeightVector w;
    w.method = Method::MiCam;
    w.weights.resize(stack.channels());
    for (int k = 0; k < stack.channels(); ++k) {
        const Plane up = upsample(stack.planes[static_cast<size_t>(k)], x.width(), x.height());
        w.weights[k] = mutual_information(quantize(up, bins), input_symbols);
    }
    return w;
}

namespace {

/// Min-max normalize in place; a constant positive plane becomes all ones,
/// a constant zero or negative plane becomes all zeros.
void normalize_map(Plane& p) {
    const double lo = p.minCoeff();
    const double hi = p.maxCoeff();
    if (hi > lo) {
        p = (p.array() - lo) / (hi - lo);
    } else {
        p.setConstant(hi > 0.0 ? 1.0 : 0.0);
    }
}

}  // namespace

SaliencyMap combine(const ActivationStack& stack, const WeightVector& w, int out_w, int out_h) {
    if (stack.channels() != w.size())
        throw std::invalid_argument("combine: " + std::to_string(stack.channels()) +
                                    " channels vs " + std::to_string(w.size()) + " weights");
    if (stack.planes.empty())
        throw std::invalid_argument("combine: empty activation stack");

    Plane sum = Plane::Zero(stack.height(), stack.width());
    for (int k = 0; k < stack.channels(); ++k)
        sum += w.weights[k] * stack.planes[static_cast<size_t>(k)];
    sum = sum.cwiseMax(0.0);  // ReLU

    SaliencyMap map;
    map.layer = stack.layer;
    map.method = w.method;
    map.plane = upsample(sum, out_w, out_h);
    normalize_map(map.plane);
    return map;
}

WeightVector score_cam_weights(const ModelHandle& m, const ActivationStack& stack, const Image& x,
                               int class_index) {
    if (stack.planes.empty())
        throw std::invalid_argument("score_cam_weights: empty activation stack");
    if (class_index < 0 || class_index >= m.num_classes())
        throw std::invalid_argument("score_cam_weights: class index " +
                                    std::to_string(class_index) + " out of range [0, " +
                                    std::to_string(m.num_classes()) + ")");

    Eigen::VectorXd channel_scores(stack.channels());
    for (int k = 0; k < stack.channels(); ++k) {
        Plane mask = upsample(stack.planes[static_cast<size_t>(k)], x.width(), x.height());
        const double lo = mask.minCoeff();
        const double hi = mask.maxCoeff();
        if (hi > lo)
            mask = (mask.array() - lo) / (hi - lo);
        else
            mask.setZero();

        Image masked = x;
        for (int y = 0; y < x.height(); ++y)
            for (int px = 0; px < x.width(); ++px)
                for (int c = 0; c < x.channels(); ++c)
                    masked.at(y, px, c) *= mask(y, px);
        channel_scores[k] = m.forward(masked).values[class_index];
    }

    const double max_score = channel_scores.maxCoeff();
    Eigen::VectorXd e = (channel_scores.array() - max_score).exp();

    WeightVector w;
    w.method = Method::ScoreCam;
    w.weights = e / e.sum();
    return w;
}

namespace {

Eigen::VectorXd first_right_singular_vector(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinV);
    return svd.matrixV().col(0);
}

/// Activation matrix with one row per pixel (row-major order) and one column
/// per channel, plus the sign-fixed projection onto its principal direction.
struct EigenProjection {
    Eigen::VectorXd direction;   // K components
    Eigen::VectorXd projection;  // H'W' values
};

EigenProjection eigen_projection(const ActivationStack& stack) {
    const int pixels = stack.height() * stack.width();
    Eigen::MatrixXd matrix(pixels, stack.channels());
    for (int k = 0; k < stack.channels(); ++k) {
        const Plane& p = stack.planes[static_cast<size_t>(k)];
        matrix.col(k) = Eigen::Map<const Eigen::VectorXd>(p.data(), pixels);
    }

    EigenProjection out;
    out.direction = first_right_singular_vector(matrix);
    out.projection = matrix * out.direction;

    Eigen::Index argmax = 0;
    out.projection.cwiseAbs().maxCoeff(&argmax);
    if (out.projection[argmax] < 0.0) {
        out.direction = -out.direction;
        out.projection = -out.projection;
    }
    return out;
}

}  // namespace

WeightVector eigen_cam_weights(const ActivationStack& stack) {
    if (stack.planes.empty())
        throw std::invalid_argument("eigen_cam_weights: empty activation stack");
    WeightVector w;
    w.method = Method::EigenCam;
    w.weights = eigen_projection(stack).direction;
    return w;
}

SaliencyMap eigen_cam_map(const ActivationStack& stack, int out_w, int out_h) {
    if (stack.planes.empty())
        throw std::invalid_argument("eigen_cam_map: empty activation stack");

    const EigenProjection proj = eigen_projection(stack);
    Plane native(stack.height(), stack.width());
    for (int i = 0; i < proj.projection.size(); ++i)
        native.data()[i] = std::abs(proj.projection[i]);

    SaliencyMap map;
    map.layer = stack.layer;
    map.method = Method::EigenCam;
    map.plane = upsample(native, out_w, out_h);
    normalize_map(map.plane);
    return map;
}

std::array<double, 3> jet_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const auto ramp = [](double v) { return std::clamp(v, 0.0, 1.0) * 255.0; };
    return {ramp(1.5 - std::abs(4.0 * t - 3.0)),
            ramp(1.5 - std::abs(4.0 * t - 2.0)),
            ramp(1.5 - std::abs(4.0 * t - 1.0))};
}

Image render_overlay(const Image& img, const SaliencyMap& s, double alpha) {
    if (img.height() != s.plane.rows() || img.width() != s.plane.cols())
        throw std::invalid_argument("render_overlay: image and saliency dimensions differ");
    if (alpha < 0.0 || alpha > 1.0)
        throw std::invalid_argument("render_overlay: alpha must lie in [0, 1]");

    Image out(img.height(), img.width(), 3, ColorSpace::Rgb);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const std::array<double, 3> heat = jet_color(s.plane(y, x));
            for (int c = 0; c < 3; ++c) {
                const double base = img.channels() == 3 ? img.at(y, x, c) : img.at(y, x, 0);
                out.at(y, x, c) = (1.0 - alpha) * base + alpha * heat[static_cast<size_t>(c)];
            }
        }
    return out;
}

Explanation explain(const ModelHandle& m, const Image& img, const std::string& layer, Method method,
                    int class_index, int bins) {
    const std::string target = layer.empty() ? m.last_conv_layer() : layer;
    const Image x = m.preprocess(img);
    const Scores scores = m.forward(x);
    const ActivationStack stack = m.capture_activations(x, target);

    int cls = class_index;
    if (cls < 0)
        scores.values.maxCoeff(&cls);

    Explanation result{.map = {}, .weights = {}, .scores = scores, .input = x, .class_index = cls};
    switch (method) {
        case Method::MiCam:
            result.weights = mi_weights(stack, x, bins);
            result.map = combine(stack, result.weights, x.width(), x.height());
            break;
        case Method::ScoreCam:
            result.weights = score_cam_weights(m, stack, x, cls);
            result.map = combine(stack, result.weights, x.width(), x.height());
            break;
        case Method::EigenCam:
            result.weights = eigen_cam_weights(stack);
            result.map = eigen_cam_map(stack, x.width(), x.height());
            break;
    }
    return result;
}

}  // namespace micam
