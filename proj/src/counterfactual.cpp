#include "micam/counterfactual.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "micam/eval.hpp"

namespace micam {

namespace {

void fill_pixel(Image& img, int y, int x, double value) {
    for (int c = 0; c < img.channels(); ++c)
        img.at(y, x, c) = value;
}

Image occlude_top_salient(const Image& img, const SaliencyMap& s, const PerturbPolicy& policy) {
    if (img.height() != s.plane.rows() || img.width() != s.plane.cols())
        throw std::invalid_argument("perturb: image and saliency dimensions differ");
    const size_t count = static_cast<size_t>(
        std::ceil(policy.fraction * static_cast<double>(img.pixel_count())));

    Image out = img;
    const std::vector<size_t> order = rank_pixels(s.plane, RankOrder::Descending);
    for (size_t i = 0; i < count && i < order.size(); ++i)
        fill_pixel(out, static_cast<int>(order[i]) / img.width(),
                   static_cast<int>(order[i]) % img.width(), policy.fill);
    return out;
}

Image random_patch(const Image& img, const PerturbPolicy& policy) {
    if (policy.patch_w < 1 || policy.patch_h < 1 || policy.patch_w > img.width() ||
        policy.patch_h > img.height())
        throw std::invalid_argument("perturb: patch does not fit inside the image");

    std::mt19937_64 rng(policy.seed);
    const int max_x = img.width() - policy.patch_w;
    const int max_y = img.height() - policy.patch_h;
    const int x0 = max_x > 0 ? static_cast<int>(rng() % static_cast<uint64_t>(max_x + 1)) : 0;
    const int y0 = max_y > 0 ? static_cast<int>(rng() % static_cast<uint64_t>(max_y + 1)) : 0;

    Image out = img;
    for (int y = y0; y < y0 + policy.patch_h; ++y)
        for (int x = x0; x < x0 + policy.patch_w; ++x)
            fill_pixel(out, y, x, policy.fill);
    return out;
}

}  // namespace

Image perturb(const Image& img, const SaliencyMap* s, const PerturbPolicy& policy) {
    switch (policy.kind) {
        case PerturbKind::OccludeTopSalient:
            if (policy.fraction < 0.0 || policy.fraction > 1.0)
                throw std::invalid_argument("perturb: fraction must lie in [0, 1]");
            if (s == nullptr)
                throw std::invalid_argument("perturb: occlude-top-salient requires a saliency map");
            return occlude_top_salient(img, *s, policy);
        case PerturbKind::RandomPatch:
            return random_patch(img, policy);
        case PerturbKind::ConstantFill:
            return Image::constant(img.height(), img.width(), img.channels(), img.color_space(),
                                   policy.fill);
    }
    throw std::logic_error("unreachable perturb kind");
}

DivergenceReport weight_divergence(const WeightVector& w, const WeightVector& w_cf) {
    if (w.size() != w_cf.size())
        throw std::invalid_argument("weight_divergence: channel count mismatch (" +
                                    std::to_string(w.size()) + " vs " +
                                    std::to_string(w_cf.size()) + ")");

    DivergenceReport report;
    report.per_channel = (w.weights - w_cf.weights).cwiseAbs();
    report.l1 = report.per_channel.sum();
    report.linf = report.per_channel.size() > 0 ? report.per_channel.maxCoeff() : 0.0;
    const double original_mass = w.weights.cwiseAbs().sum();
    report.relative_l1 = original_mass > 0.0 ? report.l1 / original_mass : 0.0;
    return report;
}

std::vector<CounterfactualResult> counterfactual_run(const ModelHandle& m, const Image& img,
                                                     const std::string& layer,
                                                     const PerturbPolicy& policy,
                                                     std::span<const Method> methods,
                                                     int class_index, int bins) {
    const std::string target = layer.empty() ? m.last_conv_layer() : layer;
    const Image x = m.preprocess(img);

    // Policies that do not depend on a saliency map share one counterfactual.
    std::optional<Image> shared;
    if (policy.kind != PerturbKind::OccludeTopSalient)
        shared = perturb(x, nullptr, policy);

    std::vector<CounterfactualResult> results;
    results.reserve(methods.size());
    for (Method method : methods) {
        const Explanation original = explain(m, x, target, method, class_index, bins);
        const Image counterfactual_input =
            shared ? *shared : perturb(x, &original.map, policy);
        const Explanation after =
            explain(m, counterfactual_input, target, method, original.class_index, bins);

        CounterfactualResult r;
        r.method = method;
        r.original = original.weights;
        r.counterfactual = after.weights;
        r.divergence = weight_divergence(r.original, r.counterfactual);
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace micam
