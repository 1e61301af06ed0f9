#include "micam/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace micam {

namespace {

void require_dims_match(const Image& img, const SaliencyMap& s, const char* who) {
    if (img.height() != s.plane.rows() || img.width() != s.plane.cols())
        throw std::invalid_argument(std::string(who) + ": image and saliency dimensions differ");
}

void require_box_inside(const SaliencyMap& s, const BBox& box, const char* who) {
    if (box.w < 1 || box.h < 1 || box.x < 0 || box.y < 0 ||
        box.x + box.w > s.plane.cols() || box.y + box.h > s.plane.rows())
        throw std::invalid_argument(std::string(who) + ": box lies outside the saliency map");
}

}  // namespace

Image threshold_mask(const Image& img, const SaliencyMap& s, double theta, MaskMode mode) {
    require_dims_match(img, s, "threshold_mask");

    if (mode == MaskMode::MuteBelow) {
        Image out = img;
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
                if (s.plane(y, x) < theta)
                    for (int c = 0; c < img.channels(); ++c)
                        out.at(y, x, c) = 0.0;
        return out;
    }

    Image out(img.height(), img.width(), img.channels(), img.color_space());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            if (s.plane(y, x) >= theta)
                for (int c = 0; c < img.channels(); ++c)
                    out.at(y, x, c) = img.at(y, x, c);
    return out;
}

double average_drop(std::span<const EvalRecord> records) {
    if (records.empty())
        throw std::invalid_argument("average_drop: empty record set");
    double sum = 0.0;
    for (const EvalRecord& r : records) {
        if (!(r.score_original > 0.0))
            throw std::invalid_argument("average_drop: nonpositive original score for " +
                                        r.image_id);
        sum += std::max(0.0, r.score_original - r.score_masked) / r.score_original;
    }
    return 100.0 * sum / static_cast<double>(records.size());
}

double average_increase(std::span<const EvalRecord> records) {
    if (records.empty())
        throw std::invalid_argument("average_increase: empty record set");
    double sum = 0.0;
    for (const EvalRecord& r : records) {
        if (!(r.score_masked > 0.0))
            throw std::invalid_argument("average_increase: nonpositive masked score for " +
                                        r.image_id);
        sum += std::max(0.0, r.score_masked - r.score_baseline) / r.score_masked;
    }
    return 100.0 * sum / static_cast<double>(records.size());
}

std::vector<size_t> rank_pixels(const Plane& saliency, RankOrder order) {
    std::vector<size_t> indices(static_cast<size_t>(saliency.size()));
    std::iota(indices.begin(), indices.end(), 0);
    const double* v = saliency.data();  // row-major
    if (order == RankOrder::Descending)
        std::stable_sort(indices.begin(), indices.end(),
                         [v](size_t a, size_t b) { return v[a] > v[b]; });
    else
        std::stable_sort(indices.begin(), indices.end(),
                         [v](size_t a, size_t b) { return v[a] < v[b]; });
    return indices;
}

namespace {

struct CurvePlan {
    std::vector<size_t> order;     // pixel visit order
    std::vector<double> fractions; // 0, step, ..., step*steps
    std::vector<size_t> counts;    // pixels touched at each fraction
};

CurvePlan plan_curve(const Image& img, const SaliencyMap& s, RankOrder order, double step,
                     int steps, const char* who) {
    if (step <= 0.0 || steps < 1)
        throw std::invalid_argument(std::string(who) + ": step and steps must be positive");
    if (step * steps > 1.0 + 1e-12)
        throw std::invalid_argument(std::string(who) + ": step * steps exceeds 1");

    CurvePlan plan;
    plan.order = rank_pixels(s.plane, order);
    const double n = static_cast<double>(img.pixel_count());
    for (int t = 0; t <= steps; ++t) {
        const double fraction = step * t;
        plan.fractions.push_back(fraction);
        plan.counts.push_back(std::min(static_cast<size_t>(std::llround(fraction * n)),
                                       img.pixel_count()));
    }
    return plan;
}

void set_pixel(Image& img, size_t flat, const Image& source, bool zero) {
    const int y = static_cast<int>(flat) / img.width();
    const int x = static_cast<int>(flat) % img.width();
    for (int c = 0; c < img.channels(); ++c)
        img.at(y, x, c) = zero ? 0.0 : source.at(y, x, c);
}

}  // namespace

Curve deletion_curve(const ModelHandle& m, const Image& img, const SaliencyMap& s, int class_index,
                     double step, int steps) {
    const Image x = m.preprocess(img);
    require_dims_match(x, s, "deletion_curve");
    const CurvePlan plan = plan_curve(x, s, RankOrder::Descending, step, steps, "deletion_curve");

    Curve curve;
    curve.fractions = plan.fractions;
    Image working = x;
    size_t done = 0;
    for (size_t t = 0; t < plan.counts.size(); ++t) {
        for (; done < plan.counts[t]; ++done)
            set_pixel(working, plan.order[done], x, /*zero=*/true);
        curve.scores.push_back(m.forward(working).values[class_index]);
    }
    return curve;
}

Curve insertion_curve(const ModelHandle& m, const Image& img, const SaliencyMap& s, int class_index,
                      double step, int steps, RankOrder order) {
    const Image x = m.preprocess(img);
    require_dims_match(x, s, "insertion_curve");
    const CurvePlan plan = plan_curve(x, s, order, step, steps, "insertion_curve");

    Curve curve;
    curve.fractions = plan.fractions;
    Image working(x.height(), x.width(), x.channels(), x.color_space());
    size_t done = 0;
    for (size_t t = 0; t < plan.counts.size(); ++t) {
        for (; done < plan.counts[t]; ++done)
            set_pixel(working, plan.order[done], x, /*zero=*/false);
        curve.scores.push_back(m.forward(working).values[class_index]);
    }
    return curve;
}

double auc(const Curve& c) {
    if (c.fractions.size() != c.scores.size())
        throw std::invalid_argument("auc: fraction/score length mismatch");
    if (c.fractions.size() < 2)
        throw std::invalid_argument("auc: need at least 2 points");
    double area = 0.0;
    for (size_t i = 1; i < c.fractions.size(); ++i) {
        const double df = c.fractions[i] - c.fractions[i - 1];
        if (df <= 0.0)
            throw std::invalid_argument("auc: fractions must be strictly increasing");
        area += df * 0.5 * (c.scores[i] + c.scores[i - 1]);
    }
    return area;
}

bool pointing_game(const SaliencyMap& s, const BBox& box) {
    require_box_inside(s, box, "pointing_game");
    // First maximum in row-major order.
    const double* v = s.plane.data();
    size_t best = 0;
    for (size_t i = 1; i < static_cast<size_t>(s.plane.size()); ++i)
        if (v[i] > v[best])
            best = i;
    const int y = static_cast<int>(best) / static_cast<int>(s.plane.cols());
    const int x = static_cast<int>(best) % static_cast<int>(s.plane.cols());
    return x >= box.x && x < box.x + box.w && y >= box.y && y < box.y + box.h;
}

double ebpg(const SaliencyMap& s, const BBox& box) {
    require_box_inside(s, box, "ebpg");
    const double total = s.plane.sum();
    if (!(total > 0.0))
        throw std::invalid_argument("ebpg: saliency map is identically zero");
    double inside = 0.0;
    for (int y = box.y; y < box.y + box.h; ++y)
        for (int x = box.x; x < box.x + box.w; ++x)
            inside += s.plane(y, x);
    return 100.0 * inside / total;
}

namespace {

std::vector<double> average_ranks(std::span<const double> values) {
    const size_t n = values.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && values[idx[j + 1]] == values[idx[i]])
            ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (size_t k = i; k <= j; ++k)
            ranks[idx[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_rank_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("spearman: length mismatch");
    if (a.empty())
        throw std::invalid_argument("spearman: empty input");
    if (std::equal(a.begin(), a.end(), b.begin()))
        return 1.0;

    const std::vector<double> ra = average_ranks(a);
    const std::vector<double> rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double mean = (n + 1.0) / 2.0;
    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double da = ra[i] - mean;
        const double db = rb[i] - mean;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (var_a <= 0.0 || var_b <= 0.0)
        return 0.0;
    return cov / std::sqrt(var_a * var_b);
}

}  // namespace micam
