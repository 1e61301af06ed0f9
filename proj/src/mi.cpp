#include "micam/mi.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace micam {

Plane grayscale(const Image& img) {
    if (img.channels() == 1)
        return img.channel(0);
    if (img.channels() != 3)
        throw std::invalid_argument("grayscale: expected 1 or 3 channels, got " +
                                    std::to_string(img.channels()));
    Plane p(img.height(), img.width());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            p(y, x) = 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
    return p;
}

Plane upsample(const Plane& p, int target_w, int target_h) {
    if (target_w < 1 || target_h < 1)
        throw std::invalid_argument("upsample: target dimensions must be >= 1");
    const int src_h = static_cast<int>(p.rows());
    const int src_w = static_cast<int>(p.cols());
    if (src_h == target_h && src_w == target_w)
        return p;

    Plane out(target_h, target_w);
    const double scale_y = static_cast<double>(src_h) / target_h;
    const double scale_x = static_cast<double>(src_w) / target_w;
    for (int y = 0; y < target_h; ++y) {
        double sy = (y + 0.5) * scale_y - 0.5;
        sy = std::clamp(sy, 0.0, static_cast<double>(src_h - 1));
        const int y0 = static_cast<int>(std::floor(sy));
        const int y1 = std::min(y0 + 1, src_h - 1);
        const double fy = sy - y0;
        for (int x = 0; x < target_w; ++x) {
            double sx = (x + 0.5) * scale_x - 0.5;
            sx = std::clamp(sx, 0.0, static_cast<double>(src_w - 1));
            const int x0 = static_cast<int>(std::floor(sx));
            const int x1 = std::min(x0 + 1, src_w - 1);
            const double fx = sx - x0;
            const double top = p(y0, x0) * (1.0 - fx) + p(y0, x1) * fx;
            const double bot = p(y1, x0) * (1.0 - fx) + p(y1, x1) * fx;
            out(y, x) = top * (1.0 - fy) + bot * fy;
        }
    }
    return out;
}

DiscreteVector quantize(const Plane& p, int bins) {
    if (bins < 2)
        throw std::invalid_argument("quantize: bin count must be >= 2");
    if (p.size() == 0)
        throw std::invalid_argument("quantize: empty plane");

    const double lo = p.minCoeff();
    const double hi = p.maxCoeff();
    const double range = hi - lo;

    DiscreteVector v;
    v.bin_count = bins;
    v.symbols.resize(static_cast<size_t>(p.size()));
    const double* data = p.data();  // row-major: this is flat(.)
    if (range <= 0.0) {
        std::fill(v.symbols.begin(), v.symbols.end(), 0);
        return v;
    }
    for (size_t i = 0; i < v.symbols.size(); ++i) {
        const double norm = (data[i] - lo) / range;
        int bin = static_cast<int>(std::floor(norm * bins));
        v.symbols[i] = std::clamp(bin, 0, bins - 1);
    }
    return v;
}

ProbTable histogram(const DiscreteVector& v) {
    std::vector<size_t> counts(static_cast<size_t>(v.bin_count), 0);
    for (int s : v.symbols)
        ++counts[static_cast<size_t>(s)];
    ProbTable t;
    t.probs.resize(counts.size());
    const double n = static_cast<double>(v.symbols.size());
    for (size_t i = 0; i < counts.size(); ++i)
        t.probs[i] = static_cast<double>(counts[i]) / n;
    return t;
}

JointProbTable joint_histogram(const DiscreteVector& a, const DiscreteVector& b) {
    if (a.symbols.size() != b.symbols.size())
        throw std::invalid_argument("joint_histogram: length mismatch (" +
                                    std::to_string(a.symbols.size()) + " vs " +
                                    std::to_string(b.symbols.size()) +
                                    "); upsample both planes to a common size first");
    if (a.bin_count != b.bin_count)
        throw std::invalid_argument("joint_histogram: bin count mismatch");

    JointProbTable t;
    t.bins = a.bin_count;
    std::vector<size_t> counts(static_cast<size_t>(t.bins) * t.bins, 0);
    for (size_t i = 0; i < a.symbols.size(); ++i)
        ++counts[static_cast<size_t>(a.symbols[i]) * t.bins + b.symbols[i]];
    t.probs.resize(counts.size());
    const double n = static_cast<double>(a.symbols.size());
    for (size_t i = 0; i < counts.size(); ++i)
        t.probs[i] = static_cast<double>(counts[i]) / n;
    return t;
}

namespace {

inline double plogp(double p) {
    return p > 0.0 ? p * std::log2(p) : 0.0;
}

void validate_prob_table(const std::vector<double>& probs) {
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("entropy: probabilities must lie in [0, 1]");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("entropy: probabilities must sum to 1");
}

}  // namespace

double entropy(const ProbTable& t) {
    validate_prob_table(t.probs);
    double h = 0.0;
    for (double p : t.probs)
        h -= plogp(p);
    return std::max(h, 0.0);
}

double joint_entropy(const JointProbTable& t) {
    validate_prob_table(t.probs);
    // Terms are accumulated over (i,j)/(j,i) pairs so that the sum for a table
    // and its transpose is bit-identical, making mutual information exactly
    // symmetric in its two arguments.
    double h = 0.0;
    for (int i = 0; i < t.bins; ++i) {
        h -= plogp(t.at(i, i));
        for (int j = i + 1; j < t.bins; ++j)
            h -= plogp(t.at(i, j)) + plogp(t.at(j, i));
    }
    return std::max(h, 0.0);
}

double mutual_information(const DiscreteVector& a, const DiscreteVector& b) {
    const JointProbTable joint = joint_histogram(a, b);
    const double h_a = entropy(histogram(a));
    const double h_b = entropy(histogram(b));
    const double h_ab = joint_entropy(joint);
    return std::max(h_a + h_b - h_ab, 0.0);
}

double mutual_information(const Plane& a, const Plane& b, int bins) {
    if (a.size() != b.size())
        throw std::invalid_argument("mutual_information: planes hold different pixel counts");
    return mutual_information(quantize(a, bins), quantize(b, bins));
}

}  // namespace micam
