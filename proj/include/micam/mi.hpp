#pragma once

#include <vector>

#include "micam/image.hpp"

namespace micam {

/// Flattened plane after histogram discretization. Symbols are bin indices
/// in [0, bin_count) and appear in row-major pixel order.
struct DiscreteVector {
    std::vector<int> symbols;
    int bin_count = 0;
};

/// Marginal probability table over bin_count symbols. Entries sum to 1.
struct ProbTable {
    std::vector<double> probs;
};

/// Joint probability table over symbol pairs, probs(i, j) = P(a = i, b = j).
struct JointProbTable {
    int bins = 0;
    std::vector<double> probs;  // row-major bins x bins

    double at(int i, int j) const { return probs[static_cast<size_t>(i) * bins + j]; }
    double& at(int i, int j) { return probs[static_cast<size_t>(i) * bins + j]; }
};

/// Gray-scale an image. 3-channel inputs use luma weights 0.299/0.587/0.114,
/// 1-channel inputs pass through unchanged.
Plane grayscale(const Image& img);

/// Bilinear resample to (target_h, target_w), half-pixel centers (corner
/// alignment off), edge clamped. Resampling to the same size is the identity.
Plane upsample(const Plane& p, int target_w, int target_h);

/// Min-max normalize to [0, 1], then bin index = floor(v * bins) clamped to
/// bins - 1. A constant plane maps every pixel to bin 0. Output is the
/// row-major flattening of the plane.
DiscreteVector quantize(const Plane& p, int bins);

/// Symbol frequencies normalized by length.
ProbTable histogram(const DiscreteVector& v);

/// Co-occurrence frequencies normalized by length. Both vectors must have the
/// same length and the same bin count.
JointProbTable joint_histogram(const DiscreteVector& a, const DiscreteVector& b);

/// Shannon entropy in bits, -sum p log2 p with 0 log 0 := 0.
double entropy(const ProbTable& t);

/// Joint entropy in bits.
double joint_entropy(const JointProbTable& t);

/// Mutual information in bits via I = H(a) + H(b) - H(a,b), clamped to >= 0.
/// Bit-exactly symmetric in its arguments.
double mutual_information(const DiscreteVector& a, const DiscreteVector& b);

/// Convenience overload: quantize both planes to `bins` and measure their
/// mutual information. Planes must hold the same number of pixels.
double mutual_information(const Plane& a, const Plane& b, int bins);

}  // namespace micam
