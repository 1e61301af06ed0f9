#pragma once

#include <span>
#include <string>
#include <vector>

#include "micam/cam.hpp"
#include "micam/image.hpp"
#include "micam/model.hpp"

namespace micam {

/// Class scores for one image: on the original input (Y), on the
/// saliency-masked input (O) and on the all-zero baseline (B).
struct EvalRecord {
    std::string image_id;
    int class_index = 0;
    double score_original = 0.0;
    double score_masked = 0.0;
    double score_baseline = 0.0;
};

/// Class score as a function of the fraction of pixels deleted or inserted.
struct Curve {
    std::vector<double> fractions;
    std::vector<double> scores;
};

/// Axis-aligned box in saliency-map pixel coordinates, bounds inclusive.
struct BBox {
    int x = 0;
    int y = 0;
    int w = 1;
    int h = 1;
};

enum class MaskMode {
    MuteBelow,  // zero out pixels where s < theta (average-drop masking)
    KeepAbove,  // copy pixels where s >= theta onto an all-zero baseline
};

enum class RankOrder { Descending, Ascending };

/// Threshold the image by the saliency map. Both modes keep pixels with
/// s >= theta at their original intensity and everything else at zero; they
/// differ only in reading (mute vs rebuild from the baseline).
Image threshold_mask(const Image& img, const SaliencyMap& s, double theta, MaskMode mode);

/// (100/N) * sum max(0, Y - O) / Y. Requires a nonempty set with Y > 0.
double average_drop(std::span<const EvalRecord> records);

/// (100/N) * sum max(0, O - B) / O. Requires a nonempty set with O > 0.
double average_increase(std::span<const EvalRecord> records);

/// Pixel indices (row-major) ordered by saliency, ties broken by row-major
/// position.
std::vector<size_t> rank_pixels(const Plane& saliency, RankOrder order);

/// Cumulatively zero the most salient pixels, step fraction at a time,
/// recording the class score. Point 0 is the unmasked prediction.
Curve deletion_curve(const ModelHandle& m, const Image& img, const SaliencyMap& s, int class_index,
                     double step = 0.01, int steps = 100);

/// Cumulatively restore original pixels onto an all-zero baseline. The
/// default order follows ascending importance; RankOrder::Descending restores
/// the most salient pixels first.
Curve insertion_curve(const ModelHandle& m, const Image& img, const SaliencyMap& s, int class_index,
                      double step = 0.01, int steps = 100,
                      RankOrder order = RankOrder::Ascending);

/// Trapezoidal area under the curve over the fraction axis.
double auc(const Curve& c);

/// True when the first (row-major) maximum of the map lies inside the box.
bool pointing_game(const SaliencyMap& s, const BBox& box);

/// Percentage of total saliency energy inside the box.
double ebpg(const SaliencyMap& s, const BBox& box);

/// Spearman rank correlation with average ranks for ties. Returns 1 when the
/// inputs are elementwise identical and 0 when either side has no rank
/// variance otherwise.
double spearman_rank_correlation(std::span<const double> a, std::span<const double> b);

}  // namespace micam
