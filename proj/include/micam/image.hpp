#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace micam {

/// 2-D raster of real values, row-major. Rows index y (height), columns x (width).
using Plane = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ColorSpace { Gray, Rgb };

/// H x W x C raster with intensities on the 8-bit scale [0, 255].
///
/// Values are stored as doubles so that resampled or masked images keep
/// fractional intensities; quantization to unsigned 8-bit happens only when
/// encoding to an image file.
class Image {
public:
    Image() = default;
    Image(int height, int width, int channels, ColorSpace cs)
        : height_(height), width_(width), channels_(channels), cs_(cs),
          data_(static_cast<size_t>(height) * width * channels, 0.0) {
        if (height < 1 || width < 1 || channels < 1)
            throw std::invalid_argument("Image: dimensions must be >= 1");
    }

    static Image constant(int height, int width, int channels, ColorSpace cs, double value) {
        Image img(height, width, channels, cs);
        std::fill(img.data_.begin(), img.data_.end(), value);
        return img;
    }

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }
    ColorSpace color_space() const { return cs_; }
    size_t pixel_count() const { return static_cast<size_t>(height_) * width_; }

    double& at(int y, int x, int c) { return data_[index(y, x, c)]; }
    double at(int y, int x, int c) const { return data_[index(y, x, c)]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    /// Extract channel c as a Plane.
    Plane channel(int c) const {
        Plane p(height_, width_);
        for (int y = 0; y < height_; ++y)
            for (int x = 0; x < width_; ++x)
                p(y, x) = at(y, x, c);
        return p;
    }

    bool same_dims(const Image& other) const {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }

private:
    size_t index(int y, int x, int c) const {
        return (static_cast<size_t>(y) * width_ + x) * channels_ + c;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    ColorSpace cs_ = ColorSpace::Rgb;
    std::vector<double> data_;
};

}  // namespace micam
