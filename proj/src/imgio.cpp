#include "micam/imgio.hpp"

#include <cmath>
#include <stdexcept>

#include <opencv2/imgcodecs.hpp>

namespace micam {

Image load_image(const std::string& path) {
    cv::Mat mat = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (mat.empty())
        throw std::runtime_error("could not read image: " + path);
    if (mat.depth() != CV_8U)
        throw std::runtime_error("unsupported bit depth in " + path);

    const int channels = mat.channels() >= 3 ? 3 : 1;
    Image img(mat.rows, mat.cols, channels,
              channels == 3 ? ColorSpace::Rgb : ColorSpace::Gray);
    for (int y = 0; y < mat.rows; ++y) {
        const uint8_t* row = mat.ptr<uint8_t>(y);
        for (int x = 0; x < mat.cols; ++x) {
            const uint8_t* px = row + x * mat.channels();
            if (channels == 3) {
                img.at(y, x, 0) = px[2];  // OpenCV loads BGR
                img.at(y, x, 1) = px[1];
                img.at(y, x, 2) = px[0];
            } else {
                img.at(y, x, 0) = px[0];
            }
        }
    }
    return img;
}

void save_png(const Image& img, const std::string& path) {
    const int type = img.channels() == 1 ? CV_8UC1 : CV_8UC3;
    if (img.channels() != 1 && img.channels() != 3)
        throw std::invalid_argument("save_png: expected 1 or 3 channels");

    cv::Mat mat(img.height(), img.width(), type);
    for (int y = 0; y < img.height(); ++y) {
        uint8_t* row = mat.ptr<uint8_t>(y);
        for (int x = 0; x < img.width(); ++x) {
            uint8_t* px = row + x * img.channels();
            auto to_u8 = [](double v) {
                return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            };
            if (img.channels() == 3) {
                px[0] = to_u8(img.at(y, x, 2));
                px[1] = to_u8(img.at(y, x, 1));
                px[2] = to_u8(img.at(y, x, 0));
            } else {
                px[0] = to_u8(img.at(y, x, 0));
            }
        }
    }
    if (!cv::imwrite(path, mat))
        throw std::runtime_error("could not write image: " + path);
}

}  // namespace micam
