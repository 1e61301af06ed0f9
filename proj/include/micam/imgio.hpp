#pragma once

#include <string>

#include "micam/image.hpp"

namespace micam {

/// Decode a PNG or JPEG file. 3-channel files load as RGB, 1-channel as gray.
Image load_image(const std::string& path);

/// Encode as PNG, rounding intensities to the nearest 8-bit value.
void save_png(const Image& img, const std::string& path);

}  // namespace micam
