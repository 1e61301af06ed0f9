#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace micam {

std::string base64_encode(const uint8_t* data, size_t len);
std::vector<uint8_t> base64_decode(const std::string& text);

/// Encode a float tensor as base64 of its little-endian IEEE-754 bytes.
std::string encode_f32(const std::vector<float>& values);
std::vector<float> decode_f32(const std::string& text);

}  // namespace micam
