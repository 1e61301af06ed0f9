#include "micam/base64.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

namespace micam {

namespace {
constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}
}  // namespace

std::string base64_encode(const uint8_t* data, size_t len) {
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (size_t i = 0; i < len; i += 3) {
        uint32_t chunk = static_cast<uint32_t>(data[i]) << 16;
        if (i + 1 < len) chunk |= static_cast<uint32_t>(data[i + 1]) << 8;
        if (i + 2 < len) chunk |= static_cast<uint32_t>(data[i + 2]);
        out.push_back(kAlphabet[(chunk >> 18) & 0x3f]);
        out.push_back(kAlphabet[(chunk >> 12) & 0x3f]);
        out.push_back(i + 1 < len ? kAlphabet[(chunk >> 6) & 0x3f] : '=');
        out.push_back(i + 2 < len ? kAlphabet[chunk & 0x3f] : '=');
    }
    return out;
}

std::vector<uint8_t> base64_decode(const std::string& text) {
    std::vector<uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    uint32_t chunk = 0;
    int have = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r' || c == ' ')
            continue;
        const int v = decode_char(c);
        if (v < 0)
            throw std::invalid_argument("base64_decode: invalid character");
        chunk = (chunk << 6) | static_cast<uint32_t>(v);
        if (++have == 4) {
            out.push_back(static_cast<uint8_t>((chunk >> 16) & 0xff));
            out.push_back(static_cast<uint8_t>((chunk >> 8) & 0xff));
            out.push_back(static_cast<uint8_t>(chunk & 0xff));
            chunk = 0;
            have = 0;
        }
    }
    if (have == 2) {
        out.push_back(static_cast<uint8_t>((chunk >> 4) & 0xff));
    } else if (have == 3) {
        out.push_back(static_cast<uint8_t>((chunk >> 10) & 0xff));
        out.push_back(static_cast<uint8_t>((chunk >> 2) & 0xff));
    } else if (have == 1) {
        throw std::invalid_argument("base64_decode: truncated input");
    }
    return out;
}

static_assert(std::endian::native == std::endian::little,
              "model tensors are stored little-endian; add byte swapping for this platform");

std::string encode_f32(const std::vector<float>& values) {
    return base64_encode(reinterpret_cast<const uint8_t*>(values.data()),
                         values.size() * sizeof(float));
}

std::vector<float> decode_f32(const std::string& text) {
    const std::vector<uint8_t> bytes = base64_decode(text);
    if (bytes.size() % sizeof(float) != 0)
        throw std::invalid_argument("decode_f32: byte count not a multiple of 4");
    std::vector<float> values(bytes.size() / sizeof(float));
    std::memcpy(values.data(), bytes.data(), bytes.size());
    return values;
}

}  // namespace micam
