#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "signcraft/tensor.hpp"

namespace signcraft {

/// 8-bit RGB image, row-major, interleaved.
struct RawImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  ///< 3 * width * height

    std::uint8_t& at(std::size_t x, std::size_t y, std::size_t channel) {
        return pixels[(y * width + x) * 3 + channel];
    }
    std::uint8_t at(std::size_t x, std::size_t y, std::size_t channel) const {
        return pixels[(y * width + x) * 3 + channel];
    }

    friend bool operator==(const RawImage&, const RawImage&) = default;
};

inline constexpr std::size_t kImageSide = 32;

/// Binary PPM (P6). Comments are allowed anywhere in the header; maxval must
/// be 255. Bytes after the pixel block are ignored.
///
/// Throws FormatError (bad magic or header), UnsupportedError (maxval != 255)
/// and CorruptError (pixel data shorter than the header promises).
RawImage decode_ppm(std::span<const std::uint8_t> bytes);
RawImage read_ppm(const std::filesystem::path& path);

/// Canonical "P6\n<w> <h>\n255\n" encoding.
std::vector<std::uint8_t> encode_ppm(const RawImage& image);
void write_ppm(const RawImage& image, const std::filesystem::path& path);

/// Bilinear resampling with half-pixel centres; source coordinates are
/// clamped to the image. Results are rounded to the nearest byte.
RawImage resize_bilinear(const RawImage& image, std::size_t out_w = kImageSide,
                         std::size_t out_h = kImageSide);

/// RGB planes, v -> (v/255 - 0.5) / 0.5, so every value lies in [-1, 1].
/// Output is [3, height, width].
Tensor normalize(const RawImage& image);

/// Name recorded in checkpoints for the scheme implemented by normalize().
inline constexpr const char* kNormalizationId = "rgb8-center0.5-scale0.5";

/// decode -> resize to 32x32 -> normalize.
Tensor load_image_tensor(const std::filesystem::path& path);

}  // namespace signcraft
