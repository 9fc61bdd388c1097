#pragma once

#include <filesystem>

#include "assetgen/types.hpp"

namespace assetgen
{
    double srgb_to_linear(double c);
    double linear_to_srgb(double c);
    // Linear [0,1] value to an 8-bit sRGB code, and back.
    uint8_t encode_srgb8(double linear);
    double decode_srgb8(uint8_t code);

    // Portable float maps, little-endian ("PF" colour, "Pf" grayscale). Rows are
    // stored bottom-to-top per the format; in memory row 0 is the top row.
    void write_pfm(const std::filesystem::path& path, const ImageRGB& image);
    void write_pfm(const std::filesystem::path& path, const ImageF& image);
    ImageRGB read_pfm_rgb(const std::filesystem::path& path);
    ImageF read_pfm_gray(const std::filesystem::path& path);

    // 8-bit grayscale PNG of values clamped to [0,1], stored without gamma.
    void write_png_gray(const std::filesystem::path& path, const ImageF& image);
    // 8-bit sRGB PNG from a linear RGB image.
    void write_png_srgb(const std::filesystem::path& path, const ImageRGB& image);
    ImageF read_png_gray(const std::filesystem::path& path);
    // Decodes sRGB to linear.
    ImageRGB read_png_srgb(const std::filesystem::path& path);
} // namespace assetgen
