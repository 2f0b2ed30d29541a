#pragma once

#include "racegan/image.hpp"

#include <filesystem>

namespace racegan {

/// Reads a PNG or JPEG (by extension) into byte-mode RGB.
RasterImage<float> load_image(const std::filesystem::path& file);

/// Writes 8-bit RGB PNG. Unit-mode images are scaled by 255 and rounded.
void save_png(const std::filesystem::path& file, const RasterImage<float>& img);

/// Single-channel mask PNG: values >= 128 load as 1, saved as 0/255.
BinaryMask load_mask_png(const std::filesystem::path& file);
void save_mask_png(const std::filesystem::path& file, const BinaryMask& mask);

/// [0,1] plane saved as 8-bit grayscale (rounded), e.g. raw generator output.
void save_gray_png(const std::filesystem::path& file, const Planef& plane);
Planef load_gray_png(const std::filesystem::path& file);

}  // namespace racegan
