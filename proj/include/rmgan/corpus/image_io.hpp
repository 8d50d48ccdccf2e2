#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rmgan/autodiff/tensor.hpp"

namespace rmgan::corpus {

// Nearest 8-bit level of each pixel (values clipped to [0,1]).
std::vector<std::uint8_t> quantize(const ad::Tensor& image);
// Values rounded to the 8-bit grid, as they would read back from disk.
ad::Tensor quantized(const ad::Tensor& image);

// Binary P5, maxval 255. image is [1,H,W] or [H,W]. Throws
// unwritable_directory when the file cannot be created.
void write_pgm(const std::filesystem::path& path, const ad::Tensor& image);

// Reads P5 (8- or 16-bit) or P2 into a [1,H,W] tensor scaled to [0,1].
// Throws missing_file or corrupt_file.
ad::Tensor read_pgm(const std::filesystem::path& path);

// Bilinear resampling of a [1,H,W] image to [1,size,size], pixel centres
// aligned. Returns a copy when the size already matches.
ad::Tensor resize_bilinear(const ad::Tensor& image, std::size_t size);

// Side-by-side panels of equal-height [1,H,W] images with a 1-pixel gap.
ad::Tensor hstack(std::span<const ad::Tensor> panels);

}  // namespace rmgan::corpus
