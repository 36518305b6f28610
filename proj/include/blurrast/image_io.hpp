#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "blurrast/raster.hpp"

namespace blurrast {

// Raw float image: 'RFI1', u32 width, u32 height, u32 channels (little-endian),
// then width * height * channels float32, row-major, channels interleaved.
struct RfiImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t channels = 0;
  std::vector<float> data;
};

void write_rfi(const std::filesystem::path& path, const RfiImage& image);
RfiImage read_rfi(const std::filesystem::path& path);

// BlurFrame <-> 4-channel RFI (r, g, b, alpha as stored in the frame).
RfiImage to_rfi(const BlurFrame& frame);
BlurFrame frame_from_rfi(const RfiImage& image);

// 8-bit RGBA PNG with straight alpha; rgb is un-premultiplied by alpha and
// encoded as x^(1/2.2).
void write_png(const std::filesystem::path& path, const BlurFrame& frame);
void write_png_rgba8(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& rgba);
// Inverse of write_png up to 8-bit quantization.
BlurFrame read_png(const std::filesystem::path& path);

// Loads a target image by extension (.rfi or .png).
BlurFrame load_image(const std::filesystem::path& path);

}  // namespace blurrast
