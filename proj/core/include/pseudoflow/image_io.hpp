#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pseudoflow/tensor.hpp"

namespace pseudoflow {

// 8-bit interleaved HWC image.
struct ImageU8 {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> pixels;

  ImageU8() = default;
  ImageU8(int w, int h, int c = 3)
      : width(w), height(h), channels(c),
        pixels(static_cast<std::size_t>(w) * h * c, 0) {}

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
};

void write_png(const std::filesystem::path& path, const ImageU8& img);
ImageU8 read_png(const std::filesystem::path& path);  // returns RGB8

// [0,255] <-> [-1,1] affine mapping; round trip within 1/255 per pixel.
Tensor image_to_tensor(const ImageU8& img);        // {1,C,H,W}
ImageU8 tensor_to_image(const Tensor& t);          // clamps then quantizes

float u8_to_unit(std::uint8_t v);
std::uint8_t unit_to_u8(float v);

}  // namespace pseudoflow
