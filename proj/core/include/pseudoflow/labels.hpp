#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pseudoflow/image_io.hpp"

namespace pseudoflow {

// Class-id <-> flat-color mapping for the label domain. Decoding assigns
// each pixel the nearest palette color (squared Euclidean RGB distance,
// ties broken by the lowest class id), so arbitrary generated images decode
// to valid class maps.
struct Palette {
  std::vector<std::array<std::uint8_t, 3>> colors;

  static Palette default_shapes();  // background + circle/rectangle/triangle
  std::size_t size() const { return colors.size(); }
  void validate() const;
};

ImageU8 labels_encode(const std::vector<std::uint8_t>& ids, int width, int height,
                      const Palette& palette);

std::vector<std::uint8_t> labels_decode(const ImageU8& img, const Palette& palette);

}  // namespace pseudoflow
